#pragma once

// Closed-form power spectral density of the blocked machine: Fourier
// transforms of the per-block pulses by composite Gauss-Legendre quadrature,
// correlation aggregates over the input words, and the deflated-resolvent
// formula.  A truncated-series evaluator over the same aggregates serves as
// the validation oracle.

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "cpmspec/chain_analysis.hpp"
#include "cpmspec/linalg.hpp"

namespace cpmspec {

struct QuadratureSpec {
  int order = 32;  // Gauss-Legendre points per symbol interval
};

// Per-(word, start-state) pulse transforms.  The phase-state root of unity
// factors out, so only one base integral per output row is computed; states
// sharing a symbol tail reuse it.
class PulseBank {
 public:
  PulseBank(const PolyphaseMachine& machine, QuadratureSpec quad);

  std::size_t base_count() const { return mach_.out_rows; }
  int order() const { return order_; }

  void eval_base(double f, CVec& out) const;
  CVec eval_base(double f) const;

  // V_{x,s}(f) for block state j on the given side.
  cd value(std::size_t word, std::size_t j, int sign, const CVec& base) const;

 private:
  const PolyphaseMachine& mach_;
  int order_;
  int segs_;               // N_c symbol intervals per block
  std::size_t win_count_;  // M^L windows
  std::vector<cd> node_factor_;        // [seg][win][node]
  std::vector<double> node_time_;      // [seg][node]
  std::vector<std::uint16_t> win_;     // [row][seg]
  std::vector<std::uint16_t> zpre_;    // [row][seg], exponent mod 2p
};

struct SpectralLine {
  long k = 0;
  double freq_ft = 0.0;  // k / N_c in fT units
  double weight = 0.0;
};

enum class ResolventBackend { Direct, Poly };

struct SpectrumOptions {
  ResolventBackend backend = ResolventBackend::Direct;
  QuadratureSpec quadrature{};
  int threads = 0;             // 0 = hardware concurrency
  double line_threshold = 1e-12;
  double line_scan_ft = 16.0;  // lines searched over |k F_c T| <= this
  int trajectory_sign = +1;    // -1 evaluates through the odd parity class
};

struct SpectrumResult {
  std::vector<double> grid_ft;
  std::vector<double> psd;  // continuous part, linear scale
  std::vector<SpectralLine> lines;
  double line_power = 0.0;
  double max_imag_residual = 0.0;
  int block_len = 0;
  std::size_t half = 0;
  long long p = 1;

  double peak() const;
  void write_csv(std::ostream& os, bool absolute_db = false) const;
  void write_lines_csv(std::ostream& os) const;
};

std::vector<double> make_grid(double fmin_ft, double fmax_ft, int points);

// Trapezoid integral of the continuous part plus the line weights.
double total_power(const SpectrumResult& r, double symbol_period = 1.0);

class SpectrumAnalyzer {
 public:
  explicit SpectrumAnalyzer(const PolyphaseMachine& machine,
                            SpectrumOptions opts = {});

  const PolyphaseMachine& machine() const { return mach_; }
  const PulseBank& bank() const { return bank_; }
  bool has_lines() const { return mach_.pti.format.indices.p == 1; }

  // limit mean of the output words
  CVec mean_word(int sign = +1) const;

  // correlation ladder pieces (dense variants are for small formats)
  const CMat& c1() const { return c1_; }
  CMat c2_dense() const;
  CVec ry0_diagonal() const;
  CMat ry0_dense() const;
  CMat ry(int n) const;       // r_y(n T_c), n >= 1
  CMat ry_limit() const;      // C_2 Pi_inf C_1
  double ry_decay_max(int n) const;  // max |r_y(n) - r_y_limit| entry, exact

  SpectrumResult closed_form(const std::vector<double>& grid_ft) const;
  SpectrumResult series(const std::vector<double>& grid_ft,
                        int truncation) const;
  std::vector<SpectralLine> spectral_lines() const;

  // scalar resolvent sandwich at one frequency, by a chosen backend
  cd resolvent_term(double f_ft, ResolventBackend backend) const;

 private:
  struct FreqWork {
    CVec base;    // bank integrals
    double k0 = 0.0;
    CVec k1;      // C_1 conj(base)
    CVec k2;      // base^T C_2
    CVec k2t;     // per-tail aggregate of K_2
    cd mean_line = 0.0;  // K_2 p_inf
  };
  void freq_work(double f, FreqWork& w) const;
  // forward resolvent sandwich and the independently evaluated adjoint-route
  // mirror of the negative shifts; the pair agrees up to rounding
  std::pair<cd, cd> resolvent_pair(cd lambda, const FreqWork& w,
                                   ResolventBackend backend) const;

  const PolyphaseMachine& mach_;
  SpectrumOptions opts_;
  PulseBank bank_;
  CMat c1_;                 // I_0 x N_0
  std::vector<double> w0_;  // row probabilities
  std::vector<double> wp_;  // word probabilities
  CMat defl_;               // I - Pi_inf
  CMat fmat_;               // Pi - Pi_inf
  CMat fmat_adj_;
  ResolventPoly poly_;
  ResolventPoly poly_adj_;
  // sandwich mode pins both flanks of the resolvent at construction, so a
  // frequency costs one Horner sweep over tails x N_0 slabs; the fallback
  // keeps the Horner on the right-hand vector
  bool sandwich_mode_ = false;
  ResolventPoly::Prepared sandwich_pos_;  // V^T defl G_k C_1
  ResolventPoly::Prepared sandwich_neg_;  // C_1^H G_k^H defl^H conj(V)
  ResolventPoly::Prepared prepared_adj_;  // G_k^H defl^H conj(V), vector mode
};

}  // namespace cpmspec
