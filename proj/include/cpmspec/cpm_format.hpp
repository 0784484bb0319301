#pragma once

// CPM signal description: M-ary odd-symbol alphabet, rational modulation
// index sequence h_n = r_n/p, phase response with memory L, and ideal
// baseband waveform synthesis for the simulation oracle.

#include <cstdint>
#include <string>
#include <vector>

#include "cpmspec/linalg.hpp"

namespace cpmspec {

struct Rational {
  long long num = 0;
  long long den = 1;
};

Rational parse_rational(const std::string& text);

// Index sequence h_n = r_n / p with p the least common denominator.
struct ModulationIndexSet {
  std::vector<long long> r;
  long long p = 1;

  int period() const { return static_cast<int>(r.size()); }  // N_h

  // Modular extension to all integer times, including negative ones.
  long long r_at(long long n) const {
    const long long nh = period();
    return r[static_cast<std::size_t>(((n % nh) + nh) % nh)];
  }
  double h_at(long long n) const {
    return static_cast<double>(r_at(n)) / static_cast<double>(p);
  }

  ModulationIndexSet rotated(int offset) const;

  static ModulationIndexSet normalize(const std::vector<Rational>& h);
};

enum class PhaseKind { Lrec, Lrc, Gmsk };

const char* phase_kind_name(PhaseKind k);
PhaseKind phase_kind_from_name(const std::string& name);

// Monotone phase response: 0 for t <= 0, 1/2 for t >= L*T.  The Gaussian
// pulse has infinite support and is truncated to [0, LT] with an affine
// rescale so the boundary values hold exactly.
class PhaseResponse {
 public:
  PhaseResponse(PhaseKind kind, int memory, double symbol_period = 1.0);

  double eval(double t) const;
  PhaseKind kind() const { return kind_; }
  int memory() const { return memory_; }
  double symbol_period() const { return t_; }

 private:
  double raw_gmsk(double t) const;

  PhaseKind kind_;
  int memory_;
  double t_;
  double gmsk_raw0_ = 0.0, gmsk_scale_ = 1.0;
};

struct CpmFormat {
  int m = 2;  // alphabet size, even
  PhaseResponse phase;
  ModulationIndexSet indices;
  std::vector<double> symbol_probs;  // over {-(M-1), ..., -1, +1, ..., M-1}
  double symbol_period = 1.0;

  static CpmFormat make(int m, PhaseKind kind, int memory,
                        const std::vector<Rational>& h,
                        std::vector<double> symbol_probs = {},
                        double symbol_period = 1.0);

  CpmFormat with_rotated_indices(int offset) const;

  int memory() const { return phase.memory(); }
  int alphabet_size() const { return m; }
  int symbol_at(int idx) const { return 2 * idx - (m - 1); }
  int symbol_index(int a) const;
  double prob_of(int a) const { return symbol_probs[symbol_index(a)]; }
};

struct WaveformSegment {
  std::vector<cd> samples;
  int samples_per_symbol = 0;
  long long start_index = 0;
};

// Samples of e^{j alpha(t)} for t in [0, K*T), K = symbols.size(), starting
// from zero accumulated phase and empty symbol history.
WaveformSegment synthesize_waveform(const CpmFormat& format,
                                    const std::vector<int>& symbols,
                                    int samples_per_symbol);

// Streaming variant used by the Welch estimator: per-symbol synthesis with
// the running phase state kept as an exact integer modulo 2p.
class WaveformSynth {
 public:
  WaveformSynth(const CpmFormat& format, int samples_per_symbol);

  // Appends samples_per_symbol samples of interval n to out.
  void step(int symbol, std::vector<cd>& out);

  long long time_index() const { return n_; }

 private:
  const CpmFormat& fmt_;
  int sps_;
  long long n_ = 0;
  long long zacc_ = 0;                // 2p-modular accumulated phase index
  std::vector<int> recent_;           // last L-1 symbols, oldest first
  std::vector<double> phi_table_;     // phase response at j*T/sps
};

}  // namespace cpmspec
