#pragma once

// Finite-state machine view of the CPM modulator: states are a phase index
// modulo 2p plus the last L-1 symbols.  The update rule repeats with the
// modulation-index period, so transition matrices carry a time index n.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cpmspec/cpm_format.hpp"
#include "cpmspec/linalg.hpp"

namespace cpmspec {

struct SmState {
  long long z = 0;          // phase index in [0, 2p)
  std::vector<int> recent;  // L-1 symbols, oldest first
};

// Flat indexing: z is the most significant digit, followed by the recent
// symbols in order.  This matches the Kronecker factor order used below.
class StateCodec {
 public:
  StateCodec(long long p, int m, int memory);

  std::size_t state_count() const { return count_; }       // 2p * M^(L-1)
  std::size_t tail_count() const { return tails_; }        // M^(L-1)
  long long two_p() const { return two_p_; }
  int memory() const { return memory_; }
  int alphabet() const { return m_; }

  std::size_t encode(const SmState& s) const;
  SmState decode(std::size_t flat) const;

  std::size_t tail_index(const std::vector<int>& recent) const;
  std::vector<int> tail_at(std::size_t tail) const;

 private:
  long long two_p_;
  int m_, memory_;
  std::size_t tails_, count_;
};

SmState state_update(const CpmFormat& format, const SmState& s, int symbol,
                     long long n);

// Output word: length M^L, single nonzero W_{2p}^zexp at position index.
struct OutputWord {
  std::size_t index = 0;
  long long zexp = 0;
  std::size_t length = 0;

  CVec dense(long long two_p) const;
};

OutputWord output_word(const CpmFormat& format, const SmState& s, int symbol);

// Conditional transition matrix e_{alpha,n}: entry (i,j) = 1 iff state j
// moves to state i under input alpha at time n.  Built from the cyclic-shift
// Kronecker form; the enumerated variant walks the update rule state by
// state and is the cross-check.
CMat conditional_matrix(const CpmFormat& format, int symbol, long long n);
CMat conditional_matrix_enumerated(const CpmFormat& format, int symbol,
                                   long long n);

CMat tpm(const CpmFormat& format, long long n);       // sum_a q_a e_{a,n}
CMat tpm_kron(const CpmFormat& format, long long n);  // direct Kronecker sum

// Invariant probability vector (1/2p) 1_{2p} (x) q^(x(L-1)); fixed point of
// every tpm(n).
CVec invariant_apv(const CpmFormat& format);

struct PtiMachine {
  CpmFormat format;
  StateCodec codec;
  std::vector<std::vector<CMat>> cond;  // [n][symbol index], n in 0..N_h-1
  std::vector<CMat> tpms;               // [n]
  CVec apv;

  static PtiMachine build(const CpmFormat& format);
};

// Debug print with states reordered even-z first, odd-z second.
void dump_tpm_parity_ordered(const CMat& tpm, const StateCodec& codec,
                             std::ostream& os);

}  // namespace cpmspec
