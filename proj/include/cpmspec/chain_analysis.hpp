#pragma once

// Classification of the modulator chain: the phase-index parity splits the
// state set into two classes that never communicate, each carrying an
// irreducible chain of half the size.  Blocking N_c symbols per step then
// yields a time-invariant machine whose transition matrix is block diagonal
// in the parity ordering.

#include <cstdint>
#include <utility>
#include <vector>

#include "cpmspec/cpm_format.hpp"
#include "cpmspec/linalg.hpp"
#include "cpmspec/state_machine.hpp"

namespace cpmspec {

// A nonzero entry showed up in a structurally-zero block: indexing bug.
class StructureViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parity bookkeeping produced a reducible half-chain or an inconsistent
// trajectory; indicates a classification bug, not bad input.
class ClassificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParityPartition {
  std::vector<std::size_t> even_states;  // flat indices, block order
  std::vector<std::size_t> odd_states;
  std::size_t half = 0;  // I_0 = p * M^(L-1)

  static ParityPartition make(const StateCodec& codec);

  // (side, block index) of a flat state; side 0 = even class.
  std::pair<int, std::size_t> locate(const StateCodec& codec,
                                     std::size_t flat) const;
};

// Cyclostationarity period in symbols: N_h when the count of odd r_n in one
// period is even, 2*N_h otherwise.
int cyclo_period(const ModulationIndexSet& indices);

struct BlockSplit {
  CMat block;        // F_n (cross == false) or G_n (cross == true)
  bool cross = false;
};

// Splits a TPM into its parity blocks and checks the expected structure
// exactly: r even -> block diagonal with two identical copies of F_n;
// r odd -> block antidiagonal with lower-left G_n and upper-right
// D^(I_0/p) G_n.
BlockSplit block_split(const CMat& tpm, const ParityPartition& parity,
                       const StateCodec& codec, long long r);

// Row shift by the tail count: D_{I0}^{I0/p} * g as a pure index relabel.
CMat shift_rows(const CMat& g, std::size_t tails);

enum class StepKind { Stay, Cross, CrossShifted };

struct TrajectoryStep {
  StepKind kind;
  int tpm_index;  // n mod N_h
};

struct TrajectoryChain {
  int sign = +1;
  int period = 0;  // N_c
  std::vector<TrajectoryStep> steps;
  std::vector<CMat> tpms;  // I_0 x I_0, one per step
};

TrajectoryChain trajectory_tpms(const PtiMachine& machine,
                                const ParityPartition& parity, int sign);

class PolyphaseMachine {
 public:
  explicit PolyphaseMachine(PtiMachine machine) : pti(std::move(machine)) {}

  PtiMachine pti;
  ParityPartition parity;
  int block_len = 0;      // N_c
  std::size_t half = 0;   // I_0
  std::size_t words = 0;  // M^N_c input words per block
  std::size_t out_rows = 0;  // N_0 = M^(N_c + L - 1)

  TrajectoryChain chain_plus, chain_minus;
  CMat big_tpm_plus, big_tpm_minus;  // identical by construction, both kept
  CVec stationary;                   // p_inf over block indices
  CMat limit;                        // p_inf * 1^T

  // Deterministic block-step state maps: target_plus[x*half + j] is the
  // block index reached from even-class state j under input word x.
  std::vector<std::uint32_t> target_plus, target_minus;

  std::vector<cd> roots;  // W_{2p}^k, k = 0..2p-1

  const CpmFormat& format() const { return pti.format; }
  double block_period() const {  // T_c
    return block_len * pti.format.symbol_period;
  }

  int word_symbol(std::size_t word, int k) const;   // x_k as alphabet value
  std::size_t word_digit(std::size_t word, int k) const;
  double word_prob(std::size_t word) const;         // product of q over x
  double row_prob(std::size_t row) const;           // over all N_c+L-1 digits

  // z exponent of block state j on the given side (+1 even, -1 odd).
  long long state_zexp(std::size_t j, int sign) const;

  struct YEntry {
    std::size_t row;
    long long zexp;
  };
  // Column j of the output-word matrix Y_x(sign): single nonzero of modulus 1.
  YEntry output_entry(std::size_t word, std::size_t j, int sign) const;

  CMat output_matrix_dense(std::size_t word, int sign) const;
  CMat conditional_dense(std::size_t word, int sign) const;  // E_x(sign)

  // Full-size blocked TPM (product of the unsplit per-step TPMs); used by
  // tests to confirm the block-diagonal form.
  CMat full_block_tpm() const;
};

PolyphaseMachine build_polyphase(const CpmFormat& format, int anchor_offset = 0);

// Fixed point of the half-chain in closed form: (1/p) 1_p (x) q^(x(L-1)).
CVec stationary_closed_form(const CpmFormat& format);

}  // namespace cpmspec
