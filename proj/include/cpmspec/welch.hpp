#pragma once

// Waveform-level validation: Welch PSD estimates of long synthesized runs
// (cycle-aligned Hann segments, 50% overlap) and Monte-Carlo statistics of
// the state chain.

#include <cstdint>
#include <string>
#include <vector>

#include "cpmspec/chain_analysis.hpp"
#include "cpmspec/cpm_format.hpp"

namespace cpmspec {

// splitmix64 (Steele/Lea/Flood): state advances by the 64-bit golden gamma
// 0x9E3779B97F4A7C15 and the output is a bijective mix of the new state.
// Chosen because the stream is a pure function of (seed, counter) and is
// easy to reproduce in any language.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53 bits
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Draws one symbol by inverse CDF over the format probabilities.
int draw_symbol(const CpmFormat& format, SplitMix64& rng);

struct WelchConfig {
  long long symbol_count = 1000000;
  int samples_per_symbol = 8;
  int segment_blocks = 256;  // segment length in cyclostationarity periods
  double overlap = 0.5;
  std::uint64_t seed = 1;
};

struct EstimatedSpectrum {
  std::vector<double> grid_ft;
  std::vector<double> psd;
  long long segments = 0;
  double mean_power = 0.0;
  double rel_std = 0.0;  // relative 1-sigma band, ~1/sqrt(segments)
  std::uint64_t seed = 0;
  std::string rng_name = "splitmix64";

  double value_at(double ft) const;  // linear interpolation
  double integral() const;           // sum psd * df, in 1/T units
};

EstimatedSpectrum simulate_psd(const CpmFormat& format, const WelchConfig& cfg);

struct ChainStats {
  std::vector<double> visit_freq;   // over block indices, all steps
  std::vector<CMat> empirical_tpm;  // per phase n mod N_c, I_0 x I_0
  std::vector<int> parity_trace;
  int empirical_period = 0;  // parity recurrence period
  double tv_distance = 0.0;  // visit frequencies vs closed-form stationary law
};

ChainStats empirical_chain_stats(const CpmFormat& format, long long steps,
                                 std::uint64_t seed);

}  // namespace cpmspec
