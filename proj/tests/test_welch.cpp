#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpmspec/spectrum.hpp"
#include "cpmspec/welch.hpp"

using namespace cpmspec;

namespace {

CpmFormat msk_format() { return CpmFormat::make(2, PhaseKind::Lrec, 1, {{1, 2}}); }

CpmFormat quaternary_multih() {
  return CpmFormat::make(4, PhaseKind::Lrec, 1,
                         {{1, 4}, {5, 16}, {1, 2}, {5, 8}});
}

WelchConfig quick_cfg(long long symbols, std::uint64_t seed) {
  WelchConfig cfg;
  cfg.symbol_count = symbols;
  cfg.samples_per_symbol = 16;
  cfg.segment_blocks = 256;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("splitmix64 reference stream") {
  // first outputs for seed 0, as published for the algorithm
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
  CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.next() == 0x06C45D188009454FULL);
}

TEST_CASE("symbol draws follow the probabilities") {
  const CpmFormat fmt =
      CpmFormat::make(4, PhaseKind::Lrec, 1, {{1, 2}}, {0.1, 0.2, 0.3, 0.4});
  SplitMix64 rng(123);
  std::vector<long> counts(4, 0);
  const long n = 200000;
  for (long i = 0; i < n; ++i)
    ++counts[static_cast<std::size_t>(fmt.symbol_index(draw_symbol(fmt, rng)))];
  for (int k = 0; k < 4; ++k) {
    const double freq = static_cast<double>(counts[static_cast<std::size_t>(k)]) / n;
    CHECK(std::abs(freq - fmt.symbol_probs[static_cast<std::size_t>(k)]) <= 0.01);
  }
}

TEST_CASE("estimate is reproducible and power-correct") {
  const CpmFormat fmt = msk_format();
  const EstimatedSpectrum a = simulate_psd(fmt, quick_cfg(20000, 42));
  const EstimatedSpectrum b = simulate_psd(fmt, quick_cfg(20000, 42));
  REQUIRE(a.psd.size() == b.psd.size());
  for (std::size_t i = 0; i < a.psd.size(); ++i) CHECK(a.psd[i] == b.psd[i]);

  CHECK(std::abs(a.mean_power - 1.0) <= 1e-12);
  CHECK(std::abs(a.integral() - 1.0) <= 0.02);
  CHECK(a.segments > 10);
}

TEST_CASE("different seeds agree within the confidence band") {
  const CpmFormat fmt = msk_format();
  const EstimatedSpectrum a = simulate_psd(fmt, quick_cfg(60000, 1));
  const EstimatedSpectrum c = simulate_psd(fmt, quick_cfg(60000, 2));
  bool identical = true;
  int outliers = 0, compared = 0;
  const double peak = *std::max_element(a.psd.begin(), a.psd.end());
  for (std::size_t i = 0; i < a.psd.size(); ++i) {
    if (a.psd[i] != c.psd[i]) identical = false;
    if (a.psd[i] < 1e-3 * peak) continue;
    ++compared;
    // periodogram averages are roughly normal; allow a wide band
    if (std::abs(a.psd[i] - c.psd[i]) > 8.0 * a.rel_std * a.psd[i]) ++outliers;
  }
  CHECK(!identical);
  CHECK(compared > 100);
  CHECK(outliers <= compared / 100);
}

TEST_CASE("estimate tracks the closed form") {
  const CpmFormat fmt = msk_format();
  const PolyphaseMachine mach = build_polyphase(fmt);
  const SpectrumAnalyzer an(mach);
  const auto grid = make_grid(-1.0, 1.0, 201);
  const SpectrumResult cf = an.closed_form(grid);
  const EstimatedSpectrum est = simulate_psd(fmt, quick_cfg(200000, 9));
  const double peak = cf.peak();
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (cf.psd[i] < 1e-3 * peak) continue;
    worst = std::max(worst, std::abs(10.0 * std::log10(
                                cf.psd[i] / est.value_at(grid[i]))));
  }
  CHECK(worst <= 1.0);  // tight run lives in the acceptance suite
}

TEST_CASE("config validation") {
  const CpmFormat fmt = msk_format();
  WelchConfig bad = quick_cfg(20000, 1);
  bad.symbol_count = 100;
  CHECK_THROWS_AS(simulate_psd(fmt, bad), std::invalid_argument);
  WelchConfig longseg = quick_cfg(20000, 1);
  longseg.segment_blocks = 100000;
  CHECK_THROWS_AS(simulate_psd(fmt, longseg), std::invalid_argument);
}

TEST_CASE("chain statistics") {
  const CpmFormat fmt = quaternary_multih();
  const ChainStats st = empirical_chain_stats(fmt, 200000, 5);
  CHECK(st.tv_distance <= 0.02);
  CHECK(st.empirical_period == 8);

  // parity stays in one class at whole-block boundaries
  const int nc = 8;
  for (std::size_t n = 0; n + nc < st.parity_trace.size(); n += nc)
    CHECK(st.parity_trace[n] == st.parity_trace[n + nc]);

  // per-phase transition frequencies approach the trajectory matrices
  const PtiMachine mach = PtiMachine::build(fmt);
  const ParityPartition parity = ParityPartition::make(mach.codec);
  const TrajectoryChain chain = trajectory_tpms(mach, parity, +1);
  double worst = 0.0;
  for (int phase = 0; phase < nc; ++phase)
    worst = std::max(worst,
                     max_abs_diff(st.empirical_tpm[static_cast<std::size_t>(phase)],
                                  chain.tpms[static_cast<std::size_t>(phase)]));
  CHECK(worst <= 0.05);
}

TEST_CASE("parity recurrence for a three-index set") {
  const CpmFormat fmt =
      CpmFormat::make(2, PhaseKind::Lrec, 1, {{1, 2}, {1, 4}, {3, 4}});
  const ChainStats st = empirical_chain_stats(fmt, 100000, 11);
  CHECK(st.empirical_period == cyclo_period(fmt.indices));
}
