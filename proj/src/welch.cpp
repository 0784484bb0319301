#include "cpmspec/welch.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace cpmspec {

int draw_symbol(const CpmFormat& format, SplitMix64& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < format.alphabet_size(); ++i) {
    acc += format.symbol_probs[static_cast<std::size_t>(i)];
    if (u < acc) return format.symbol_at(i);
  }
  return format.symbol_at(format.alphabet_size() - 1);
}

double EstimatedSpectrum::value_at(double ft) const {
  if (grid_ft.empty()) return 0.0;
  if (ft <= grid_ft.front()) return psd.front();
  if (ft >= grid_ft.back()) return psd.back();
  const auto it = std::lower_bound(grid_ft.begin(), grid_ft.end(), ft);
  const std::size_t hi = static_cast<std::size_t>(it - grid_ft.begin());
  const std::size_t lo = hi - 1;
  const double a = (ft - grid_ft[lo]) / (grid_ft[hi] - grid_ft[lo]);
  return (1.0 - a) * psd[lo] + a * psd[hi];
}

double EstimatedSpectrum::integral() const {
  if (grid_ft.size() < 2) return 0.0;
  const double df = grid_ft[1] - grid_ft[0];
  double acc = 0.0;
  for (double v : psd) acc += v;
  return acc * df;
}

EstimatedSpectrum simulate_psd(const CpmFormat& format, const WelchConfig& cfg) {
  if (cfg.symbol_count < 10000)
    throw std::invalid_argument("simulate_psd: need at least 10^4 symbols");
  if (cfg.samples_per_symbol < 2 || cfg.segment_blocks < 1)
    throw std::invalid_argument("simulate_psd: bad sampling config");
  if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0))
    throw std::invalid_argument("simulate_psd: overlap must be in [0,1)");

  const int nc = cyclo_period(format.indices);
  const int sps = cfg.samples_per_symbol;
  const long long seg_symbols =
      static_cast<long long>(cfg.segment_blocks) * nc;
  const long long nseg = seg_symbols * sps;  // segment length in samples
  const long long total = cfg.symbol_count * sps;
  if (nseg > total)
    throw std::invalid_argument("simulate_psd: segment longer than waveform");
  // advance by a whole number of cyclostationarity periods
  long long adv_symbols = static_cast<long long>(
      std::llround((1.0 - cfg.overlap) * static_cast<double>(seg_symbols)));
  adv_symbols = std::max<long long>(nc, (adv_symbols / nc) * nc);
  const long long advance = adv_symbols * sps;

  const std::size_t n = static_cast<std::size_t>(nseg);
  std::vector<double> window(n);
  double wsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                      static_cast<double>(n)));
    wsq += window[i] * window[i];
  }

  fftw_complex* in = fftw_alloc_complex(n);
  fftw_complex* out = fftw_alloc_complex(n);
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), in, out,
                                    FFTW_FORWARD, FFTW_ESTIMATE);

  SplitMix64 rng(cfg.seed);
  WaveformSynth synth(format, sps);
  std::vector<cd> buf;
  buf.reserve(n + static_cast<std::size_t>(sps));

  std::vector<double> acc(n, 0.0);
  long long segments = 0;
  double power = 0.0;
  long long power_n = 0;
  long long produced_symbols = 0;

  auto fill_to = [&](std::size_t want) {
    while (buf.size() < want && produced_symbols < cfg.symbol_count) {
      synth.step(draw_symbol(format, rng), buf);
      ++produced_symbols;
    }
  };

  while (true) {
    fill_to(n);
    if (buf.size() < n) break;
    for (std::size_t i = 0; i < n; ++i) {
      power += std::norm(buf[i]);
      in[i][0] = window[i] * buf[i].real();
      in[i][1] = window[i] * buf[i].imag();
    }
    power_n += static_cast<long long>(n);
    fftw_execute(plan);
    for (std::size_t i = 0; i < n; ++i)
      acc[i] += out[i][0] * out[i][0] + out[i][1] * out[i][1];
    ++segments;
    buf.erase(buf.begin(),
              buf.begin() + static_cast<std::ptrdiff_t>(advance));
  }

  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(out);

  if (segments == 0)
    throw std::invalid_argument("simulate_psd: no full segment produced");

  EstimatedSpectrum est;
  est.segments = segments;
  est.seed = cfg.seed;
  est.mean_power = power / static_cast<double>(power_n);
  est.rel_std = 1.0 / std::sqrt(static_cast<double>(segments));

  const double t = format.symbol_period;
  const double dt = t / sps;
  const double scale = dt / (static_cast<double>(segments) * wsq);
  est.grid_ft.resize(n);
  est.psd.resize(n);
  // fftshift so the grid ascends from -sps/2 to sps/2 in fT units
  const std::size_t hcut = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = (i + hcut) % n;
    const long long k = static_cast<long long>(src) -
                        (src >= hcut ? static_cast<long long>(n) : 0);
    est.grid_ft[i] =
        static_cast<double>(k) / (static_cast<double>(n) * dt) * t;
    est.psd[i] = acc[src] * scale;
  }
  return est;
}

ChainStats empirical_chain_stats(const CpmFormat& format, long long steps,
                                 std::uint64_t seed) {
  if (steps < 100000)
    throw std::invalid_argument("empirical_chain_stats: need >= 10^5 steps");
  const StateCodec codec(format.indices.p, format.alphabet_size(),
                         format.memory());
  const ParityPartition parity = ParityPartition::make(codec);
  const int nc = cyclo_period(format.indices);
  const int nh = format.indices.period();

  SplitMix64 rng(seed);
  SmState s;
  s.z = 0;
  for (int i = 0; i < format.memory() - 1; ++i)
    s.recent.push_back(draw_symbol(format, rng));

  ChainStats st;
  st.visit_freq.assign(parity.half, 0.0);
  std::vector<std::vector<double>> counts(
      static_cast<std::size_t>(nc),
      std::vector<double>(parity.half * parity.half, 0.0));
  const int trace_len = static_cast<int>(std::min<long long>(steps, 64 * nc));
  st.parity_trace.reserve(static_cast<std::size_t>(trace_len));

  auto locate = [&](const SmState& state) {
    return parity.locate(codec, codec.encode(state));
  };
  auto [side, idx] = locate(s);
  for (long long n = 0; n < steps; ++n) {
    if (n < trace_len) st.parity_trace.push_back(side);
    st.visit_freq[idx] += 1.0;
    s = state_update(format, s, draw_symbol(format, rng), n);
    auto [nside, nidx] = locate(s);
    counts[static_cast<std::size_t>(n % nc)][nidx * parity.half + idx] += 1.0;
    side = nside;
    idx = nidx;
  }

  for (double& v : st.visit_freq) v /= static_cast<double>(steps);
  const CVec pinf = stationary_closed_form(format);
  double tv = 0.0;
  for (std::size_t i = 0; i < parity.half; ++i)
    tv += std::abs(st.visit_freq[i] - pinf[i].real());
  st.tv_distance = 0.5 * tv;

  st.empirical_tpm.reserve(static_cast<std::size_t>(nc));
  for (int phase = 0; phase < nc; ++phase) {
    CMat m(parity.half, parity.half);
    const auto& c = counts[static_cast<std::size_t>(phase)];
    for (std::size_t j = 0; j < parity.half; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < parity.half; ++i)
        col += c[i * parity.half + j];
      if (col > 0.0)
        for (std::size_t i = 0; i < parity.half; ++i)
          m(i, j) = cd(c[i * parity.half + j] / col, 0.0);
    }
    st.empirical_tpm.push_back(std::move(m));
  }

  for (int d = 1; d <= 2 * nh; ++d) {
    bool ok = true;
    for (std::size_t i = 0; i + static_cast<std::size_t>(d) <
                            st.parity_trace.size() && ok; ++i)
      ok = st.parity_trace[i] ==
           st.parity_trace[i + static_cast<std::size_t>(d)];
    if (ok) {
      st.empirical_period = d;
      break;
    }
  }
  return st;
}

}  // namespace cpmspec
