#include "cpmspec/cpm_format.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cpmspec {

Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  Rational r;
  std::size_t pos = 0;
  try {
    if (slash == std::string::npos) {
      r.num = std::stoll(text, &pos);
      r.den = 1;
      if (pos != text.size()) throw std::invalid_argument("");
    } else {
      r.num = std::stoll(text.substr(0, slash), &pos);
      if (pos != slash) throw std::invalid_argument("");
      r.den = std::stoll(text.substr(slash + 1), &pos);
      if (pos != text.size() - slash - 1) throw std::invalid_argument("");
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid rational: '" + text + "'");
  }
  if (r.den <= 0)
    throw std::invalid_argument("invalid rational (denominator must be positive): '" +
                                text + "'");
  return r;
}

ModulationIndexSet ModulationIndexSet::rotated(int offset) const {
  ModulationIndexSet out;
  out.p = p;
  const int nh = period();
  out.r.resize(r.size());
  for (int k = 0; k < nh; ++k)
    out.r[k] = r[static_cast<std::size_t>(((k + offset) % nh + nh) % nh)];
  return out;
}

ModulationIndexSet ModulationIndexSet::normalize(const std::vector<Rational>& h) {
  if (h.empty())
    throw std::invalid_argument("invalid format: empty modulation index list");
  long long p = 1;
  std::vector<long long> num(h.size()), den(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].den <= 0)
      throw std::invalid_argument("invalid format: non-positive denominator");
    const long long g = std::gcd(std::abs(h[i].num), h[i].den);
    num[i] = g ? h[i].num / g : 0;
    den[i] = g ? h[i].den / g : 1;
    p = std::lcm(p, den[i]);
  }
  ModulationIndexSet out;
  out.p = p;
  out.r.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out.r[i] = num[i] * (p / den[i]);
  return out;
}

const char* phase_kind_name(PhaseKind k) {
  switch (k) {
    case PhaseKind::Lrec: return "lrec";
    case PhaseKind::Lrc: return "lrc";
    case PhaseKind::Gmsk: return "gmsk";
  }
  return "?";
}

PhaseKind phase_kind_from_name(const std::string& name) {
  if (name == "lrec" || name == "cpfsk" || name == "rec") return PhaseKind::Lrec;
  if (name == "lrc" || name == "rc") return PhaseKind::Lrc;
  if (name == "gmsk") return PhaseKind::Gmsk;
  throw std::invalid_argument("unknown phase response kind: '" + name + "'");
}

namespace {

double gauss_cdf(double a) { return 0.5 * std::erfc(-a / std::sqrt(2.0)); }

// Antiderivative of the Gaussian CDF: a*Phi(a) + pdf(a).
double gauss_cdf_integral(double a) {
  return a * gauss_cdf(a) + std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
}

}  // namespace

PhaseResponse::PhaseResponse(PhaseKind kind, int memory, double symbol_period)
    : kind_(kind), memory_(memory), t_(symbol_period) {
  if (memory < 1)
    throw std::invalid_argument("PhaseResponse: memory must be >= 1");
  if (symbol_period <= 0.0)
    throw std::invalid_argument("PhaseResponse: symbol period must be positive");
  if (kind_ == PhaseKind::Gmsk) {
    gmsk_raw0_ = raw_gmsk(0.0);
    const double rawl = raw_gmsk(memory_ * t_);
    gmsk_scale_ = 0.5 / (rawl - gmsk_raw0_);
  }
}

double PhaseResponse::raw_gmsk(double t) const {
  // Gaussian pulse centered at LT/2, half-symbol offsets; the usual L=4
  // truncation puts the edges at 3/2 and 5/2 symbol periods.
  static const double kGain = M_PI / (2.0 * std::sqrt(std::log(2.0)));
  const double x = t / t_;
  const double c = 0.5 * memory_;
  return (gauss_cdf_integral(kGain * (x - (c - 0.5))) -
          gauss_cdf_integral(kGain * (x - (c + 0.5)))) /
         (2.0 * kGain);
}

double PhaseResponse::eval(double t) const {
  const double lt = memory_ * t_;
  if (t <= 0.0) return 0.0;
  if (t >= lt) return 0.5;
  switch (kind_) {
    case PhaseKind::Lrec:
      return t / (2.0 * lt);
    case PhaseKind::Lrc:
      return t / (2.0 * lt) - std::sin(2.0 * M_PI * t / lt) / (4.0 * M_PI);
    case PhaseKind::Gmsk:
      return (raw_gmsk(t) - gmsk_raw0_) * gmsk_scale_;
  }
  return 0.0;
}

CpmFormat CpmFormat::make(int m, PhaseKind kind, int memory,
                          const std::vector<Rational>& h,
                          std::vector<double> symbol_probs,
                          double symbol_period) {
  if (m < 2 || m % 2 != 0)
    throw std::invalid_argument("invalid format: alphabet size must be even and >= 2");
  CpmFormat f{m, PhaseResponse(kind, memory, symbol_period),
              ModulationIndexSet::normalize(h), {}, symbol_period};
  if (symbol_probs.empty())
    symbol_probs.assign(static_cast<std::size_t>(m), 1.0 / m);
  if (symbol_probs.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("invalid format: symbol probability count != M");
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < symbol_probs.size(); ++i) {
    if (symbol_probs[i] < 0.0)
      throw std::invalid_argument("invalid format: negative symbol probability");
    partial += symbol_probs[i];
  }
  const double last = 1.0 - partial;
  if (std::abs(last - symbol_probs.back()) > 1e-9 || last < -1e-12)
    throw std::invalid_argument("invalid format: symbol probabilities do not sum to 1");
  // pin the running sum to exactly 1 so stochasticity checks hold bit-exactly
  symbol_probs.back() = std::max(last, 0.0);
  f.symbol_probs = std::move(symbol_probs);
  return f;
}

CpmFormat CpmFormat::with_rotated_indices(int offset) const {
  CpmFormat f = *this;
  f.indices = indices.rotated(offset);
  return f;
}

int CpmFormat::symbol_index(int a) const {
  if (a % 2 == 0 || a < -(m - 1) || a > m - 1)
    throw std::invalid_argument("invalid symbol: " + std::to_string(a));
  return (a + (m - 1)) / 2;
}

WaveformSynth::WaveformSynth(const CpmFormat& format, int samples_per_symbol)
    : fmt_(format), sps_(samples_per_symbol) {
  if (sps_ < 1)
    throw std::invalid_argument("WaveformSynth: samples_per_symbol must be >= 1");
  const int l = fmt_.memory();
  phi_table_.resize(static_cast<std::size_t>(l) * sps_ + 1);
  for (std::size_t j = 0; j < phi_table_.size(); ++j)
    phi_table_[j] = fmt_.phase.eval(static_cast<double>(j) * fmt_.symbol_period / sps_);
  recent_.reserve(static_cast<std::size_t>(l));
}

void WaveformSynth::step(int symbol, std::vector<cd>& out) {
  fmt_.symbol_index(symbol);  // validates
  const int l = fmt_.memory();
  const long long p = fmt_.indices.p;
  const double base = M_PI * static_cast<double>(zacc_) / static_cast<double>(p);
  for (int k = 0; k < sps_; ++k) {
    double ph = base;
    ph += 2.0 * M_PI * fmt_.indices.h_at(n_) * symbol * phi_table_[k];
    const int s = static_cast<int>(recent_.size());
    for (int i = 1; i <= std::min(s, l - 1); ++i) {
      const int a = recent_[static_cast<std::size_t>(s - i)];
      ph += 2.0 * M_PI * fmt_.indices.h_at(n_ - i) * a *
            phi_table_[static_cast<std::size_t>(i) * sps_ + k];
    }
    out.emplace_back(std::cos(ph), std::sin(ph));
  }
  recent_.push_back(symbol);
  if (static_cast<int>(recent_.size()) == l) {
    const long long m = n_ + 1 - l;  // time index of the symbol leaving the window
    const long long inc = fmt_.indices.r_at(m) * recent_.front();
    const long long two_p = 2 * p;
    zacc_ = ((zacc_ + inc) % two_p + two_p) % two_p;
    recent_.erase(recent_.begin());
  }
  ++n_;
}

WaveformSegment synthesize_waveform(const CpmFormat& format,
                                    const std::vector<int>& symbols,
                                    int samples_per_symbol) {
  if (symbols.empty())
    throw std::invalid_argument("synthesize_waveform: empty symbol sequence");
  if (samples_per_symbol < 8)
    throw std::invalid_argument("synthesize_waveform: need >= 8 samples per symbol");
  WaveformSynth synth(format, samples_per_symbol);
  WaveformSegment seg;
  seg.samples_per_symbol = samples_per_symbol;
  seg.samples.reserve(symbols.size() * static_cast<std::size_t>(samples_per_symbol));
  for (int a : symbols) synth.step(a, seg.samples);
  return seg;
}

}  // namespace cpmspec
