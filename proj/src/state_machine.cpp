#include "cpmspec/state_machine.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace cpmspec {

StateCodec::StateCodec(long long p, int m, int memory)
    : two_p_(2 * p), m_(m), memory_(memory) {
  if (p < 1 || m < 2 || memory < 1)
    throw std::invalid_argument("StateCodec: bad dimensions");
  tails_ = 1;
  for (int i = 1; i < memory_; ++i) tails_ *= static_cast<std::size_t>(m_);
  count_ = static_cast<std::size_t>(two_p_) * tails_;
}

std::size_t StateCodec::encode(const SmState& s) const {
  if (s.z < 0 || s.z >= two_p_ ||
      s.recent.size() != static_cast<std::size_t>(memory_ - 1))
    throw std::invalid_argument("StateCodec: state out of range");
  return static_cast<std::size_t>(s.z) * tails_ + tail_index(s.recent);
}

SmState StateCodec::decode(std::size_t flat) const {
  SmState s;
  s.z = static_cast<long long>(flat / tails_);
  s.recent = tail_at(flat % tails_);
  return s;
}

std::size_t StateCodec::tail_index(const std::vector<int>& recent) const {
  std::size_t idx = 0;
  for (int a : recent) {
    if (a % 2 == 0 || a < -(m_ - 1) || a > m_ - 1)
      throw std::invalid_argument("StateCodec: symbol outside alphabet");
    idx = idx * static_cast<std::size_t>(m_) +
          static_cast<std::size_t>((a + (m_ - 1)) / 2);
  }
  return idx;
}

std::vector<int> StateCodec::tail_at(std::size_t tail) const {
  std::vector<int> recent(static_cast<std::size_t>(memory_ - 1));
  for (int i = memory_ - 2; i >= 0; --i) {
    recent[static_cast<std::size_t>(i)] =
        2 * static_cast<int>(tail % static_cast<std::size_t>(m_)) - (m_ - 1);
    tail /= static_cast<std::size_t>(m_);
  }
  return recent;
}

SmState state_update(const CpmFormat& format, const SmState& s, int symbol,
                     long long n) {
  format.symbol_index(symbol);  // validates
  const long long two_p = 2 * format.indices.p;
  const int l = format.memory();
  SmState next;
  const long long r = format.indices.r_at(n - l + 1);
  const long long leading = (l == 1) ? symbol : s.recent.front();
  next.z = (((s.z + r * leading) % two_p) + two_p) % two_p;
  if (l > 1) {
    next.recent.assign(s.recent.begin() + 1, s.recent.end());
    next.recent.push_back(symbol);
  }
  return next;
}

CVec OutputWord::dense(long long two_p) const {
  CVec v(length);
  const double ang = 2.0 * M_PI * static_cast<double>(zexp) /
                     static_cast<double>(two_p);
  v[index] = cd(std::cos(ang), std::sin(ang));
  return v;
}

OutputWord output_word(const CpmFormat& format, const SmState& s, int symbol) {
  const int m = format.alphabet_size();
  OutputWord w;
  w.zexp = s.z;
  std::size_t idx = 0;
  for (int a : s.recent)
    idx = idx * static_cast<std::size_t>(m) +
          static_cast<std::size_t>(format.symbol_index(a));
  idx = idx * static_cast<std::size_t>(m) +
        static_cast<std::size_t>(format.symbol_index(symbol));
  w.index = idx;
  w.length = 1;
  for (int i = 0; i < format.memory(); ++i) w.length *= static_cast<std::size_t>(m);
  return w;
}

CMat conditional_matrix(const CpmFormat& format, int symbol, long long n) {
  const int m = format.alphabet_size();
  const int l = format.memory();
  const long long two_p = 2 * format.indices.p;
  const long long r = format.indices.r_at(n - l + 1);
  if (l == 1) return cyclic_shift_power(static_cast<std::size_t>(two_p), r * symbol);
  CMat w_alpha(static_cast<std::size_t>(m), 1);
  w_alpha(static_cast<std::size_t>(format.symbol_index(symbol)), 0) = cd(1.0, 0.0);
  std::size_t mid = 1;
  for (int i = 0; i < l - 2; ++i) mid *= static_cast<std::size_t>(m);
  const CMat eye_mid = CMat::identity(mid);
  const StateCodec codec(format.indices.p, m, l);
  CMat e(codec.state_count(), codec.state_count());
  for (int bi = 0; bi < m; ++bi) {
    const int beta = format.symbol_at(bi);
    CMat w_beta_t(1, static_cast<std::size_t>(m));
    w_beta_t(0, static_cast<std::size_t>(bi)) = cd(1.0, 0.0);
    CMat term = kron(cyclic_shift_power(static_cast<std::size_t>(two_p), r * beta),
                     kron(w_beta_t, kron(eye_mid, w_alpha)));
    e += term;
  }
  return e;
}

CMat conditional_matrix_enumerated(const CpmFormat& format, int symbol,
                                   long long n) {
  const StateCodec codec(format.indices.p, format.alphabet_size(),
                         format.memory());
  CMat e(codec.state_count(), codec.state_count());
  for (std::size_t j = 0; j < codec.state_count(); ++j) {
    const SmState s = codec.decode(j);
    e(codec.encode(state_update(format, s, symbol, n)), j) = cd(1.0, 0.0);
  }
  return e;
}

CMat tpm(const CpmFormat& format, long long n) {
  const StateCodec codec(format.indices.p, format.alphabet_size(),
                         format.memory());
  CMat pi(codec.state_count(), codec.state_count());
  for (int ai = 0; ai < format.alphabet_size(); ++ai) {
    const CMat e = conditional_matrix(format, format.symbol_at(ai), n);
    const cd q = cd(format.symbol_probs[static_cast<std::size_t>(ai)], 0.0);
    for (std::size_t i = 0; i < pi.rows(); ++i)
      for (std::size_t j = 0; j < pi.cols(); ++j)
        if (e(i, j) != cd(0.0, 0.0)) pi(i, j) += q * e(i, j);
  }
  return pi;
}

CMat tpm_kron(const CpmFormat& format, long long n) {
  const int m = format.alphabet_size();
  const int l = format.memory();
  const long long two_p = 2 * format.indices.p;
  const long long r = format.indices.r_at(n - l + 1);
  if (l == 1) {
    CMat pi(static_cast<std::size_t>(two_p), static_cast<std::size_t>(two_p));
    for (int bi = 0; bi < m; ++bi) {
      const CMat d = cyclic_shift_power(static_cast<std::size_t>(two_p),
                                        r * format.symbol_at(bi));
      const cd q = cd(format.symbol_probs[static_cast<std::size_t>(bi)], 0.0);
      for (std::size_t i = 0; i < pi.rows(); ++i)
        for (std::size_t j = 0; j < pi.cols(); ++j)
          if (d(i, j) != cd(0.0, 0.0)) pi(i, j) += q * d(i, j);
    }
    return pi;
  }
  CMat qcol(static_cast<std::size_t>(m), 1);
  for (int ai = 0; ai < m; ++ai)
    qcol(static_cast<std::size_t>(ai), 0) =
        cd(format.symbol_probs[static_cast<std::size_t>(ai)], 0.0);
  std::size_t mid = 1;
  for (int i = 0; i < l - 2; ++i) mid *= static_cast<std::size_t>(m);
  const CMat eye_mid = CMat::identity(mid);
  const StateCodec codec(format.indices.p, m, l);
  CMat pi(codec.state_count(), codec.state_count());
  for (int bi = 0; bi < m; ++bi) {
    const int beta = format.symbol_at(bi);
    CMat w_beta_t(1, static_cast<std::size_t>(m));
    w_beta_t(0, static_cast<std::size_t>(bi)) = cd(1.0, 0.0);
    pi += kron(cyclic_shift_power(static_cast<std::size_t>(two_p), r * beta),
               kron(w_beta_t, kron(eye_mid, qcol)));
  }
  return pi;
}

CVec invariant_apv(const CpmFormat& format) {
  const StateCodec codec(format.indices.p, format.alphabet_size(),
                         format.memory());
  const long long two_p = codec.two_p();
  CVec p(codec.state_count());
  for (std::size_t flat = 0; flat < p.size(); ++flat) {
    const std::size_t tail = flat % codec.tail_count();
    double v = 1.0 / static_cast<double>(two_p);
    // multiply tail digit probabilities most-significant first
    std::size_t rest = tail;
    std::vector<double> digits;
    for (int i = 0; i < format.memory() - 1; ++i) {
      digits.push_back(format.symbol_probs[rest % static_cast<std::size_t>(
          format.alphabet_size())]);
      rest /= static_cast<std::size_t>(format.alphabet_size());
    }
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) v *= *it;
    p[flat] = cd(v, 0.0);
  }
  return p;
}

PtiMachine PtiMachine::build(const CpmFormat& format) {
  PtiMachine mach{format,
                  StateCodec(format.indices.p, format.alphabet_size(),
                             format.memory()),
                  {},
                  {},
                  invariant_apv(format)};
  const int nh = format.indices.period();
  mach.cond.resize(static_cast<std::size_t>(nh));
  mach.tpms.reserve(static_cast<std::size_t>(nh));
  for (int n = 0; n < nh; ++n) {
    auto& row = mach.cond[static_cast<std::size_t>(n)];
    row.reserve(static_cast<std::size_t>(format.alphabet_size()));
    for (int ai = 0; ai < format.alphabet_size(); ++ai)
      row.push_back(conditional_matrix(format, format.symbol_at(ai), n));
    mach.tpms.push_back(tpm(format, n));
  }
  return mach;
}

void dump_tpm_parity_ordered(const CMat& tpm, const StateCodec& codec,
                             std::ostream& os) {
  std::vector<std::size_t> order;
  for (int parity = 0; parity < 2; ++parity)
    for (std::size_t f = 0; f < codec.state_count(); ++f)
      if (codec.decode(f).z % 2 == parity) order.push_back(f);
  os << "      ";
  for (std::size_t j : order) os << " z" << codec.decode(j).z << "     ";
  os << '\n';
  for (std::size_t i : order) {
    os << "z" << codec.decode(i).z << " | ";
    for (std::size_t j : order) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%7.4f ", tpm(i, j).real());
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace cpmspec
