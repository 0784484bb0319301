#include "cpmspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <thread>

#include "cpmspec/quadrature.hpp"

namespace cpmspec {

PulseBank::PulseBank(const PolyphaseMachine& machine, QuadratureSpec quad)
    : mach_(machine), order_(quad.order), segs_(machine.block_len) {
  if (order_ < 4) throw std::invalid_argument("PulseBank: quadrature order < 4");
  const CpmFormat& fmt = mach_.format();
  const int l = fmt.memory();
  const int m = fmt.alphabet_size();
  const double t = fmt.symbol_period;
  win_count_ = 1;
  for (int i = 0; i < l; ++i) win_count_ *= static_cast<std::size_t>(m);

  const GaussLegendre gl(order_);
  // phase response sampled at node + i symbol offsets
  std::vector<double> phi(static_cast<std::size_t>(l) * order_);
  for (int i = 0; i < l; ++i)
    for (int np = 0; np < order_; ++np)
      phi[static_cast<std::size_t>(i) * order_ + np] =
          fmt.phase.eval((gl.nodes[static_cast<std::size_t>(np)] + i) * t);

  node_time_.resize(static_cast<std::size_t>(segs_) * order_);
  node_factor_.resize(static_cast<std::size_t>(segs_) * win_count_ * order_);
  for (int seg = 0; seg < segs_; ++seg) {
    for (int np = 0; np < order_; ++np)
      node_time_[static_cast<std::size_t>(seg) * order_ + np] =
          (seg + gl.nodes[static_cast<std::size_t>(np)]) * t;
    for (std::size_t w = 0; w < win_count_; ++w) {
      // window digit i holds the symbol at time seg - i, most significant first
      for (int np = 0; np < order_; ++np) {
        double theta = 0.0;
        for (int i = 0; i < l; ++i) {
          std::size_t div = 1;
          for (int d = 0; d < l - 1 - i; ++d) div *= static_cast<std::size_t>(m);
          const int di = static_cast<int>((w / div) % static_cast<std::size_t>(m));
          theta += 2.0 * M_PI * fmt.indices.h_at(seg - i) * fmt.symbol_at(di) *
                   phi[static_cast<std::size_t>(i) * order_ + np];
        }
        node_factor_[(static_cast<std::size_t>(seg) * win_count_ + w) * order_ +
                     np] =
            gl.weights[static_cast<std::size_t>(np)] * t *
            cd(std::cos(theta), std::sin(theta));
      }
    }
  }

  // per-row window indices and saturated-phase prefixes
  const std::size_t rows = mach_.out_rows;
  const int digits = segs_ + l - 1;
  const long long two_p = mach_.pti.codec.two_p();
  win_.resize(rows * static_cast<std::size_t>(segs_));
  zpre_.resize(rows * static_cast<std::size_t>(segs_));
  std::vector<int> sym(static_cast<std::size_t>(digits));
  for (std::size_t row = 0; row < rows; ++row) {
    std::size_t rest = row;
    for (int d = digits - 1; d >= 0; --d) {
      sym[static_cast<std::size_t>(d)] = fmt.symbol_at(
          static_cast<int>(rest % static_cast<std::size_t>(m)));
      rest /= static_cast<std::size_t>(m);
    }
    long long acc = 0;  // saturated exponent, exact modulo 2p
    for (int seg = 0; seg < segs_; ++seg) {
      zpre_[row * static_cast<std::size_t>(segs_) + seg] =
          static_cast<std::uint16_t>(acc);
      std::size_t widx = 0;
      for (int i = 0; i < l; ++i) {
        // symbol at time seg - i sits at digit (seg - i) + (l - 1)
        const int d = seg - i + l - 1;
        widx = widx * static_cast<std::size_t>(m) +
               static_cast<std::size_t>(
                   fmt.symbol_index(sym[static_cast<std::size_t>(d)]));
      }
      win_[row * static_cast<std::size_t>(segs_) + seg] =
          static_cast<std::uint16_t>(widx);
      // after this interval the symbol at time seg - l + 1 saturates; its
      // digit index is exactly seg
      const long long r = fmt.indices.r_at(seg - l + 1);
      acc = ((acc + r * sym[static_cast<std::size_t>(seg)]) % two_p + two_p) %
            two_p;
    }
  }
}

void PulseBank::eval_base(double f, CVec& out) const {
  const std::size_t rows = mach_.out_rows;
  out.assign(rows, cd(0.0, 0.0));
  const std::size_t nodes = static_cast<std::size_t>(segs_) * order_;
  CVec ephase(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double ang = -2.0 * M_PI * f * node_time_[k];
    ephase[k] = cd(std::cos(ang), std::sin(ang));
  }
  CVec table(static_cast<std::size_t>(segs_) * win_count_);
  for (int seg = 0; seg < segs_; ++seg)
    for (std::size_t w = 0; w < win_count_; ++w) {
      const cd* nf =
          &node_factor_[(static_cast<std::size_t>(seg) * win_count_ + w) *
                        order_];
      const cd* ep = &ephase[static_cast<std::size_t>(seg) * order_];
      cd acc = 0;
      for (int np = 0; np < order_; ++np) acc += nf[np] * ep[np];
      table[static_cast<std::size_t>(seg) * win_count_ + w] = acc;
    }
  const auto& roots = mach_.roots;
  for (std::size_t row = 0; row < rows; ++row) {
    const std::uint16_t* wrow = &win_[row * static_cast<std::size_t>(segs_)];
    const std::uint16_t* zrow = &zpre_[row * static_cast<std::size_t>(segs_)];
    cd acc = 0;
    for (int seg = 0; seg < segs_; ++seg)
      acc += roots[zrow[seg]] *
             table[static_cast<std::size_t>(seg) * win_count_ + wrow[seg]];
    out[row] = acc;
  }
}

CVec PulseBank::eval_base(double f) const {
  CVec out;
  eval_base(f, out);
  return out;
}

cd PulseBank::value(std::size_t word, std::size_t j, int sign,
                    const CVec& base) const {
  const std::size_t tail = j % mach_.pti.codec.tail_count();
  return mach_.roots[static_cast<std::size_t>(mach_.state_zexp(j, sign))] *
         base[tail * mach_.words + word];
}

double SpectrumResult::peak() const {
  double m = 0.0;
  for (double v : psd) m = std::max(m, v);
  return m;
}

void SpectrumResult::write_csv(std::ostream& os, bool absolute_db) const {
  const double ref = absolute_db ? 1.0 : std::max(peak(), 1e-300);
  os << "fT, psd_linear, psd_db\n";
  char buf[96];
  for (std::size_t i = 0; i < grid_ft.size(); ++i) {
    const double lin = psd[i];
    const double db = 10.0 * std::log10(std::max(lin / ref, 1e-40));
    std::snprintf(buf, sizeof buf, "%.12g, %.12g, %.6f\n", grid_ft[i], lin, db);
    os << buf;
  }
}

void SpectrumResult::write_lines_csv(std::ostream& os) const {
  os << "k, fT, weight\n";
  char buf[96];
  for (const SpectralLine& l : lines) {
    std::snprintf(buf, sizeof buf, "%ld, %.12g, %.12g\n", l.k, l.freq_ft,
                  l.weight);
    os << buf;
  }
}

std::vector<double> make_grid(double fmin_ft, double fmax_ft, int points) {
  if (points < 2 || !(fmin_ft < fmax_ft))
    throw std::invalid_argument("make_grid: bad grid spec");
  std::vector<double> g(static_cast<std::size_t>(points));
  const double step = (fmax_ft - fmin_ft) / (points - 1);
  for (int i = 0; i < points; ++i)
    g[static_cast<std::size_t>(i)] = fmin_ft + step * i;
  return g;
}

double total_power(const SpectrumResult& r, double symbol_period) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < r.grid_ft.size(); ++i)
    acc += 0.5 * (r.psd[i] + r.psd[i + 1]) *
           (r.grid_ft[i + 1] - r.grid_ft[i]) / symbol_period;
  return acc + r.line_power;
}

SpectrumAnalyzer::SpectrumAnalyzer(const PolyphaseMachine& machine,
                                   SpectrumOptions opts)
    : mach_(machine),
      opts_(opts),
      bank_(machine, opts.quadrature),
      poly_((opts.trajectory_sign >= 0 ? machine.big_tpm_plus
                                       : machine.big_tpm_minus) -
            machine.limit),
      poly_adj_(((opts.trajectory_sign >= 0 ? machine.big_tpm_plus
                                            : machine.big_tpm_minus) -
                 machine.limit)
                    .adjoint()) {
  const std::size_t half = mach_.half;
  const std::size_t rows = mach_.out_rows;
  w0_.resize(rows);
  for (std::size_t b = 0; b < rows; ++b) w0_[b] = mach_.row_prob(b);
  wp_.resize(mach_.words);
  for (std::size_t x = 0; x < mach_.words; ++x) wp_[x] = mach_.word_prob(x);

  const int sign = opts_.trajectory_sign >= 0 ? +1 : -1;
  const auto& target = (sign > 0) ? mach_.target_plus : mach_.target_minus;
  c1_ = CMat(half, rows);
  const std::size_t tails = mach_.pti.codec.tail_count();
  for (std::size_t x = 0; x < mach_.words; ++x) {
    const double px = wp_[x];
    for (std::size_t j = 0; j < half; ++j) {
      const std::size_t tail = j % tails;
      const std::size_t row = tail * mach_.words + x;
      const std::size_t i = target[x * half + j];
      const cd w = std::conj(
          mach_.roots[static_cast<std::size_t>(mach_.state_zexp(j, sign))]);
      c1_(i, row) += px * mach_.stationary[j].real() * w;
    }
  }

  defl_ = CMat::identity(half) - mach_.limit;
  fmat_ = ((sign > 0) ? mach_.big_tpm_plus : mach_.big_tpm_minus) - mach_.limit;
  fmat_adj_ = fmat_.adjoint();

  // per-tail phase columns: V(s, tail) = W^{z_s} when the state carries that
  // tail, zero otherwise; K_2 = k2t^T V^T
  CMat v(half, tails);
  for (std::size_t j = 0; j < half; ++j)
    v(j, j % tails) =
        mach_.roots[static_cast<std::size_t>(mach_.state_zexp(j, sign))];
  const CMat ubar = matmul(defl_.adjoint(), v.conj());
  sandwich_mode_ = tails * rows <= half * half;
  if (sandwich_mode_) {
    sandwich_pos_ =
        poly_.prepare_sandwich(matmul(v.transpose(), defl_), c1_);
    sandwich_neg_ = poly_adj_.prepare_sandwich(c1_.adjoint(), ubar);
  } else {
    prepared_adj_ = poly_adj_.prepare(ubar);
  }
}

CVec SpectrumAnalyzer::mean_word(int sign) const {
  CVec m(mach_.out_rows, cd(0.0, 0.0));
  for (std::size_t x = 0; x < mach_.words; ++x)
    for (std::size_t j = 0; j < mach_.half; ++j) {
      const auto e = mach_.output_entry(x, j, sign);
      m[e.row] += wp_[x] * mach_.stationary[j].real() *
                  mach_.roots[static_cast<std::size_t>(e.zexp)];
    }
  return m;
}

CMat SpectrumAnalyzer::c2_dense() const {
  CMat c2(mach_.out_rows, mach_.half);
  for (std::size_t x = 0; x < mach_.words; ++x)
    for (std::size_t j = 0; j < mach_.half; ++j) {
      const auto e = mach_.output_entry(x, j, +1);
      c2(e.row, j) += wp_[x] * mach_.roots[static_cast<std::size_t>(e.zexp)];
    }
  return c2;
}

CVec SpectrumAnalyzer::ry0_diagonal() const {
  CVec d(mach_.out_rows);
  for (std::size_t b = 0; b < mach_.out_rows; ++b) d[b] = cd(w0_[b], 0.0);
  return d;
}

CMat SpectrumAnalyzer::ry0_dense() const {
  CMat r(mach_.out_rows, mach_.out_rows);
  for (std::size_t x = 0; x < mach_.words; ++x)
    for (std::size_t j = 0; j < mach_.half; ++j) {
      const auto e = mach_.output_entry(x, j, +1);
      r(e.row, e.row) += wp_[x] * mach_.stationary[j].real();
    }
  return r;
}

CMat SpectrumAnalyzer::ry(int n) const {
  if (n < 1) throw std::invalid_argument("ry: n must be >= 1");
  const CMat mid = matpow(mach_.big_tpm_plus, static_cast<unsigned long>(n - 1));
  return matmul(c2_dense(), matmul(mid, c1_));
}

CMat SpectrumAnalyzer::ry_limit() const {
  return matmul(c2_dense(), matmul(mach_.limit, c1_));
}

double SpectrumAnalyzer::ry_decay_max(int n) const {
  if (n < 1) throw std::invalid_argument("ry_decay_max: n must be >= 1");
  CMat mid = matpow(mach_.big_tpm_plus, static_cast<unsigned long>(n - 1));
  mid -= mach_.limit;
  const CMat a = matmul(mid, c1_);  // half x N_0
  // rows of C_2 sharing a tail are proportional, so the exact entry maximum
  // factorizes into max word probability times the tail-grouped contraction
  const std::size_t tails = mach_.pti.codec.tail_count();
  double mrow = 0.0;
  for (std::size_t tail = 0; tail < tails; ++tail)
    for (std::size_t col = 0; col < mach_.out_rows; ++col) {
      cd acc = 0;
      for (std::size_t j = tail; j < mach_.half; j += tails)
        acc += mach_.roots[static_cast<std::size_t>(mach_.state_zexp(j, +1))] *
               a(j, col);
      mrow = std::max(mrow, std::abs(acc));
    }
  double pmax = 0.0;
  for (double p : wp_) pmax = std::max(pmax, p);
  return pmax * mrow;
}

void SpectrumAnalyzer::freq_work(double f, FreqWork& w) const {
  bank_.eval_base(f, w.base);
  const std::size_t rows = mach_.out_rows;
  const std::size_t half = mach_.half;
  const std::size_t tails = mach_.pti.codec.tail_count();

  w.k0 = 0.0;
  for (std::size_t b = 0; b < rows; ++b) w.k0 += w0_[b] * std::norm(w.base[b]);

  // K_1 = C_1 conj(base)
  w.k1.assign(half, cd(0.0, 0.0));
  for (std::size_t i = 0; i < half; ++i) {
    const cd* ci = c1_.row(i);
    cd acc = 0;
    for (std::size_t b = 0; b < rows; ++b) acc += ci[b] * std::conj(w.base[b]);
    w.k1[i] = acc;
  }

  // K_2 restricted to one tail block, then spread over the phase digits
  const int sign = opts_.trajectory_sign >= 0 ? +1 : -1;
  w.k2.assign(half, cd(0.0, 0.0));
  w.k2t.assign(tails, cd(0.0, 0.0));
  for (std::size_t tail = 0; tail < tails; ++tail) {
    cd acc = 0;
    const std::size_t base_off = tail * mach_.words;
    for (std::size_t x = 0; x < mach_.words; ++x)
      acc += wp_[x] * w.base[base_off + x];
    w.k2t[tail] = acc;
    for (std::size_t j = tail; j < half; j += tails)
      w.k2[j] =
          mach_.roots[static_cast<std::size_t>(mach_.state_zexp(j, sign))] * acc;
  }

  w.mean_line = 0.0;
  for (std::size_t j = 0; j < half; ++j)
    w.mean_line += w.k2[j] * mach_.stationary[j].real();
}

std::pair<cd, cd> SpectrumAnalyzer::resolvent_pair(
    cd lambda, const FreqWork& w, ResolventBackend backend) const {
  const std::size_t half = mach_.half;
  const std::size_t tails = mach_.pti.codec.tail_count();
  cd tpos, tneg;
  if (backend == ResolventBackend::Direct) {
    CMat a = fmat_ * cd(-1.0, 0.0);
    for (std::size_t i = 0; i < half; ++i) a(i, i) += lambda;
    LuFactors lu = lu_factor(std::move(a));
    cd det = cd(static_cast<double>(lu.sign), 0.0);
    for (std::size_t i = 0; i < half; ++i) det *= lu.lu(i, i);
    if (lu.singular || std::abs(det) < 1e-250)
      throw NearSingularResolvent(lambda, std::abs(det));
    const CVec y = lu_solve(lu, w.k1);
    const CVec dy = matvec(defl_, y);
    tpos = 0;
    for (std::size_t j = 0; j < half; ++j) tpos += w.k2[j] * dy[j];
    // negative shifts through the adjoint pencil, reusing the factors
    CVec k2h(half);
    for (std::size_t j = 0; j < half; ++j) k2h[j] = std::conj(w.k2[j]);
    const CVec yn = lu_solve_adjoint(lu, adjoint_matvec(defl_, k2h));
    tneg = 0;
    for (std::size_t j = 0; j < half; ++j) tneg += std::conj(w.k1[j]) * yn[j];
    return {tpos, tneg};
  }

  if (sandwich_mode_) {
    // t = k2t^T [V^T defl R(lambda) C_1] conj(base)
    const CMat zp = sandwich_pos_.at(lambda);  // tails x N_0
    tpos = 0;
    for (std::size_t tail = 0; tail < tails; ++tail) {
      const cd* zr = zp.row(tail);
      cd acc = 0;
      for (std::size_t b = 0; b < mach_.out_rows; ++b)
        acc += zr[b] * std::conj(w.base[b]);
      tpos += w.k2t[tail] * acc;
    }
    const CMat zn = sandwich_neg_.at(std::conj(lambda));  // N_0 x tails
    tneg = 0;
    for (std::size_t b = 0; b < mach_.out_rows; ++b) {
      const cd* zr = zn.row(b);
      cd acc = 0;
      for (std::size_t tail = 0; tail < tails; ++tail)
        acc += zr[tail] * std::conj(w.k2t[tail]);
      tneg += w.base[b] * acc;
    }
    return {tpos, tneg};
  }

  const CVec y = poly_.apply(lambda, w.k1);
  const CVec dy = matvec(defl_, y);
  tpos = 0;
  for (std::size_t j = 0; j < half; ++j) tpos += w.k2[j] * dy[j];

  const CMat zn = prepared_adj_.at(std::conj(lambda));  // half x tails
  tneg = 0;
  for (std::size_t j = 0; j < half; ++j) {
    cd acc = 0;
    const cd* zj = zn.row(j);
    for (std::size_t tail = 0; tail < tails; ++tail)
      acc += zj[tail] * std::conj(w.k2t[tail]);
    tneg += std::conj(w.k1[j]) * acc;
  }
  return {tpos, tneg};
}

cd SpectrumAnalyzer::resolvent_term(double f_ft, ResolventBackend backend) const {
  const double t = mach_.pti.format.symbol_period;
  const double tc = mach_.block_period();
  FreqWork w;
  freq_work(f_ft / t, w);
  const double ang = 2.0 * M_PI * (f_ft / t) * tc;
  const cd lambda = cd(std::cos(ang), std::sin(ang));
  return resolvent_pair(lambda, w, backend).first;
}

namespace {

void parallel_over(std::size_t count, int threads,
                   const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace

SpectrumResult SpectrumAnalyzer::closed_form(
    const std::vector<double>& grid_ft) const {
  const double t = mach_.pti.format.symbol_period;
  const double tc = mach_.block_period();
  const bool lines = has_lines();
  SpectrumResult res;
  res.grid_ft = grid_ft;
  res.psd.assign(grid_ft.size(), 0.0);
  res.block_len = mach_.block_len;
  res.half = mach_.half;
  res.p = mach_.pti.format.indices.p;

  std::vector<double> imag_res(grid_ft.size(), 0.0);
  auto work = [&](std::size_t begin, std::size_t end) {
    FreqWork w;
    for (std::size_t i = begin; i < end; ++i) {
      const double f = grid_ft[i] / t;
      freq_work(f, w);
      const double ang = 2.0 * M_PI * f * tc;
      const cd lambda = cd(std::cos(ang), std::sin(ang));
      const auto [tpos, tneg] = resolvent_pair(lambda, w, opts_.backend);
      double val = w.k0 + 2.0 * tpos.real();
      if (lines) val -= std::norm(w.mean_line);
      res.psd[i] = val / tc;
      imag_res[i] = std::abs((tpos + tneg).imag()) / tc;
    }
  };
  parallel_over(grid_ft.size(), opts_.threads, work);
  for (double v : imag_res)
    res.max_imag_residual = std::max(res.max_imag_residual, v);
  if (lines) {
    res.lines = spectral_lines();
    for (const SpectralLine& l : res.lines) res.line_power += l.weight;
  }
  return res;
}

SpectrumResult SpectrumAnalyzer::series(const std::vector<double>& grid_ft,
                                        int truncation) const {
  if (truncation < 1)
    throw std::invalid_argument("series: truncation must be >= 1");
  const double t = mach_.pti.format.symbol_period;
  const double tc = mach_.block_period();
  const bool lines = has_lines();
  SpectrumResult res;
  res.grid_ft = grid_ft;
  res.psd.assign(grid_ft.size(), 0.0);
  res.block_len = mach_.block_len;
  res.half = mach_.half;
  res.p = mach_.pti.format.indices.p;

  std::vector<double> imag_res(grid_ft.size(), 0.0);
  auto work = [&](std::size_t begin, std::size_t end) {
    FreqWork w;
    for (std::size_t i = begin; i < end; ++i) {
      const double f = grid_ft[i] / t;
      freq_work(f, w);
      const double ang = 2.0 * M_PI * f * tc;
      const cd eneg = cd(std::cos(-ang), std::sin(-ang));
      const cd epos = std::conj(eneg);
      cd acc = cd(w.k0, 0.0);
      if (lines) acc -= std::norm(w.mean_line);
      CVec v = matvec(defl_, w.k1);
      CVec k2h(mach_.half);
      for (std::size_t j = 0; j < mach_.half; ++j) k2h[j] = std::conj(w.k2[j]);
      CVec u = adjoint_matvec(defl_, k2h);
      cd pn = eneg, qn = epos;
      for (int n = 1; n <= truncation; ++n) {
        cd fwd = 0, bwd = 0;
        for (std::size_t j = 0; j < mach_.half; ++j) {
          fwd += w.k2[j] * v[j];
          bwd += std::conj(w.k1[j]) * u[j];
        }
        acc += pn * fwd + qn * bwd;
        if (n < truncation) {
          v = matvec(fmat_, v);
          u = adjoint_matvec(fmat_, u);
          pn *= eneg;
          qn *= epos;
        }
      }
      res.psd[i] = acc.real() / tc;
      imag_res[i] = std::abs(acc.imag()) / tc;
    }
  };
  parallel_over(grid_ft.size(), opts_.threads, work);
  for (double v : imag_res)
    res.max_imag_residual = std::max(res.max_imag_residual, v);
  if (lines) {
    res.lines = spectral_lines();
    for (const SpectralLine& l : res.lines) res.line_power += l.weight;
  }
  return res;
}

std::vector<SpectralLine> SpectrumAnalyzer::spectral_lines() const {
  std::vector<SpectralLine> out;
  if (!has_lines()) return out;
  const double t = mach_.pti.format.symbol_period;
  const double tc = mach_.block_period();
  const long kmax =
      static_cast<long>(std::ceil(opts_.line_scan_ft * tc / t));
  FreqWork w;
  for (long k = -kmax; k <= kmax; ++k) {
    const double f = static_cast<double>(k) / tc;
    freq_work(f, w);
    const double weight = std::norm(w.mean_line) / (tc * tc);
    if (weight > opts_.line_threshold)
      out.push_back({k, f * t, weight});
  }
  return out;
}

namespace {

void parallel_over(std::size_t count, int threads,
                   const std::function<void(std::size_t, std::size_t)>& fn) {
  unsigned n = threads > 0 ? static_cast<unsigned>(threads)
                           : std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  n = std::min<unsigned>(n, count > 0 ? static_cast<unsigned>(count) : 1);
  if (n <= 1) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + n - 1) / n;
  for (unsigned i = 0; i < n; ++i) {
    const std::size_t begin = i * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

}  // namespace cpmspec
