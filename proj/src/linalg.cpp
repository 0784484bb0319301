#include "cpmspec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cpmspec {

CMat CMat::identity(std::size_t n) {
  CMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = cd(1.0, 0.0);
  return m;
}

CMat CMat::adjoint() const {
  CMat r(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
  return r;
}

CMat CMat::transpose() const {
  CMat r(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
  return r;
}

CMat CMat::conj() const {
  CMat r(rows_, cols_);
  for (std::size_t k = 0; k < a_.size(); ++k) r.a_[k] = std::conj(a_[k]);
  return r;
}

cd CMat::trace() const {
  cd t = 0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double CMat::max_abs() const {
  double m = 0;
  for (const cd& v : a_) m = std::max(m, std::abs(v));
  return m;
}

CMat& CMat::operator+=(const CMat& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw std::invalid_argument("CMat: size mismatch in +=");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
  return *this;
}

CMat& CMat::operator-=(const CMat& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw std::invalid_argument("CMat: size mismatch in -=");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
  return *this;
}

CMat& CMat::operator*=(cd s) {
  for (cd& v : a_) v *= s;
  return *this;
}

CMat matmul(const CMat& a, const CMat& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions differ");
  CMat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cd* ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cd aik = a(i, k);
      if (aik == cd(0.0, 0.0)) continue;
      const cd* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

CVec matvec(const CMat& a, const CVec& x) {
  if (a.cols() != x.size())
    throw std::invalid_argument("matvec: dimension mismatch");
  CVec y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const cd* ai = a.row(i);
    cd acc = 0;
    for (std::size_t j = 0; j < x.size(); ++j) acc += ai[j] * x[j];
    y[i] = acc;
  }
  return y;
}

CVec adjoint_matvec(const CMat& a, const CVec& x) {
  if (a.rows() != x.size())
    throw std::invalid_argument("adjoint_matvec: dimension mismatch");
  CVec y(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const cd* ai = a.row(i);
    const cd xi = x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += std::conj(ai[j]) * xi;
  }
  return y;
}

cd dot(const CVec& a, const CVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  cd s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const CVec& v) {
  double m = 0;
  for (const cd& x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_diff: size mismatch");
  double m = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

CMat matpow(const CMat& a, unsigned long e) {
  if (!a.square()) throw std::invalid_argument("matpow: matrix not square");
  CMat result = CMat::identity(a.rows());
  CMat base = a;
  while (e > 0) {
    if (e & 1UL) result = matmul(result, base);
    e >>= 1UL;
    if (e > 0) base = matmul(base, base);
  }
  return result;
}

CMat kron(const CMat& a, const CMat& b) {
  CMat c(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t ia = 0; ia < a.rows(); ++ia)
    for (std::size_t ja = 0; ja < a.cols(); ++ja) {
      const cd v = a(ia, ja);
      if (v == cd(0.0, 0.0)) continue;
      for (std::size_t ib = 0; ib < b.rows(); ++ib)
        for (std::size_t jb = 0; jb < b.cols(); ++jb)
          c(ia * b.rows() + ib, ja * b.cols() + jb) = v * b(ib, jb);
    }
  return c;
}

CMat kron_power(const CMat& a, unsigned k) {
  if (k == 0) return CMat::identity(1);
  CMat r = a;
  for (unsigned i = 1; i < k; ++i) r = kron(r, a);
  return r;
}

CMat cyclic_shift_power(std::size_t size, long long exponent) {
  if (size == 0)
    throw std::invalid_argument("cyclic_shift_power: size must be positive");
  const long long n = static_cast<long long>(size);
  const long long e = ((exponent % n) + n) % n;
  CMat d(size, size);
  for (long long j = 0; j < n; ++j) d((j + e) % n, j) = cd(1.0, 0.0);
  return d;
}

LuFactors lu_factor(CMat a) {
  if (!a.square()) throw std::invalid_argument("lu_factor: matrix not square");
  const std::size_t n = a.rows();
  LuFactors f;
  f.piv.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        pivot = i;
      }
    }
    f.piv[k] = pivot;
    if (pivot != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(pivot, j));
      f.sign = -f.sign;
    }
    if (best == 0.0) {
      f.singular = true;
      continue;
    }
    const cd inv = cd(1.0, 0.0) / a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const cd m = a(i, k) * inv;
      a(i, k) = m;
      if (m == cd(0.0, 0.0)) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
    }
  }
  f.lu = std::move(a);
  return f;
}

CVec lu_solve(const LuFactors& f, CVec b) {
  const std::size_t n = f.lu.rows();
  if (b.size() != n) throw std::invalid_argument("lu_solve: length mismatch");
  if (f.singular) throw std::runtime_error("lu_solve: singular matrix");
  for (std::size_t k = 0; k < n; ++k)
    if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = k + 1; i < n; ++i) b[i] -= f.lu(i, k) * b[k];
  for (std::size_t i = n; i-- > 0;) {
    cd acc = b[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= f.lu(i, j) * b[j];
    b[i] = acc / f.lu(i, i);
  }
  return b;
}

CVec lu_solve_adjoint(const LuFactors& f, CVec b) {
  // P A = L U gives A^H = U^H L^H P, so solve the two triangular systems and
  // undo the row swaps in reverse order.
  const std::size_t n = f.lu.rows();
  if (b.size() != n)
    throw std::invalid_argument("lu_solve_adjoint: length mismatch");
  if (f.singular) throw std::runtime_error("lu_solve_adjoint: singular matrix");
  for (std::size_t i = 0; i < n; ++i) {
    cd acc = b[i];
    for (std::size_t k = 0; k < i; ++k) acc -= std::conj(f.lu(k, i)) * b[k];
    b[i] = acc / std::conj(f.lu(i, i));
  }
  for (std::size_t i = n; i-- > 0;) {
    cd acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= std::conj(f.lu(k, i)) * b[k];
    b[i] = acc;
  }
  for (std::size_t k = n; k-- > 0;)
    if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
  return b;
}

CMat lu_solve(const LuFactors& f, const CMat& b) {
  CMat x(b.rows(), b.cols());
  CVec col(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    CVec sol = lu_solve(f, col);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = sol[i];
  }
  return x;
}

cd determinant(const CMat& a) {
  LuFactors f = lu_factor(a);
  if (f.singular) return cd(0.0, 0.0);
  cd det = cd(static_cast<double>(f.sign), 0.0);
  for (std::size_t i = 0; i < f.lu.rows(); ++i) det *= f.lu(i, i);
  return det;
}

std::vector<cd> char_poly(const CMat& f) {
  if (!f.square()) throw std::invalid_argument("char_poly: matrix not square");
  const std::size_t n = f.rows();
  std::vector<cd> d(n + 1);
  d[0] = cd(1.0, 0.0);
  CMat b = CMat::identity(n);
  for (std::size_t k = 1; k <= n; ++k) {
    CMat fb = matmul(f, b);
    d[k] = -fb.trace() / cd(static_cast<double>(k), 0.0);
    if (k < n) {
      b = std::move(fb);
      for (std::size_t i = 0; i < n; ++i) b(i, i) += d[k];
    }
  }
  return d;
}

NearSingularResolvent::NearSingularResolvent(cd lambda, double denom_abs)
    : std::runtime_error("resolvent nearly singular at lambda=(" +
                         std::to_string(lambda.real()) + "," +
                         std::to_string(lambda.imag()) + "), |d(lambda)|=" +
                         std::to_string(denom_abs)),
      lambda_(lambda),
      denom_abs_(denom_abs) {}

CMat resolvent_apply_direct(const CMat& f, cd lambda, const CMat& rhs,
                            double singular_threshold) {
  if (!f.square() || f.rows() != rhs.rows())
    throw std::invalid_argument("resolvent: dimension mismatch");
  CMat a = f * cd(-1.0, 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += lambda;
  LuFactors lu = lu_factor(std::move(a));
  if (lu.singular) throw NearSingularResolvent(lambda, 0.0);
  cd det = cd(static_cast<double>(lu.sign), 0.0);
  for (std::size_t i = 0; i < lu.lu.rows(); ++i) det *= lu.lu(i, i);
  if (std::abs(det) < singular_threshold)
    throw NearSingularResolvent(lambda, std::abs(det));
  return lu_solve(lu, rhs);
}

CVec resolvent_apply_direct(const CMat& f, cd lambda, const CVec& rhs,
                            double singular_threshold) {
  CMat b(rhs.size(), 1);
  for (std::size_t i = 0; i < rhs.size(); ++i) b(i, 0) = rhs[i];
  CMat x = resolvent_apply_direct(f, lambda, b, singular_threshold);
  CVec out(rhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = x(i, 0);
  return out;
}

ResolventPoly::ResolventPoly(const CMat& f, double singular_threshold)
    : n_(f.rows()), threshold_(singular_threshold) {
  if (!f.square())
    throw std::invalid_argument("ResolventPoly: matrix not square");
  d_.resize(n_ + 1);
  d_[0] = cd(1.0, 0.0);
  g_.reserve(n_);
  CMat b = CMat::identity(n_);
  g_.push_back(b);
  for (std::size_t k = 1; k <= n_; ++k) {
    CMat fb = matmul(f, b);
    d_[k] = -fb.trace() / cd(static_cast<double>(k), 0.0);
    if (k < n_) {
      b = std::move(fb);
      for (std::size_t i = 0; i < n_; ++i) b(i, i) += d_[k];
      g_.push_back(b);
    }
  }
}

cd ResolventPoly::denom(cd lambda) const {
  cd acc = d_[0];
  for (std::size_t k = 1; k <= n_; ++k) acc = acc * lambda + d_[k];
  return acc;
}

void ResolventPoly::check_denom(cd lambda, cd d) const {
  if (std::abs(d) < threshold_) throw NearSingularResolvent(lambda, std::abs(d));
}

CVec ResolventPoly::apply(cd lambda, const CVec& rhs) const {
  if (rhs.size() != n_)
    throw std::invalid_argument("ResolventPoly::apply: length mismatch");
  const cd d = denom(lambda);
  check_denom(lambda, d);
  CVec acc = matvec(g_[0], rhs);
  for (std::size_t k = 1; k < n_; ++k) {
    CVec gk = matvec(g_[k], rhs);
    for (std::size_t i = 0; i < n_; ++i) acc[i] = acc[i] * lambda + gk[i];
  }
  for (cd& v : acc) v /= d;
  return acc;
}

CMat ResolventPoly::apply(cd lambda, const CMat& rhs) const {
  Prepared p = prepare(rhs);
  return p.at(lambda);
}

ResolventPoly::Prepared ResolventPoly::prepare(const CMat& rhs) const {
  if (rhs.rows() != n_)
    throw std::invalid_argument("ResolventPoly::prepare: dimension mismatch");
  Prepared p;
  p.owner_ = this;
  p.slabs_.reserve(n_);
  for (std::size_t k = 0; k < n_; ++k) p.slabs_.push_back(matmul(g_[k], rhs));
  return p;
}

ResolventPoly::Prepared ResolventPoly::prepare_sandwich(const CMat& left,
                                                        const CMat& right) const {
  if (left.cols() != n_ || right.rows() != n_)
    throw std::invalid_argument(
        "ResolventPoly::prepare_sandwich: dimension mismatch");
  Prepared p;
  p.owner_ = this;
  p.slabs_.reserve(n_);
  for (std::size_t k = 0; k < n_; ++k)
    p.slabs_.push_back(matmul(left, matmul(g_[k], right)));
  return p;
}

CMat ResolventPoly::Prepared::at(cd lambda) const {
  const cd d = owner_->denom(lambda);
  owner_->check_denom(lambda, d);
  CMat acc = slabs_[0];
  for (std::size_t k = 1; k < slabs_.size(); ++k) {
    const CMat& hk = slabs_[k];
    cd* pa = acc.data();
    const cd* ph = hk.data();
    const std::size_t len = acc.rows() * acc.cols();
    for (std::size_t i = 0; i < len; ++i) pa[i] = pa[i] * lambda + ph[i];
  }
  const cd inv = cd(1.0, 0.0) / d;
  acc *= inv;
  return acc;
}

}  // namespace cpmspec
