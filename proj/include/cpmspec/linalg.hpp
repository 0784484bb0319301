#pragma once

// Dense complex matrices and vectors, Kronecker products, cyclic-shift
// matrices, characteristic polynomials and resolvent evaluation.  Everything
// here is sized for state spaces of a few thousand at most; storage is dense
// row-major and operations are plain loops.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cpmspec {

using cd = std::complex<double>;

class CMat {
 public:
  CMat() = default;
  CMat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols) {}

  static CMat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  cd& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const cd& operator()(std::size_t i, std::size_t j) const {
    return a_[i * cols_ + j];
  }

  cd* data() { return a_.data(); }
  const cd* data() const { return a_.data(); }
  cd* row(std::size_t i) { return a_.data() + i * cols_; }
  const cd* row(std::size_t i) const { return a_.data() + i * cols_; }

  CMat adjoint() const;    // conjugate transpose
  CMat transpose() const;
  CMat conj() const;
  cd trace() const;
  double max_abs() const;

  CMat& operator+=(const CMat& o);
  CMat& operator-=(const CMat& o);
  CMat& operator*=(cd s);

  friend CMat operator+(CMat a, const CMat& b) { return a += b; }
  friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
  friend CMat operator*(CMat a, cd s) { return a *= s; }
  friend CMat operator*(cd s, CMat a) { return a *= s; }
  friend bool operator==(const CMat& a, const CMat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.a_ == b.a_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<cd> a_;
};

using CVec = std::vector<cd>;

CMat matmul(const CMat& a, const CMat& b);
inline CMat operator*(const CMat& a, const CMat& b) { return matmul(a, b); }
CVec matvec(const CMat& a, const CVec& x);
CVec adjoint_matvec(const CMat& a, const CVec& x);  // a^H x
cd dot(const CVec& a, const CVec& b);               // sum a_i b_i (no conjugation)
double max_abs(const CVec& v);
double max_abs_diff(const CMat& a, const CMat& b);

CMat matpow(const CMat& a, unsigned long e);

// Kronecker product: entry ((ia*rb+ib),(ja*cb+jb)) = a(ia,ja)*b(ib,jb).
CMat kron(const CMat& a, const CMat& b);
CMat kron_power(const CMat& a, unsigned k);

// D_n^e: entry (i,j) = 1 iff i == (j+e) mod n.  Exponent reduced modulo n,
// negative exponents allowed; D^0 is the identity.
CMat cyclic_shift_power(std::size_t size, long long exponent);

// --- LU factorisation with partial pivoting ------------------------------

struct LuFactors {
  CMat lu;
  std::vector<std::size_t> piv;
  int sign = 1;
  bool singular = false;
};

LuFactors lu_factor(CMat a);
CVec lu_solve(const LuFactors& f, CVec b);
CMat lu_solve(const LuFactors& f, const CMat& b);
// Solves A^H y = b reusing the factors of A.
CVec lu_solve_adjoint(const LuFactors& f, CVec b);
cd determinant(const CMat& a);

// --- characteristic polynomial and resolvent -----------------------------

// Coefficients d_0..d_I of det(xI - F) = sum_k d_k x^(I-k), d_0 = 1, by the
// Faddeev-LeVerrier trace recurrence.
std::vector<cd> char_poly(const CMat& f);

class NearSingularResolvent : public std::runtime_error {
 public:
  NearSingularResolvent(cd lambda, double denom_abs);
  cd lambda() const { return lambda_; }
  double denom_abs() const { return denom_abs_; }

 private:
  cd lambda_;
  double denom_abs_;
};

// Backend (a): per-lambda linear solve of (lambda I - F) x = rhs.
CMat resolvent_apply_direct(const CMat& f, cd lambda, const CMat& rhs,
                            double singular_threshold = 1e-250);
CVec resolvent_apply_direct(const CMat& f, cd lambda, const CVec& rhs,
                            double singular_threshold = 1e-250);

// Backend (b): (lambda I - F)^-1 = sum_k G_k lambda^(I-1-k) / d(lambda) with
// G_k = sum_{m<=k} d_{k-m} F^m.  The G_k come out of the Faddeev-LeVerrier
// recurrence, so one construction serves any number of lambda values.
class ResolventPoly {
 public:
  explicit ResolventPoly(const CMat& f, double singular_threshold = 1e-250);

  const std::vector<cd>& coeffs() const { return d_; }
  cd denom(cd lambda) const;  // d(lambda), Horner
  CVec apply(cd lambda, const CVec& rhs) const;
  CMat apply(cd lambda, const CMat& rhs) const;

  // Fixed flanking blocks: slabs left * G_k * right are formed once, after
  // which each lambda costs one Horner sweep over the slabs.
  class Prepared {
   public:
    CMat at(cd lambda) const;

   private:
    friend class ResolventPoly;
    const ResolventPoly* owner_ = nullptr;
    std::vector<CMat> slabs_;
  };
  Prepared prepare(const CMat& rhs) const;
  Prepared prepare_sandwich(const CMat& left, const CMat& right) const;

 private:
  void check_denom(cd lambda, cd d) const;

  std::size_t n_ = 0;
  std::vector<cd> d_;     // d_0..d_n
  std::vector<CMat> g_;   // G_0..G_{n-1}
  double threshold_;
};

}  // namespace cpmspec
