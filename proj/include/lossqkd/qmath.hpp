// Small-dimension complex linear algebra and two-state information metrics.
//
// Everything here is sized for qubits, the three-level receiver space and
// probe spaces of dimension <= 8. Dense storage, no allocation tricks.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lossqkd {

using cplx = std::complex<double>;

/// Raised for any argument that violates a documented precondition.
class invalid_input : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical tolerances used when validating density operators.
struct Tolerances {
  double hermitian = 1e-12;
  double trace = 1e-12;
  double psd = 1e-12;
};

// ---------------------------------------------------------------------------
// ComplexVec

class ComplexVec {
public:
  ComplexVec() = default;
  explicit ComplexVec(std::size_t dim) : entries_(dim, cplx{0.0, 0.0}) {}
  ComplexVec(std::initializer_list<cplx> init) : entries_(init) {}
  explicit ComplexVec(std::vector<cplx> entries) : entries_(std::move(entries)) {}

  static ComplexVec basis(std::size_t dim, std::size_t index) {
    if (index >= dim) throw invalid_input("basis index out of range");
    ComplexVec v(dim);
    v[index] = 1.0;
    return v;
  }

  std::size_t dim() const noexcept { return entries_.size(); }
  cplx& operator[](std::size_t i) { return entries_[i]; }
  const cplx& operator[](std::size_t i) const { return entries_[i]; }
  std::span<const cplx> entries() const noexcept { return entries_; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  double norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& z : entries_) s += std::norm(z);
    return s;
  }
  double norm() const noexcept { return std::sqrt(norm_squared()); }

  ComplexVec& operator+=(const ComplexVec& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < dim(); ++i) entries_[i] += o.entries_[i];
    return *this;
  }
  ComplexVec& operator-=(const ComplexVec& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < dim(); ++i) entries_[i] -= o.entries_[i];
    return *this;
  }
  ComplexVec& operator*=(cplx s) noexcept {
    for (auto& z : entries_) z *= s;
    return *this;
  }

  friend ComplexVec operator+(ComplexVec a, const ComplexVec& b) { return a += b; }
  friend ComplexVec operator-(ComplexVec a, const ComplexVec& b) { return a -= b; }
  friend ComplexVec operator*(cplx s, ComplexVec a) { return a *= s; }
  friend ComplexVec operator*(ComplexVec a, cplx s) { return a *= s; }
  friend ComplexVec operator/(ComplexVec a, double s) { return a *= cplx{1.0 / s, 0.0}; }

  friend bool operator==(const ComplexVec&, const ComplexVec&) = default;

private:
  void require_same_dim(const ComplexVec& o) const {
    if (o.dim() != dim()) throw invalid_input("vector dimension mismatch");
  }

  std::vector<cplx> entries_;
};

/// <x|y>, conjugate-linear in the first argument.
inline cplx inner_product(const ComplexVec& x, const ComplexVec& y) {
  if (x.dim() != y.dim()) throw invalid_input("inner_product: dimension mismatch");
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < x.dim(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

// ---------------------------------------------------------------------------
// Matrix

/// Dense square complex matrix, row-major.
class Matrix {
public:
  Matrix() = default;
  explicit Matrix(std::size_t dim) : dim_(dim), data_(dim * dim, cplx{0.0, 0.0}) {}
  Matrix(std::initializer_list<std::initializer_list<cplx>> rows) : dim_(rows.size()) {
    data_.reserve(dim_ * dim_);
    for (const auto& r : rows) {
      if (r.size() != dim_) throw invalid_input("Matrix: rows must be square");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t dim) {
    Matrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }
  /// |v><v|
  static Matrix projector(const ComplexVec& v) { return outer(v, v); }
  /// |x><y|
  static Matrix outer(const ComplexVec& x, const ComplexVec& y) {
    if (x.dim() != y.dim()) throw invalid_input("outer: dimension mismatch");
    Matrix m(x.dim());
    for (std::size_t i = 0; i < x.dim(); ++i)
      for (std::size_t j = 0; j < x.dim(); ++j) m(i, j) = x[i] * std::conj(y[j]);
    return m;
  }
  static Matrix diagonal(std::initializer_list<double> d) {
    Matrix m(d.size());
    std::size_t i = 0;
    for (double v : d) {
      m(i, i) = v;
      ++i;
    }
    return m;
  }

  std::size_t dim() const noexcept { return dim_; }
  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

  cplx trace() const noexcept {
    cplx t{0.0, 0.0};
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  Matrix adjoint() const {
    Matrix m(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
  }

  /// max |A_ij - conj(A_ji)|
  double hermiticity_defect() const noexcept {
    double d = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = i; j < dim_; ++j)
        d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return d;
  }

  double max_abs() const noexcept {
    double d = 0.0;
    for (const auto& z : data_) d = std::max(d, std::abs(z));
    return d;
  }

  ComplexVec apply(const ComplexVec& v) const {
    if (v.dim() != dim_) throw invalid_input("Matrix::apply: dimension mismatch");
    ComplexVec out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      cplx s{0.0, 0.0};
      for (std::size_t j = 0; j < dim_; ++j) s += (*this)(i, j) * v[j];
      out[i] = s;
    }
    return out;
  }

  /// <v|A|v>
  cplx expectation(const ComplexVec& v) const { return inner_product(v, apply(v)); }

  Matrix& operator+=(const Matrix& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(cplx s) noexcept {
    for (auto& z : data_) z *= s;
    return *this;
  }
  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(cplx s, Matrix a) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= cplx{s, 0.0}; }
  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    a.require_same_dim(b);
    Matrix m(a.dim_);
    for (std::size_t i = 0; i < a.dim_; ++i)
      for (std::size_t k = 0; k < a.dim_; ++k) {
        const cplx aik = a(i, k);
        if (aik == cplx{0.0, 0.0}) continue;
        for (std::size_t j = 0; j < a.dim_; ++j) m(i, j) += aik * b(k, j);
      }
    return m;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  void require_same_dim(const Matrix& o) const {
    if (o.dim_ != dim_) throw invalid_input("matrix dimension mismatch");
  }

  std::size_t dim_ = 0;
  std::vector<cplx> data_;
};

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic complex Jacobi)

struct EigenSystem {
  std::vector<double> values;        // ascending
  std::vector<ComplexVec> vectors;   // vectors[k] pairs with values[k]
};

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

/// Cyclic complex Jacobi on the Hermitian part of `a`, in place. When `v` is
/// given it accumulates the rotations (columns are eigenvectors).
inline void jacobi(Matrix& a, Matrix* v) {
  const std::size_t n = a.dim();
  const double scale = std::max(a.max_abs(), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diagonal_norm(a) <= 1e-15 * scale) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag <= 1e-300) continue;
        // Phase rotation makes a_pq real, then a real Givens rotation zeroes it.
        const cplx phase = apq / mag;  // e^{i alpha}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cplx jpp = c;
        const cplx jpq = s;
        const cplx jqp = -s * std::conj(phase);
        const cplx jqq = c * std::conj(phase);
        // a <- a J
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = akp * jpp + akq * jqp;
          a(k, q) = akp * jpq + akq * jqq;
        }
        if (v) {
          for (std::size_t k = 0; k < n; ++k) {
            const cplx vkp = (*v)(k, p);
            const cplx vkq = (*v)(k, q);
            (*v)(k, p) = vkp * jpp + vkq * jqp;
            (*v)(k, q) = vkp * jpq + vkq * jqq;
          }
        }
        // a <- J^H a
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }
}

}  // namespace detail

/// Eigen-decomposition of a Hermitian matrix. Only the upper triangle's
/// Hermitian part is meaningful; the input is symmetrised first.
inline EigenSystem eigh(const Matrix& input) {
  const std::size_t n = input.dim();
  if (n == 0) throw invalid_input("eigh: empty matrix");
  Matrix a = 0.5 * (input + input.adjoint());
  Matrix v = Matrix::identity(n);
  detail::jacobi(a, &v);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

  EigenSystem es;
  es.values.reserve(n);
  es.vectors.reserve(n);
  for (std::size_t k : order) {
    es.values.push_back(a(k, k).real());
    ComplexVec col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = v(r, k);
    es.vectors.push_back(std::move(col));
  }
  return es;
}

/// Ascending eigenvalues of a Hermitian matrix.
inline std::vector<double> eigvalsh(const Matrix& input) {
  const std::size_t n = input.dim();
  if (n == 0) throw invalid_input("eigvalsh: empty matrix");
  Matrix a = 0.5 * (input + input.adjoint());
  detail::jacobi(a, nullptr);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i).real();
  std::sort(values.begin(), values.end());
  return values;
}

// ---------------------------------------------------------------------------
// DensityOp

/// Hermitian, unit-trace, positive semidefinite operator.
class DensityOp {
public:
  /// Validates `m`; throws invalid_input on any violated invariant.
  explicit DensityOp(Matrix m, const Tolerances& tol = {}) : m_(std::move(m)), tol_(tol) {
    if (m_.dim() == 0) throw invalid_input("DensityOp: empty matrix");
    if (m_.hermiticity_defect() > tol_.hermitian)
      throw invalid_input("DensityOp: matrix is not Hermitian");
    const cplx tr = m_.trace();
    if (std::abs(tr.real() - 1.0) > tol_.trace || std::abs(tr.imag()) > tol_.hermitian)
      throw invalid_input("DensityOp: trace is not 1");
    eigenvalues_ = eigvalsh(m_);
    if (eigenvalues_.front() < -tol_.psd)
      throw invalid_input("DensityOp: matrix has a negative eigenvalue");
  }

  static DensityOp pure(const ComplexVec& psi, const Tolerances& tol = {}) {
    return DensityOp(Matrix::projector(psi), tol);
  }

  std::size_t dim() const noexcept { return m_.dim(); }
  const Matrix& matrix() const noexcept { return m_; }
  const Tolerances& tolerances() const noexcept { return tol_; }
  /// Ascending eigenvalues, computed at construction.
  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
  cplx operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

  /// Real <v|rho|v>.
  double expectation(const ComplexVec& v) const { return m_.expectation(v).real(); }

private:
  Matrix m_;
  Tolerances tol_;
  std::vector<double> eigenvalues_;
};

// ---------------------------------------------------------------------------
// Entropies and discrimination metrics

/// -p log2 p with 0 log 0 = 0.
inline double entropy_term(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

inline double binary_entropy(double p) { return entropy_term(p) + entropy_term(1.0 - p); }

/// Von Neumann entropy in bits. Eigenvalues within the PSD tolerance below
/// zero are clamped to 0.
inline double vn_entropy(const DensityOp& rho) {
  double s = 0.0;
  for (double lambda : rho.eigenvalues()) s += entropy_term(std::max(lambda, 0.0));
  return s;
}

namespace detail {

inline void require_binary_ensemble(const DensityOp& rho0, const DensityOp& rho1, double p0) {
  if (rho0.dim() != rho1.dim()) throw invalid_input("binary ensemble: dimension mismatch");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw invalid_input("binary ensemble: prior outside [0,1]");
}

inline Tolerances looser(const Tolerances& a, const Tolerances& b) {
  return {std::max(a.hermitian, b.hermitian), std::max(a.trace, b.trace), std::max(a.psd, b.psd)};
}

}  // namespace detail

/// Holevo quantity of the ensemble {p0: rho0, 1-p0: rho1}, in bits.
inline double holevo_bound(const DensityOp& rho0, const DensityOp& rho1, double p0) {
  detail::require_binary_ensemble(rho0, rho1, p0);
  const double p1 = 1.0 - p0;
  const DensityOp mix(p0 * rho0.matrix() + p1 * rho1.matrix(),
                      detail::looser(rho0.tolerances(), rho1.tolerances()));
  const double chi = vn_entropy(mix) - p0 * vn_entropy(rho0) - p1 * vn_entropy(rho1);
  return std::max(chi, 0.0);
}

/// Sum of |eigenvalues| of a Hermitian matrix.
inline double trace_norm_hermitian(const Matrix& m) {
  double s = 0.0;
  for (double lambda : eigvalsh(m)) s += std::abs(lambda);
  return s;
}

/// Optimal probability of guessing which of two states was prepared.
inline double helstrom_prob(const DensityOp& rho0, const DensityOp& rho1, double p0) {
  detail::require_binary_ensemble(rho0, rho1, p0);
  const Matrix gamma = p0 * rho0.matrix() - (1.0 - p0) * rho1.matrix();
  const double p = 0.5 + 0.5 * trace_norm_hermitian(gamma);
  return std::clamp(p, std::max(p0, 1.0 - p0), 1.0);
}

/// 1/2 || rho0 - rho1 ||_1
inline double trace_distance(const DensityOp& rho0, const DensityOp& rho1) {
  if (rho0.dim() != rho1.dim()) throw invalid_input("trace_distance: dimension mismatch");
  return 0.5 * trace_norm_hermitian(rho0.matrix() - rho1.matrix());
}

}  // namespace lossqkd
