#pragma once

// Small dense real matrices: general M x N storage plus symmetric positive
// (semi)definite wrappers with a cached Jacobi eigendecomposition.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwlab {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
Vec scaled(std::span<const double> a, double s);
Vec add(std::span<const double> a, std::span<const double> b);
Vec subtract(std::span<const double> a, std::span<const double> b);
Vec unit_basis(std::size_t dim, std::size_t i, double sign = 1.0);

/// Row-major dense matrix. Also plays the role of the general M x N matrix
/// type for Carleson multipliers.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, Vec data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);
  static Matrix diagonal(std::initializer_list<double> d);
  static Matrix outer(std::span<const double> a, std::span<const double> b);
  static Matrix row(std::span<const double> a);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::span<const double> row_span(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  Matrix transpose() const;
  Vec column(std::size_t j) const;
  bool is_finite() const;
  double trace() const;
  double max_abs() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Vec operator*(const Matrix& a, std::span<const double> x);
  friend Vec operator*(const Matrix& a, const Vec& x) {
    return a * std::span<const double>(x);
  }
  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

/// Largest singular value.
double op_norm(const Matrix& a);
double frobenius_norm(const Matrix& a);

/// (A + A^T) / 2.
Matrix symmetrize(const Matrix& a);

/// Eigenvalues ascending; eigenvectors stored as the columns of `vectors`.
struct SymmetricEigen {
  Vec values;
  Matrix vectors;
};

/// Cyclic Jacobi rotations. The input must be square; only its symmetric
/// part is used.
SymmetricEigen symmetric_eigen(const Matrix& a);
double min_eigenvalue(const Matrix& sym);
double max_eigenvalue(const Matrix& sym);

/// V f(Lambda) V^T for a symmetric eigensystem.
template <class F>
Matrix spectral_apply(const SymmetricEigen& e, F&& f) {
  const std::size_t n = e.values.size();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = f(e.values[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = e.vectors(i, k) * fk;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * e.vectors(j, k);
    }
  }
  return symmetrize(out);
}

/// Raised when a matrix that must be positive definite is not.
class NotPositiveDefinite : public std::domain_error {
 public:
  NotPositiveDefinite(const std::string& what, double eigenvalue)
      : std::domain_error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

/// Positive semidefinite matrix: smallest eigenvalue >= -1e-13 * |A|.
class PsdMatrix {
 public:
  explicit PsdMatrix(const Matrix& a);
  std::size_t dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  const SymmetricEigen& eigen() const { return eig_; }
  double op_norm() const;
  double min_eigenvalue() const { return eig_.values.front(); }

 private:
  Matrix m_;
  SymmetricEigen eig_;
};

/// Symmetric positive definite matrix. Construction symmetrizes the input and
/// requires the smallest eigenvalue to exceed 1e-13 * |A|. Immutable.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Matrix& a);

  std::size_t dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  const SymmetricEigen& eigen() const { return eig_; }
  double min_eigenvalue() const { return eig_.values.front(); }
  double max_eigenvalue() const { return eig_.values.back(); }
  double op_norm() const { return max_eigenvalue(); }
  double condition_number() const { return max_eigenvalue() / min_eigenvalue(); }

  SpdMatrix sqrt() const;
  SpdMatrix inverse() const;
  SpdMatrix inverse_sqrt() const;
  SpdMatrix square() const;
  SpdMatrix power(double p) const;
  double log_det() const;
  double det() const;

  static SpdMatrix identity(std::size_t n) { return SpdMatrix(Matrix::identity(n)); }

 private:
  struct Trusted {};
  SpdMatrix(Matrix m, SymmetricEigen e, Trusted) : m_(std::move(m)), eig_(std::move(e)) {}

  Matrix m_;
  SymmetricEigen eig_;
};

SpdMatrix spd_sqrt(const SpdMatrix& a);
double log_det(const SpdMatrix& a);

/// exp of a symmetric matrix.
SpdMatrix spd_exp(const Matrix& sym);

/// True iff the smallest eigenvalue of A - B is >= -tol. Inputs must be
/// symmetric and of equal dimension.
bool loewner_geq(const Matrix& a, const Matrix& b, double tol);
inline bool loewner_geq(const SpdMatrix& a, const SpdMatrix& b, double tol) {
  return loewner_geq(a.matrix(), b.matrix(), tol);
}

/// Lower-triangular Cholesky factor of an SPD matrix.
Matrix cholesky(const Matrix& spd);
/// Inverse of a lower-triangular matrix.
Matrix lower_triangular_inverse(const Matrix& l);

/// Largest singular value together with a unit right singular vector
/// attaining it (|A v| = |A|).
struct TopSingular {
  double value = 0.0;
  Vec right;
};
TopSingular top_singular(const Matrix& a);

/// Orthonormal basis of the orthogonal complement of a unit vector, as the
/// columns of an N x (N-1) matrix.
Matrix orthogonal_complement(std::span<const double> unit);

}  // namespace dwlab
