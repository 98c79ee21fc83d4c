#include "dwlab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dwlab {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vec scaled(std::span<const double> a, double s) {
  Vec out(a.begin(), a.end());
  for (double& x : out) x *= s;
  return out;
}

Vec add(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("add: dimension mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec subtract(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("subtract: dimension mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec unit_basis(std::size_t dim, std::size_t i, double sign) {
  Vec e(dim, 0.0);
  e.at(i) = sign;
  return e;
}

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vec data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw std::invalid_argument("Matrix: data size mismatch");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::diagonal(std::initializer_list<double> d) {
  return diagonal(std::span<const double>(d.begin(), d.size()));
}

Matrix Matrix::outer(std::span<const double> a, std::span<const double> b) {
  Matrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

Matrix Matrix::row(std::span<const double> a) { return Matrix(1, a.size(), Vec(a.begin(), a.end())); }

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vec Matrix::column(std::size_t j) const {
  Vec c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

bool Matrix::is_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double Matrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("Matrix +: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("Matrix -: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols_ != b.rows_) throw std::invalid_argument("Matrix *: shape mismatch");
  Matrix c(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i)
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vec operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols_ != x.size()) throw std::invalid_argument("Matrix * vector: shape mismatch");
  Vec y(a.rows_, 0.0);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Matrix symmetrize(const Matrix& a) {
  if (!a.is_square()) throw std::invalid_argument("symmetrize: matrix not square");
  Matrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

double frobenius_norm(const Matrix& a) { return norm(a.data()); }

// ---------------------------------------------------------------------------
// Jacobi eigensolver

SymmetricEigen symmetric_eigen(const Matrix& input) {
  if (!input.is_square()) throw std::invalid_argument("symmetric_eigen: matrix not square");
  if (!input.is_finite()) throw std::invalid_argument("symmetric_eigen: non-finite entries");
  const std::size_t n = input.rows();
  Matrix a = symmetrize(input);
  Matrix v = Matrix::identity(n);

  const double scale = frobenius_norm(a);
  for (int sweep = 0; sweep < 100 && scale > 0.0; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-34 * scale * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{Vec(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

double min_eigenvalue(const Matrix& sym) { return symmetric_eigen(sym).values.front(); }
double max_eigenvalue(const Matrix& sym) { return symmetric_eigen(sym).values.back(); }

double op_norm(const Matrix& a) {
  if (!a.is_finite()) throw std::invalid_argument("op_norm: non-finite entries");
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  const Matrix at = a.transpose();
  const Matrix gram = a.rows() >= a.cols() ? at * a : a * at;
  return std::sqrt(std::max(0.0, max_eigenvalue(gram)));
}

TopSingular top_singular(const Matrix& a) {
  const SymmetricEigen e = symmetric_eigen(a.transpose() * a);
  TopSingular out;
  out.value = std::sqrt(std::max(0.0, e.values.back()));
  out.right = e.vectors.column(e.vectors.cols() - 1);
  return out;
}

// ---------------------------------------------------------------------------
// PSD / SPD

namespace {

double spectral_radius(const SymmetricEigen& e) {
  return std::max(std::abs(e.values.front()), std::abs(e.values.back()));
}

SymmetricEigen sorted_spectrum(const Matrix& vectors, Vec values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  SymmetricEigen out{Vec(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = values[order[k]];
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = vectors(i, order[k]);
  }
  return out;
}

}  // namespace

PsdMatrix::PsdMatrix(const Matrix& a) : m_(symmetrize(a)), eig_(symmetric_eigen(m_)) {
  const double floor = -1e-13 * spectral_radius(eig_);
  if (eig_.values.front() < floor) {
    std::ostringstream os;
    os << "matrix is not positive semidefinite: smallest eigenvalue " << eig_.values.front();
    throw NotPositiveDefinite(os.str(), eig_.values.front());
  }
}

double PsdMatrix::op_norm() const { return std::max(0.0, eig_.values.back()); }

SpdMatrix::SpdMatrix(const Matrix& a) {
  if (!a.is_square()) throw std::invalid_argument("SpdMatrix: matrix not square");
  if (a.rows() == 0) throw std::invalid_argument("SpdMatrix: empty matrix");
  if (!a.is_finite()) throw std::invalid_argument("SpdMatrix: non-finite entries");
  m_ = symmetrize(a);
  eig_ = symmetric_eigen(m_);
  const double threshold = 1e-13 * spectral_radius(eig_);
  if (!(eig_.values.front() > threshold)) {
    std::ostringstream os;
    os << "matrix is not positive definite: smallest eigenvalue " << eig_.values.front()
       << " (threshold " << threshold << ")";
    throw NotPositiveDefinite(os.str(), eig_.values.front());
  }
}

SpdMatrix SpdMatrix::power(double p) const {
  Vec vals(eig_.values.size());
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = std::pow(eig_.values[k], p);
  SymmetricEigen e = sorted_spectrum(eig_.vectors, std::move(vals));
  Matrix m = spectral_apply(e, [](double x) { return x; });
  return SpdMatrix(std::move(m), std::move(e), Trusted{});
}

SpdMatrix SpdMatrix::sqrt() const {
  Vec vals(eig_.values.size());
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = std::sqrt(eig_.values[k]);
  SymmetricEigen e{std::move(vals), eig_.vectors};
  Matrix m = spectral_apply(e, [](double x) { return x; });
  return SpdMatrix(std::move(m), std::move(e), Trusted{});
}

SpdMatrix SpdMatrix::inverse() const { return power(-1.0); }
SpdMatrix SpdMatrix::inverse_sqrt() const { return power(-0.5); }

SpdMatrix SpdMatrix::square() const {
  Vec vals(eig_.values.size());
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = eig_.values[k] * eig_.values[k];
  SymmetricEigen e{std::move(vals), eig_.vectors};
  // The product is formed directly; the spectrum is kept for later functions.
  Matrix m = symmetrize(m_ * m_);
  return SpdMatrix(std::move(m), std::move(e), Trusted{});
}

double SpdMatrix::log_det() const {
  double s = 0.0;
  for (double l : eig_.values) s += std::log(l);
  return s;
}

double SpdMatrix::det() const {
  double p = 1.0;
  for (double l : eig_.values) p *= l;
  return p;
}

SpdMatrix spd_sqrt(const SpdMatrix& a) { return a.sqrt(); }
double log_det(const SpdMatrix& a) { return a.log_det(); }

SpdMatrix spd_exp(const Matrix& sym) {
  const SymmetricEigen e = symmetric_eigen(sym);
  return SpdMatrix(spectral_apply(e, [](double x) { return std::exp(x); }));
}

bool loewner_geq(const Matrix& a, const Matrix& b, double tol) {
  if (!a.is_square() || !b.is_square() || a.rows() != b.rows())
    throw std::invalid_argument("loewner_geq: dimension mismatch");
  return min_eigenvalue(a - b) >= -tol;
}

Matrix cholesky(const Matrix& spd) {
  if (!spd.is_square()) throw std::invalid_argument("cholesky: matrix not square");
  const std::size_t n = spd.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw NotPositiveDefinite("cholesky: non-positive pivot", d);
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Matrix lower_triangular_inverse(const Matrix& l) {
  const std::size_t n = l.rows();
  Matrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s += l(i, k) * inv(k, j);
      inv(i, j) = -s / l(i, i);
    }
  }
  return inv;
}

Matrix orthogonal_complement(std::span<const double> u) {
  const std::size_t n = u.size();
  if (n == 0) throw std::invalid_argument("orthogonal_complement: empty vector");
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(u[i]) > std::abs(u[k])) k = i;
  Vec w(u.begin(), u.end());
  w[k] += u[k] >= 0.0 ? 1.0 : -1.0;
  const double ww = dot(w, w);
  Matrix basis(n, n - 1);
  std::size_t col = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == k) continue;
    for (std::size_t i = 0; i < n; ++i)
      basis(i, col) = (i == j ? 1.0 : 0.0) - 2.0 * w[i] * w[j] / ww;
    ++col;
  }
  return basis;
}

}  // namespace dwlab
