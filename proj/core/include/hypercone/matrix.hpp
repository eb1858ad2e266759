#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace hypercone::matcore {

using Vec = std::vector<double>;

/// Dense row-major n-by-n real matrix. Value type; sized for the small
/// problems this library deals with (n <= ~10), so all operations are plain
/// loops over contiguous storage.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}
  SquareMatrix(std::size_t n, std::initializer_list<double> entries)
      : n_(n), a_(entries) {
    if (a_.size() != n * n) throw std::invalid_argument("SquareMatrix: entry count != n*n");
  }

  static SquareMatrix identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static SquareMatrix diagonal(const Vec& d) {
    SquareMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t dim() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  const std::vector<double>& data() const { return a_; }

  SquareMatrix transpose() const {
    SquareMatrix t(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
  }

  /// max_i sum_j |a_ij|
  double inf_norm() const {
    double best = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n_; ++j) row += std::abs((*this)(i, j));
      best = std::max(best, row);
    }
    return best;
  }

  /// max_j sum_i |a_ij|
  double one_norm() const {
    double best = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < n_; ++i) col += std::abs((*this)(i, j));
      best = std::max(best, col);
    }
    return best;
  }

  double max_abs() const {
    double best = 0.0;
    for (double v : a_) best = std::max(best, std::abs(v));
    return best;
  }

  bool is_finite() const {
    for (double v : a_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  SquareMatrix& operator+=(const SquareMatrix& o) {
    check_same_dim(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  SquareMatrix& operator-=(const SquareMatrix& o) {
    check_same_dim(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  SquareMatrix& operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
  }

  friend SquareMatrix operator+(SquareMatrix a, const SquareMatrix& b) { return a += b; }
  friend SquareMatrix operator-(SquareMatrix a, const SquareMatrix& b) { return a -= b; }
  friend SquareMatrix operator*(SquareMatrix a, double s) { return a *= s; }
  friend SquareMatrix operator*(double s, SquareMatrix a) { return a *= s; }

  friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
    a.check_same_dim(b);
    const std::size_t n = a.n_;
    SquareMatrix c(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  Vec apply(const Vec& x) const {
    if (x.size() != n_) throw std::invalid_argument("SquareMatrix::apply: size mismatch");
    Vec y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

 private:
  void check_same_dim(const SquareMatrix& o) const {
    if (n_ != o.n_) throw std::invalid_argument("SquareMatrix: dimension mismatch");
  }

  std::size_t n_ = 0;
  std::vector<double> a_;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec& axpy(double alpha, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
  return y;
}

inline Vec scaled(const Vec& x, double alpha) {
  Vec y = x;
  for (double& v : y) v *= alpha;
  return y;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

}  // namespace hypercone::matcore
