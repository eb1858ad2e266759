#include "hypercone/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hypercone::matcore {

namespace {

void require_finite(const SquareMatrix& a, const char* who) {
  if (!a.is_finite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite entries");
  }
}

double asymmetry(const SquareMatrix& s) {
  double worst = 0.0;
  for (std::size_t i = 0; i < s.dim(); ++i)
    for (std::size_t j = i + 1; j < s.dim(); ++j)
      worst = std::max(worst, std::abs(s(i, j) - s(j, i)));
  return worst;
}

// One full cyclic Jacobi pass; returns the off-diagonal Frobenius mass after
// the pass. `v` accumulates rotations when non-null.
double jacobi_sweep(SquareMatrix& a, SquareMatrix* v) {
  const std::size_t n = a.dim();
  for (std::size_t p = 0; p + 1 < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const double apq = a(p, q);
      if (apq == 0.0) continue;
      const double app = a(p, p), aqq = a(q, q);
      const double theta = 0.5 * (aqq - app) / apq;
      double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
      if (theta < 0.0) t = -t;
      const double c = 1.0 / std::sqrt(1.0 + t * t);
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
      if (v) {
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = (*v)(k, p), vkq = (*v)(k, q);
          (*v)(k, p) = c * vkp - s * vkq;
          (*v)(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
  return off;
}

SymEigResult jacobi_eig(const SquareMatrix& s, bool want_vectors) {
  const std::size_t n = s.dim();
  SquareMatrix a = s;
  // Symmetrize exactly; the caller already vetted the asymmetry budget.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = m;
      a(j, i) = m;
    }
  SquareMatrix v = SquareMatrix::identity(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale += a(i, j) * a(i, j);
  const double stop = scale * 1e-30 + 1e-300;
  for (int sweep = 0; sweep < 50; ++sweep) {
    if (jacobi_sweep(a, want_vectors ? &v : nullptr) <= stop) break;
  }

  SymEigResult r;
  r.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.values[i] = a(i, i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return r.values[x] < r.values[y]; });
  Vec sorted(n);
  SquareMatrix vs(n);
  for (std::size_t k = 0; k < n; ++k) {
    sorted[k] = r.values[order[k]];
    for (std::size_t i = 0; i < n; ++i) vs(i, k) = v(i, order[k]);
  }
  r.values = std::move(sorted);
  r.vectors = std::move(vs);
  return r;
}

}  // namespace

SymEigResult sym_eig(const SquareMatrix& s, const Tolerances& tols) {
  require_finite(s, "sym_eig");
  const double asym = asymmetry(s);
  const double scale = 1.0 + s.max_abs();
  if (asym > tols.symmetry_rel * scale) {
    std::ostringstream msg;
    msg << "sym_eig: input not symmetric, max |a_ij - a_ji| = " << asym
        << " exceeds " << tols.symmetry_rel << " * " << scale;
    throw std::invalid_argument(msg.str());
  }
  return jacobi_eig(s, /*want_vectors=*/true);
}

double sym_eig_min(const SquareMatrix& s, const Tolerances& tols) {
  require_finite(s, "sym_eig_min");
  const double asym = asymmetry(s);
  const double scale = 1.0 + s.max_abs();
  if (asym > tols.symmetry_rel * scale) {
    throw std::invalid_argument("sym_eig_min: input not symmetric");
  }
  SymEigResult r = jacobi_eig(s, /*want_vectors=*/false);
  return r.values.front();
}

SvdResult svd(const SquareMatrix& a) {
  require_finite(a, "svd");
  const std::size_t n = a.dim();
  SquareMatrix w = a;
  SquareMatrix v = SquareMatrix::identity(n);

  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          alpha += w(k, p) * w(k, p);
          beta += w(k, q) * w(k, q);
          gamma += w(k, p) * w(k, q);
        }
        if (std::abs(gamma) <= 1e-16 * std::sqrt(alpha * beta) + 1e-300) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        double t = ((zeta >= 0.0) ? 1.0 : -1.0) /
                   (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < n; ++k) {
          const double wkp = w(k, p), wkq = w(k, q);
          w(k, p) = c * wkp - s * wkq;
          w(k, q) = s * wkp + c * wkq;
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    if (!rotated) break;
  }

  SvdResult r;
  r.sigma.resize(n);
  r.u = SquareMatrix(n);
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) s2 += w(k, j) * w(k, j);
    r.sigma[j] = std::sqrt(s2);
    order[j] = j;
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return r.sigma[x] > r.sigma[y]; });

  Vec sigma_sorted(n);
  SquareMatrix u(n), vs(n);
  for (std::size_t jj = 0; jj < n; ++jj) {
    const std::size_t j = order[jj];
    sigma_sorted[jj] = r.sigma[j];
    for (std::size_t k = 0; k < n; ++k) vs(k, jj) = v(k, j);
    if (r.sigma[j] > 0.0) {
      for (std::size_t k = 0; k < n; ++k) u(k, jj) = w(k, j) / r.sigma[j];
    }
  }
  // Zero singular values sort to the end; complete those U columns by
  // Gram-Schmidt against the columns already placed.
  for (std::size_t jj = 0; jj < n; ++jj) {
    if (sigma_sorted[jj] > 0.0) continue;
    for (std::size_t cand = 0; cand < n; ++cand) {
      Vec e(n, 0.0);
      e[cand] = 1.0;
      for (std::size_t c = 0; c < jj; ++c) {
        double proj = 0.0;
        for (std::size_t k = 0; k < n; ++k) proj += u(k, c) * e[k];
        for (std::size_t k = 0; k < n; ++k) e[k] -= proj * u(k, c);
      }
      const double len = norm(e);
      if (len > 1e-8) {
        for (std::size_t k = 0; k < n; ++k) u(k, jj) = e[k] / len;
        break;
      }
    }
  }
  r.sigma = std::move(sigma_sorted);
  r.u = std::move(u);
  r.v = std::move(vs);
  return r;
}

SquareMatrix expm(const SquareMatrix& a, double t) {
  require_finite(a, "expm");
  if (!std::isfinite(t)) throw std::invalid_argument("expm: non-finite time");
  const std::size_t n = a.dim();
  SquareMatrix b = a * t;
  const double bnorm = b.one_norm();
  if (!std::isfinite(bnorm)) throw std::overflow_error("expm: |tA| overflows");

  int s = 0;
  double scaled_norm = bnorm;
  while (scaled_norm > 0.5) {
    scaled_norm *= 0.5;
    ++s;
    if (s > 200) throw std::overflow_error("expm: scaling exceeds range");
  }
  b *= std::ldexp(1.0, -s);

  // Degree-13 truncated series on the scaled matrix (|B| <= 0.5 keeps the
  // truncation error below ~7e-16 relative).
  SquareMatrix result = SquareMatrix::identity(n);
  SquareMatrix term = SquareMatrix::identity(n);
  for (int k = 1; k <= 13; ++k) {
    term = term * b;
    term *= 1.0 / static_cast<double>(k);
    result += term;
  }
  for (int k = 0; k < s; ++k) result = result * result;
  if (!result.is_finite()) throw std::overflow_error("expm: result overflows");
  return result;
}

double det(const SquareMatrix& a) {
  const std::size_t n = a.dim();
  SquareMatrix lu = a;
  double d = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(lu(r, col)) > std::abs(lu(piv, col))) piv = r;
    if (lu(piv, col) == 0.0) return 0.0;
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(piv, j), lu(col, j));
      d = -d;
    }
    d *= lu(col, col);
    const double inv = 1.0 / lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = lu(r, col) * inv;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) lu(r, j) -= f * lu(col, j);
    }
  }
  return d;
}

namespace {

double det_full_pivot(std::vector<double>& m, std::size_t k) {
  double d = 1.0;
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t pr = step, pc = step;
    double best = 0.0;
    for (std::size_t r = step; r < k; ++r)
      for (std::size_t c = step; c < k; ++c)
        if (std::abs(m[r * k + c]) > best) {
          best = std::abs(m[r * k + c]);
          pr = r;
          pc = c;
        }
    if (best == 0.0) return 0.0;
    if (pr != step) {
      for (std::size_t c = 0; c < k; ++c) std::swap(m[pr * k + c], m[step * k + c]);
      d = -d;
    }
    if (pc != step) {
      for (std::size_t r = 0; r < k; ++r) std::swap(m[r * k + pc], m[r * k + step]);
      d = -d;
    }
    const double p = m[step * k + step];
    d *= p;
    for (std::size_t r = step + 1; r < k; ++r) {
      const double f = m[r * k + step] / p;
      if (f == 0.0) continue;
      for (std::size_t c = step; c < k; ++c) m[r * k + c] -= f * m[step * k + c];
    }
  }
  return d;
}

}  // namespace

double minor_det(const SquareMatrix& a, const std::vector<int>& rows,
                 const std::vector<int>& cols) {
  const std::size_t k = rows.size();
  if (cols.size() != k) throw std::invalid_argument("minor_det: row/col count mismatch");
  auto e = [&](std::size_t i, std::size_t j) {
    return a(static_cast<std::size_t>(rows[i]), static_cast<std::size_t>(cols[j]));
  };
  switch (k) {
    case 0:
      return 1.0;
    case 1:
      return e(0, 0);
    case 2:
      return e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0);
    case 3:
      return e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) -
             e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0)) +
             e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
    case 4: {
      double d = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        std::vector<int> sub_rows(rows.begin() + 1, rows.end());
        std::vector<int> sub_cols;
        for (std::size_t c = 0; c < 4; ++c)
          if (c != j) sub_cols.push_back(cols[c]);
        const double cof = minor_det(a, sub_rows, sub_cols);
        d += ((j % 2 == 0) ? 1.0 : -1.0) * e(0, j) * cof;
      }
      return d;
    }
    default: {
      std::vector<double> m(k * k);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) m[i * k + j] = e(i, j);
      return det_full_pivot(m, k);
    }
  }
}

}  // namespace hypercone::matcore
