#include "hypercone/exterior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hypercone::exterior {

CompoundIndexing::CompoundIndexing(std::size_t n_, std::size_t k_) : n(n_), k(k_) {
  if (k < 1 || k > n) throw std::out_of_range("CompoundIndexing: need 1 <= k <= n");
  std::vector<int> subset(k);
  for (std::size_t i = 0; i < k; ++i) subset[i] = static_cast<int>(i);
  while (true) {
    basis.push_back(subset);
    // Advance to the next k-subset in lexicographic order.
    int pos = static_cast<int>(k) - 1;
    while (pos >= 0 && subset[pos] == static_cast<int>(n - k + pos)) --pos;
    if (pos < 0) break;
    ++subset[pos];
    for (std::size_t i = pos + 1; i < k; ++i) subset[i] = subset[i - 1] + 1;
  }
}

std::size_t CompoundIndexing::index_of(const std::vector<int>& subset) const {
  auto it = std::lower_bound(basis.begin(), basis.end(), subset);
  if (it == basis.end() || *it != subset)
    throw std::out_of_range("CompoundIndexing: subset not in basis");
  return static_cast<std::size_t>(it - basis.begin());
}

SquareMatrix compound(const SquareMatrix& a, std::size_t k) {
  const std::size_t n = a.dim();
  if (k < 1 || k > n) throw std::out_of_range("compound: need 1 <= k <= n");
  if (k == 1) return a;
  if (k == n) {
    SquareMatrix d(1);
    std::vector<int> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<int>(i);
    d(0, 0) = matcore::minor_det(a, all, all);
    return d;
  }
  const CompoundIndexing idx(n, k);
  const std::size_t m = idx.size();
  SquareMatrix c(m);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t s = 0; s < m; ++s)
      c(r, s) = matcore::minor_det(a, idx.basis[r], idx.basis[s]);
  return c;
}

SquareMatrix additive_compound(const SquareMatrix& a, std::size_t k) {
  const std::size_t n = a.dim();
  if (k < 1 || k > n) throw std::out_of_range("additive_compound: need 1 <= k <= n");
  if (k == 1) return a;
  if (k == n) {
    SquareMatrix d(1);
    d(0, 0) = a.trace();
    return d;
  }
  const CompoundIndexing idx(n, k);
  const std::size_t m = idx.size();
  SquareMatrix gen(m);
  // Column T collects the coefficients of
  //   sum_p e_{t1} ^ ... ^ (A e_{tp}) ^ ... ^ e_{tk}
  // on the lexicographic basis; replacing slot p by e_i and sorting gives a
  // sign from the number of transpositions.
  for (std::size_t col = 0; col < m; ++col) {
    const std::vector<int>& t = idx.basis[col];
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t i = 0; i < n; ++i) {
        const double aij = a(i, static_cast<std::size_t>(t[p]));
        if (aij == 0.0) continue;
        const int ii = static_cast<int>(i);
        if (ii != t[p] &&
            std::binary_search(t.begin(), t.end(), ii)) continue;  // repeated factor
        std::vector<int> s = t;
        s[p] = ii;
        int sign = 1;
        // Bubble the replaced slot into sorted position, flipping the sign
        // per swap.
        for (std::size_t q = p; q + 1 < k && s[q] > s[q + 1]; ++q) {
          std::swap(s[q], s[q + 1]);
          sign = -sign;
        }
        for (std::size_t q = p; q > 0 && s[q - 1] > s[q]; --q) {
          std::swap(s[q - 1], s[q]);
          sign = -sign;
        }
        gen(idx.index_of(s), col) += sign * aij;
      }
    }
  }
  return gen;
}

Hodge3Result hodge3(const SquareMatrix& a) {
  if (a.dim() != 3) throw std::invalid_argument("hodge3: requires a 3x3 matrix");
  Hodge3Result r;
  r.cofactor = SquareMatrix(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t r0 = (i + 1) % 3, r1 = (i + 2) % 3;
      const std::size_t c0 = (j + 1) % 3, c1 = (j + 2) % 3;
      // Cyclic complements keep the minor sign built in.
      r.cofactor(i, j) = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
    }
  r.generator3 = SquareMatrix::identity(3) * a.trace() - a.transpose();
  return r;
}

const SquareMatrix& hodge3_basis_change() {
  // Lexicographic bivector coords (w12, w13, w23) map to the (e2^e3, e3^e1,
  // e1^e2) components (w23, -w13, w12).
  static const SquareMatrix h(3, {0.0, 0.0, 1.0,  //
                                  0.0, -1.0, 0.0,  //
                                  1.0, 0.0, 0.0});
  return h;
}

SquareMatrix induced_biform(const forms::QuadraticForm& j) {
  return compound(j.matrix(), 2);
}

}  // namespace hypercone::exterior
