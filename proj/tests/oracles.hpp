#pragma once

// Brute-force reference computations used only by the tests. Nothing here
// calls into the mask-based kernels of the library except to read
// coefficients by multi-index.

#include "calgeo/exterior.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <complex>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <vector>

namespace calgeo::oracle {

inline int permutation_sign(const std::vector<int>& perm) {
  int inv = 0;
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = i + 1; j < perm.size(); ++j)
      if (perm[i] > perm[j]) ++inv;
  return (inv & 1) ? -1 : 1;
}

/// Leibniz determinant: sum over all permutations.
inline double leibniz_det(const Matrix& m) {
  const int p = static_cast<int>(m.rows());
  std::vector<int> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    double term = permutation_sign(perm);
    for (int r = 0; r < p; ++r) term *= m(r, perm[r]);
    total += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

/// Cofactor expansion along the first row.
inline double cofactor_det(const Matrix& m) {
  const Eigen::Index p = m.rows();
  if (p == 0) return 1.0;
  if (p == 1) return m(0, 0);
  double total = 0.0;
  for (Eigen::Index c = 0; c < p; ++c) {
    Matrix minor(p - 1, p - 1);
    for (Eigen::Index r = 1; r < p; ++r) {
      Eigen::Index cc = 0;
      for (Eigen::Index k = 0; k < p; ++k)
        if (k != c) minor(r - 1, cc++) = m(r, k);
    }
    total += ((c & 1) ? -1.0 : 1.0) * m(0, c) * cofactor_det(minor);
  }
  return total;
}

/// Evaluates a form on the given vectors (columns of V) as the multilinear
/// function sum_I a_I det(V restricted to rows I), with Leibniz determinants.
inline double evaluate_on(const Form& a, const Matrix& V) {
  const int n = a.dim(), p = a.degree();
  double total = 0.0;
  for (int r = 0; r < a.size(); ++r) {
    if (a.coeff(r) == 0.0) continue;
    const MultiIndex idx = unrank(r, n, p);
    Matrix sub(p, p);
    for (int i = 0; i < p; ++i) sub.row(i) = V.row(idx.indices[i]);
    total += a.coeff(r) * leibniz_det(sub);
  }
  return total;
}

inline Matrix basis_columns(int n, const std::vector<int>& idx) {
  Matrix V = Matrix::Zero(n, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) V(idx[c], c) = 1.0;
  return V;
}

inline long long factorial(int k) {
  long long f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// Wedge product from the alternation formula
/// (a^b)(v_1..v_{p+q}) = 1/(p!q!) sum_sigma sgn(sigma) a(v_sigma..) b(v_sigma..).
inline Form wedge_by_alternation(const Form& a, const Form& b) {
  const int n = a.dim(), p = a.degree(), q = b.degree();
  Form out(n, p + q);
  for (int r = 0; r < out.size(); ++r) {
    const MultiIndex K = unrank(r, n, p + q);
    std::vector<int> perm(p + q);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
      std::vector<int> first, second;
      for (int i = 0; i < p; ++i) first.push_back(K.indices[perm[i]]);
      for (int i = p; i < p + q; ++i) second.push_back(K.indices[perm[i]]);
      total += permutation_sign(perm) * evaluate_on(a, basis_columns(n, first)) *
               evaluate_on(b, basis_columns(n, second));
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.coeffs()[r] = total / static_cast<double>(factorial(p) * factorial(q));
  }
  return out;
}

template <class K>
Alternating<K> random_element(int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Alternating<K> a(n, p);
  for (int i = 0; i < a.size(); ++i) a.coeffs()[i] = normal(rng);
  return a;
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

/// Kaehler form sum dx_k ^ dy_k in interleaved coordinates.
inline Form kahler(int complex_dim) {
  Form w(2 * complex_dim, 2);
  for (int k = 0; k < complex_dim; ++k) w += Form::basis(2 * complex_dim, {2 * k, 2 * k + 1});
  return w;
}

/// Haar-distributed unitary matrix (QR of a complex Gaussian with the
/// phases of R divided out); special = true rescales to det 1.
inline Eigen::MatrixXcd haar_unitary(int m, bool special, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd Z(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) Z(i, j) = {normal(rng), normal(rng)};
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Z);
  Eigen::MatrixXcd Q = qr.householderQ();
  const Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j) Q.col(j) *= R(j, j) / std::abs(R(j, j));
  if (special) Q /= std::pow(Q.determinant(), 1.0 / m);
  return Q;
}

/// Real 2m x k frame of complex columns, coordinates (x1, y1, x2, y2, ...).
inline Matrix realify(const Eigen::MatrixXcd& C) {
  Matrix F(2 * C.rows(), C.cols());
  for (Eigen::Index i = 0; i < C.rows(); ++i)
    for (Eigen::Index j = 0; j < C.cols(); ++j) {
      F(2 * i, j) = C(i, j).real();
      F(2 * i + 1, j) = C(i, j).imag();
    }
  return F;
}

/// Special Lagrangian planes: A R^m for A in SU(m).
inline Matrix sl_plane(int m, std::mt19937_64& rng) {
  return realify(haar_unitary(m, true, rng).leftCols(m));
}

/// Complex lines span{v, Jv} through a Gaussian v.
inline Matrix complex_line(int m, std::mt19937_64& rng) {
  Eigen::VectorXcd v(m);
  std::normal_distribution<double> normal;
  for (int i = 0; i < m; ++i) v[i] = {normal(rng), normal(rng)};
  v.normalize();
  Eigen::MatrixXcd C(m, 2);
  C.col(0) = v;
  C.col(1) = std::complex<double>(0.0, 1.0) * v;
  return realify(C);
}

/// Dimension of {Q symmetric : tr(Q P_i) = 0 for all i}, computed in the
/// full n^2 coordinates with symmetry imposed as extra equations.
inline int quadratic_null_dimension(const std::vector<Matrix>& frames, int n, double rel_tol = 1e-9) {
  const auto rows = static_cast<Eigen::Index>(frames.size() + n * (n - 1) / 2);
  Matrix C = Matrix::Zero(rows, n * n);
  Eigen::Index r = 0;
  for (const auto& F : frames) {
    const Matrix P = F * F.transpose();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(r, i * n + j) = P(i, j);
    ++r;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      C(r, i * n + j) = 1.0;
      C(r, j * n + i) = -1.0;
      ++r;
    }
  Eigen::JacobiSVD<Matrix> svd(C);
  const Vector sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv[k] > rel_tol * sv[0]) ++rank;
  return n * n - rank;
}

/// Rank of a set of Pluecker vectors, computed from oracle determinants.
inline int plucker_rank(const std::vector<Matrix>& frames, int n, int p, double rel_tol = 1e-9) {
  std::vector<std::vector<int>> subsets;
  std::vector<int> idx(p);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == p) {
      subsets.push_back(idx);
      return;
    }
    for (int i = start; i < n; ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  Matrix M(static_cast<Eigen::Index>(subsets.size()), static_cast<Eigen::Index>(frames.size()));
  for (std::size_t c = 0; c < frames.size(); ++c)
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      Matrix sub(p, p);
      for (int a = 0; a < p; ++a) sub.row(a) = frames[c].row(subsets[s][a]);
      M(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) = leibniz_det(sub);
    }
  Eigen::JacobiSVD<Matrix> svd(M);
  const Vector sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv[k] > rel_tol * sv[0]) ++rank;
  return rank;
}

/// Right-hand side of the special Lagrangian identity
///   dd^phi f = 2 Re{ sum f_{zbar_i zbar_j} Z_ij } + L(f) Re(dz),
/// Z_ij = dz with dz_i replaced by dzbar_j, expanded with complex 1-forms.
/// L(f) = tr(Hess f) / 2, the normalization under which dd^phi |x|^2/2 = n phi.
/// Returns coefficients indexed like the library (lexicographic p-subsets).
inline Form sl_ddphi_reference(const Matrix& H) {
  const int n = static_cast<int>(H.rows()) / 2;
  using C = std::complex<double>;
  using Cform = std::map<std::vector<int>, C>;
  auto one = [](int k, bool conj) {
    return Cform{{{2 * k}, 1.0}, {{2 * k + 1}, conj ? C(0, -1) : C(0, 1)}};
  };
  auto wedge1 = [](const Cform& a, const Cform& b) {
    Cform out;
    for (const auto& [I, ca] : a)
      for (const auto& [J, cb] : b) {
        std::vector<int> L = I;
        L.insert(L.end(), J.begin(), J.end());
        std::vector<int> sorted = L;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) continue;
        std::vector<int> perm;
        for (int v : L) perm.push_back(static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin()));
        out[sorted] += static_cast<double>(permutation_sign(perm)) * ca * cb;
      }
    return out;
  };
  auto product = [&](int replace, int with) {
    Cform r{{{}, 1.0}};
    for (int k = 0; k < n; ++k) r = wedge1(r, k == replace ? one(with, true) : one(k, false));
    return r;
  };
  std::map<std::vector<int>, double> ref;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const C f = 0.25 * C(H(2 * i, 2 * j) - H(2 * i + 1, 2 * j + 1), H(2 * i, 2 * j + 1) + H(2 * i + 1, 2 * j));
      for (const auto& [I, c] : product(i, j)) ref[I] += 2.0 * (f * c).real();
    }
  for (const auto& [I, c] : product(-1, 0)) ref[I] += 0.5 * H.trace() * c.real();
  Form out(2 * n, n);
  for (const auto& [I, c] : ref) {
    MultiIndex mi;
    mi.indices = I;
    out.coeffs()[rank_of(mi, 2 * n)] += c;
  }
  return out;
}

}  // namespace calgeo::oracle
