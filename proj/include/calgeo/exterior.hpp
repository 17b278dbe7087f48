#pragma once

// Dense exterior algebra over R^n with the standard orthonormal basis.
//
// A degree-p element is stored as C(n,p) coefficients indexed by strictly
// increasing multi-indices in lexicographic order. Internally a multi-index is a
// bitmask (n <= 12 fits in 16 bits), which makes every sign computation a
// popcount.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace calgeo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest ambient dimension with dense storage. C(12,6) = 924 is the widest
/// coefficient vector this allows.
inline constexpr int kMaxDim = 12;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline void check_capacity(int n, int p) {
  if (n < 0 || n > kMaxDim)
    throw CapacityError("ambient dimension " + std::to_string(n) +
                        " outside supported range [0, " +
                        std::to_string(kMaxDim) + "]");
  if (p < 0 || p > n)
    throw ShapeError("degree " + std::to_string(p) +
                     " invalid for ambient dimension " + std::to_string(n));
}

namespace detail {

using Mask = std::uint16_t;

inline int popcount(unsigned m) { return std::popcount(m); }

// Number of set bits of m strictly above bit k.
inline int bits_above(unsigned m, int k) {
  return std::popcount(m >> (k + 1));
}

// Number of set bits of m strictly below bit k.
inline int bits_below(unsigned m, int k) {
  return std::popcount(m & ((1u << k) - 1u));
}

// Parity of the shuffle that sorts the concatenation (I, J) of two disjoint
// index sets: the number of pairs i in I, j in J with i > j.
inline int shuffle_sign(unsigned I, unsigned J) {
  int inv = 0;
  for (unsigned rest = J; rest; rest &= rest - 1) {
    int j = std::countr_zero(rest);
    inv += bits_above(I, j);
  }
  return (inv & 1) ? -1 : 1;
}

struct DegreeBasis {
  std::vector<Mask> masks;  // lexicographic order of the sorted index lists
};

struct DimensionTables {
  std::array<DegreeBasis, kMaxDim + 1> degree;
  std::vector<std::int16_t> rank;  // mask -> rank within its own degree
};

inline bool lex_less(Mask a, Mask b) {
  // Compare sorted index lists of equal length lexicographically.
  while (a && b) {
    int ia = std::countr_zero(static_cast<unsigned>(a));
    int ib = std::countr_zero(static_cast<unsigned>(b));
    if (ia != ib) return ia < ib;
    a &= a - 1;
    b &= b - 1;
  }
  return false;
}

inline DimensionTables build_tables(int n) {
  DimensionTables t;
  t.rank.assign(std::size_t{1} << n, -1);
  for (int p = 0; p <= n; ++p) {
    auto& masks = t.degree[p].masks;
    for (unsigned m = 0; m < (1u << n); ++m)
      if (popcount(m) == p) masks.push_back(static_cast<Mask>(m));
    std::sort(masks.begin(), masks.end(), lex_less);
    for (std::size_t r = 0; r < masks.size(); ++r)
      t.rank[masks[r]] = static_cast<std::int16_t>(r);
  }
  return t;
}

inline const DimensionTables& tables(int n) {
  static std::array<DimensionTables, kMaxDim + 1> all;
  static std::once_flag once;
  std::call_once(once, [] {
    for (int k = 0; k <= kMaxDim; ++k) all[k] = build_tables(k);
  });
  return all[n];
}

inline const std::vector<Mask>& basis_masks(int n, int p) {
  return tables(n).degree[p].masks;
}

inline int mask_rank(int n, Mask m) { return tables(n).rank[m]; }

}  // namespace detail

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Strictly increasing index list in [0, n).
struct MultiIndex {
  std::vector<int> indices;

  static MultiIndex from_mask(unsigned mask) {
    MultiIndex m;
    for (unsigned rest = mask; rest; rest &= rest - 1)
      m.indices.push_back(std::countr_zero(rest));
    return m;
  }

  [[nodiscard]] unsigned mask(int n) const {
    unsigned m = 0;
    int prev = -1;
    for (int i : indices) {
      if (i <= prev || i >= n)
        throw ShapeError("multi-index is not strictly increasing in [0, n)");
      m |= 1u << i;
      prev = i;
    }
    return m;
  }

  [[nodiscard]] int degree() const { return static_cast<int>(indices.size()); }

  bool operator==(const MultiIndex&) const = default;
};

/// Lexicographic rank of a multi-index among all degree-p indices in [0, n).
inline int rank_of(const MultiIndex& idx, int n) {
  check_capacity(n, idx.degree());
  return detail::mask_rank(n, static_cast<detail::Mask>(idx.mask(n)));
}

inline MultiIndex unrank(int rank, int n, int p) {
  check_capacity(n, p);
  const auto& masks = detail::basis_masks(n, p);
  if (rank < 0 || rank >= static_cast<int>(masks.size()))
    throw ShapeError("rank out of range");
  return MultiIndex::from_mask(masks[rank]);
}

struct FormTag {};
struct VectorTag {};

/// Alternating tensor of degree p on R^n in coordinates. Forms and
/// multivectors share the representation; the orthonormal basis makes the
/// dual pairing a coordinate dot product.
template <class Kind>
class Alternating {
 public:
  Alternating() : n_(0), p_(0), coeffs_(Vector::Zero(1)) {}

  Alternating(int n, int p) : n_(n), p_(p) {
    check_capacity(n, p);
    coeffs_ = Vector::Zero(binomial(n, p));
  }

  Alternating(int n, int p, Vector coeffs) : n_(n), p_(p), coeffs_(std::move(coeffs)) {
    check_capacity(n, p);
    if (coeffs_.size() != binomial(n, p))
      throw ShapeError("coefficient vector has length " +
                       std::to_string(coeffs_.size()) + ", expected C(" +
                       std::to_string(n) + "," + std::to_string(p) + ")");
  }

  /// Basis element e_{i1} ^ ... ^ e_{ip}; indices need not be sorted (the
  /// sign of the sorting permutation is applied) but must be distinct.
  static Alternating basis(int n, std::vector<int> idx) {
    Alternating a(n, static_cast<int>(idx.size()));
    int sign = 1;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = i + 1; j < idx.size(); ++j) {
        if (idx[i] == idx[j]) return a;
        if (idx[i] > idx[j]) sign = -sign;
      }
    std::sort(idx.begin(), idx.end());
    a.coeffs_[rank_of(MultiIndex{idx}, n)] = sign;
    return a;
  }

  /// Degree-one element with the given components.
  static Alternating from_vector(const Vector& v) {
    return Alternating(static_cast<int>(v.size()), 1, v);
  }

  [[nodiscard]] int dim() const { return n_; }
  [[nodiscard]] int degree() const { return p_; }
  [[nodiscard]] const Vector& coeffs() const { return coeffs_; }
  Vector& coeffs() { return coeffs_; }
  [[nodiscard]] Eigen::Index size() const { return coeffs_.size(); }

  [[nodiscard]] double operator[](const MultiIndex& idx) const {
    return coeffs_[rank_of(idx, n_)];
  }
  [[nodiscard]] double coeff(std::size_t rank) const { return coeffs_[rank]; }

  [[nodiscard]] double norm() const { return coeffs_.norm(); }

  Alternating& operator+=(const Alternating& o) {
    require_same_shape(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  Alternating& operator-=(const Alternating& o) {
    require_same_shape(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  Alternating& operator*=(double s) {
    coeffs_ *= s;
    return *this;
  }

  friend Alternating operator+(Alternating a, const Alternating& b) { return a += b; }
  friend Alternating operator-(Alternating a, const Alternating& b) { return a -= b; }
  friend Alternating operator-(Alternating a) { return a *= -1.0; }
  friend Alternating operator*(double s, Alternating a) { return a *= s; }
  friend Alternating operator*(Alternating a, double s) { return a *= s; }

  void require_same_shape(const Alternating& o) const {
    if (n_ != o.n_ || p_ != o.p_)
      throw ShapeError("shape mismatch: (" + std::to_string(n_) + "," +
                       std::to_string(p_) + ") vs (" + std::to_string(o.n_) +
                       "," + std::to_string(o.p_) + ")");
  }

 private:
  int n_;
  int p_;
  Vector coeffs_;
};

using Form = Alternating<FormTag>;
using Multivector = Alternating<VectorTag>;

/// Square matrix acting on R^n (Hessians, projections, endomorphisms).
using EndoMatrix = Matrix;

inline Form flat(const Multivector& x) { return Form(x.dim(), x.degree(), x.coeffs()); }
inline Multivector sharp(const Form& a) {
  return Multivector(a.dim(), a.degree(), a.coeffs());
}

/// Evaluation of a form on a multivector.
inline double pair(const Form& a, const Multivector& x) {
  if (a.dim() != x.dim() || a.degree() != x.degree())
    throw ShapeError("pair: form and multivector shapes differ");
  return a.coeffs().dot(x.coeffs());
}

/// Inner product of two elements of the same kind.
template <class K>
double inner(const Alternating<K>& a, const Alternating<K>& b) {
  a.require_same_shape(b);
  return a.coeffs().dot(b.coeffs());
}

template <class K>
Alternating<K> wedge(const Alternating<K>& a, const Alternating<K>& b) {
  if (a.dim() != b.dim()) throw ShapeError("wedge: dimension mismatch");
  const int n = a.dim();
  const int q = a.degree() + b.degree();
  if (q > n)
    throw ShapeError("wedge: degree " + std::to_string(q) + " exceeds dimension " +
                     std::to_string(n));
  Alternating<K> out(n, q);
  const auto& ma = detail::basis_masks(n, a.degree());
  const auto& mb = detail::basis_masks(n, b.degree());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double ca = a.coeff(i);
    if (ca == 0.0) continue;
    for (std::size_t j = 0; j < mb.size(); ++j) {
      const double cb = b.coeff(j);
      if (cb == 0.0 || (ma[i] & mb[j])) continue;
      const auto m = static_cast<detail::Mask>(ma[i] | mb[j]);
      out.coeffs()[detail::mask_rank(n, m)] +=
          detail::shuffle_sign(ma[i], mb[j]) * ca * cb;
    }
  }
  return out;
}

/// Contraction in the first slot: (v _| a)(w_1..w_{p-1}) = a(v, w_1..w_{p-1}).
template <class K>
Alternating<K> interior(const Vector& v, const Alternating<K>& a) {
  if (v.size() != a.dim()) throw ShapeError("interior: dimension mismatch");
  if (a.degree() == 0) throw ShapeError("interior: cannot contract a degree-0 element");
  const int n = a.dim();
  Alternating<K> out(n, a.degree() - 1);
  const auto& ma = detail::basis_masks(n, a.degree());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double c = a.coeff(i);
    if (c == 0.0) continue;
    for (unsigned rest = ma[i]; rest; rest &= rest - 1) {
      const int k = std::countr_zero(rest);
      if (v[k] == 0.0) continue;
      const auto m = static_cast<detail::Mask>(ma[i] & ~(1u << k));
      const double s = (detail::bits_below(ma[i], k) & 1) ? -1.0 : 1.0;
      out.coeffs()[detail::mask_rank(n, m)] += s * v[k] * c;
    }
  }
  return out;
}

/// v ^ a for a degree-one v given by components.
template <class K>
Alternating<K> wedge_vector(const Vector& v, const Alternating<K>& a) {
  return wedge(Alternating<K>::from_vector(v), a);
}

/// Hodge star for the orientation e_1 ^ ... ^ e_n, so that a ^ *b = <a,b> vol.
template <class K>
Alternating<K> hodge_star(const Alternating<K>& a) {
  const int n = a.dim();
  const unsigned full = (1u << n) - 1u;
  Alternating<K> out(n, n - a.degree());
  const auto& ma = detail::basis_masks(n, a.degree());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double c = a.coeff(i);
    if (c == 0.0) continue;
    const auto comp = static_cast<detail::Mask>(full & ~ma[i]);
    out.coeffs()[detail::mask_rank(n, comp)] += detail::shuffle_sign(ma[i], comp) * c;
  }
  return out;
}

template <class K>
Alternating<K> volume(int n) {
  Alternating<K> v(n, n);
  v.coeffs()[0] = 1.0;
  return v;
}

/// Extension of B as a derivation: D_B = sum_{k,l} B_kl e_k ^ (e_l _| .).
/// On degree-one elements this is the matrix action on coefficients.
template <class K>
Alternating<K> derivation_extend(const EndoMatrix& B, const Alternating<K>& a) {
  const int n = a.dim();
  if (B.rows() != n || B.cols() != n) throw ShapeError("derivation_extend: shape mismatch");
  Alternating<K> out(n, a.degree());
  if (a.degree() == 0) return out;
  const auto& ma = detail::basis_masks(n, a.degree());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double c = a.coeff(i);
    if (c == 0.0) continue;
    const unsigned I = ma[i];
    for (unsigned rest = I; rest; rest &= rest - 1) {
      const int l = std::countr_zero(rest);
      // e_l _| e_I = s_l e_{I\l}; then e_k ^ e_{I\l} = t_k e_{(I\l)+k}.
      const unsigned J = I & ~(1u << l);
      const double sl = (detail::bits_below(I, l) & 1) ? -1.0 : 1.0;
      for (int k = 0; k < n; ++k) {
        const double bkl = B(k, l);
        if (bkl == 0.0 || (J & (1u << k))) continue;
        const double tk = (detail::bits_below(J, k) & 1) ? -1.0 : 1.0;
        const auto m = static_cast<detail::Mask>(J | (1u << k));
        out.coeffs()[detail::mask_rank(n, m)] += bkl * sl * tk * c;
      }
    }
  }
  return out;
}

/// lambda_phi(A) = D_{A^t} phi. Its value on xi equals phi(D_A xi).
inline Form lambda_phi(const EndoMatrix& A, const Form& phi) {
  if (phi.degree() < 1) throw ShapeError("lambda_phi: degree must be >= 1");
  return derivation_extend(EndoMatrix(A.transpose()), phi);
}

/// Adjoint of lambda_phi for <A,B> = tr(A B^t) on matrices and the coordinate
/// inner product on forms.
inline EndoMatrix lambda_phi_adjoint(const Form& a, const Form& phi) {
  if (a.dim() != phi.dim() || a.degree() != phi.degree())
    throw ShapeError("lambda_phi_adjoint: degree mismatch");
  const int n = phi.dim();
  EndoMatrix out = EndoMatrix::Zero(n, n);
  if (phi.degree() == 0) return out;
  // lambda_phi(A) = sum_{k,l} A_lk e_k ^ (e_l _| phi), so the adjoint entry
  // (l,k) is <e_k ^ (e_l _| phi), a>.
  for (int l = 0; l < n; ++l) {
    const Form c = interior(Vector(Vector::Unit(n, l)), phi);
    for (int k = 0; k < n; ++k) {
      const Form w = wedge(Form::from_vector(Vector::Unit(n, k)), c);
      out(l, k) = inner(w, a);
    }
  }
  return out;
}

namespace detail {
// Small dense determinant without heap allocation for p <= kMaxDim.
template <class Derived>
double small_det(const Eigen::MatrixBase<Derived>& m) {
  using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
  const Eigen::Index p = m.rows();
  if (p == 0) return 1.0;
  if (p == 1) return m(0, 0);
  if (p == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (p == 3)
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  Small s = m;
  return Eigen::PartialPivLU<Small>(s).determinant();
}
}  // namespace detail

/// Wedge of the columns of an n x p matrix, with no orthonormality check.
inline Multivector wedge_columns(const Matrix& cols) {
  const int n = static_cast<int>(cols.rows());
  const int p = static_cast<int>(cols.cols());
  Multivector out(n, p);
  const auto& masks = detail::basis_masks(n, p);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim> sub(p, p);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    int row = 0;
    for (unsigned rest = masks[r]; rest; rest &= rest - 1, ++row)
      sub.row(row) = cols.row(std::countr_zero(rest));
    out.coeffs()[r] = detail::small_det(sub);
  }
  return out;
}

/// Pluecker vector of an oriented plane given by an orthonormal frame.
inline Multivector plucker(const Matrix& frame, double tol = 1e-10) {
  check_capacity(static_cast<int>(frame.rows()), static_cast<int>(frame.cols()));
  const Matrix gram = frame.transpose() * frame;
  const double err =
      (gram - Matrix::Identity(frame.cols(), frame.cols())).cwiseAbs().maxCoeff();
  if (frame.cols() > 0 && err > tol)
    throw ShapeError("plucker: frame columns are not orthonormal (error " +
                     std::to_string(err) + ")");
  return wedge_columns(frame);
}

/// Pullback of a form along the linear map given by the columns of B
/// (n x m): the result is the form on R^m with (B^*a)(u..) = a(Bu..).
inline Form pullback(const Form& a, const Matrix& B) {
  if (B.rows() != a.dim()) throw ShapeError("pullback: dimension mismatch");
  const int m = static_cast<int>(B.cols());
  const int p = a.degree();
  check_capacity(m, p);
  Form out(m, p);
  const auto& masks = detail::basis_masks(m, p);
  Matrix cols(B.rows(), p);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    int c = 0;
    for (unsigned rest = masks[r]; rest; rest &= rest - 1, ++c)
      cols.col(c) = B.col(std::countr_zero(rest));
    out.coeffs()[r] = pair(a, wedge_columns(cols));
  }
  return out;
}

/// Push a multivector on R^m forward along the columns of B (n x m).
inline Multivector pushforward(const Multivector& x, const Matrix& B) {
  if (B.cols() != x.dim()) throw ShapeError("pushforward: dimension mismatch");
  const int n = static_cast<int>(B.rows());
  const int p = x.degree();
  Multivector out(n, p);
  const auto& masks = detail::basis_masks(x.dim(), p);
  Matrix cols(n, p);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    if (x.coeff(r) == 0.0) continue;
    int c = 0;
    for (unsigned rest = masks[r]; rest; rest &= rest - 1, ++c)
      cols.col(c) = B.col(std::countr_zero(rest));
    out += x.coeff(r) * wedge_columns(cols);
  }
  return out;
}

/// Orthogonal projection onto the column span of an orthonormal frame.
inline EndoMatrix projection(const Matrix& frame) { return frame * frame.transpose(); }

/// Frobenius inner product tr(A B^t).
inline double frobenius(const EndoMatrix& A, const EndoMatrix& B) {
  return (A.array() * B.array()).sum();
}

}  // namespace calgeo
