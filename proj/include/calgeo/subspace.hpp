#pragma once

// Numerical rank decisions, null spaces and principal angles.

#include "calgeo/exterior.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <string>

namespace calgeo {

/// Orthonormal basis of a subspace together with the singular values that
/// decided its rank.
struct SubspaceBasis {
  std::string ambient;      // e.g. "Lambda^3 R^6" or "R^6"
  Matrix basis;             // columns orthonormal
  Vector singular_values;   // of the spanning (or constraint) matrix
  double rank_gap = std::numeric_limits<double>::infinity();
  bool rank_stable = true;  // gap >= required factor

  [[nodiscard]] int dim() const { return static_cast<int>(basis.cols()); }
  [[nodiscard]] int ambient_dim() const { return static_cast<int>(basis.rows()); }
};

struct RankDecision {
  int rank = 0;
  double gap = std::numeric_limits<double>::infinity();
  bool stable = true;
};

/// Singular values below rel_tol * sigma_max count as zero. The gap is the
/// ratio of the smallest kept singular value to the largest discarded one.
inline RankDecision decide_rank(const Vector& sv, double rel_tol = 1e-8,
                                double gap_factor = 10.0) {
  RankDecision d;
  if (sv.size() == 0 || sv[0] <= 0.0) {
    d.rank = 0;
    return d;
  }
  const double thr = rel_tol * sv[0];
  int r = 0;
  while (r < sv.size() && sv[r] > thr) ++r;
  d.rank = r;
  const double kept = r > 0 ? sv[r - 1] : std::numeric_limits<double>::infinity();
  const double dropped = r < sv.size() ? sv[r] : 0.0;
  d.gap = dropped > 0.0 ? kept / dropped : std::numeric_limits<double>::infinity();
  d.stable = d.gap >= gap_factor;
  return d;
}

/// Column span of M.
inline SubspaceBasis column_span(const Matrix& M, double rel_tol = 1e-8,
                                 double gap_factor = 10.0) {
  SubspaceBasis out;
  if (M.cols() == 0 || M.rows() == 0) {
    out.basis = Matrix(M.rows(), 0);
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU);
  const RankDecision d = decide_rank(svd.singularValues(), rel_tol, gap_factor);
  out.basis = svd.matrixU().leftCols(d.rank);
  out.singular_values = svd.singularValues();
  out.rank_gap = d.gap;
  out.rank_stable = d.stable;
  return out;
}

/// Null space of M (right singular vectors for the discarded singular values).
inline SubspaceBasis null_space(const Matrix& M, double rel_tol = 1e-8,
                                double gap_factor = 10.0) {
  SubspaceBasis out;
  const Eigen::Index n = M.cols();
  if (M.rows() == 0) {
    out.basis = Matrix::Identity(n, n);
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
  Vector sv = Vector::Zero(n);
  sv.head(std::min<Eigen::Index>(n, svd.singularValues().size())) =
      svd.singularValues().head(std::min<Eigen::Index>(n, svd.singularValues().size()));
  const RankDecision d = decide_rank(sv, rel_tol, gap_factor);
  out.basis = svd.matrixV().rightCols(n - d.rank);
  out.singular_values = sv;
  out.rank_gap = d.gap;
  out.rank_stable = d.stable;
  return out;
}

/// Orthonormal basis of the orthogonal complement of the columns of Q
/// (assumed orthonormal).
inline Matrix orthogonal_complement(const Matrix& Q) {
  const Eigen::Index n = Q.rows();
  if (Q.cols() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(Q, Eigen::ComputeFullU);
  const Eigen::Index k = std::min<Eigen::Index>(Q.cols(), n);
  return svd.matrixU().rightCols(n - k);
}

/// Principal angles (ascending) between the column spans of two orthonormal
/// bases of equal dimension. Returns an empty vector if the dimensions differ.
inline Vector principal_angles(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols()) return {};
  if (A.cols() == 0) return Vector(0);
  Eigen::JacobiSVD<Matrix> svd(A.transpose() * B);
  Vector sv = svd.singularValues();
  Vector ang(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    ang[i] = std::acos(std::clamp(sv[i], -1.0, 1.0));
  std::sort(ang.data(), ang.data() + ang.size());
  return ang;
}

inline double largest_principal_angle(const Matrix& A, const Matrix& B) {
  const Vector a = principal_angles(A, B);
  if (a.size() == 0) return A.cols() == B.cols() ? 0.0 : M_PI / 2;
  return a.maxCoeff();
}

/// Thin QR with the sign of R's diagonal made positive, so that the column
/// span and its orientation are preserved.
inline Matrix orthonormalize(const Matrix& M) {
  Eigen::HouseholderQR<Matrix> qr(M);
  Matrix Q = qr.householderQ() * Matrix::Identity(M.rows(), M.cols());
  const Matrix R = qr.matrixQR().topRows(M.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

}  // namespace calgeo
