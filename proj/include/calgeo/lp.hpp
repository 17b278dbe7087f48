#pragma once

// Small dense solvers for the semi-infinite programs: a two-phase tableau
// simplex with bounded variables, and Lawson-Hanson nonnegative least squares.

#include "calgeo/exterior.hpp"

#include <limits>
#include <vector>

namespace calgeo {

/// minimize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper.
/// Bounds must be finite.
struct LinearProgram {
  Vector c;
  Matrix A_ub;
  Vector b_ub;
  Matrix A_eq;
  Vector b_eq;
  Vector lower, upper;
};

struct LpResult {
  enum class Status { optimal, infeasible, unbounded, iteration_limit };
  Status status = Status::infeasible;
  Vector x;
  double value = 0.0;
  int iterations = 0;
};

inline const char* to_string(LpResult::Status s) {
  switch (s) {
    case LpResult::Status::optimal: return "optimal";
    case LpResult::Status::infeasible: return "infeasible";
    case LpResult::Status::unbounded: return "unbounded";
    case LpResult::Status::iteration_limit: return "iteration_limit";
  }
  return "?";
}

namespace detail {

class Tableau {
 public:
  Tableau(Matrix T, std::vector<int> basis) : T_(std::move(T)), basis_(std::move(basis)) {}

  Matrix& T() { return T_; }
  std::vector<int>& basis() { return basis_; }
  [[nodiscard]] Eigen::Index rows() const { return T_.rows() - 1; }
  [[nodiscard]] Eigen::Index cols() const { return T_.cols() - 1; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    T_.row(r) /= T_(r, c);
    for (Eigen::Index i = 0; i < T_.rows(); ++i)
      if (i != r && T_(i, c) != 0.0) T_.row(i) -= T_(i, c) * T_.row(r);
    basis_[r] = static_cast<int>(c);
  }

  /// Minimizes the objective row; columns with allowed[c] == false never enter.
  LpResult::Status run(const std::vector<bool>& allowed, int max_iters, int& iters) {
    const double eps = 1e-11;
    // Bland's rule, once switched on, stays on: it cannot cycle, while
    // alternating with Dantzig pricing can.
    const double flat = 1e-12 * (1.0 + T_.col(cols()).head(rows()).cwiseAbs().maxCoeff());
    int degenerate = 0;
    bool bland = false;
    for (; iters < max_iters; ++iters) {
      bland = bland || degenerate > 50;
      Eigen::Index enter = -1;
      double best = -eps;
      for (Eigen::Index c = 0; c < cols(); ++c) {
        if (!allowed[c]) continue;
        const double rc = T_(rows(), c);
        if (rc < best) {
          enter = c;
          if (bland) break;
          best = rc;
        }
      }
      if (enter < 0) return LpResult::Status::optimal;
      Eigen::Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < rows(); ++r) {
        const double a = T_(r, enter);
        if (a <= 1e-12) continue;
        const double q = T_(r, cols()) / a;
        if (q < ratio - 1e-14 || (q <= ratio + 1e-14 && leave >= 0 && basis_[r] < basis_[leave])) {
          ratio = q;
          leave = r;
        }
      }
      if (leave < 0) return LpResult::Status::unbounded;
      degenerate = ratio < flat ? degenerate + 1 : 0;
      pivot(leave, enter);
    }
    return LpResult::Status::iteration_limit;
  }

 private:
  Matrix T_;
  std::vector<int> basis_;
};

}  // namespace detail

inline LpResult solve_lp(const LinearProgram& lp, int max_iters = 20000) {
  const Eigen::Index nv = lp.c.size();
  if (lp.lower.size() != nv || lp.upper.size() != nv) throw ShapeError("solve_lp: bounds size");
  const Eigen::Index mu = lp.A_ub.rows(), me = lp.A_eq.rows();
  if ((mu > 0 && lp.A_ub.cols() != nv) || (me > 0 && lp.A_eq.cols() != nv))
    throw ShapeError("solve_lp: constraint width");

  // Shift to y = x - lower >= 0; finite upper bounds become rows.
  const Eigen::Index m = mu + nv + me;
  Matrix A = Matrix::Zero(m, nv);
  Vector rhs(m);
  if (mu > 0) {
    A.topRows(mu) = lp.A_ub;
    rhs.head(mu) = lp.b_ub - lp.A_ub * lp.lower;
  }
  A.middleRows(mu, nv) = Matrix::Identity(nv, nv);
  rhs.segment(mu, nv) = lp.upper - lp.lower;
  if (me > 0) {
    A.bottomRows(me) = lp.A_eq;
    rhs.tail(me) = lp.b_eq - lp.A_eq * lp.lower;
  }
  const Eigen::Index ns = mu + nv;  // slacks for inequality rows
  std::vector<Eigen::Index> art_rows;
  for (Eigen::Index r = 0; r < m; ++r)
    if (r >= ns || rhs[r] < 0.0) art_rows.push_back(r);
  const Eigen::Index na = static_cast<Eigen::Index>(art_rows.size());
  const Eigen::Index N = nv + ns + na;

  Matrix T = Matrix::Zero(m + 1, N + 1);
  std::vector<int> basis(m, -1);
  for (Eigen::Index r = 0; r < m; ++r) {
    T.row(r).head(nv) = A.row(r);
    if (r < ns) T(r, nv + r) = 1.0;
    T(r, N) = rhs[r];
    if (rhs[r] < 0.0) T.row(r) *= -1.0;
  }
  for (Eigen::Index k = 0; k < na; ++k) {
    const Eigen::Index r = art_rows[k];
    T(r, nv + ns + k) = 1.0;
    basis[r] = static_cast<int>(nv + ns + k);
  }
  for (Eigen::Index r = 0; r < ns; ++r)
    if (basis[r] < 0) basis[r] = static_cast<int>(nv + r);

  LpResult out;
  detail::Tableau tab(std::move(T), std::move(basis));
  std::vector<bool> allowed(N, true);
  if (na > 0) {
    for (Eigen::Index k = 0; k < na; ++k) {
      tab.T()(m, nv + ns + k) = 1.0;
      tab.T().row(m) -= tab.T().row(art_rows[k]);
    }
    const auto st = tab.run(allowed, max_iters, out.iterations);
    if (st == LpResult::Status::iteration_limit) {
      out.status = st;
      return out;
    }
    const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
    if (-tab.T()(m, N) > 1e-9 * scale) {
      out.status = LpResult::Status::infeasible;
      return out;
    }
    // Drive remaining artificials out of the basis where possible.
    for (Eigen::Index r = 0; r < m; ++r) {
      if (tab.basis()[r] < nv + ns) continue;
      for (Eigen::Index c = 0; c < nv + ns; ++c)
        if (std::abs(tab.T()(r, c)) > 1e-9) {
          tab.pivot(r, c);
          break;
        }
    }
    for (Eigen::Index k = 0; k < na; ++k) allowed[nv + ns + k] = false;
  }
  // Phase 2 objective row: c - c_B B^{-1} A.
  tab.T().row(m).setZero();
  tab.T().row(m).head(nv) = lp.c.transpose();
  for (Eigen::Index r = 0; r < m; ++r) {
    const int b = tab.basis()[r];
    if (b < nv && lp.c[b] != 0.0) tab.T().row(m) -= lp.c[b] * tab.T().row(r);
  }
  out.status = tab.run(allowed, max_iters, out.iterations);
  Vector y = Vector::Zero(nv);
  for (Eigen::Index r = 0; r < m; ++r)
    if (tab.basis()[r] < nv) y[tab.basis()[r]] = tab.T()(r, N);
  out.x = y + lp.lower;
  out.value = lp.c.dot(out.x);
  return out;
}

struct NnlsResult {
  Vector x;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// min |A x - b| subject to x >= 0 (Lawson-Hanson active set).
inline NnlsResult nnls(const Matrix& A, const Vector& b, int max_iters = -1) {
  const Eigen::Index n = A.cols();
  if (A.rows() != b.size()) throw ShapeError("nnls: size mismatch");
  if (max_iters < 0) max_iters = static_cast<int>(3 * n + 30);
  NnlsResult out;
  Vector x = Vector::Zero(n);
  std::vector<bool> passive(n, false);
  const double tol = 1e-12 * (1.0 + A.cwiseAbs().maxCoeff()) * (1.0 + b.norm()) * static_cast<double>(std::max<Eigen::Index>(n, 1));
  auto solve_passive = [&](Vector& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[j]) idx.push_back(j);
    z = Vector::Zero(n);
    if (idx.empty()) return;
    Matrix Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
    const Vector zp = Ap.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zp[static_cast<Eigen::Index>(k)];
  };
  for (out.iterations = 0; out.iterations < max_iters; ++out.iterations) {
    const Vector w = A.transpose() * (b - A * x);
    Eigen::Index j_max = -1;
    double w_max = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[j] && w[j] > w_max) {
        w_max = w[j];
        j_max = j;
      }
    if (j_max < 0) {
      out.converged = true;
      break;
    }
    passive[j_max] = true;
    Vector z;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z[j] <= 0.0) feasible = false;
      if (feasible) break;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - z[j]));
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && x[j] <= 1e-15) {
          passive[j] = false;
          x[j] = 0.0;
        }
    }
    x = z;
    if (!passive[j_max]) break;  // degenerate: the entering column was dropped again
  }
  out.x = x.cwiseMax(0.0);
  out.residual = (A * out.x - b).norm();
  return out;
}

}  // namespace calgeo
