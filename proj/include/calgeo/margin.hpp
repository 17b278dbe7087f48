#pragma once

// Extrema of plane functionals over G(phi), optionally restricted to planes
// inside a subspace W.
//
// Phase 1 (penalty): from random planes, ascend s*target - mu (1 - phi)^2 for
// mu = 10, 1e2, 1e3, 1e4 with warm starts, then re-project by maximizing phi.
// Orbit-sampled phi-planes are added as further starts.
// Phase 2 (polish): projected gradient ascent along G(phi). At a phi-plane the
// Hessian of phi in cousin coordinates is negative semidefinite and its kernel
// is the tangent space of G(phi) (all catalog calibrations are Morse-Bott
// here). Each step moves along the projected gradient and re-projects.

#include "calgeo/catalog.hpp"
#include "calgeo/grassmann.hpp"

#include <Eigen/Eigenvalues>

#include <optional>

namespace calgeo {

enum class Sense { min, max };

inline const char* to_string(Sense s) { return s == Sense::min ? "min" : "max"; }

/// Orthonormal basis of the tangent space of G(phi) at F (cousin coordinates).
inline Matrix gphi_tangent(const Form& phi, const Matrix& F, const Matrix& N,
                           double rel_tol = 1e-6) {
  const FormJet pj = form_jet(phi, F, N, true);
  if (pj.hess.size() == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(pj.hess);
  const Vector lam = es.eigenvalues();
  const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    if (lam[k] > -rel_tol * scale) keep.push_back(k);
  Matrix Z(lam.size(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    Z.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]);
  return Z;
}

/// Projected gradient ascent of `target` along G(phi), starting from (a
/// projection of) F.
inline LocalResult ascend_on_gphi(const Objective& target, const Form& phi, Matrix F,
                                  const LocalOptions& opt = {}) {
  LocalResult res;
  F = polish_onto(phi, std::move(F));
  double step = 1.0;
  for (int it = 0; it < opt.max_iters; ++it) {
    res.iters = it;
    const Matrix N = complement_frame(F);
    const ObjectiveJet tj = evaluate(target, F, N, false);
    const Matrix Z = gphi_tangent(phi, F, N);
    const Vector gt = Z.cols() > 0 ? Vector(Z.transpose() * tj.grad) : Vector(0);
    res.frame = F;
    res.value = tj.value;
    res.grad_norm = gt.norm();
    if (res.grad_norm <= opt.stat_tol) {
      res.converged = true;
      return res;
    }
    const Vector d = Z * gt;
    const double g2 = gt.squaredNorm();
    double t = step, gain = 0.0;
    bool moved = false;
    for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
      Matrix Fn = polish_onto(phi, retract(F, N, t * d));
      const double fn = objective_value(target, Fn);
      if (fn >= tj.value + 0.1 * t * g2) {
        gain = fn - tj.value;
        F = std::move(Fn);
        moved = true;
        break;
      }
    }
    if (!moved) break;
    const double denom = 2.0 * (g2 * t - gain);
    const double model = denom > 0.0 ? g2 * t * t / denom : 4.0 * t;
    step = std::min(std::clamp(model, 0.5 * t, 4.0 * t), 1e3);
  }
  const Matrix N = complement_frame(F);
  const ObjectiveJet tj = evaluate(target, F, N, false);
  const Matrix Z = gphi_tangent(phi, F, N);
  res.frame = F;
  res.value = tj.value;
  res.grad_norm = Z.cols() > 0 ? (Z.transpose() * tj.grad).norm() : 0.0;
  res.converged = res.grad_norm <= opt.stat_tol;
  return res;
}

namespace detail {

/// s * target - mu (1 - phi)^2, with phi appended as the last linear piece.
inline Objective penalized(const Objective& target, const Form& phi, double mu) {
  Objective o;
  o.n = target.n;
  o.p = target.p;
  o.pieces = target.pieces;
  o.pieces.push_back(phi);
  o.traces = target.traces;
  const std::size_t nf = target.pieces.size(), m = target.size();
  // Value layout: [target forms..., phi, target traces...].
  auto split = [nf, m](const Vector& v) {
    Vector tv(m);
    tv.head(nf) = v.head(nf);
    tv.tail(m - nf) = v.tail(m - nf);
    return std::pair<Vector, double>(tv, v[nf]);
  };
  auto tc = target.combine;
  auto tg = target.combine_grad;
  auto th = target.combine_hess;
  o.combine = [=](const Vector& v) {
    auto [tv, ph] = split(v);
    return tc(tv) - mu * (1.0 - ph) * (1.0 - ph);
  };
  o.combine_grad = [=](const Vector& v) {
    auto [tv, ph] = split(v);
    const Vector w = tg(tv);
    Vector g(m + 1);
    g.head(nf) = w.head(nf);
    g[nf] = 2.0 * mu * (1.0 - ph);
    g.tail(m - nf) = w.tail(m - nf);
    return g;
  };
  o.combine_hess = [=](const Vector& v) {
    Matrix H = Matrix::Zero(m + 1, m + 1);
    if (th) {
      auto [tv, ph] = split(v);
      (void)ph;
      const Matrix T = th(tv);
      std::vector<Eigen::Index> map(m);
      for (std::size_t k = 0; k < m; ++k) map[k] = k < nf ? k : k + 1;
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) H(map[a], map[b]) = T(a, b);
    }
    H(nf, nf) = -2.0 * mu;
    return H;
  };
  return o;
}

inline Objective scaled(const Objective& obj, double s) {
  Objective o = obj;
  auto c = obj.combine;
  auto g = obj.combine_grad;
  auto h = obj.combine_hess;
  o.combine = [c, s](const Vector& v) { return s * c(v); };
  o.combine_grad = [g, s](const Vector& v) { return Vector(s * g(v)); };
  if (h) o.combine_hess = [h, s](const Vector& v) { return Matrix(s * h(v)); };
  return o;
}

inline OptReport infeasible_report(const OptOptions& opt, const std::string& why) {
  OptReport rep;
  rep.feasible = false;
  rep.converged = true;
  rep.seed = opt.seed;
  rep.stat_tol = opt.stat_tol;
  rep.tol_plane = opt.tol_plane;
  rep.method = "infeasible: " + why;
  return rep;
}

}  // namespace detail

/// Tolerance for the projected gradient of a G(phi)-constrained problem. It is
/// looser than the unconstrained one because each iterate is re-projected.
inline constexpr double kConstrainedStatTol = 1e-7;

/// Extremum of an arbitrary plane objective over G(phi).
inline OptReport objective_margin(const Objective& target, const Calibration& cal, Sense sense,
                                  const OptOptions& opt = {}) {
  if (target.n != cal.dim() || target.p != cal.degree())
    throw ShapeError("margin: objective and calibration shapes differ");
  const double s = sense == Sense::max ? 1.0 : -1.0;
  const Objective up = detail::scaled(target, s);
  const int n = cal.dim(), p = cal.degree();
  const int n_random = std::max(1, opt.restarts / 2);
  const int n_orbit = std::max(1, opt.restarts - n_random);

  // Starts: orbit-sampled phi-planes and penalty-phase results.
  std::vector<Matrix> starts;
  for (auto& xi : sample_phi_planes(cal, n_orbit, opt.seed, opt)) starts.push_back(xi.frame());
  std::vector<Matrix> penalty(n_random);
  LocalOptions pen;
  pen.stat_tol = 1e-10;
  pen.max_iters = 400;
  parallel_for(n_random, opt.threads, [&](int r) {
    Matrix F = random_plane(n, p, opt.seed + 7919 + static_cast<std::uint64_t>(r)).frame();
    for (double mu : {10.0, 1e2, 1e3, 1e4}) F = ascend(detail::penalized(up, cal.form, mu), F, pen).frame;
    penalty[r] = polish_onto(cal.form, std::move(F));
  });
  for (auto& F : penalty)
    if (pair(cal.form, wedge_columns(F)) >= 1.0 - cal.tol_plane) starts.push_back(std::move(F));

  OptReport rep;
  rep.seed = opt.seed;
  rep.stat_tol = kConstrainedStatTol;
  rep.tol_plane = opt.tol_plane;
  if (starts.empty()) return detail::infeasible_report(opt, "no calibrated plane found");

  std::vector<LocalResult> results(starts.size());
  LocalOptions lo;
  lo.stat_tol = kConstrainedStatTol;
  lo.max_iters = 300;
  parallel_for(static_cast<int>(starts.size()), opt.threads, [&](int r) {
    results[r] = ascend_on_gphi(up, cal.form, starts[r], lo);
  });
  // Drop anything that drifted off G(phi).
  std::vector<LocalResult> ok;
  for (auto& r : results)
    if (pair(cal.form, wedge_columns(r.frame)) >= 1.0 - cal.tol_plane) ok.push_back(std::move(r));
  if (ok.empty()) return detail::infeasible_report(opt, "projection onto G(phi) failed");
  detail::sort_results(ok);
  rep = summarize(ok, 1e-7 * (1.0 + std::abs(ok.front().value)), opt, s);
  rep.stat_tol = kConstrainedStatTol;
  rep.restarts = static_cast<int>(results.size());
  rep.method = std::string(to_string(sense)) +
               " over G(phi): orbit samples + penalty mu in {1e1,1e2,1e3,1e4}, "
               "re-projection, projected-gradient polish";
  return rep;
}

/// The calibration pulled back to the subspace spanned by the orthonormal
/// columns of W, with its own seed planes. Infeasible when comass < 1 - tol.
struct RestrictedCalibration {
  Calibration cal;
  Matrix basis;
  bool feasible = false;
  double comass = 0.0;
};

inline RestrictedCalibration restrict_calibration(const Calibration& cal, const Matrix& W,
                                                  const OptOptions& opt = {}) {
  if (W.rows() != cal.dim()) throw ShapeError("restrict_to: basis has wrong ambient dimension");
  const Matrix B = orthonormalize(W);
  RestrictedCalibration out;
  out.basis = B;
  out.cal.name = cal.name + "|W";
  out.cal.tol_plane = cal.tol_plane;
  if (B.cols() < cal.degree()) return out;
  out.cal.form = pullback(cal.form, B);
  // Seeds: calibrated planes of phi that already lie in W, else maximizers.
  for (const auto& F : cal.seeds) {
    const Matrix C = B.transpose() * F;
    if ((B * C - F).norm() < 1e-9) out.cal.seeds.push_back(orthonormalize(C));
  }
  const OptReport rep = comass(out.cal.form, opt);
  out.comass = rep.value;
  out.feasible = rep.value >= 1.0 - cal.tol_plane;
  for (const auto& xi : rep.argplanes)
    if (evaluate(out.cal.form, xi) >= 1.0 - cal.tol_plane) out.cal.seeds.push_back(xi.frame());
  out.cal.comass_certified = out.feasible;
  return out;
}

inline OrientedPlane push_plane(const Matrix& B, const OrientedPlane& xi) {
  return OrientedPlane(orthonormalize(B * xi.frame()), 1e-8);
}

inline OptReport restricted_objective_margin(const Objective& target, const Calibration& cal,
                                             Sense sense, const Matrix& W,
                                             const OptOptions& opt = {}) {
  const RestrictedCalibration rc = restrict_calibration(cal, W, opt);
  if (!rc.feasible)
    return detail::infeasible_report(
        opt, "no phi-plane inside the subspace (restricted comass " + std::to_string(rc.comass) + ")");
  Objective t = target;
  t.n = static_cast<int>(rc.basis.cols());
  for (auto& a : t.pieces) a = pullback(a, rc.basis);
  for (auto& A : t.traces) A = rc.basis.transpose() * A * rc.basis;
  OptReport rep = objective_margin(t, rc.cal, sense, opt);
  for (auto& xi : rep.argplanes) xi = push_plane(rc.basis, xi);
  rep.method += " (restricted to a subspace)";
  return rep;
}

/// Extremum of pair(a, xi) over xi in G(phi), or over phi-planes inside the
/// column span of *restrict_to.
inline OptReport form_margin(const Form& a, const Calibration& cal, Sense sense,
                             const OptOptions& opt = {},
                             const std::optional<Matrix>& restrict_to = std::nullopt) {
  if (a.dim() != cal.dim() || a.degree() != cal.degree())
    throw ShapeError("form_margin: degree or dimension mismatch");
  const Objective t = Objective::linear(a);
  if (restrict_to) return restricted_objective_margin(t, cal, sense, *restrict_to, opt);
  return objective_margin(t, cal, sense, opt);
}

/// Extremum of tr(A P_xi) over G(phi) (or phi-planes inside restrict_to).
inline OptReport trace_margin(const Matrix& A, const Calibration& cal, Sense sense,
                              const OptOptions& opt = {},
                              const std::optional<Matrix>& restrict_to = std::nullopt) {
  if (A.rows() != cal.dim() || A.cols() != cal.dim())
    throw ShapeError("trace_margin: matrix has wrong size");
  const Objective t = Objective::trace(A, cal.degree());
  if (restrict_to) return restricted_objective_margin(t, cal, sense, *restrict_to, opt);
  return objective_margin(t, cal, sense, opt);
}

}  // namespace calgeo
