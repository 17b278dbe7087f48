#pragma once

// Pointwise phi-plurisubharmonicity: d^phi, the phi-Hessian, classification
// by extremal xi-traces over G(phi), the phi-Laplacian, ellipticity, jet
// calculus, non-convex witnesses, pluriharmonic quadratics and richness.

#include "calgeo/catalog.hpp"
#include "calgeo/json_form.hpp"
#include "calgeo/lp.hpp"
#include "calgeo/margin.hpp"
#include "calgeo/subspace.hpp"

#include <Eigen/Eigenvalues>

#include <optional>
#include <random>

namespace calgeo {

/// Second-order jet of a function at a point, in an orthonormal frame.
struct Jet2 {
  double value = 0.0;
  Vector grad;
  Matrix hess;

  Jet2() = default;
  Jet2(double v, Vector g, Matrix h) : value(v), grad(std::move(g)), hess(std::move(h)) {
    validate();
  }

  [[nodiscard]] int dim() const { return static_cast<int>(grad.size()); }

  void validate() const {
    if (hess.rows() != grad.size() || hess.cols() != grad.size())
      throw ShapeError("Jet2: gradient and hessian sizes differ");
    if ((hess - hess.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + hess.cwiseAbs().maxCoeff()))
      throw ShapeError("Jet2: hessian is not symmetric");
  }

  /// Jet of the quadratic x -> c + b.x + x.Q x / 2 at the point x.
  static Jet2 quadratic(const Matrix& Q, const Vector& b, double c, const Vector& x) {
    const Matrix S = 0.5 * (Q + Q.transpose());
    return {c + b.dot(x) + 0.5 * x.dot(S * x), b + S * x, S};
  }
};

inline Json to_json(const Jet2& j) {
  return {{"value", j.value}, {"grad", vector_to_json(j.grad)}, {"hess", matrix_to_json(j.hess)}};
}

inline Jet2 jet_from_json(const Json& j, const std::string& where = "jet") {
  const double v = detail::as_number(detail::require(j, "value", where), where + ".value");
  const Vector g = vector_from_json(detail::require(j, "grad", where), where + ".grad");
  const Matrix h = matrix_from_json(detail::require(j, "hess", where), where + ".hess",
                                    static_cast<Eigen::Index>(g.size()));
  if (h.rows() != g.size())
    throw SchemaError(where + ".hess: expected " + std::to_string(g.size()) + " rows");
  try {
    return {v, g, h};
  } catch (const ShapeError& e) {
    throw SchemaError(where + ".hess: " + e.what());
  }
}

namespace detail {

inline void check_jet(const Jet2& jet, const Calibration& cal, const char* who) {
  if (jet.dim() != cal.dim())
    throw ShapeError(std::string(who) + ": jet dimension " + std::to_string(jet.dim()) +
                     " differs from calibration dimension " + std::to_string(cal.dim()));
}

}  // namespace detail

/// d^phi f = grad f _| phi.
inline Form d_phi_point(const Jet2& jet, const Calibration& cal) {
  detail::check_jet(jet, cal, "d_phi_point");
  return interior(jet.grad, cal.form);
}

/// lambda_phi(Hess f), plus the caller's first-order correction for
/// non-parallel phi.
inline Form phi_hessian_point(const Jet2& jet, const Calibration& cal,
                              const std::optional<Form>& correction = std::nullopt) {
  detail::check_jet(jet, cal, "phi_hessian_point");
  Form h = lambda_phi(jet.hess, cal.form);
  if (correction) {
    if (correction->dim() != h.dim() || correction->degree() != h.degree())
      throw ShapeError("phi_hessian_point: correction must have degree " +
                       std::to_string(h.degree()));
    h += *correction;
  }
  return h;
}

/// Delta_phi f = <dd^phi f, phi>.
inline double phi_laplacian(const Jet2& jet, const Calibration& cal) {
  return inner(phi_hessian_point(jet, cal), cal.form);
}

enum class PshClass { strictly_psh, psh, pluriharmonic, not_psh, indeterminate };

inline const char* to_string(PshClass c) {
  switch (c) {
    case PshClass::strictly_psh: return "strictly_psh";
    case PshClass::psh: return "psh";
    case PshClass::pluriharmonic: return "pluriharmonic";
    case PshClass::not_psh: return "not_psh";
    case PshClass::indeterminate: return "indeterminate";
  }
  return "?";
}

/// Dead-band classification shared with the convexity module.
inline PshClass classify_margins(double lower, double upper, double tol) {
  if (lower < -tol) return PshClass::not_psh;
  if (lower > tol) return PshClass::strictly_psh;
  if (std::max(std::abs(lower), std::abs(upper)) <= tol) return PshClass::pluriharmonic;
  return PshClass::psh;
}

struct PshReport {
  double lower_margin = 0.0;
  double upper_margin = 0.0;
  PshClass cls = PshClass::indeterminate;
  std::optional<OrientedPlane> witness_plane;  // minimizer of the xi-trace
  double tolerance = 1e-6;
  double cross_check = 0.0;  // |form margin - trace margin|, worst side
  bool converged = false;
  std::uint64_t seed = 0;
  std::string note;
};

inline constexpr double kCrossCheckTol = 1e-6;

/// Classifies a jet by min/max over G(phi) of tr_xi Hess, computed twice:
/// through lambda_phi(Hess) and directly through <Hess, P_xi>.
inline PshReport psh_classify(const Jet2& jet, const Calibration& cal, const OptOptions& opt = {},
                              double tol = 1e-6) {
  detail::check_jet(jet, cal, "psh_classify");
  const Form H = lambda_phi(jet.hess, cal.form);
  const OptReport fmin = form_margin(H, cal, Sense::min, opt);
  const OptReport fmax = form_margin(H, cal, Sense::max, opt);
  const OptReport tmin = trace_margin(jet.hess, cal, Sense::min, opt);
  const OptReport tmax = trace_margin(jet.hess, cal, Sense::max, opt);
  PshReport rep;
  rep.tolerance = tol;
  rep.seed = opt.seed;
  rep.lower_margin = fmin.value;
  rep.upper_margin = fmax.value;
  if (!fmin.argplanes.empty()) rep.witness_plane = fmin.argplanes.front();
  rep.cross_check = std::max(std::abs(fmin.value - tmin.value), std::abs(fmax.value - tmax.value));
  rep.converged = fmin.converged && fmax.converged && tmin.converged && tmax.converged;
  if (!(fmin.feasible && fmax.feasible && tmin.feasible && tmax.feasible)) {
    rep.cls = PshClass::indeterminate;
    rep.note = "no calibrated plane found";
    return rep;
  }
  const double scale = 1.0 + jet.hess.cwiseAbs().maxCoeff();
  if (rep.cross_check > kCrossCheckTol * scale) {
    rep.cls = PshClass::indeterminate;
    rep.note = "form and trace margins disagree";
    return rep;
  }
  // One converged computation per side suffices once both agree.
  const bool lower_ok = fmin.converged || tmin.converged;
  const bool upper_ok = fmax.converged || tmax.converged;
  if (!lower_ok || !upper_ok) {
    rep.cls = PshClass::indeterminate;
    rep.note = "margin optimizer did not converge";
    return rep;
  }
  rep.converged = true;
  rep.cls = classify_margins(rep.lower_margin, rep.upper_margin, tol);
  return rep;
}

inline Json to_json(const PshReport& r) {
  Json j = {{"lower_margin", r.lower_margin}, {"upper_margin", r.upper_margin},
            {"class", to_string(r.cls)},     {"tolerance", r.tolerance},
            {"cross_check", r.cross_check},  {"converged", r.converged},
            {"seed", r.seed},                {"note", r.note}};
  j["witness_plane"] = r.witness_plane ? to_json(*r.witness_plane) : Json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Ellipticity

struct EllipticityReport {
  double min_symbol_norm = 0.0;    // min over unit zeta of |zeta _| phi|
  double reduced_min_norm = 0.0;   // min over unit u of max over found planes of |P_xi u|
  bool dd_elliptic = false;
  bool reduced_elliptic = false;
  int planes_used = 0;
  std::string note;
};

/// |zeta _| phi|^2 is the quadratic form zeta' G zeta with
/// G_ij = <e_i _| phi, e_j _| phi>, so its minimum is an eigenvalue.
inline EllipticityReport ellipticity_report(const Calibration& cal, const OptOptions& opt = {},
                                            double tol = 1e-8, int planes = 0) {
  const int n = cal.dim();
  Matrix G(n, n);
  std::vector<Form> c;
  for (int i = 0; i < n; ++i) c.push_back(interior(Vector(Vector::Unit(n, i)), cal.form));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = inner(c[i], c[j]);
  EllipticityReport rep;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  rep.min_symbol_norm = std::sqrt(std::max(0.0, es.eigenvalues()[0]));
  rep.dd_elliptic = rep.min_symbol_norm > tol;

  // Reduced operator: the union of the found planes must span R^n. With
  // S = sum P_xi, max_xi |P_xi u|^2 >= u'Su / count, so the smallest
  // eigenvalue of S decides it.
  if (planes <= 0) planes = std::max(8, 2 * n);
  const auto found = calibrated_planes(cal, planes, opt, true);
  rep.planes_used = static_cast<int>(found.size());
  Matrix S = Matrix::Zero(n, n);
  for (const auto& xi : found) S += xi.projector();
  Eigen::SelfAdjointEigenSolver<Matrix> ss(S);
  const Vector u = ss.eigenvectors().col(0);
  double worst = 0.0;
  for (const auto& xi : found) worst = std::max(worst, (xi.frame().transpose() * u).norm());
  rep.reduced_min_norm = worst;
  rep.reduced_elliptic = ss.eigenvalues()[0] > 1e-8 * static_cast<double>(found.size());
  rep.note = "reduced test uses " + std::to_string(found.size()) +
             " sampled planes; a missed plane can only cause a false negative";
  return rep;
}

// ---------------------------------------------------------------------------
// Jet calculus

/// psi, psi', psi'' evaluated at the inner value.
struct OuterJet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline Jet2 jet_compose(const OuterJet& psi, const Jet2& f) {
  if (!std::isfinite(psi.value) || !std::isfinite(psi.d1) || !std::isfinite(psi.d2))
    throw std::domain_error("jet_compose: non-finite outer jet");
  return {psi.value, psi.d1 * f.grad, psi.d1 * f.hess + psi.d2 * f.grad * f.grad.transpose()};
}

/// Jet of log(e^f + e^g), computed with a max shift.
inline Jet2 log_sum_exp(const Jet2& f, const Jet2& g) {
  if (f.dim() != g.dim()) throw ShapeError("log_sum_exp: dimension mismatch");
  const double m = std::max(f.value, g.value);
  const double ef = std::exp(f.value - m), eg = std::exp(g.value - m);
  const double a = ef / (ef + eg), b = eg / (ef + eg);
  const Vector d = f.grad - g.grad;
  Matrix H = a * f.hess + b * g.hess + a * b * d * d.transpose();
  H = (0.5 * (H + H.transpose())).eval();
  return {m + std::log(ef + eg), a * f.grad + b * g.grad, H};
}

inline Jet2 scale_jet(const Jet2& f, double s) { return {s * f.value, s * f.grad, s * f.hess}; }

/// (1/k) log(e^{k f} + e^{k g}): a smooth upper bound of max(f, g) within log(2)/k.
inline Jet2 smooth_max(const Jet2& f, const Jet2& g, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("smooth_max: k must be positive");
  return scale_jet(log_sum_exp(scale_jet(f, k), scale_jet(g, k)), 1.0 / k);
}

// ---------------------------------------------------------------------------
// Symmetric matrices as vectors

/// Frobenius-orthonormal basis of Sym^2(R^n): E_ii, then (E_ij + E_ji)/sqrt 2.
inline std::vector<Matrix> sym_basis(int n) {
  std::vector<Matrix> out;
  for (int i = 0; i < n; ++i) {
    Matrix E = Matrix::Zero(n, n);
    E(i, i) = 1.0;
    out.push_back(E);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Matrix E = Matrix::Zero(n, n);
      E(i, j) = E(j, i) = M_SQRT1_2;
      out.push_back(E);
    }
  return out;
}

inline Vector sym_coords(const Matrix& Q) {
  const auto B = sym_basis(static_cast<int>(Q.rows()));
  Vector v(static_cast<Eigen::Index>(B.size()));
  for (std::size_t k = 0; k < B.size(); ++k) v[static_cast<Eigen::Index>(k)] = frobenius(Q, B[k]);
  return v;
}

inline Matrix sym_from_coords(const Vector& v, int n) {
  const auto B = sym_basis(n);
  Matrix Q = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < B.size(); ++k) Q += v[static_cast<Eigen::Index>(k)] * B[k];
  return Q;
}

// ---------------------------------------------------------------------------
// Pluriharmonic quadratics

struct QuadraticSpace {
  int dimension = 0;
  std::vector<Matrix> basis;
  double residual = 0.0;
  double rank_gap = 0.0;
  bool rank_stable = true;
  int samples = 0;
};

inline int min_plh_samples(int n) { return 4 * n * (n + 1) / 2; }

/// Null space of Q -> (tr_xi Q) over sampled phi-planes.
inline QuadraticSpace pluriharmonic_quadratic_space(const Calibration& cal, int samples,
                                                    const OptOptions& opt = {}) {
  const int n = cal.dim();
  if (samples < min_plh_samples(n))
    throw std::invalid_argument("pluriharmonic_quadratic_space: need at least " +
                                std::to_string(min_plh_samples(n)) + " samples");
  const auto planes = sample_phi_planes(cal, samples, opt.seed, opt);
  const auto B = sym_basis(n);
  Matrix C(static_cast<Eigen::Index>(planes.size()), static_cast<Eigen::Index>(B.size()));
  for (std::size_t r = 0; r < planes.size(); ++r) {
    const Matrix P = planes[r].projector();
    for (std::size_t k = 0; k < B.size(); ++k)
      C(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = frobenius(P, B[k]);
  }
  const SubspaceBasis ns = null_space(C, 1e-8, 10.0);
  QuadraticSpace out;
  out.samples = static_cast<int>(planes.size());
  out.dimension = ns.dim();
  out.rank_gap = ns.rank_gap;
  out.rank_stable = ns.rank_stable;
  for (Eigen::Index k = 0; k < ns.basis.cols(); ++k) out.basis.push_back(sym_from_coords(ns.basis.col(k), n));
  // Residual on a fresh batch.
  const auto fresh = sample_phi_planes(cal, samples, opt.seed + 1000003, opt);
  for (const auto& Q : out.basis)
    for (const auto& xi : fresh) out.residual = std::max(out.residual, std::abs(frobenius(Q, xi.projector())));
  return out;
}

// ---------------------------------------------------------------------------
// Non-convex witnesses

struct WitnessResult {
  bool found = false;
  Matrix Q;
  double lambda_min = 0.0;
  double margin = 0.0;  // min over G(phi) of tr_xi Q
  int iterations = 0;
  int working_planes = 0;
  std::string note;
};

/// A symmetric Q with tr_xi Q >= 0 on G(phi) and a negative eigenvalue.
///
/// For each trial direction v: minimize v'Qv subject to tr_xi Q >= 0 on a
/// working set of planes and |Q_ij| <= 1. A deficit m < 0 of the true margin
/// is repaired exactly by Q += (|m|/p) I, which raises every xi-trace by |m|;
/// only when that spends the negative eigenvalue are the worst planes added
/// to the working set.
inline WitnessResult nonconvex_psh_witness(const Calibration& cal, const OptOptions& opt = {},
                                           double lambda_target = -0.1, int max_rounds = 40) {
  const int n = cal.dim(), p = cal.degree();
  const int nsym = n * (n + 1) / 2;
  std::vector<std::pair<int, int>> entries;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) entries.emplace_back(i, j);
  auto row_of = [&](const Matrix& P) {
    Vector r(nsym);
    for (int k = 0; k < nsym; ++k) {
      const auto [i, j] = entries[k];
      r[k] = i == j ? P(i, i) : 2.0 * P(i, j);
    }
    return r;
  };
  auto to_matrix = [&](const Vector& x) {
    Matrix Q(n, n);
    for (int k = 0; k < nsym; ++k) {
      const auto [i, j] = entries[k];
      Q(i, j) = Q(j, i) = x[k];
    }
    return Q;
  };

  std::vector<Vector> directions;
  for (int i = 0; i < n; ++i) directions.emplace_back(Vector::Unit(n, i));
  std::mt19937_64 rng(opt.seed + 17);
  for (int k = 0; k < 4; ++k) directions.push_back(random_unit_vector(n, rng));

  std::vector<Vector> work;
  for (const auto& xi : sample_phi_planes(cal, 4 * nsym, opt.seed, opt)) work.push_back(row_of(xi.projector()));

  WitnessResult out;
  out.note = "no direction produced a verified witness";
  for (const Vector& v : directions) {
    LinearProgram lp;
    lp.c = row_of(v * v.transpose());
    lp.lower = Vector::Constant(nsym, -1.0);
    lp.upper = Vector::Constant(nsym, 1.0);
    for (int round = 0; round < max_rounds; ++round) {
      ++out.iterations;
      lp.A_ub = Matrix(static_cast<Eigen::Index>(work.size()), nsym);
      for (std::size_t r = 0; r < work.size(); ++r) lp.A_ub.row(static_cast<Eigen::Index>(r)) = -work[r].transpose();
      lp.b_ub = Vector::Zero(static_cast<Eigen::Index>(work.size()));
      const LpResult sol = solve_lp(lp);
      if (sol.status != LpResult::Status::optimal || sol.value > lambda_target) break;
      Matrix Q = to_matrix(sol.x);
      const OptReport m = trace_margin(Q, cal, Sense::min, opt);
      if (!m.feasible) break;
      if (m.value < 0.0) Q += (-m.value / p + 1e-9) * Matrix::Identity(n, n);
      Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
      const double lmin = es.eigenvalues()[0];
      if (lmin > lambda_target) {  // the repair cost too much: cut and retry
        for (const auto& xi : m.argplanes) work.push_back(row_of(xi.projector()));
        continue;
      }
      OptOptions fresh = opt;
      fresh.seed = opt.seed + 1000033;
      const OptReport check = trace_margin(Q, cal, Sense::min, fresh);
      if (check.value >= -1e-8) {
        out.found = true;
        out.Q = Q;
        out.lambda_min = lmin;
        out.margin = check.value;
        out.working_planes = static_cast<int>(work.size());
        out.note = "verified by an independent margin run";
        return out;
      }
      for (const auto& xi : check.argplanes) work.push_back(row_of(xi.projector()));
    }
  }
  out.working_planes = static_cast<int>(work.size());
  return out;
}

// ---------------------------------------------------------------------------
// Richness

struct RichnessResult {
  bool found = false;
  double best = 0.0;                  // max of phi(l ^ eta) over (p-1)-planes eta in P^perp
  std::optional<OrientedPlane> xi0;   // the (p-1)-plane
  std::optional<OrientedPlane> plane; // l ^ xi0 (with the sign of l that works)
  int sign = 1;
};

/// Looks for a (p-1)-plane xi0 in P^perp with +-l ^ xi0 in G(phi).
inline RichnessResult richness_check(const Calibration& cal, const Matrix& P, const Vector& ell,
                                     const OptOptions& opt = {}) {
  const int n = cal.dim(), p = cal.degree();
  if (P.rows() != n || P.cols() != 2) throw ShapeError("richness_check: P must be n x 2");
  if (n < p + 1) throw ShapeError("richness_check: need n >= p + 1");
  const Matrix Pq = orthonormalize(P);
  const Vector l = ell.normalized();
  if ((Pq * (Pq.transpose() * l) - l).norm() > 1e-8) throw ShapeError("richness_check: l is not in P");
  RichnessResult out;
  const Matrix C = orthogonal_complement(Pq);
  if (p == 1) {
    out.best = std::abs(pair(cal.form, Multivector::from_vector(l)));
    out.sign = pair(cal.form, Multivector::from_vector(l)) >= 0 ? 1 : -1;
    out.found = out.best >= 1.0 - cal.tol_plane;
    if (out.found) out.plane = OrientedPlane(Matrix(out.sign * l));
    return out;
  }
  const Form psi = pullback(interior(l, cal.form), C);
  for (int s : {1, -1}) {
    const OptReport r = comass(s * psi, opt);
    if (r.value > out.best || !out.xi0) {
      out.best = r.value;
      out.sign = s;
      out.xi0 = OrientedPlane(orthonormalize(C * r.argplanes.front().frame()), 1e-8);
    }
    if (out.best >= 1.0 - cal.tol_plane) break;
  }
  out.found = out.best >= 1.0 - cal.tol_plane;
  Matrix F(n, p);
  F.col(0) = out.sign * l;
  F.rightCols(p - 1) = out.xi0->frame();
  out.plane = OrientedPlane(F, 1e-8);
  return out;
}

}  // namespace calgeo
