#pragma once

// The cone layer: Lambda(phi) = span G(phi), the cone on G(phi) with
// self-verifying membership certificates, hyperplane boundary tests,
// normality, and the pluriharmonic-mod-d decomposition.

#include "calgeo/catalog.hpp"
#include "calgeo/lp.hpp"
#include "calgeo/margin.hpp"
#include "calgeo/pshcheck.hpp"
#include "calgeo/subspace.hpp"

#include <optional>

namespace calgeo {

inline std::string lambda_ambient(int n, int p) {
  return "Lambda^" + std::to_string(p) + " R^" + std::to_string(n);
}

inline int min_span_samples(int n, int p) { return static_cast<int>(4 * binomial(n, p)); }

/// Numerical span of the Pluecker vectors of sampled phi-planes.
inline SubspaceBasis lambda_span(const Calibration& cal, int samples, const OptOptions& opt = {}) {
  const int n = cal.dim(), p = cal.degree();
  if (samples < min_span_samples(n, p))
    throw std::invalid_argument("lambda_span: need at least " +
                                std::to_string(min_span_samples(n, p)) + " samples");
  const auto planes = sample_phi_planes(cal, samples, opt.seed, opt);
  Matrix M(binomial(n, p), static_cast<Eigen::Index>(planes.size()));
  for (std::size_t k = 0; k < planes.size(); ++k)
    M.col(static_cast<Eigen::Index>(k)) = planes[k].multivector().coeffs();
  SubspaceBasis s = column_span(M, 1e-8, 10.0);
  s.ambient = lambda_ambient(n, p);
  return s;
}

inline SubspaceBasis lambda_span(const Calibration& cal, const OptOptions& opt = {}) {
  return lambda_span(cal, min_span_samples(cal.dim(), cal.degree()), opt);
}

/// Orthogonal projection of a p-form onto Lambda(phi) (coordinates are
/// orthonormal, so forms and p-vectors share the basis).
inline Form project_to_lambda(const Form& a, const SubspaceBasis& span) {
  if (span.ambient_dim() != a.size()) throw ShapeError("project_to_lambda: size mismatch");
  return Form(a.dim(), a.degree(), span.basis * (span.basis.transpose() * a.coeffs()));
}

inline Form project_to_lambda(const Form& a, const Calibration& cal, const OptOptions& opt = {}) {
  return project_to_lambda(a, lambda_span(cal, opt));
}

/// Reduced phi-Hessian: lambda_phi(Hess f) projected onto Lambda(phi).
inline Form reduced_phi_hessian(const Jet2& jet, const Calibration& cal, const SubspaceBasis& span) {
  return project_to_lambda(phi_hessian_point(jet, cal), span);
}

// ---------------------------------------------------------------------------
// Essential subspace

struct EssentialSubspace {
  SubspaceBasis W;
  bool verified = false;  // phi restricted to W still has comass one
  int planes_used = 0;
};

/// W = span of all vectors of the found phi-planes.
inline EssentialSubspace essential_subspace(const Calibration& cal, const OptOptions& opt = {},
                                            int planes = 0) {
  const int n = cal.dim(), p = cal.degree();
  if (planes <= 0) planes = std::max(16, 4 * n);
  const auto found = calibrated_planes(cal, planes, opt, true);
  Matrix cols(n, static_cast<Eigen::Index>(found.size()) * p);
  for (std::size_t k = 0; k < found.size(); ++k)
    cols.middleCols(static_cast<Eigen::Index>(k) * p, p) = found[k].frame();
  EssentialSubspace out;
  out.planes_used = static_cast<int>(found.size());
  out.W = column_span(cols, 1e-8, 10.0);
  out.W.ambient = "R^" + std::to_string(n);
  if (out.W.dim() >= p) {
    const RestrictedCalibration rc = restrict_calibration(cal, out.W.basis, opt);
    out.verified = rc.feasible;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cone membership

enum class Verdict { inside, outside, boundary, undecided };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::inside: return "inside";
    case Verdict::outside: return "outside";
    case Verdict::boundary: return "boundary";
    case Verdict::undecided: return "undecided";
  }
  return "?";
}

struct ConeCertificate {
  Verdict verdict = Verdict::undecided;
  std::vector<std::pair<OrientedPlane, double>> weights;
  std::optional<Form> separator;
  double margin = 0.0;    // inside: residual; outside: pair(separator, target)
  double residual = 0.0;  // last NNLS residual
  int iters = 0;
  std::uint64_t seed = 0;
  int working_set = 0;
  std::string note;
};

struct ConeOptions {
  OptOptions opt;
  int max_iters = 60;
  double inside_tol = 5e-7;    // NNLS residual accepted as exact reproduction
  double separator_tol = 1e-8; // separator margin over G(phi) must be >= -this
  double pairing_tol = 1e-6;   // separator must pair <= -this with the target
  int initial_planes = 0;      // 0: 2 C(n,p)
};

inline ConeOptions default_cone_options() {
  ConeOptions c;
  c.opt.restarts = 12;
  return c;
}

/// Cutting-plane decision of target in the cone on G(phi).
///
/// NNLS against a working set of planes gives w >= 0 and r = t - Xw with
/// X'r <= 0 and <r, t> = |r|^2. The form alpha = -r is nonnegative on the
/// working set and pairs to -|r|^2 with t. If its true minimum m over G(phi)
/// is negative, alpha - m phi is nonnegative on G(phi) (phi = 1 there) and is
/// a separator whenever it still pairs negatively; otherwise the minimizing
/// planes join the working set.
inline ConeCertificate positive_cone_membership(const Multivector& target, const Calibration& cal,
                                                const ConeOptions& co = default_cone_options()) {
  const int n = cal.dim(), p = cal.degree();
  if (target.dim() != n || target.degree() != p)
    throw ShapeError("positive_cone_membership: target must be a " + std::to_string(p) + "-vector on R^" +
                     std::to_string(n));
  ConeCertificate cert;
  cert.seed = co.opt.seed;
  const Vector t = target.coeffs();
  const double tn = std::max(t.norm(), 1e-300);
  std::vector<OrientedPlane> work;
  const int init = co.initial_planes > 0 ? co.initial_planes : static_cast<int>(2 * binomial(n, p));
  for (auto& xi : sample_phi_planes(cal, init, co.opt.seed, co.opt))
    if (evaluate(cal.form, xi) >= 1.0 - cal.tol_plane) work.push_back(std::move(xi));
  // The phi-planes best aligned with the target; exact when it is one.
  for (const auto& xi : form_margin(flat(target), cal, Sense::max, co.opt).argplanes)
    if (evaluate(cal.form, xi) >= 1.0 - cal.tol_plane) work.push_back(xi);

  for (cert.iters = 1; cert.iters <= co.max_iters; ++cert.iters) {
    Matrix X(t.size(), static_cast<Eigen::Index>(work.size()));
    for (std::size_t k = 0; k < work.size(); ++k) X.col(static_cast<Eigen::Index>(k)) = work[k].multivector().coeffs();
    const NnlsResult sol = work.empty() ? NnlsResult{Vector(0), t.norm(), 0, true} : nnls(X, t);
    cert.residual = sol.residual;
    cert.working_set = static_cast<int>(work.size());
    if (sol.residual <= co.inside_tol * (1.0 + tn)) {
      cert.verdict = Verdict::inside;
      cert.margin = sol.residual;
      for (Eigen::Index k = 0; k < sol.x.size(); ++k)
        if (sol.x[k] > 1e-14) cert.weights.emplace_back(work[static_cast<std::size_t>(k)], sol.x[k]);
      cert.note = "nonnegative combination of phi-planes";
      return cert;
    }
    const Vector r = work.empty() ? t : Vector(t - X * sol.x);
    const Form alpha(n, p, Vector(-r / r.norm()));
    OptOptions mo = co.opt;
    mo.seed = co.opt.seed + static_cast<std::uint64_t>(cert.iters);
    const OptReport m = form_margin(alpha, cal, Sense::min, mo);
    if (!m.feasible) {
      cert.note = "margin oracle found no phi-plane";
      break;
    }
    const double scale = alpha.norm();
    Form sep = alpha;
    if (m.value < -co.separator_tol * scale) sep = alpha - m.value * cal.form;
    const double pairing = pair(sep, target);
    if (pairing <= -co.pairing_tol * tn) {
      const Form unit_sep = (1.0 / sep.norm()) * sep;
      const OptReport check = form_margin(unit_sep, cal, Sense::min, mo);
      if (check.value >= -co.separator_tol) {
        cert.verdict = Verdict::outside;
        cert.separator = unit_sep;
        cert.margin = pair(unit_sep, target);
        cert.note = "separator is nonnegative on G(phi) and negative on the target";
        return cert;
      }
    }
    const std::size_t before = work.size();
    for (const auto& xi : m.argplanes)
      if (evaluate(cal.form, xi) >= 1.0 - cal.tol_plane) work.push_back(xi);
    if (work.size() == before) {
      cert.note = "cutting plane added nothing";
      break;
    }
  }
  cert.iters = std::min(cert.iters, co.max_iters);
  cert.verdict = Verdict::undecided;
  if (cert.note.empty()) cert.note = "iteration budget exhausted";
  return cert;
}

struct CertificateCheck {
  bool ok = false;
  double residual = 0.0;          // inside
  double separator_margin = 0.0;  // outside
  double pairing = 0.0;           // outside
  std::string reason;
};

/// Independent re-verification of a certificate (fresh margin seed).
inline CertificateCheck verify_certificate(const ConeCertificate& cert, const Multivector& target,
                                           const Calibration& cal, std::uint64_t seed = 424242) {
  CertificateCheck c;
  const double tn = target.norm();
  if (cert.verdict == Verdict::inside) {
    Vector sum = Vector::Zero(target.size());
    for (const auto& [xi, w] : cert.weights) {
      if (w < 0.0) {
        c.reason = "negative weight";
        return c;
      }
      if (evaluate(cal.form, xi) < 1.0 - cal.tol_plane) {
        c.reason = "weight on a plane that is not calibrated";
        return c;
      }
      sum += w * xi.multivector().coeffs();
    }
    c.residual = (sum - target.coeffs()).norm();
    c.ok = c.residual <= 1e-6 * (1.0 + tn);
    if (!c.ok) c.reason = "weights do not reproduce the target";
    return c;
  }
  if (cert.verdict == Verdict::outside) {
    if (!cert.separator) {
      c.reason = "missing separator";
      return c;
    }
    OptOptions o;
    o.seed = seed;
    o.restarts = 16;
    c.separator_margin = form_margin(*cert.separator, cal, Sense::min, o).value;
    c.pairing = pair(*cert.separator, target);
    c.ok = c.separator_margin >= -1e-8 && c.pairing <= -1e-6 * tn;
    if (!c.ok) c.reason = "separator fails the margin or pairing test";
    return c;
  }
  c.reason = "no certificate to check";
  return c;
}

inline Json to_json(const ConeCertificate& c) {
  Json w = Json::array();
  for (const auto& [xi, wt] : c.weights) w.push_back({{"plane", to_json(xi)}, {"w", wt}});
  return {{"verdict", to_string(c.verdict)},
          {"weights", w},
          {"separator", c.separator ? to_json(*c.separator) : Json(nullptr)},
          {"margin", c.margin},
          {"residual", c.residual},
          {"iters", c.iters},
          {"working_set", c.working_set},
          {"seed", c.seed},
          {"note", c.note}};
}

// ---------------------------------------------------------------------------
// Hyperplane boundary test

struct BoundaryTest {
  bool on_boundary = false;
  double margin = 0.0;  // min over G(phi) of phi_e
  std::optional<OrientedPlane> witness;
};

/// phi_e = phi - e ^ (e _| phi). On G(phi), phi_e(xi) = 1 - |P_xi e|^2 when
/// e is a unit vector, so its minimum vanishes iff e lies in some phi-plane.
inline BoundaryTest hyperplane_boundary_test(const Calibration& cal, const Vector& e,
                                             const OptOptions& opt = {}, double tol = 1e-6) {
  if (e.size() != cal.dim()) throw ShapeError("hyperplane_boundary_test: wrong dimension");
  if (std::abs(e.norm() - 1.0) > 1e-9) throw std::invalid_argument("hyperplane_boundary_test: |e| must be 1");
  const Form phi_e = cal.form - wedge_vector(e, interior(e, cal.form));
  const OptReport m = form_margin(phi_e, cal, Sense::min, opt);
  BoundaryTest out;
  out.margin = m.value;
  out.on_boundary = m.value <= tol;
  if (!m.argplanes.empty()) out.witness = m.argplanes.front();
  return out;
}

// ---------------------------------------------------------------------------
// Normality

struct NormalityTrial {
  Vector normal;       // W = normal^perp
  int dim_restricted;  // dim Lambda(phi|W)^perp
  int dim_pulled;      // dim of Lambda(phi)^perp restricted to W
  double angle = 0.0;
  bool feasible = true;  // phi|W has comass one
};

struct NormalityReport {
  bool normal = true;
  double worst_angle = 0.0;
  std::vector<NormalityTrial> trials;
};

/// Compares Lambda(phi|W)^perp with Lambda(phi)^perp|W for hyperplanes W:
/// the n coordinate hyperplanes plus `trials` random ones.
inline NormalityReport normality_check(const Calibration& cal, int trials, const OptOptions& opt = {},
                                       double angle_tol = 1e-4) {
  const int n = cal.dim(), p = cal.degree();
  if (p > n - 1) throw ShapeError("normality_check: degree must be below the dimension");
  const SubspaceBasis span = lambda_span(cal, opt);
  const Matrix perp = orthogonal_complement(span.basis);
  std::vector<Vector> normals;
  for (int i = 0; i < n; ++i) normals.emplace_back(Vector::Unit(n, i));
  std::mt19937_64 rng(opt.seed + 99);
  for (int k = 0; k < trials; ++k) normals.push_back(random_unit_vector(n, rng));

  NormalityReport rep;
  const auto N = static_cast<Eigen::Index>(binomial(n - 1, p));
  for (const Vector& e : normals) {
    NormalityTrial tr;
    tr.normal = e;
    const Matrix B = orthogonal_complement(Matrix(e));
    // Lambda(phi)^perp pulled back to W.
    Matrix pulled(N, perp.cols());
    for (Eigen::Index k = 0; k < perp.cols(); ++k)
      pulled.col(k) = pullback(Form(n, p, perp.col(k)), B).coeffs();
    const SubspaceBasis S2 = column_span(pulled, 1e-8, 10.0);
    // Lambda(phi|W)^perp.
    Matrix S1;
    const RestrictedCalibration rc = restrict_calibration(cal, B, opt);
    tr.feasible = rc.feasible;
    if (!rc.feasible) {
      S1 = Matrix::Identity(N, N);
    } else {
      const auto planes = sample_phi_planes(rc.cal, static_cast<int>(4 * N), opt.seed, opt);
      Matrix M(N, static_cast<Eigen::Index>(planes.size()));
      Eigen::Index used = 0;
      for (const auto& xi : planes)
        if (evaluate(rc.cal.form, xi) >= 1.0 - cal.tol_plane) M.col(used++) = xi.multivector().coeffs();
      const SubspaceBasis lw = column_span(M.leftCols(used), 1e-8, 10.0);
      S1 = orthogonal_complement(lw.basis);
    }
    tr.dim_restricted = static_cast<int>(S1.cols());
    tr.dim_pulled = S2.dim();
    tr.angle = tr.dim_restricted == tr.dim_pulled ? largest_principal_angle(S1, S2.basis) : M_PI / 2;
    rep.worst_angle = std::max(rep.worst_angle, tr.angle);
    rep.trials.push_back(tr);
  }
  rep.normal = rep.worst_angle <= angle_tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Pluriharmonic mod d

struct ModDResult {
  double residual = 0.0;  // part of dd^phi f on Lambda(phi) not of the form df ^ alpha
  Form alpha;             // degree p - 1
  double sigma_norm = 0.0;
  bool degenerate_gradient = false;
};

/// Least squares for dd^phi f = df ^ alpha + sigma with sigma in Lambda(phi)^perp.
inline ModDResult pluriharmonic_mod_d_test(const Jet2& jet, const Calibration& cal,
                                           const SubspaceBasis& span) {
  const int n = cal.dim(), p = cal.degree();
  const Form h = phi_hessian_point(jet, cal);
  const Matrix& L = span.basis;
  ModDResult out;
  out.alpha = Form(n, p - 1);
  out.degenerate_gradient = jet.grad.norm() < 1e-12;
  Vector fitted = Vector::Zero(h.size());
  if (!out.degenerate_gradient && p >= 1) {
    const Form df = Form::from_vector(jet.grad);
    const auto m = static_cast<Eigen::Index>(binomial(n, p - 1));
    Matrix D(h.size(), m);
    for (Eigen::Index k = 0; k < m; ++k) {
      Vector ek = Vector::Zero(m);
      ek[k] = 1.0;
      D.col(k) = wedge(df, Form(n, p - 1, ek)).coeffs();
    }
    const Matrix PD = L * (L.transpose() * D);
    const Vector Ph = L * (L.transpose() * h.coeffs());
    const Vector a = PD.completeOrthogonalDecomposition().solve(Ph);
    out.alpha = Form(n, p - 1, a);
    fitted = D * a;
  }
  const Vector rest = h.coeffs() - fitted;
  const Vector on_lambda = L * (L.transpose() * rest);
  out.residual = on_lambda.norm();
  out.sigma_norm = (rest - on_lambda).norm();
  return out;
}

inline ModDResult pluriharmonic_mod_d_test(const Jet2& jet, const Calibration& cal,
                                           const OptOptions& opt = {}) {
  return pluriharmonic_mod_d_test(jet, cal, lambda_span(cal, opt));
}

}  // namespace calgeo
