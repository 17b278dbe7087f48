#pragma once

// Boundary phi-convexity of hypersurfaces {rho = 0} (domain {rho < 0},
// outward normal grad rho / |grad rho|), -log(delta) estimates, defining
// function stabilization, phi-free subspaces, distance-squared jets, the
// torus example and quadratic phi-psh hulls of finite sets.

#include "calgeo/catalog.hpp"
#include "calgeo/cones.hpp"
#include "calgeo/lp.hpp"
#include "calgeo/margin.hpp"
#include "calgeo/pshcheck.hpp"
#include "calgeo/subspace.hpp"

#include <optional>
#include <variant>

namespace calgeo {

struct SurfaceJet {
  Jet2 rho;

  explicit SurfaceJet(Jet2 j) : rho(std::move(j)) {
    if (rho.grad.norm() < 1e-8) throw std::domain_error("SurfaceJet: gradient of rho vanishes");
  }

  [[nodiscard]] int dim() const { return rho.dim(); }
  [[nodiscard]] double grad_norm() const { return rho.grad.norm(); }
  [[nodiscard]] Vector normal() const { return rho.grad / rho.grad.norm(); }
  /// Orthonormal basis of ker d rho.
  [[nodiscard]] Matrix tangent_basis() const { return orthogonal_complement(Matrix(normal())); }
};

struct SecondFundamental {
  Matrix tangent;  // n x (n-1), orthonormal
  Matrix II;       // (n-1) x (n-1), in the tangent basis
  [[nodiscard]] Vector principal_curvatures() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(II);
    return es.eigenvalues();
  }
};

/// II = -Hess rho |_T / |grad rho|.
inline SecondFundamental second_fundamental(const SurfaceJet& s) {
  SecondFundamental out;
  out.tangent = s.tangent_basis();
  out.II = -(out.tangent.transpose() * s.rho.hess * out.tangent) / s.grad_norm();
  out.II = (0.5 * (out.II + out.II.transpose())).eval();
  return out;
}

enum class ConvexClass { strictly_convex, convex, flat, not_convex, vacuous, indeterminate };

inline const char* to_string(ConvexClass c) {
  switch (c) {
    case ConvexClass::strictly_convex: return "strictly_convex";
    case ConvexClass::convex: return "convex";
    case ConvexClass::flat: return "flat";
    case ConvexClass::not_convex: return "not_convex";
    case ConvexClass::vacuous: return "vacuous";
    case ConvexClass::indeterminate: return "indeterminate";
  }
  return "?";
}

struct BoundaryReport {
  double tangential_margin = 0.0;  // min over tangential phi-planes of dd^phi rho
  double upper_margin = 0.0;       // max over the same set
  ConvexClass cls = ConvexClass::vacuous;
  Matrix II;
  std::optional<OrientedPlane> witness_plane;
  double cross_check = 0.0;  // |margin + |grad rho| max tr_xi II|
  bool converged = false;
};

/// Extrema of lambda_phi(Hess rho) over phi-planes tangent to the level set.
inline BoundaryReport boundary_margin(const SurfaceJet& s, const Calibration& cal,
                                      const OptOptions& opt = {}, double tol = 1e-6) {
  if (s.dim() != cal.dim()) throw ShapeError("boundary_margin: dimension mismatch");
  const SecondFundamental sf = second_fundamental(s);
  BoundaryReport rep;
  rep.II = sf.II;
  const Form H = lambda_phi(s.rho.hess, cal.form);
  const OptReport lo = form_margin(H, cal, Sense::min, opt, sf.tangent);
  if (!lo.feasible) {
    rep.cls = ConvexClass::vacuous;
    rep.converged = true;
    return rep;
  }
  const OptReport hi = form_margin(H, cal, Sense::max, opt, sf.tangent);
  const Matrix IIamb = sf.tangent * sf.II * sf.tangent.transpose();
  const OptReport iimax = trace_margin(IIamb, cal, Sense::max, opt, sf.tangent);
  rep.tangential_margin = lo.value;
  rep.upper_margin = hi.value;
  if (!lo.argplanes.empty()) rep.witness_plane = lo.argplanes.front();
  rep.cross_check = std::abs(lo.value + s.grad_norm() * iimax.value);
  rep.converged = (lo.converged || iimax.converged) && hi.converged;
  const double scale = 1.0 + s.rho.hess.cwiseAbs().maxCoeff();
  if (rep.cross_check > kCrossCheckTol * scale) {
    rep.cls = ConvexClass::indeterminate;
    return rep;
  }
  if (lo.value < -tol) rep.cls = ConvexClass::not_convex;
  else if (lo.value > tol) rep.cls = ConvexClass::strictly_convex;
  else if (std::abs(hi.value) <= tol) rep.cls = ConvexClass::flat;
  else rep.cls = ConvexClass::convex;
  return rep;
}

inline Json to_json(const BoundaryReport& r) {
  return {{"tangential_margin", r.tangential_margin},
          {"upper_margin", r.upper_margin},
          {"class", to_string(r.cls)},
          {"II", matrix_to_json(r.II)},
          {"witness_plane", r.witness_plane ? to_json(*r.witness_plane) : Json(nullptr)},
          {"cross_check", r.cross_check},
          {"converged", r.converged}};
}

/// min over G(phi) of (1/delta) dd^phi rho(xi) + (|grad rho|^2/delta^2) cos^2(theta),
/// cos^2(theta) = |P_xi n|^2. Both terms are xi-traces of one matrix.
inline OptReport log_delta_margin(const SurfaceJet& s, const Calibration& cal, double delta,
                                  const OptOptions& opt = {}) {
  if (!(delta > 0.0)) throw std::invalid_argument("log_delta_margin: delta must be positive");
  const Vector nrm = s.normal();
  const double g2 = s.rho.grad.squaredNorm();
  const Matrix M = s.rho.hess / delta + (g2 / (delta * delta)) * nrm * nrm.transpose();
  return trace_margin(M, cal, Sense::min, opt);
}

class NotStrictlyConvex : public std::runtime_error {
 public:
  NotStrictlyConvex(const std::string& msg, std::optional<OrientedPlane> w)
      : std::runtime_error(msg), witness(std::move(w)) {}
  std::optional<OrientedPlane> witness;
};

struct Stabilization {
  double A = 0.0;
  double margin_at_A = 0.0;
  int evaluations = 0;
};

/// Smallest A >= 0 (to 1e-3 relative) with
/// min over G(phi) of tr_xi((1 + 2 A rho) Hess rho + 2 A grad rho grad rho') >= eps0.
inline Stabilization stabilize_defining(const SurfaceJet& s, const Calibration& cal,
                                        const OptOptions& opt = {}, double eps0 = 1e-6) {
  const BoundaryReport b = boundary_margin(s, cal, opt);
  if (b.cls != ConvexClass::strictly_convex)
    throw NotStrictlyConvex("stabilize_defining: boundary is " + std::string(to_string(b.cls)) +
                                " (tangential margin " + std::to_string(b.tangential_margin) +
                                "), not strictly convex",
                            b.witness_plane);
  Stabilization out;
  const Matrix& H = s.rho.hess;
  const Matrix gg = s.rho.grad * s.rho.grad.transpose();
  auto margin = [&](double A) {
    ++out.evaluations;
    const Matrix M = (1.0 + 2.0 * A * s.rho.value) * H + 2.0 * A * gg;
    return trace_margin(M, cal, Sense::min, opt).value;
  };
  double m0 = margin(0.0);
  if (m0 >= eps0) {
    out.margin_at_A = m0;
    return out;
  }
  double lo = 0.0, hi = 1.0, mhi = margin(hi);
  while (mhi < eps0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw std::runtime_error("stabilize_defining: no finite A found");
    mhi = margin(hi);
  }
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    const double mm = margin(mid);
    if (mm >= eps0) {
      hi = mid;
      mhi = mm;
    } else {
      lo = mid;
    }
  }
  out.A = hi;
  out.margin_at_A = mhi;
  return out;
}

// ---------------------------------------------------------------------------
// Free and isotropic subspaces

struct FreeReport {
  bool free = false;
  double sup_phi = 0.0;  // max of phi over p-planes in T
  bool isotropic = false;
  double normal_margin = 0.0;  // min over G(phi) of <P_N, P_xi>
  bool consistent = true;      // free agrees with normal_margin > tol
};

/// T: orthonormal (or spanning) basis of a subspace, n x k.
inline FreeReport free_test(const Matrix& T, const Calibration& cal, const OptOptions& opt = {},
                            double tol = 1e-6) {
  const int n = cal.dim(), p = cal.degree();
  if (T.rows() != n) throw ShapeError("free_test: subspace basis has wrong ambient dimension");
  FreeReport out;
  const Matrix B = T.cols() > 0 ? orthonormalize(T) : Matrix(n, 0);
  if (B.cols() >= p) {
    const Form restricted = pullback(cal.form, B);
    out.sup_phi = comass(restricted, opt).value;
    const double inf_phi = -comass(-1.0 * restricted, opt).value;
    out.isotropic = std::max(std::abs(out.sup_phi), std::abs(inf_phi)) <= tol;
  } else {
    out.sup_phi = 0.0;
    out.isotropic = true;
  }
  out.free = out.sup_phi <= 1.0 - cal.tol_plane;
  const Matrix N = orthogonal_complement(B);
  out.normal_margin = trace_margin(N * N.transpose(), cal, Sense::min, opt).value;
  out.consistent = out.free == (out.normal_margin > tol);
  return out;
}

// ---------------------------------------------------------------------------
// Distance-squared jets

struct AffineSurface {
  Vector point;
  Matrix basis;  // n x k, spanning the tangent directions
};
struct SphereSurface {
  Vector center;
  double r = 1.0;
};
/// Tube of radius r around the circle of radius R centered at the origin in
/// the plane orthogonal to coordinate axis `axis` (default y).
struct TorusSurface {
  double R = 2.0;
  double r = 1.0;
  int axis = 1;
};
/// Graph x_n = q(x') = x'.Q x' / 2 + b.x' over R^{n-1}.
struct GraphSurface {
  Matrix Q;
  Vector b;
};
using Surface = std::variant<AffineSurface, SphereSurface, TorusSurface, GraphSurface>;

class OutsideTube : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline Jet2 dist_sq_affine(const AffineSurface& s, const Vector& x) {
  const Matrix B = s.basis.cols() > 0 ? orthonormalize(s.basis) : Matrix(x.size(), 0);
  const Matrix PN = Matrix::Identity(x.size(), x.size()) - B * B.transpose();
  const Vector v = PN * (x - s.point);
  return {0.5 * v.squaredNorm(), v, PN};
}

inline Jet2 dist_sq_sphere(const SphereSurface& s, const Vector& x) {
  const Vector w = x - s.center;
  const double rho = w.norm();
  const double d = rho - s.r;
  // Smooth everywhere except at the center, where every point is nearest.
  if (!(rho > 1e-12 * s.r)) throw OutsideTube("dist_sq_jet: point at the center of the sphere");
  const Vector u = w / rho;
  const Matrix uu = u * u.transpose();
  const Matrix I = Matrix::Identity(x.size(), x.size());
  return {0.5 * d * d, d * u, uu + (d / rho) * (I - uu)};
}

inline Jet2 dist_sq_torus(const TorusSurface& t, const Vector& x) {
  if (x.size() != 3) throw ShapeError("dist_sq_jet: the torus lives in R^3");
  if (!(0.0 < t.r && t.r < t.R)) throw std::invalid_argument("dist_sq_jet: need 0 < r < R");
  // f_core = ((rc - R)^2 + h^2)/2 with rc the distance to the axis and h the
  // axial coordinate; then s = sqrt(2 f_core) and f = (s - r)^2 / 2.
  const Vector a = Vector::Unit(3, t.axis);
  const double h = x.dot(a);
  const Vector radial = x - h * a;
  const double rc = radial.norm();
  if (rc < 1e-12) throw OutsideTube("dist_sq_jet: point on the torus axis");
  const Vector e = radial / rc;
  const Matrix Pperp = Matrix::Identity(3, 3) - a * a.transpose();
  const Vector g_core = (rc - t.R) * e + h * a;
  const Matrix H_core = e * e.transpose() + ((rc - t.R) / rc) * (Pperp - e * e.transpose()) + a * a.transpose();
  const double s = g_core.norm();
  const double d = s - t.r;
  // Nearest points are unique off the axis and off the core circle.
  if (!(s > 1e-12 * t.r)) throw OutsideTube("dist_sq_jet: point on the core circle of the torus");
  const Vector gs = g_core / s;
  const Matrix Hs = (H_core - gs * gs.transpose()) / s;
  Matrix H = H_core - t.r * Hs;
  H = (0.5 * (H + H.transpose())).eval();
  return {0.5 * d * d, d * gs, H};
}

/// Nearest point on the graph by Newton's method on u -> |x - (u, q(u))|^2 / 2.
inline Vector graph_foot(const GraphSurface& g, const Vector& x) {
  const Eigen::Index m = g.Q.rows();
  const Vector xp = x.head(m);
  const double xn = x[m];
  Vector u = xp;
  for (int it = 0; it < 100; ++it) {
    const Vector dq = g.Q * u + g.b;
    const double q = 0.5 * u.dot(g.Q * u) + g.b.dot(u);
    const Vector grad = (u - xp) + (q - xn) * dq;
    const Matrix H = Matrix::Identity(m, m) + dq * dq.transpose() + (q - xn) * g.Q;
    const Vector step = H.ldlt().solve(grad);
    u -= step;
    if (step.norm() < 1e-15 * (1.0 + u.norm())) break;
  }
  Vector foot(m + 1);
  foot.head(m) = u;
  foot[m] = 0.5 * u.dot(g.Q * u) + g.b.dot(u);
  return foot;
}

inline Jet2 dist_sq_graph(const GraphSurface& g, const Vector& x) {
  const Eigen::Index n = x.size();
  if (g.Q.rows() != n - 1 || g.Q.cols() != n - 1 || g.b.size() != n - 1)
    throw ShapeError("dist_sq_jet: graph data must live on R^{n-1}");
  const Matrix Qs = 0.5 * (g.Q + g.Q.transpose());
  const GraphSurface gs{Qs, g.b};
  // Curvatures are bounded by |Q|; stay well inside the reach.
  const double kmax = Qs.cwiseAbs().rowwise().sum().maxCoeff();
  auto grad = [&](const Vector& y) { return Vector(y - graph_foot(gs, y)); };
  const Vector g0 = grad(x);
  if (kmax > 0.0 && g0.norm() * kmax >= 0.5)
    throw OutsideTube("dist_sq_jet: point outside the tubular neighborhood of the graph");
  const double h = 1e-4;
  Matrix H(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vector e = h * Vector::Unit(n, k);
    H.col(k) = (grad(x + e) - grad(x - e)) / (2.0 * h);
  }
  H = (0.5 * (H + H.transpose())).eval();
  return {0.5 * g0.squaredNorm(), g0, H};
}

}  // namespace detail

/// Jet of f_M = dist(., M)^2 / 2: analytic for affine, sphere and torus;
/// the graph Hessian uses central differences (step 1e-4) of the exact gradient.
inline Jet2 dist_sq_jet(const Surface& surface, const Vector& x) {
  return std::visit(
      [&](const auto& s) -> Jet2 {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, AffineSurface>) return detail::dist_sq_affine(s, x);
        else if constexpr (std::is_same_v<S, SphereSurface>) return detail::dist_sq_sphere(s, x);
        else if constexpr (std::is_same_v<S, TorusSurface>) return detail::dist_sq_torus(s, x);
        else return detail::dist_sq_graph(s, x);
      },
      surface);
}

// ---------------------------------------------------------------------------
// Torus scan

/// A point of the torus built by rotating the disk of radius r centered at
/// (0, 0, R) in the (y, z)-plane about the y-axis.
inline Vector torus_point(double R, double r, double u, double v) {
  const Vector radial = (Vector(3) << std::sin(u), 0.0, std::cos(u)).finished();
  return R * radial + r * (std::cos(v) * radial + std::sin(v) * Vector::Unit(3, 1));
}

/// Defining function rho = dist to the core circle - r; its jet at x.
inline Jet2 torus_rho_jet(double R, double r, const Vector& x) {
  const Vector a = Vector::Unit(3, 1);
  const double h = x.dot(a);
  const Vector radial = x - h * a;
  const double rc = radial.norm();
  const Vector e = radial / rc;
  const Matrix Pperp = Matrix::Identity(3, 3) - a * a.transpose();
  const Vector g_core = (rc - R) * e + h * a;
  const Matrix H_core = e * e.transpose() + ((rc - R) / rc) * (Pperp - e * e.transpose()) + a * a.transpose();
  const double s = g_core.norm();
  const Vector gs = g_core / s;
  Matrix Hs = (H_core - gs * gs.transpose()) / s;
  Hs = (0.5 * (Hs + Hs.transpose())).eval();
  return {s - r, gs, Hs};
}

struct TorusSample {
  double u, v;
  Vector x;
  bool vacuous;
  double margin;
};

struct TorusScan {
  double min_margin = std::numeric_limits<double>::infinity();
  bool convex = true;
  int non_vacuous = 0;
  std::optional<TorusSample> witness;
  std::vector<TorusSample> samples;
};

inline Calibration torus_calibration() { return make_coordinate(3, {0, 1}); }

/// phi = dx ^ dy. The grid includes u, v in {0, pi/2, pi, 3pi/2} when the
/// resolution is a multiple of 4; those are the only points with a
/// tangential phi-plane.
inline TorusScan torus_scan(double R, double r, int resolution, const OptOptions& opt = {},
                            double tol = 1e-6) {
  if (!(0.0 < r && r < R)) throw std::invalid_argument("torus_scan: need 0 < r < R");
  if (resolution < 4 || resolution % 4 != 0)
    throw std::invalid_argument("torus_scan: resolution must be a positive multiple of 4");
  const Calibration cal = torus_calibration();
  TorusScan out;
  out.samples.resize(static_cast<std::size_t>(resolution) * resolution);
  OptOptions o = opt;
  o.threads = 1;
  parallel_for(resolution * resolution, opt.threads, [&](int k) {
    const double u = 2.0 * M_PI * (k / resolution) / resolution;
    const double v = 2.0 * M_PI * (k % resolution) / resolution;
    const Vector x = torus_point(R, r, u, v);
    const BoundaryReport b = boundary_margin(SurfaceJet(torus_rho_jet(R, r, x)), cal, o, tol);
    out.samples[k] = {u, v, x, b.cls == ConvexClass::vacuous, b.tangential_margin};
  });
  for (const auto& s : out.samples) {
    if (s.vacuous) continue;
    ++out.non_vacuous;
    if (s.margin < out.min_margin) {
      out.min_margin = s.margin;
      out.witness = s;
    }
  }
  out.convex = out.min_margin >= -tol;
  if (out.non_vacuous == 0) out.min_margin = 0.0;
  return out;
}

/// Bisection in r at fixed R for the convex / not-convex transition.
inline double torus_threshold(double R, int resolution, double r_lo, double r_hi, double width,
                              const OptOptions& opt = {}) {
  if (!torus_scan(R, r_lo, resolution, opt).convex || torus_scan(R, r_hi, resolution, opt).convex)
    throw std::invalid_argument("torus_threshold: bracket does not straddle the transition");
  while (r_hi - r_lo > width) {
    const double mid = 0.5 * (r_lo + r_hi);
    (torus_scan(R, mid, resolution, opt).convex ? r_lo : r_hi) = mid;
  }
  return 0.5 * (r_lo + r_hi);
}

// ---------------------------------------------------------------------------
// Quadratic hulls

struct HullProblem {
  std::vector<Vector> points;
  Vector query;
  Calibration cal;
};

struct QuadraticSeparator {
  Matrix Q;  // f(x) = x'Qx + b.x + c
  Vector b;
  double c = 0.0;
  [[nodiscard]] double operator()(const Vector& x) const { return x.dot(Q * x) + b.dot(x) + c; }
};

struct HullReport {
  Verdict verdict = Verdict::undecided;
  double value = 0.0;  // optimal f(x0) over the normalized separator set
  std::optional<QuadraticSeparator> separator;
  double cone_margin = 0.0;  // min over G(phi) of tr_xi Q for the separator
  int iterations = 0;
  int working_planes = 0;
  std::string label = "quadratic hull (contains the psh hull)";
};

/// Maximizes f(x0) over f = q + affine with f <= 0 on K, |Q_ij| <= 1, |b_i| <= 1
/// and tr_xi Q >= 0 for all xi in G(phi) (cutting planes). Inside iff the
/// optimum is <= tol.
inline HullReport quad_hull_membership(const HullProblem& hp, const OptOptions& opt = {},
                                       double tol = 1e-6, int max_iters = 60) {
  const int n = hp.cal.dim(), p = hp.cal.degree();
  if (hp.points.empty()) throw std::invalid_argument("quad_hull_membership: K is empty");
  if (hp.query.size() != n) throw ShapeError("quad_hull_membership: query has wrong dimension");
  for (const auto& k : hp.points) {
    if (k.size() != n) throw ShapeError("quad_hull_membership: point has wrong dimension");
    if (!k.allFinite()) throw std::invalid_argument("quad_hull_membership: non-finite point");
  }
  const int nsym = n * (n + 1) / 2, nv = nsym + n + 1;
  std::vector<std::pair<int, int>> entries;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) entries.emplace_back(i, j);
  auto quad_row = [&](const Matrix& S) {  // coefficients of Q in <S, Q>
    Vector r(nsym);
    for (int k = 0; k < nsym; ++k) {
      const auto [i, j] = entries[k];
      r[k] = i == j ? S(i, i) : 2.0 * S(i, j);
    }
    return r;
  };
  auto to_Q = [&](const Vector& x) {
    Matrix Q(n, n);
    for (int k = 0; k < nsym; ++k) {
      const auto [i, j] = entries[k];
      Q(i, j) = Q(j, i) = x[k];
    }
    return Q;
  };

  // Work in y = x - x0, so f(x0) = c.
  std::vector<Vector> ys;
  double ymax = 0.0;
  for (const auto& k : hp.points) {
    ys.push_back(k - hp.query);
    ymax = std::max(ymax, ys.back().norm());
  }
  LinearProgram lp;
  lp.c = Vector::Zero(nv);
  lp.c[nv - 1] = -1.0;
  lp.lower = Vector::Constant(nv, -1.0);
  lp.upper = Vector::Constant(nv, 1.0);
  const double cbound = 2.0 * (n * ymax * ymax + std::sqrt(n) * ymax) + 1.0;
  lp.lower[nv - 1] = -cbound;
  lp.upper[nv - 1] = cbound;

  std::vector<Vector> cone_rows;
  for (const auto& xi : sample_phi_planes(hp.cal, 2 * nsym, opt.seed, opt))
    cone_rows.push_back(quad_row(xi.projector()));

  HullReport rep;
  for (rep.iterations = 1; rep.iterations <= max_iters; ++rep.iterations) {
    const auto m = static_cast<Eigen::Index>(ys.size() + cone_rows.size());
    lp.A_ub = Matrix::Zero(m, nv);
    lp.b_ub = Vector::Zero(m);
    Eigen::Index r = 0;
    for (const auto& y : ys) {
      lp.A_ub.row(r).head(nsym) = quad_row(y * y.transpose());
      lp.A_ub.row(r).segment(nsym, n) = y;
      lp.A_ub(r, nv - 1) = 1.0;
      ++r;
    }
    for (const auto& cr : cone_rows) lp.A_ub.row(r++).head(nsym) = -cr;
    const LpResult sol = solve_lp(lp);
    rep.working_planes = static_cast<int>(cone_rows.size());
    if (sol.status != LpResult::Status::optimal) break;
    rep.value = -sol.value;
    if (rep.value <= tol) {  // a relaxation already certifies it
      rep.verdict = Verdict::inside;
      return rep;
    }
    Matrix Q = to_Q(sol.x.head(nsym));
    const Vector b = sol.x.segment(nsym, n);
    double c = sol.x[nv - 1];
    const OptReport mr = trace_margin(Q, hp.cal, Sense::min, opt);
    if (mr.value < -1e-6) {
      for (const auto& xi : mr.argplanes) cone_rows.push_back(quad_row(xi.projector()));
      continue;
    }
    // Exact repair of a tiny cone deficit: Q += eps I raises every xi-trace
    // by p eps; lowering c by eps max|y|^2 keeps f <= 0 on K.
    if (mr.value < 0.0) {
      const double eps = -mr.value / p + 1e-12;
      Q += eps * Matrix::Identity(n, n);
      c -= eps * ymax * ymax;
    }
    const OptReport check = trace_margin(Q, hp.cal, Sense::min, opt);
    double worst_k = -std::numeric_limits<double>::infinity();
    for (const auto& y : ys) worst_k = std::max(worst_k, y.dot(Q * y) + b.dot(y) + c);
    if (check.value >= -1e-8 && worst_k <= 1e-9 && c > tol) {
      QuadraticSeparator sep;
      sep.Q = Q;
      sep.b = b - 2.0 * Q * hp.query;
      sep.c = hp.query.dot(Q * hp.query) - b.dot(hp.query) + c;
      rep.separator = sep;
      rep.cone_margin = check.value;
      rep.value = c;
      rep.verdict = Verdict::outside;
      return rep;
    }
    for (const auto& xi : check.argplanes) cone_rows.push_back(quad_row(xi.projector()));
  }
  rep.verdict = Verdict::undecided;
  return rep;
}

}  // namespace calgeo
