#include "calgeo/convexity.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace calgeo;

namespace {

OptOptions quick(std::uint64_t seed = 0) {
  OptOptions o;
  o.seed = seed;
  o.restarts = 16;
  o.threads = 1;
  return o;
}

// Central differences of the exact distance, for checking analytic jets.
void expect_matches_distance(const Surface& s, const std::function<double(const Vector&)>& dist, const Vector& x,
                             double tol) {
  const Jet2 j = dist_sq_jet(s, x);
  auto f = [&](const Vector& y) { return 0.5 * dist(y) * dist(y); };
  const auto n = x.size();
  const double h = 1e-4;
  EXPECT_NEAR(j.value, f(x), 1e-12);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector ei = h * Vector::Unit(n, i);
    EXPECT_NEAR(j.grad[i], (f(x + ei) - f(x - ei)) / (2 * h), tol);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Vector ek = h * Vector::Unit(n, k);
      const double fd = (f(x + ei + ek) - f(x + ei - ek) - f(x - ei + ek) + f(x - ei - ek)) / (4 * h * h);
      EXPECT_NEAR(j.hess(i, k), fd, tol);
    }
  }
}

}  // namespace

TEST(DistanceJets, AffineSphereTorusMatchDifferences) {
  std::mt19937_64 rng(1);
  const Vector c = oracle::random_matrix(3, 1, rng).col(0);
  const SphereSurface sph{c, 1.3};
  for (int t = 0; t < 5; ++t) {
    const Vector x = c + (0.5 + 0.3 * t) * oracle::random_matrix(3, 1, rng).col(0).normalized();
    expect_matches_distance(sph, [&](const Vector& y) { return std::abs((y - c).norm() - 1.3); }, x, 1e-6);
  }
  const TorusSurface tor{2.0, 0.7, 1};
  auto torus_dist = [](const Vector& y) {
    const double h = y[1];
    const double rc = std::hypot(y[0], y[2]);
    return std::abs(std::hypot(rc - 2.0, h) - 0.7);
  };
  for (int t = 0; t < 5; ++t) {
    const Vector x = torus_point(2.0, 0.7 + 0.1 * (t - 2), 0.4 + t, 1.1 * t);
    expect_matches_distance(tor, torus_dist, x, 1e-6);
  }
  const Matrix B = oracle::random_matrix(4, 2, rng);
  const Vector p = oracle::random_matrix(4, 1, rng).col(0);
  const Matrix Bq = orthonormalize(B);
  const AffineSurface aff{p, B};
  const Vector x = oracle::random_matrix(4, 1, rng).col(0);
  expect_matches_distance(aff, [&](const Vector& y) { return ((y - p) - Bq * (Bq.transpose() * (y - p))).norm(); },
                          x, 1e-6);
}

TEST(DistanceJets, GraphHessianOnSurfaceIsNormalProjection) {
  Matrix Q(2, 2);
  Q << 0.4, 0.1, 0.1, -0.2;
  const GraphSurface g{Q, Vector::Zero(2)};
  const Jet2 j = dist_sq_jet(g, Vector::Zero(3));
  Matrix P = Matrix::Zero(3, 3);
  P(2, 2) = 1.0;
  EXPECT_NEAR(j.value, 0.0, 1e-15);
  EXPECT_LT((j.hess - P).cwiseAbs().maxCoeff(), 1e-6);
  // Slightly above the vertex: the foot stays at the origin and the
  // Hessian picks up -d Q / (1 - d Q) in the tangent directions.
  const double d = 0.1;
  const Jet2 up = dist_sq_jet(g, Vector(Vector::Unit(3, 2) * d));
  EXPECT_NEAR(up.value, 0.5 * d * d, 1e-12);
  const Matrix T = up.hess.topLeftCorner(2, 2);
  const Matrix expect = (-d * Q) * (Matrix::Identity(2, 2) - d * Q).inverse();
  EXPECT_LT((T - expect).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(DistanceJets, DomainErrors) {
  EXPECT_THROW(dist_sq_jet(SphereSurface{Vector::Zero(3), 1.0}, Vector::Zero(3)), OutsideTube);
  EXPECT_THROW(dist_sq_jet(TorusSurface{2.0, 1.0, 1}, Vector::Zero(3)), OutsideTube);
  EXPECT_THROW(dist_sq_jet(TorusSurface{2.0, 1.0, 1}, Vector(Vector::Unit(3, 0) * 2.0)), OutsideTube);
  EXPECT_THROW(dist_sq_jet(TorusSurface{2.0, 1.0, 1}, Vector::Zero(4)), ShapeError);
  EXPECT_THROW(dist_sq_jet(GraphSurface{Matrix::Identity(2, 2), Vector::Zero(2)}, Vector(Vector::Unit(3, 2) * 5.0)),
               OutsideTube);
}

TEST(BoundaryMargin, SphereMarginIsDegreeOverRadius) {
  for (const Calibration& c : {make_kahler(2), make_special_lagrangian(3), make_associative()}) {
    const int n = c.dim();
    const double r = 1.5;
    const Vector x = r * Vector::Unit(n, 0);
    const Jet2 j(0.0, x / r, Matrix::Identity(n, n) / r);
    const BoundaryReport b = boundary_margin(SurfaceJet(j), c, quick());
    EXPECT_EQ(b.cls, ConvexClass::strictly_convex);
    EXPECT_NEAR(b.tangential_margin, c.degree() / r, 1e-8) << c.name;
    EXPECT_LE(b.cross_check, kCrossCheckTol);
  }
}

TEST(BoundaryMargin, HyperplaneIsFlat) {
  const Calibration c = make_special_lagrangian(3);
  const Jet2 j(0.0, Vector::Unit(6, 5), Matrix::Zero(6, 6));
  EXPECT_EQ(boundary_margin(SurfaceJet(j), c, quick()).cls, ConvexClass::flat);
}

TEST(BoundaryMargin, VacuousWhenNoTangentPlane) {
  // dx ^ dy on R^3 and the plane z = x: its tangent space contains no xy-plane.
  const Calibration c = make_coordinate(3, {0, 1});
  Vector g(3);
  g << -1, 0, 1;
  const Jet2 j(0.0, g, Matrix::Zero(3, 3));
  EXPECT_EQ(boundary_margin(SurfaceJet(j), c, quick()).cls, ConvexClass::vacuous);
  EXPECT_THROW(SurfaceJet(Jet2(0.0, Vector::Zero(3), Matrix::Zero(3, 3))), std::domain_error);
}

TEST(BoundaryMargin, LogDeltaAndStabilization) {
  const Calibration c = make_kahler(2);
  const double r = 2.0;
  const Vector x = r * Vector::Unit(4, 0);
  // rho = |x| - r has Hessian (I - uu')/r.
  const Matrix H = (Matrix::Identity(4, 4) - Vector::Unit(4, 0) * Vector::Unit(4, 0).transpose()) / r;
  const SurfaceJet s(Jet2(0.0, x / r, H));
  const Stabilization st = stabilize_defining(s, c, quick());
  EXPECT_GE(st.A, 0.0);
  EXPECT_GE(st.margin_at_A, 1e-6 - 1e-12);
  // Both terms of the -log(delta - rho) margin are nonnegative here, and the
  // tangential one is 1/(r delta) on tangent complex lines.
  const OptReport m = log_delta_margin(s, c, 0.5, quick());
  EXPECT_GT(m.value, 0.0);
  EXPECT_THROW(log_delta_margin(s, c, 0.0), std::invalid_argument);
  const SurfaceJet flat(Jet2(0.0, Vector::Unit(4, 3), Matrix::Zero(4, 4)));
  EXPECT_THROW(stabilize_defining(flat, c, quick()), NotStrictlyConvex);
}

TEST(Torus, InnerEquatorMargin) {
  // At the inner equator the xy-plane is tangent with curvatures 1/r and
  // -1/(R - r), so the margin there is 1/r - 1/(R - r).
  const TorusScan s = torus_scan(2.0, 0.8, 8, quick());
  EXPECT_TRUE(s.convex);
  EXPECT_NEAR(s.min_margin, 1.0 / 0.8 - 1.0 / 1.2, 1e-6);
  EXPECT_EQ(s.non_vacuous, 4);
  const TorusScan t = torus_scan(2.0, 1.01, 8, quick());
  EXPECT_FALSE(t.convex);
  EXPECT_NEAR(t.min_margin, 1.0 / 1.01 - 1.0 / 0.99, 1e-6);
  ASSERT_TRUE(t.witness.has_value());
  EXPECT_THROW(torus_scan(2.0, 0.5, 6), std::invalid_argument);
  EXPECT_THROW(torus_scan(2.0, 2.5, 8), std::invalid_argument);
}

TEST(Torus, ThresholdRatio) {
  const double r = torus_threshold(2.0, 8, 0.5, 1.5, 1e-3, quick());
  EXPECT_NEAR(r, 1.0, 0.01);
  EXPECT_THROW(torus_threshold(2.0, 8, 1.2, 1.5, 1e-3, quick()), std::invalid_argument);
}

TEST(FreeSubspaces, FreeIffDistanceStrictlyPsh) {
  const Calibration sl = make_special_lagrangian(3);
  const Calibration k2 = make_kahler(2);
  std::mt19937_64 rng(3);
  auto strict = [&](const Calibration& c, const Matrix& T) {
    const Jet2 j = dist_sq_jet(AffineSurface{Vector::Zero(c.dim()), T}, Vector::Zero(c.dim()));
    return psh_classify(j, c, quick()).cls == PshClass::strictly_psh;
  };
  Matrix line = Matrix::Zero(6, 2);
  line(0, 0) = line(1, 1) = 1.0;  // a complex line, free for SL
  Matrix lag = Matrix::Zero(6, 3);
  lag(0, 0) = lag(2, 1) = lag(4, 2) = 1.0;  // R^3, itself special Lagrangian
  Matrix kline = Matrix::Zero(4, 2);
  kline(0, 0) = kline(1, 1) = 1.0;
  Matrix treal = Matrix::Zero(4, 2);
  treal(0, 0) = treal(2, 1) = 1.0;  // totally real: free for omega
  const std::vector<std::tuple<const Calibration*, Matrix, bool>> cases = {
      {&sl, line, true}, {&sl, lag, false}, {&k2, kline, false}, {&k2, treal, true},
      {&k2, Matrix(oracle::random_matrix(4, 1, rng)), true}};
  for (const auto& [c, T, expect_free] : cases) {
    const FreeReport fr = free_test(T, *c, quick());
    EXPECT_EQ(fr.free, expect_free) << c->name << " dim " << T.cols();
    EXPECT_TRUE(fr.consistent);
    EXPECT_EQ(strict(*c, T), expect_free) << c->name;
  }
  EXPECT_TRUE(free_test(treal, k2, quick()).isotropic);
}

TEST(Hull, PointsOfKAreInsideAndFarPointsOutside) {
  const Calibration c = torus_calibration();
  std::mt19937_64 rng(4);
  HullProblem hp{{}, Vector::Zero(3), c};
  for (int k = 0; k < 6; ++k) hp.points.push_back(oracle::random_matrix(3, 1, rng).col(0));
  hp.query = hp.points[2];
  EXPECT_EQ(quad_hull_membership(hp, quick()).verdict, Verdict::inside);
  hp.query = Vector::Constant(3, 10.0);
  const HullReport far = quad_hull_membership(hp, quick());
  ASSERT_EQ(far.verdict, Verdict::outside);
  ASSERT_TRUE(far.separator.has_value());
  EXPECT_GT((*far.separator)(hp.query), 0.0);
  for (const Vector& k : hp.points) EXPECT_LE((*far.separator)(k), 1e-7);
  EXPECT_GE(trace_margin(far.separator->Q, c, Sense::min, quick(9)).value, -1e-8);
}

TEST(Hull, OffsetFromPlanarSetIsOutside) {
  // K in the plane z = 0: the function z^2 is psh for dx ^ dy (tr over the
  // xy-plane is 0) and separates any point with z != 0.
  const Calibration c = torus_calibration();
  HullProblem hp{{}, Vector::Zero(3), c};
  for (double a : {0.0, 1.0})
    for (double b : {0.0, 1.0}) hp.points.push_back((Vector(3) << a, b, 0.0).finished());
  hp.query = (Vector(3) << 0.5, 0.5, 0.3).finished();
  EXPECT_EQ(quad_hull_membership(hp, quick()).verdict, Verdict::outside);
  hp.query[2] = 0.0;
  EXPECT_EQ(quad_hull_membership(hp, quick()).verdict, Verdict::inside);
}

TEST(Hull, Validation) {
  const Calibration c = torus_calibration();
  HullProblem hp{{}, Vector::Zero(3), c};
  EXPECT_THROW(quad_hull_membership(hp), std::invalid_argument);
  hp.points.push_back(Vector::Zero(2));
  EXPECT_THROW(quad_hull_membership(hp), ShapeError);
}
