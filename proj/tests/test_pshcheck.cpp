#include "calgeo/pshcheck.hpp"
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

Jet2 hessian_jet(const Matrix& H) {
  const auto n = H.rows();
  return {0.0, Vector::Zero(n), H};
}

std::vector<Matrix> frames_of(const std::vector<OrientedPlane>& planes) {
  std::vector<Matrix> out;
  for (const auto& xi : planes) out.push_back(xi.frame());
  return out;
}

}  // namespace

TEST(PhiHessian, HalfNormSquaredGivesDegreeTimesPhi) {
  for (const std::string& name : {"kahler", "special_lagrangian", "associative", "cayley", "quaternionic"}) {
    const Calibration c = make_calibration(name);
    const int n = c.dim();
    const Jet2 j = hessian_jet(Matrix::Identity(n, n));
    EXPECT_EQ((phi_hessian_point(j, c).coeffs() - c.degree() * c.form.coeffs()).cwiseAbs().maxCoeff(), 0.0)
        << name;
    EXPECT_NEAR(phi_laplacian(j, c), c.degree() * c.form.coeffs().squaredNorm(), 1e-12) << name;
  }
}

TEST(PhiHessian, SpecialLagrangianIdentityMatchesComplexOracle) {
  std::mt19937_64 rng(1);
  for (int m = 2; m <= 3; ++m) {
    const Calibration c = make_special_lagrangian(m);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Matrix H = random_symmetric(2 * m, rng);
      const Form lib = phi_hessian_point(hessian_jet(H), c);
      worst = std::max(worst, (lib.coeffs() - oracle::sl_ddphi_reference(H).coeffs()).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(worst, 1e-10) << "m = " << m;
  }
}

TEST(PhiHessian, TraceIdentityOnOraclePlanes) {
  std::mt19937_64 rng(2);
  const Calibration c = make_special_lagrangian(3);
  for (int t = 0; t < 20; ++t) {
    const Matrix H = random_symmetric(6, rng);
    const Matrix F = oracle::sl_plane(3, rng);
    EXPECT_NEAR(oracle::evaluate_on(phi_hessian_point(hessian_jet(H), c), F), (F.transpose() * H * F).trace(),
                1e-10);
  }
}

TEST(PhiHessian, CorrectionTermIsAdded) {
  const Calibration c = make_kahler(2);
  const Jet2 j = hessian_jet(Matrix::Identity(4, 4));
  const Form corr = Form::basis(4, {0, 2});
  const Form h = phi_hessian_point(j, c, corr);
  EXPECT_EQ((h.coeffs() - (2.0 * c.form + corr).coeffs()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(phi_hessian_point(j, c, Form(4, 3)), ShapeError);
  EXPECT_THROW(phi_hessian_point(hessian_jet(Matrix::Identity(5, 5)), c), ShapeError);
}

TEST(Classify, BasicCases) {
  const Calibration c = make_special_lagrangian(3);
  const Matrix I = Matrix::Identity(6, 6);
  EXPECT_EQ(psh_classify(hessian_jet(I), c, quick()).cls, PshClass::strictly_psh);
  EXPECT_EQ(psh_classify(hessian_jet(-I), c, quick()).cls, PshClass::not_psh);
  EXPECT_EQ(psh_classify(hessian_jet(Matrix::Zero(6, 6)), c, quick()).cls, PshClass::pluriharmonic);
  // x1^2 / 2: every trace is >= 0, and planes orthogonal to e_x1 give 0.
  Matrix H = Matrix::Zero(6, 6);
  H(0, 0) = 1.0;
  const PshReport r = psh_classify(hessian_jet(H), c, quick());
  EXPECT_EQ(r.cls, PshClass::psh);
  EXPECT_NEAR(r.lower_margin, 0.0, 1e-8);
  EXPECT_LE(r.cross_check, kCrossCheckTol);
  ASSERT_TRUE(r.witness_plane.has_value());
  EXPECT_NEAR(frobenius(H, r.witness_plane->projector()), r.lower_margin, 1e-6);
}

TEST(Classify, PluriharmonicBasisElementsClassify) {
  const Calibration c = make_special_lagrangian(3);
  const QuadraticSpace qs = pluriharmonic_quadratic_space(c, min_plh_samples(6), quick(3));
  ASSERT_EQ(qs.dimension, 8);
  for (const Matrix& Q : qs.basis) EXPECT_EQ(psh_classify(hessian_jet(Q), c, quick()).cls, PshClass::pluriharmonic);
}

TEST(Classify, JsonReportHasFields) {
  const Calibration c = make_kahler(2);
  const Json j = to_json(psh_classify(hessian_jet(Matrix::Identity(4, 4)), c, quick()));
  for (const char* key : {"lower_margin", "upper_margin", "class", "tolerance", "cross_check"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["class"], "strictly_psh");
}

TEST(GradientSquare, PositiveOnCalibratedPlanes) {
  std::mt19937_64 rng(4);
  const Calibration c = make_special_lagrangian(3);
  for (int t = 0; t < 20; ++t) {
    const Vector g = oracle::random_matrix(6, 1, rng).col(0);
    const Form a = wedge(Form::from_vector(g), d_phi_point(Jet2(0.0, g, Matrix::Zero(6, 6)), c));
    const Matrix F = oracle::sl_plane(3, rng);
    EXPECT_NEAR(oracle::evaluate_on(a, F), (F.transpose() * g).squaredNorm(), 1e-10);
  }
}

TEST(PluriharmonicSpace, DimensionsMatchIndependentNullspace) {
  struct Case {
    Calibration cal;
    int expected;
  };
  const std::vector<Case> cases = {{make_special_lagrangian(3), 8}, {make_kahler(2), 6},
                                   {make_double_point(3), 19},     {make_associative(), 0},
                                   {make_coassociative(), 0},      {make_cayley(), 0}};
  for (const auto& [c, expected] : cases) {
    const int n = c.dim();
    const QuadraticSpace qs = pluriharmonic_quadratic_space(c, min_plh_samples(n), quick(5));
    EXPECT_EQ(qs.dimension, expected) << c.name;
    EXPECT_TRUE(qs.rank_stable) << c.name;
    EXPECT_LE(qs.residual, 1e-8) << c.name;
    // Oracle: full n^2 coordinates, planes from a different seed.
    std::vector<Matrix> frames = frames_of(sample_phi_planes(c, 3 * min_plh_samples(n), 999, quick(999)));
    EXPECT_EQ(oracle::quadratic_null_dimension(frames, n), expected) << c.name;
  }
}

TEST(PluriharmonicSpace, SpecialLagrangianAgainstHaarPlanes) {
  std::mt19937_64 rng(6);
  std::vector<Matrix> frames;
  for (int k = 0; k < 200; ++k) frames.push_back(oracle::sl_plane(3, rng));
  EXPECT_EQ(oracle::quadratic_null_dimension(frames, 6), 8);
  const QuadraticSpace qs = pluriharmonic_quadratic_space(make_special_lagrangian(3), 200, quick(6));
  for (const Matrix& Q : qs.basis)
    for (const Matrix& F : frames) EXPECT_NEAR((F.transpose() * Q * F).trace(), 0.0, 1e-9);
}

TEST(PluriharmonicSpace, RejectsTooFewSamples) {
  EXPECT_THROW(pluriharmonic_quadratic_space(make_kahler(2), 5), std::invalid_argument);
}

TEST(Witness, FoundForStandardCalibrations) {
  for (const Calibration& c : {make_special_lagrangian(3), make_kahler(2), make_coordinate(3, {0, 1})}) {
    const WitnessResult w = nonconvex_psh_witness(c, quick(1));
    ASSERT_TRUE(w.found) << c.name << ": " << w.note;
    Eigen::SelfAdjointEigenSolver<Matrix> es(w.Q);
    EXPECT_LE(es.eigenvalues()[0], -0.1 + 1e-12) << c.name;
    EXPECT_NEAR(es.eigenvalues()[0], w.lambda_min, 1e-10);
    EXPECT_GE(w.margin, -1e-8) << c.name;
    OptOptions fresh = quick(777);
    fresh.restarts = 32;
    EXPECT_GE(trace_margin(w.Q, c, Sense::min, fresh).value, -1e-8) << c.name;
  }
}

TEST(Witness, KahlerWitnessAgainstDenseComplexLines) {
  const Calibration c = make_kahler(2);
  const WitnessResult w = nonconvex_psh_witness(c, quick(2));
  ASSERT_TRUE(w.found);
  std::mt19937_64 rng(8);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20000; ++k) {
    const Matrix F = oracle::complex_line(2, rng);
    worst = std::min(worst, (F.transpose() * w.Q * F).trace());
  }
  EXPECT_GE(worst, -1e-8);
}

TEST(Witness, NoneForVolumeForm) {
  // On R^1 with phi = dx, psh is plain convexity.
  const Calibration c = make_volume(1);
  const WitnessResult w = nonconvex_psh_witness(c, quick(3));
  EXPECT_FALSE(w.found);
}

TEST(Richness, ExplicitWitnessesCalibrated) {
  std::mt19937_64 rng(9);
  for (const Calibration& c : {make_special_lagrangian(3), make_associative(), make_coassociative()}) {
    const int n = c.dim(), p = c.degree();
    for (int t = 0; t < 5; ++t) {
      const Matrix P = orthonormalize(oracle::random_matrix(n, 2, rng));
      const Vector l = P * oracle::random_matrix(2, 1, rng).col(0);
      const RichnessResult r = richness_check(c, P, l, quick(t));
      ASSERT_TRUE(r.found) << c.name << " trial " << t;
      ASSERT_TRUE(r.plane && r.xi0);
      EXPECT_NEAR(evaluate(c.form, *r.plane), 1.0, 1e-6);
      EXPECT_NEAR(oracle::evaluate_on(c.form, r.plane->frame()), 1.0, 1e-6);
      EXPECT_LT((P.transpose() * r.xi0->frame()).norm(), 1e-8);
      EXPECT_EQ(r.xi0->degree(), p - 1);
      EXPECT_LT((r.plane->frame().col(0) - r.sign * l.normalized()).norm(), 1e-12);
    }
  }
}

TEST(Richness, KahlerFailsOnComplexLines) {
  // P = C e_1, l = e_1: no complex line contains e_1 and a vector of P^perp.
  const Calibration c = make_kahler(2);
  const Matrix P = Matrix::Identity(4, 4).leftCols(2);
  const RichnessResult r = richness_check(c, P, Vector(Vector::Unit(4, 0)), quick());
  EXPECT_FALSE(r.found);
  EXPECT_NEAR(r.best, 0.0, 1e-8);
}

TEST(Richness, RejectsBadInput) {
  const Calibration c = make_special_lagrangian(3);
  const Matrix P = Matrix::Identity(6, 6).leftCols(2);
  EXPECT_THROW(richness_check(c, P, Vector(Vector::Unit(6, 4))), ShapeError);
  EXPECT_THROW(richness_check(c, Matrix(Matrix::Identity(6, 6).leftCols(3)), Vector(Vector::Unit(6, 0))), ShapeError);
}

TEST(Ellipticity, Examples) {
  const EllipticityReport sl = ellipticity_report(make_special_lagrangian(3), quick());
  EXPECT_TRUE(sl.dd_elliptic);
  EXPECT_TRUE(sl.reduced_elliptic);
  EXPECT_NEAR(sl.min_symbol_norm, std::sqrt(2.0), 1e-12);  // e_x1 _| phi = dx2^dx3 - dy2^dy3
  const EllipticityReport dxdy = ellipticity_report(make_coordinate(3, {0, 1}), quick());
  EXPECT_FALSE(dxdy.dd_elliptic);
  EXPECT_FALSE(dxdy.reduced_elliptic);
}

TEST(JetCalculus, ComposeAndLogSumExpMatchFiniteDifferences) {
  std::mt19937_64 rng(10);
  const int n = 3;
  const Matrix A = random_symmetric(n, rng), B = random_symmetric(n, rng);
  const Vector a = oracle::random_matrix(n, 1, rng).col(0), b = oracle::random_matrix(n, 1, rng).col(0);
  auto f = [&](const Vector& x) { return 0.5 * x.dot(A * x) + a.dot(x); };
  auto g = [&](const Vector& x) { return 0.5 * x.dot(B * x) + b.dot(x) + 0.3; };
  auto lse = [&](const Vector& x) { return std::log(std::exp(f(x)) + std::exp(g(x))); };
  auto ef = [&](const Vector& x) { return std::exp(f(x)); };
  const Vector x = 0.3 * oracle::random_matrix(n, 1, rng).col(0);
  const Jet2 jf = Jet2::quadratic(A, a, 0.0, x), jg = Jet2::quadratic(B, b, 0.3, x);
  const double fx = jf.value;
  const Jet2 je = jet_compose({std::exp(fx), std::exp(fx), std::exp(fx)}, jf);
  const Jet2 jl = log_sum_exp(jf, jg);
  const double h = 1e-4;
  for (auto [fn, jet] : {std::pair{std::function<double(const Vector&)>(lse), jl},
                         std::pair{std::function<double(const Vector&)>(ef), je}}) {
    EXPECT_NEAR(fn(x), jet.value, 1e-12);
    for (int i = 0; i < n; ++i) {
      const Vector ei = h * Vector::Unit(n, i);
      EXPECT_NEAR((fn(x + ei) - fn(x - ei)) / (2 * h), jet.grad[i], 1e-6);
      for (int k = 0; k < n; ++k) {
        const Vector ek = h * Vector::Unit(n, k);
        const double fd = (fn(x + ei + ek) - fn(x + ei - ek) - fn(x - ei + ek) + fn(x - ei - ek)) / (4 * h * h);
        EXPECT_NEAR(fd, jet.hess(i, k), 1e-5);
      }
    }
  }
}

TEST(JetCalculus, SmoothMaxBounds) {
  const Jet2 f(1.0, Vector::Ones(2), Matrix::Identity(2, 2));
  const Jet2 g(0.4, -Vector::Ones(2), Matrix::Zero(2, 2));
  for (double k : {1.0, 10.0, 100.0}) {
    const Jet2 s = smooth_max(f, g, k);
    EXPECT_GE(s.value, 1.0);
    EXPECT_LE(s.value, 1.0 + std::log(2.0) / k + 1e-15);
  }
  EXPECT_THROW(smooth_max(f, g, 0.0), std::invalid_argument);
  EXPECT_THROW(jet_compose({std::nan(""), 0, 0}, f), std::domain_error);
}

TEST(JetCalculus, ClosureKeepsPsh) {
  const Calibration c = make_kahler(2);
  std::mt19937_64 rng(11);
  const Matrix G = oracle::random_matrix(4, 4, rng);
  const Jet2 f(0.2, oracle::random_matrix(4, 1, rng).col(0), G * G.transpose());
  const Jet2 g(0.0, oracle::random_matrix(4, 1, rng).col(0), Matrix::Identity(4, 4));
  for (const Jet2& j : {log_sum_exp(f, g), smooth_max(f, g, 5.0),
                        jet_compose({std::exp(f.value), std::exp(f.value), std::exp(f.value)}, f)}) {
    const PshClass k = psh_classify(j, c, quick()).cls;
    EXPECT_TRUE(k == PshClass::psh || k == PshClass::strictly_psh) << to_string(k);
  }
}

TEST(JetJson, RoundTripAndErrors) {
  const Jet2 j(1.5, Vector::Ones(3), Matrix::Identity(3, 3));
  const Jet2 back = jet_from_json(Json::parse(to_json(j).dump()));
  EXPECT_EQ(back.value, 1.5);
  EXPECT_EQ(back.hess, j.hess);
  EXPECT_THROW(jet_from_json(Json::parse(R"({"value": 0, "grad": [0, 0]})")), SchemaError);
  EXPECT_THROW(jet_from_json(Json::parse(R"({"value": 0, "grad": [0, 0], "hess": [[1, 2], [0, 1]]})")), SchemaError);
  EXPECT_THROW(Jet2(0.0, Vector::Zero(2), Matrix::Zero(3, 3)), ShapeError);
}
