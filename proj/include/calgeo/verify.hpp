#pragma once

// Built-in verification suites. Each invariant runs from a seed, reports a
// residual against its threshold and never throws: an exception becomes a
// failed entry carrying the message.

#include "calgeo/algebra.hpp"
#include "calgeo/cones.hpp"
#include "calgeo/convexity.hpp"
#include "calgeo/pshcheck.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace calgeo::verify {

struct InvariantResult {
  std::string name;
  std::string suite;
  bool pass = false;
  double residual = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct Invariant {
  std::string name;
  std::string suite;
  double threshold = 0.0;
  // Returns the residual; passes when residual <= threshold. May set detail.
  std::function<double(std::uint64_t seed, std::string& detail)> run;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  int passed = 0;
  int failed = 0;
  std::vector<InvariantResult> results;
  [[nodiscard]] bool ok() const { return failed == 0; }
};

inline Json to_json(const InvariantResult& r) {
  return {{"name", r.name},         {"suite", r.suite},         {"pass", r.pass},
          {"residual", r.residual}, {"threshold", r.threshold}, {"detail", r.detail}};
}

inline Json to_json(const SuiteReport& s) {
  Json res = Json::array();
  Json failing = Json::array();
  for (const auto& r : s.results) {
    res.push_back(to_json(r));
    if (!r.pass) failing.push_back(r.name);
  }
  return {{"suite", s.suite},   {"seed", s.seed},       {"passed", s.passed},
          {"failed", s.failed}, {"failing", failing},   {"results", res}};
}

/// Catalog entries exercised by the suites, with labels.
inline std::vector<std::pair<std::string, Calibration>> suite_catalog() {
  std::vector<std::pair<std::string, Calibration>> out;
  auto add = [&](const std::string& label, const std::string& name, const Json& params) {
    out.emplace_back(label, make_calibration(name, params));
  };
  add("kahler(2)", "kahler", {{"n", 2}});
  add("kahler(3)", "kahler", {{"n", 3}});
  add("kahler_power(4,2)", "kahler_power", {{"n", 4}, {"p", 2}});
  add("special_lagrangian(3)", "special_lagrangian", {{"n", 3}});
  add("associative", "associative", Json::object());
  add("coassociative", "coassociative", Json::object());
  add("cayley", "cayley", Json::object());
  add("quaternionic(2)", "quaternionic", {{"n", 2}});
  add("double_point(3)", "double_point", {{"n", 3}});
  add("two_plane(0.3)", "two_plane", {{"lambda", 0.3}});
  add("coordinate(3;0,1)", "coordinate", Json::object());
  add("volume(3)", "volume", Json::object());
  add("lie_three_form(su2)", "lie_three_form", Json::object());
  return out;
}

namespace detail {

inline std::mt19937_64 rng_for(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

template <class K>
Alternating<K> random_element(int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector c(static_cast<Eigen::Index>(binomial(n, p)));
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = normal(rng);
  return Alternating<K>(n, p, c);
}

inline Matrix random_matrix(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix A(n, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = normal(rng);
  return A;
}

inline Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline OptOptions suite_options(std::uint64_t seed) {
  OptOptions o;
  o.seed = seed;
  o.restarts = 16;
  o.threads = 1;
  return o;
}

inline double max_over_calibrations(
    const std::vector<std::pair<std::string, Calibration>>& cat, std::string& detail,
    const std::function<double(const Calibration&, std::mt19937_64&)>& f, std::uint64_t seed,
    std::uint64_t salt) {
  double worst = 0.0;
  std::string where;
  for (std::size_t k = 0; k < cat.size(); ++k) {
    auto rng = rng_for(seed, salt + 31 * k);
    const double r = f(cat[k].second, rng);
    if (!(r <= worst)) {
      worst = r;
      where = cat[k].first;
    }
  }
  detail = where.empty() ? "all catalog calibrations" : "worst: " + where;
  return worst;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// identities

inline std::vector<Invariant> identity_invariants() {
  using detail::max_over_calibrations;
  std::vector<Invariant> inv;
  const std::string S = "identities";
  auto cat = std::make_shared<std::vector<std::pair<std::string, Calibration>>>();
  auto catalog = [cat]() -> const std::vector<std::pair<std::string, Calibration>>& {
    if (cat->empty()) *cat = suite_catalog();
    return *cat;
  };
  // Found planes per calibration, cached by seed.
  auto planes_cache = std::make_shared<std::map<std::pair<std::string, std::uint64_t>, std::vector<OrientedPlane>>>();
  auto planes_of = [planes_cache](const Calibration& c, std::uint64_t seed) -> const std::vector<OrientedPlane>& {
    const auto key = std::make_pair(c.name + to_json(c.form).dump(), seed);
    auto it = planes_cache->find(key);
    if (it == planes_cache->end())
      it = planes_cache->emplace(key, calibrated_planes(c, 10, detail::suite_options(seed), true)).first;
    return it->second;
  };

  inv.push_back({"graded_commutativity", S, 1e-12, [](std::uint64_t seed, std::string& d) {
                   auto rng = detail::rng_for(seed, 1);
                   double worst = 0.0;
                   for (int t = 0; t < 200; ++t) {
                     const int n = 2 + static_cast<int>(rng() % 7);
                     const int p = static_cast<int>(rng() % (n + 1));
                     const int q = static_cast<int>(rng() % (n - p + 1));
                     const auto a = detail::random_element<FormTag>(n, p, rng);
                     const auto b = detail::random_element<FormTag>(n, q, rng);
                     const double s = (p * q) % 2 ? -1.0 : 1.0;
                     worst = std::max(worst, (wedge(a, b).coeffs() - s * wedge(b, a).coeffs()).cwiseAbs().maxCoeff());
                   }
                   d = "200 random pairs, n <= 8";
                   return worst;
                 }});
  inv.push_back({"derivation_leibniz", S, 1e-12, [](std::uint64_t seed, std::string& d) {
                   auto rng = detail::rng_for(seed, 2);
                   double worst = 0.0;
                   for (int t = 0; t < 200; ++t) {
                     const int n = 2 + static_cast<int>(rng() % 7);
                     const int p = static_cast<int>(rng() % (n + 1));
                     const int q = static_cast<int>(rng() % (n - p + 1));
                     const auto a = detail::random_element<FormTag>(n, p, rng);
                     const auto b = detail::random_element<FormTag>(n, q, rng);
                     const Matrix B = detail::random_matrix(n, rng);
                     const Form lhs = derivation_extend(B, wedge(a, b));
                     const Form rhs = wedge(derivation_extend(B, a), b) + wedge(a, derivation_extend(B, b));
                     worst = std::max(worst, (lhs.coeffs() - rhs.coeffs()).cwiseAbs().maxCoeff() /
                                                 (1.0 + lhs.coeffs().cwiseAbs().maxCoeff()));
                   }
                   d = "relative to the largest coefficient";
                   return worst;
                 }});
  inv.push_back({"contraction_antiderivation", S, 1e-12, [](std::uint64_t seed, std::string& d) {
                   auto rng = detail::rng_for(seed, 3);
                   double worst = 0.0;
                   for (int t = 0; t < 200; ++t) {
                     const int n = 2 + static_cast<int>(rng() % 7);
                     const int p = 1 + static_cast<int>(rng() % n);
                     const int q = static_cast<int>(rng() % (n - p + 1));
                     const auto a = detail::random_element<FormTag>(n, p, rng);
                     const auto b = detail::random_element<FormTag>(n, q, rng);
                     const Vector v = detail::random_vector(n, rng);
                     const double s = p % 2 ? -1.0 : 1.0;
                     Form rhs = wedge(interior(v, a), b);
                     if (q > 0) rhs += s * wedge(a, interior(v, b));
                     const Form lhs = interior(v, wedge(a, b));
                     worst = std::max(worst, (lhs.coeffs() - rhs.coeffs()).cwiseAbs().maxCoeff() /
                                                 (1.0 + lhs.coeffs().cwiseAbs().maxCoeff()));
                   }
                   d = "v _| (a ^ b) = (v _| a) ^ b + (-1)^p a ^ (v _| b)";
                   return worst;
                 }});
  inv.push_back({"hodge_star_sign", S, 1e-12, [](std::uint64_t seed, std::string& d) {
                   auto rng = detail::rng_for(seed, 4);
                   double worst = 0.0;
                   for (int t = 0; t < 200; ++t) {
                     const int n = 1 + static_cast<int>(rng() % 8);
                     const int p = static_cast<int>(rng() % (n + 1));
                     const auto a = detail::random_element<FormTag>(n, p, rng);
                     const double s = (p * (n - p)) % 2 ? -1.0 : 1.0;
                     worst = std::max(worst, (hodge_star(hodge_star(a)).coeffs() - s * a.coeffs()).cwiseAbs().maxCoeff());
                   }
                   d = "** = (-1)^{p(n-p)}";
                   return worst;
                 }});
  inv.push_back({"octonion_norm_law", S, 1e-12, [](std::uint64_t seed, std::string& d) {
                   auto rng = detail::rng_for(seed, 5);
                   const AlgebraTable O = AlgebraTable::octonions();
                   double worst = 0.0;
                   for (int t = 0; t < 2000; ++t) {
                     const Vector x = detail::random_vector(8, rng), y = detail::random_vector(8, rng);
                     worst = std::max(worst, std::abs(O.multiply(x, y).norm() - x.norm() * y.norm()) /
                                                 (x.norm() * y.norm()));
                   }
                   d = "|xy| = |x||y| on 2000 pairs";
                   return worst;
                 }});
  inv.push_back({"coassociative_is_star_associative", S, 0.0, [](std::uint64_t, std::string& d) {
                   d = "coefficient-exact";
                   return (coassociative_form().coeffs() - hodge_star(associative_form()).coeffs())
                       .cwiseAbs()
                       .maxCoeff();
                 }});
  inv.push_back({"comass_one", S, 1e-6, [catalog](std::uint64_t seed, std::string& d) {
                   return max_over_calibrations(
                       catalog(), d,
                       [seed](const Calibration& c, std::mt19937_64&) {
                         return std::abs(comass(c.form, detail::suite_options(seed)).value - 1.0);
                       },
                       seed, 6);
                 }});
  inv.push_back({"first_cousin_principle", S, 1e-8, [catalog, planes_of](std::uint64_t seed, std::string& d) {
                   return max_over_calibrations(
                       catalog(), d,
                       [&](const Calibration& c, std::mt19937_64&) {
                         double w = 0.0;
                         for (const auto& xi : planes_of(c, seed)) w = std::max(w, cousin_gradient_norm(c.form, xi));
                         return w;
                       },
                       seed, 7);
                 }});
  inv.push_back({"trace_identity", S, 1e-8, [catalog, planes_of](std::uint64_t seed, std::string& d) {
                   return max_over_calibrations(
                       catalog(), d,
                       [&](const Calibration& c, std::mt19937_64& rng) {
                         double w = 0.0;
                         for (int t = 0; t < 20; ++t) {
                           const Matrix A = random_symmetric(c.dim(), rng);
                           const Form L = lambda_phi(A, c.form);
                           for (const auto& xi : planes_of(c, seed))
                             w = std::max(w, std::abs(evaluate(L, xi) - frobenius(A, xi.projector())));
                         }
                         return w;
                       },
                       seed, 8);
                 }});
  inv.push_back({"skew_vanishing", S, 1e-8, [catalog, planes_of](std::uint64_t seed, std::string& d) {
                   return max_over_calibrations(
                       catalog(), d,
                       [&](const Calibration& c, std::mt19937_64& rng) {
                         double w = 0.0;
                         for (int t = 0; t < 10; ++t) {
                           const Matrix B = detail::random_matrix(c.dim(), rng);
                           const Form L = lambda_phi(Matrix(B - B.transpose()), c.form);
                           for (const auto& xi : planes_of(c, seed)) w = std::max(w, std::abs(evaluate(L, xi)));
                         }
                         return w;
                       },
                       seed, 9);
                 }});
  inv.push_back({"rank_one_trace", S, 1e-8, [catalog, planes_of](std::uint64_t seed, std::string& d) {
                   return max_over_calibrations(
                       catalog(), d,
                       [&](const Calibration& c, std::mt19937_64& rng) {
                         double w = 0.0;
                         for (int t = 0; t < 10; ++t) {
                           const Vector v = detail::random_vector(c.dim(), rng);
                           const Vector u = detail::random_vector(c.dim(), rng);
                           const Matrix A = 0.5 * (v * u.transpose() + u * v.transpose());
                           const Form L = lambda_phi(A, c.form);
                           for (const auto& xi : planes_of(c, seed)) {
                             const Matrix P = xi.projector();
                             w = std::max(w, std::abs(evaluate(L, xi) - (P * v).dot(P * u)));
                           }
                         }
                         return w;
                       },
                       seed, 10);
                 }});
  inv.push_back({"cousin_decomposition", S, 1e-10, [catalog](std::uint64_t seed, std::string& d) {
                   return max_over_calibrations(
                       catalog(), d,
                       [&](const Calibration& c, std::mt19937_64& rng) {
                         double w = 0.0;
                         const int n = c.dim(), p = c.degree();
                         for (int t = 0; t < 20; ++t) {
                           const OrientedPlane xi = random_plane(n, p, rng());
                           const Matrix A = detail::random_matrix(n, rng);
                           const Matrix P = xi.projector();
                           const Matrix At = (Matrix::Identity(n, n) - P) * A * P;
                           const double lhs = evaluate(lambda_phi(A, c.form), xi);
                           const double rhs = (P * A).trace() * evaluate(c.form, xi) +
                                              pair(c.form, derivation_extend(At, xi.multivector()));
                           w = std::max(w, std::abs(lhs - rhs));
                         }
                         return w;
                       },
                       seed, 11);
                 }});
  inv.push_back({"half_norm_squared_gives_p_phi", S, 1e-13, [catalog](std::uint64_t seed, std::string& d) {
                   return max_over_calibrations(
                       catalog(), d,
                       [](const Calibration& c, std::mt19937_64&) {
                         const int n = c.dim();
                         const Jet2 j(0.0, Vector::Zero(n), Matrix::Identity(n, n));
                         return (phi_hessian_point(j, c).coeffs() - c.degree() * c.form.coeffs()).cwiseAbs().maxCoeff();
                       },
                       seed, 12);
                 }});
  inv.push_back({"gradient_square_positivity", S, 1e-8, [catalog, planes_of](std::uint64_t seed, std::string& d) {
                   return max_over_calibrations(
                       catalog(), d,
                       [&](const Calibration& c, std::mt19937_64& rng) {
                         double w = 0.0;
                         const int n = c.dim();
                         for (int t = 0; t < 10; ++t) {
                           const Vector g = detail::random_vector(n, rng);
                           const Jet2 j(0.0, g, Matrix::Zero(n, n));
                           const Form a = wedge(Form::from_vector(g), d_phi_point(j, c));
                           for (const auto& xi : planes_of(c, seed))
                             w = std::max(w, std::abs(evaluate(a, xi) - (xi.frame().transpose() * g).squaredNorm()));
                         }
                         return w;
                       },
                       seed, 13);
                 }});
  inv.push_back({"margin_cross_check", S, kCrossCheckTol, [catalog](std::uint64_t seed, std::string& d) {
                   return max_over_calibrations(
                       catalog(), d,
                       [&](const Calibration& c, std::mt19937_64& rng) {
                         const Matrix H = random_symmetric(c.dim(), rng);
                         const Jet2 j(0.0, Vector::Zero(c.dim()), H);
                         const PshReport r = psh_classify(j, c, detail::suite_options(seed));
                         return r.cross_check / (1.0 + H.cwiseAbs().maxCoeff());
                       },
                       seed, 14);
                 }});
  inv.push_back({"finite_difference_hessian", S, 1e-5, [](std::uint64_t seed, std::string& d) {
                   // f = c.x^3 summed cubically plus a quadratic: exact jets vs differences.
                   auto rng = detail::rng_for(seed, 15);
                   const int n = 4;
                   const Matrix Q = random_symmetric(n, rng);
                   const Vector c = detail::random_vector(n, rng);
                   auto f = [&](const Vector& x) { return 0.5 * x.dot(Q * x) + std::pow(c.dot(x), 3); };
                   double worst = 0.0;
                   for (int t = 0; t < 10; ++t) {
                     const Vector x = detail::random_vector(n, rng);
                     const double s = c.dot(x);
                     const Matrix H = Q + 6.0 * s * c * c.transpose();
                     const double h = 1e-4;
                     Matrix Hfd(n, n);
                     for (int i = 0; i < n; ++i)
                       for (int k = 0; k < n; ++k) {
                         const Vector ei = h * Vector::Unit(n, i), ek = h * Vector::Unit(n, k);
                         Hfd(i, k) = (f(x + ei + ek) - f(x + ei - ek) - f(x - ei + ek) + f(x - ei - ek)) / (4 * h * h);
                       }
                     worst = std::max(worst, (H - Hfd).cwiseAbs().maxCoeff() / (1.0 + H.cwiseAbs().maxCoeff()));
                   }
                   d = "quadratic plus cubic test functions";
                   return worst;
                 }});
  inv.push_back({"composition_closure", S, 0.0, [](std::uint64_t seed, std::string& d) {
                   // psh jets stay psh under convex increasing outer functions and log-sum-exp.
                   auto rng = detail::rng_for(seed, 16);
                   const Calibration c = make_special_lagrangian(3);
                   const OptOptions o = detail::suite_options(seed);
                   int bad = 0;
                   for (int t = 0; t < 3; ++t) {
                     const Matrix G = detail::random_matrix(6, rng);
                     const Jet2 f(0.3, detail::random_vector(6, rng), G * G.transpose());
                     const Matrix G2 = detail::random_matrix(6, rng);
                     const Jet2 g(-0.2, detail::random_vector(6, rng), G2 * G2.transpose());
                     const Jet2 e = jet_compose({std::exp(f.value), std::exp(f.value), std::exp(f.value)}, f);
                     for (const Jet2& j : {e, log_sum_exp(f, g)}) {
                       const PshClass k = psh_classify(j, c, o).cls;
                       if (k != PshClass::psh && k != PshClass::strictly_psh) ++bad;
                     }
                   }
                   d = std::to_string(bad) + " composite jets failed to classify psh";
                   return static_cast<double>(bad);
                 }});
  inv.push_back({"pluriharmonic_dimensions", S, 0.0, [](std::uint64_t seed, std::string& d) {
                   const OptOptions o = detail::suite_options(seed);
                   const std::vector<std::pair<Calibration, int>> cases = {
                       {make_special_lagrangian(3), 8}, {make_kahler(2), 6}, {make_associative(), 0}};
                   int bad = 0;
                   for (const auto& [c, dim] : cases) {
                     const QuadraticSpace q = pluriharmonic_quadratic_space(c, min_plh_samples(c.dim()), o);
                     d += c.name + "=" + std::to_string(q.dimension) + " ";
                     if (q.dimension != dim || !q.rank_stable) ++bad;
                   }
                   return static_cast<double>(bad);
                 }});
  return inv;
}

// ---------------------------------------------------------------------------
// cones

namespace detail {

inline ConeOptions suite_cone_options(std::uint64_t seed) {
  ConeOptions co = default_cone_options();
  co.opt.seed = seed;
  co.opt.threads = 1;
  return co;
}

}  // namespace detail

inline std::vector<Invariant> cone_invariants() {
  std::vector<Invariant> inv;
  const std::string S = "cones";
  // Each certificate is re-checked independently; the verdict must also match
  // the value test phi(xi) >= 1 - 1e-6 for unit simple targets.
  inv.push_back({"certificates_self_verify", S, 0.0, [](std::uint64_t seed, std::string& d) {
                   int bad = 0, mismatch = 0, total = 0;
                   for (const Calibration& c : {make_kahler(2), make_special_lagrangian(3), make_double_point(3)}) {
                     auto rng = detail::rng_for(seed, 21);
                     const ConeOptions co = detail::suite_cone_options(seed);
                     std::vector<OrientedPlane> targets = sample_phi_planes(c, 2, seed, co.opt);
                     for (int t = 0; t < 4; ++t) targets.push_back(random_plane(c.dim(), c.degree(), rng()));
                     for (const auto& xi : targets) {
                       ++total;
                       const ConeCertificate cert = positive_cone_membership(xi.multivector(), c, co);
                       if (!verify_certificate(cert, xi.multivector(), c, seed + 424242).ok) ++bad;
                       const bool expect_in = evaluate(c.form, xi) >= 1.0 - 1e-6;
                       if ((cert.verdict == Verdict::inside) != expect_in) ++mismatch;
                     }
                   }
                   d = std::to_string(bad) + " of " + std::to_string(total) + " certificates failed, " +
                       std::to_string(mismatch) + " verdicts disagree with the value test";
                   return static_cast<double>(bad + mismatch);
                 }});
  inv.push_back({"hyperplane_boundary_criterion", S, 0.0, [](std::uint64_t seed, std::string& d) {
                   // e in the span of a phi-plane: on the boundary. For double_point(3)
                   // a mixed unit vector lies in no phi-plane.
                   const OptOptions o = detail::suite_options(seed);
                   int bad = 0;
                   auto rng = detail::rng_for(seed, 22);
                   for (const Calibration& c : {make_kahler(2), make_special_lagrangian(3)}) {
                     for (const auto& xi : sample_phi_planes(c, 2, seed, o)) {
                       const Vector e = (xi.frame() * detail::random_vector(c.degree(), rng)).normalized();
                       if (!hyperplane_boundary_test(c, e, o).on_boundary) ++bad;
                     }
                   }
                   const Calibration dp = make_double_point(3);
                   const Vector e = Vector::Constant(6, 1.0).normalized();
                   if (hyperplane_boundary_test(dp, e, o).on_boundary) ++bad;
                   d = std::to_string(bad) + " of 5 cases misclassified";
                   return static_cast<double>(bad);
                 }});
  inv.push_back({"normality", S, 1e-4, [](std::uint64_t seed, std::string& d) {
                   const OptOptions o = detail::suite_options(seed);
                   double worst = 0.0;
                   for (const Calibration& c : {make_kahler(2), make_special_lagrangian(3)}) {
                     const NormalityReport r = normality_check(c, 2, o);
                     worst = std::max(worst, r.worst_angle);
                   }
                   d = "worst principal angle, kahler(2) and special_lagrangian(3)";
                   return worst;
                 }});
  inv.push_back({"mod_d_implies_flat", S, 0.0, [](std::uint64_t seed, std::string& d) {
                   // H = Q + c g g' with Q pluriharmonic: dd^phi f = c df ^ d^phi f, so the
                   // mod-d residual vanishes and level sets are flat.
                   const Calibration c = make_special_lagrangian(3);
                   const OptOptions o = detail::suite_options(seed);
                   const QuadraticSpace qs = pluriharmonic_quadratic_space(c, min_plh_samples(6), o);
                   const SubspaceBasis span = lambda_span(c, o);
                   auto rng = detail::rng_for(seed, 23);
                   int bad = 0;
                   for (int t = 0; t < 3; ++t) {
                     Matrix Q = Matrix::Zero(6, 6);
                     for (const auto& B : qs.basis) Q += detail::random_vector(1, rng)[0] * B;
                     const Vector g = detail::random_vector(6, rng);
                     const Jet2 j(0.0, g, Q + 0.7 * g * g.transpose());
                     const ModDResult m = pluriharmonic_mod_d_test(j, c, span);
                     if (m.residual > 1e-8) {
                       ++bad;
                       continue;
                     }
                     const BoundaryReport b = boundary_margin(SurfaceJet(j), c, o);
                     if (std::max(std::abs(b.tangential_margin), std::abs(b.upper_margin)) > 1e-5) ++bad;
                   }
                   d = std::to_string(bad) + " of 3 jets broke the link";
                   return static_cast<double>(bad);
                 }});
  inv.push_back({"gradient_forms_in_positive_cone", S, 1e-8, [](std::uint64_t seed, std::string& d) {
                   const OptOptions o = detail::suite_options(seed);
                   auto rng = detail::rng_for(seed, 24);
                   double worst = 0.0;
                   for (const Calibration& c : {make_kahler(2), make_special_lagrangian(3), make_associative()}) {
                     const Vector g = detail::random_vector(c.dim(), rng);
                     const Form a = wedge(Form::from_vector(g), interior(g, c.form));
                     const Form b = interior(g, wedge(Form::from_vector(g), c.form));
                     for (const Form& f : {a, b}) worst = std::max(worst, -form_margin(f, c, Sense::min, o).value);
                   }
                   d = "negated minimum over G(phi)";
                   return std::max(0.0, worst);
                 }});
  return inv;
}

// ---------------------------------------------------------------------------
// convexity

inline std::vector<Invariant> convexity_invariants() {
  std::vector<Invariant> inv;
  const std::string S = "convexity";
  inv.push_back({"torus_threshold_ratio", S, 0.005, [](std::uint64_t seed, std::string& d) {
                   const double R = 2.0;
                   const double r = torus_threshold(R, 8, 0.5, 1.5, 1e-3, detail::suite_options(seed));
                   d = "r*/R = " + std::to_string(r / R);
                   return std::abs(r / R - 0.5);
                 }});
  inv.push_back({"sphere_margin", S, 1e-8, [](std::uint64_t seed, std::string& d) {
                   const OptOptions o = detail::suite_options(seed);
                   double worst = 0.0;
                   for (const Calibration& c : {make_kahler(2), make_special_lagrangian(3)}) {
                     const int n = c.dim();
                     const double r = 1.5;
                     // rho = (|x|^2 - r^2) / (2r), at x = r e_1.
                     const Vector x = r * Vector::Unit(n, 0);
                     const Jet2 j(0.0, x / r, Matrix::Identity(n, n) / r);
                     const BoundaryReport b = boundary_margin(SurfaceJet(j), c, o);
                     worst = std::max(worst, std::abs(b.tangential_margin - c.degree() / r));
                   }
                   d = "tangential margin against p/r";
                   return worst;
                 }});
  inv.push_back({"second_fundamental_cross_check", S, kCrossCheckTol, [](std::uint64_t seed, std::string& d) {
                   const OptOptions o = detail::suite_options(seed);
                   auto rng = detail::rng_for(seed, 31);
                   double worst = 0.0;
                   for (const Calibration& c : {make_kahler(2), make_special_lagrangian(3)}) {
                     for (int t = 0; t < 2; ++t) {
                       const Jet2 j(0.0, detail::random_vector(c.dim(), rng), random_symmetric(c.dim(), rng));
                       const BoundaryReport b = boundary_margin(SurfaceJet(j), c, o);
                       if (b.cls == ConvexClass::vacuous) continue;
                       worst = std::max(worst, b.cross_check / (1.0 + j.hess.cwiseAbs().maxCoeff()));
                     }
                   }
                   d = "|margin + |grad rho| max tr II|, relative";
                   return worst;
                 }});
  inv.push_back({"defining_function_invariance", S, 1e-6, [](std::uint64_t seed, std::string& d) {
                   const OptOptions o = detail::suite_options(seed);
                   auto rng = detail::rng_for(seed, 32);
                   const Calibration c = make_kahler(2);
                   double worst = 0.0;
                   int flips = 0;
                   for (int t = 0; t < 3; ++t) {
                     const Jet2 j(0.0, detail::random_vector(4, rng), random_symmetric(4, rng));
                     const double u = 0.5 + (rng() % 1000) / 400.0;
                     const Vector gu = detail::random_vector(4, rng);
                     // Hess(u rho) at rho = 0.
                     const Matrix H = u * j.hess + gu * j.grad.transpose() + j.grad * gu.transpose();
                     const Jet2 ju(0.0, u * j.grad, H);
                     const BoundaryReport a = boundary_margin(SurfaceJet(j), c, o);
                     const BoundaryReport b = boundary_margin(SurfaceJet(ju), c, o);
                     worst = std::max(worst, std::abs(b.tangential_margin - u * a.tangential_margin) /
                                                 (1.0 + std::abs(a.tangential_margin)));
                     if (a.cls != b.cls) ++flips;
                   }
                   d = std::to_string(flips) + " classification changes";
                   return flips ? 1.0 : worst;
                 }});
  inv.push_back({"free_iff_strict", S, 0.0, [](std::uint64_t seed, std::string& d) {
                   const OptOptions o = detail::suite_options(seed);
                   auto rng = detail::rng_for(seed, 33);
                   int bad = 0, total = 0;
                   auto check = [&](const Calibration& c, const Matrix& T) {
                     ++total;
                     const FreeReport fr = free_test(T, c, o);
                     const Vector x = T * detail::random_vector(static_cast<int>(T.cols()), rng);
                     const Jet2 j = dist_sq_jet(AffineSurface{Vector::Zero(c.dim()), T}, x);
                     const bool strict = psh_classify(j, c, o).cls == PshClass::strictly_psh;
                     if (fr.free != strict || !fr.consistent) ++bad;
                   };
                   const Calibration sl = make_special_lagrangian(3);
                   const Calibration k2 = make_kahler(2);
                   // A complex line {(z, 0, 0)} under SL; a complex line under omega.
                   Matrix T(6, 2);
                   T.setZero();
                   T(0, 0) = 1.0;
                   T(1, 1) = 1.0;
                   check(sl, T);
                   Matrix L(4, 2);
                   L.setZero();
                   L(0, 0) = 1.0;
                   L(1, 1) = 1.0;
                   check(k2, L);
                   check(k2, Matrix(detail::random_matrix(4, rng).leftCols(1)));
                   d = std::to_string(bad) + " of " + std::to_string(total) + " pairs disagree";
                   return static_cast<double>(bad);
                 }});
  inv.push_back({"strict_kernel_is_free", S, 0.0, [](std::uint64_t seed, std::string& d) {
                   // P_N for a free subspace T is strictly psh with kernel T.
                   const OptOptions o = detail::suite_options(seed);
                   const Calibration sl = make_special_lagrangian(3);
                   Matrix T = Matrix::Zero(6, 2);
                   T(0, 0) = 1.0;
                   T(1, 1) = 1.0;
                   const Matrix H = Matrix::Identity(6, 6) - T * T.transpose();
                   const Jet2 j(0.0, Vector::Zero(6), H);
                   const PshReport r = psh_classify(j, sl, o);
                   Eigen::SelfAdjointEigenSolver<Matrix> es(H);
                   Matrix K(6, 0);
                   for (int k = 0; k < 6; ++k)
                     if (std::abs(es.eigenvalues()[k]) < 1e-10) {
                       K.conservativeResize(6, K.cols() + 1);
                       K.col(K.cols() - 1) = es.eigenvectors().col(k);
                     }
                   const bool ok = r.cls == PshClass::strictly_psh && free_test(K, sl, o).free;
                   d = std::string("class ") + to_string(r.cls);
                   return ok ? 0.0 : 1.0;
                 }});
  inv.push_back({"hull_monotone", S, 0.0, [](std::uint64_t seed, std::string& d) {
                   const OptOptions o = detail::suite_options(seed);
                   auto rng = detail::rng_for(seed, 34);
                   const Calibration c = torus_calibration();
                   int bad = 0;
                   for (int t = 0; t < 2; ++t) {
                     HullProblem hp{{}, Vector::Zero(3), c};
                     for (int k = 0; k < 6; ++k) hp.points.push_back(detail::random_vector(3, rng));
                     hp.query = 0.25 * (hp.points[0] + hp.points[1] + hp.points[2] + hp.points[3]);
                     const HullReport a = quad_hull_membership(hp, o);
                     hp.points.push_back(detail::random_vector(3, rng));
                     const HullReport b = quad_hull_membership(hp, o);
                     if (a.verdict == Verdict::inside && b.verdict != Verdict::inside) ++bad;
                     for (const HullReport* r : {&a, &b})
                       if (r->verdict == Verdict::outside) {
                         const double m = trace_margin(r->separator->Q, c, Sense::min, o).value;
                         if (m < -1e-8 || (*r->separator)(hp.query) <= 0.0) ++bad;
                       }
                   }
                   d = std::to_string(bad) + " violations";
                   return static_cast<double>(bad);
                 }});
  return inv;
}

inline std::vector<std::string> suite_names() { return {"identities", "cones", "convexity", "all"}; }

inline std::vector<Invariant> invariants_for(const std::string& suite) {
  if (suite == "identities") return identity_invariants();
  if (suite == "cones") return cone_invariants();
  if (suite == "convexity") return convexity_invariants();
  if (suite == "all") {
    std::vector<Invariant> all = identity_invariants();
    for (auto& i : cone_invariants()) all.push_back(std::move(i));
    for (auto& i : convexity_invariants()) all.push_back(std::move(i));
    return all;
  }
  throw std::invalid_argument("unknown suite '" + suite + "' (expected identities, cones, convexity or all)");
}

inline SuiteReport run_suite(const std::string& suite, std::uint64_t seed) {
  SuiteReport rep;
  rep.suite = suite;
  rep.seed = seed;
  for (const Invariant& inv : invariants_for(suite)) {
    InvariantResult r;
    r.name = inv.name;
    r.suite = inv.suite;
    r.threshold = inv.threshold;
    try {
      r.residual = inv.run(seed, r.detail);
      r.pass = r.residual <= inv.threshold;
    } catch (const std::exception& e) {
      r.pass = false;
      r.residual = std::numeric_limits<double>::infinity();
      r.detail = std::string("exception: ") + e.what();
    }
    (r.pass ? rep.passed : rep.failed)++;
    rep.results.push_back(std::move(r));
  }
  return rep;
}

}  // namespace calgeo::verify
