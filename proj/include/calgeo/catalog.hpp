#pragma once

// Constant-coefficient calibrations, their symmetry algebras, plane samplers
// and file I/O.
//
// Conventions:
//   * C^m = R^{2m} with interleaved coordinates (x1, y1, ..., xm, ym) and
//     J e_{2k} = e_{2k+1}. Kaehler forms are omega(u, v) = <J u, v>.
//   * H^m = R^{4m}, one block (1, i, j, k) per quaternionic coordinate; I, J, K
//     act by right multiplication.
//   * O = R^8 with basis (1, i, j, k, e, ie, je, ke); Im O = R^7 drops the
//     real unit.
//   * double_point(m) lives on R^{2m} with x = first m coordinates.

#include "calgeo/algebra.hpp"
#include "calgeo/exterior.hpp"
#include "calgeo/grassmann.hpp"
#include "calgeo/json_form.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace calgeo {

struct Calibration {
  Form form;
  std::string name;
  std::string sampler;  // "" when no closed-form sampler is attached
  bool comass_certified = false;
  double tol_plane = 1e-6;
  std::vector<Matrix> seeds;  // known calibrated frames; not serialized
  Json params = Json::object();

  [[nodiscard]] int dim() const { return form.dim(); }
  [[nodiscard]] int degree() const { return form.degree(); }
};

class UnknownCalibration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lie algebra structure constant: [e_i, e_j] = c e_k.
struct StructureConstant {
  int i, j, k;
  double c;
};

namespace detail {

/// Coefficients of the alternation of a multilinear function f given on
/// basis tuples: a_I = (1/p!) sum_sigma sgn(sigma) f(e_{I sigma}).
inline Form alternate(int n, int p, const std::function<double(const std::vector<int>&)>& f) {
  Form a(n, p);
  const auto& masks = basis_masks(n, p);
  double fact = 1.0;
  for (int k = 2; k <= p; ++k) fact *= k;
  std::vector<int> perm(p);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    const std::vector<int> idx = MultiIndex::from_mask(masks[r]).indices;
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
      int inv = 0;
      for (int s = 0; s < p; ++s)
        for (int t = s + 1; t < p; ++t) inv += perm[s] > perm[t];
      std::vector<int> tuple(p);
      for (int s = 0; s < p; ++s) tuple[s] = idx[perm[s]];
      total += ((inv & 1) ? -1.0 : 1.0) * f(tuple);
    } while (std::next_permutation(perm.begin(), perm.end()));
    a.coeffs()[r] = total / fact;
  }
  return a;
}

inline Form two_form_of(const Matrix& J) {
  const int n = static_cast<int>(J.rows());
  Form w(n, 2);
  const auto& masks = basis_masks(n, 2);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    const auto idx = MultiIndex::from_mask(masks[r]).indices;
    w.coeffs()[r] = J(idx[1], idx[0]);  // <J e_i, e_j>
  }
  return w;
}

inline Matrix complex_structure(int m) {
  Matrix J = Matrix::Zero(2 * m, 2 * m);
  for (int k = 0; k < m; ++k) {
    J(2 * k + 1, 2 * k) = 1.0;
    J(2 * k, 2 * k + 1) = -1.0;
  }
  return J;
}

inline Form wedge_power(const Form& w, int p) {
  Form out = Form(w.dim(), 0);
  out.coeffs()[0] = 1.0;
  double fact = 1.0;
  for (int k = 1; k <= p; ++k) {
    out = wedge(out, w);
    fact *= k;
  }
  return (1.0 / fact) * out;
}

inline Matrix first_columns(int n, int p) { return Matrix::Identity(n, n).leftCols(p); }

inline int param_int(const Json& params, const std::string& key, int fallback) {
  if (!params.contains(key)) return fallback;
  const Json& v = params[key];
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    std::size_t used = 0;
    const std::string s = v.get<std::string>();
    int x = 0;
    try {
      x = std::stoi(s, &used);
    } catch (...) {
      used = 0;
    }
    if (used == s.size() && used > 0) return x;
  }
  throw std::invalid_argument("parameter '" + key + "' must be an integer");
}

inline double param_double(const Json& params, const std::string& key, double fallback) {
  if (!params.contains(key)) return fallback;
  const Json& v = params[key];
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::size_t used = 0;
    const std::string s = v.get<std::string>();
    double x = 0;
    try {
      x = std::stod(s, &used);
    } catch (...) {
      used = 0;
    }
    if (used == s.size() && used > 0) return x;
  }
  throw std::invalid_argument("parameter '" + key + "' must be a number");
}

inline std::vector<int> param_int_list(const Json& params, const std::string& key,
                                       std::vector<int> fallback) {
  if (!params.contains(key)) return fallback;
  const Json& v = params[key];
  std::vector<int> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(e.get<int>());
    return out;
  }
  std::stringstream ss(v.get<std::string>());
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forms

inline Form kahler_form(int m) { return detail::two_form_of(detail::complex_structure(m)); }

/// omega^p / p! on C^m.
inline Form kahler_power_form(int m, int p) {
  check_capacity(2 * m, 2 * p);
  return detail::wedge_power(kahler_form(m), p);
}

/// Re(e^{-i theta} dz_1 ^ ... ^ dz_m).
inline Form special_lagrangian_form(int m, double theta = 0.0) {
  check_capacity(2 * m, m);
  Form a(2 * m, m);
  for (unsigned choice = 0; choice < (1u << m); ++choice) {
    std::vector<int> idx;
    std::complex<double> c = std::polar(1.0, -theta);
    for (int k = 0; k < m; ++k) {
      const bool dy = choice & (1u << k);
      idx.push_back(2 * k + (dy ? 1 : 0));
      if (dy) c *= std::complex<double>(0.0, 1.0);
    }
    a.coeffs()[rank_of(MultiIndex{idx}, 2 * m)] += c.real();
  }
  return a;
}

/// phi(x, y, z) = <x, y z> on Im O.
inline Form associative_form() {
  const AlgebraTable O = AlgebraTable::octonions();
  auto unit = [](int a) { return Vector(Vector::Unit(8, a + 1)); };
  return detail::alternate(7, 3, [&](const std::vector<int>& t) {
    return unit(t[0]).dot(O.multiply(unit(t[1]), unit(t[2])));
  });
}

inline Form coassociative_form() { return hodge_star(associative_form()); }

/// Phi(x, y, z, w) = <x, y x z x w> with x x y x z = (x (conj(y) z) - z (conj(y) x)) / 2.
inline Form cayley_form() {
  const AlgebraTable O = AlgebraTable::octonions();
  auto triple = [&](const Vector& x, const Vector& y, const Vector& z) {
    const Vector yb = AlgebraTable::conjugate(y);
    return Vector(0.5 * (O.multiply(x, O.multiply(yb, z)) - O.multiply(z, O.multiply(yb, x))));
  };
  return detail::alternate(8, 4, [&](const std::vector<int>& t) {
    const Vector e0 = Vector::Unit(8, t[0]), e1 = Vector::Unit(8, t[1]),
                 e2 = Vector::Unit(8, t[2]), e3 = Vector::Unit(8, t[3]);
    return e0.dot(triple(e1, e2, e3));
  });
}

/// Right multiplication by the unit quaternion u (index 1, 2, 3) on H^m.
inline Matrix quaternionic_structure(int m, int unit) {
  const AlgebraTable H = AlgebraTable::quaternions();
  const Matrix R = H.right_multiplication(Vector::Unit(4, unit));
  Matrix S = Matrix::Zero(4 * m, 4 * m);
  for (int b = 0; b < m; ++b) S.block(4 * b, 4 * b, 4, 4) = R;
  return S;
}

inline Form quaternionic_form(int m) {
  check_capacity(4 * m, 4);
  Form total(4 * m, 4);
  for (int u = 1; u <= 3; ++u) {
    const Form w = detail::two_form_of(quaternionic_structure(m, u));
    total += wedge(w, w);
  }
  return (1.0 / 6.0) * total;
}

inline Form generalized_cayley_form(int m) {
  check_capacity(4 * m, 4);
  Form wi = detail::two_form_of(quaternionic_structure(m, 1));
  Form wj = detail::two_form_of(quaternionic_structure(m, 2));
  Form wk = detail::two_form_of(quaternionic_structure(m, 3));
  return 0.5 * (wedge(wi, wi) - wedge(wj, wj) - wedge(wk, wk));
}

inline Form double_point_form(int m) {
  check_capacity(2 * m, m);
  std::vector<int> xs(m), ys(m);
  std::iota(xs.begin(), xs.end(), 0);
  std::iota(ys.begin(), ys.end(), m);
  return Form::basis(2 * m, xs) + Form::basis(2 * m, ys);
}

/// dx1 ^ dx2 + lambda dx3 ^ dx4 on R^4.
inline Form two_plane_form(double lambda) {
  return Form::basis(4, {0, 1}) + lambda * Form::basis(4, {2, 3});
}

/// Unnormalized <x, [y, z]> from structure constants. Each unordered pair
/// {i, j} is listed once; [e_j, e_i] = -[e_i, e_j] is implied.
inline Form lie_bracket_form(int dim, const std::vector<StructureConstant>& constants) {
  // bracket[i][j] = [e_i, e_j] as a vector; antisymmetry is imposed.
  std::vector<Vector> bracket(dim * dim, Vector::Zero(dim));
  for (const auto& sc : constants) {
    if (sc.i < 0 || sc.j < 0 || sc.k < 0 || sc.i >= dim || sc.j >= dim || sc.k >= dim)
      throw ShapeError("lie_bracket_form: structure constant index out of range");
    bracket[sc.i * dim + sc.j][sc.k] += sc.c;
    bracket[sc.j * dim + sc.i][sc.k] -= sc.c;
  }
  return detail::alternate(dim, 3, [&](const std::vector<int>& t) {
    return bracket[t[1] * dim + t[2]][t[0]];
  });
}

inline std::vector<StructureConstant> su2_constants() {
  return {{0, 1, 2, 1.0}, {1, 2, 0, 1.0}, {2, 0, 1, 1.0}};
}

/// su(3) in the Gell-Mann basis: [e_a, e_b] = sum_c f_abc e_c.
inline std::vector<StructureConstant> su3_constants() {
  const double h = 0.5, r = std::sqrt(3.0) / 2.0;
  const std::vector<std::tuple<int, int, int, double>> f = {
      {1, 2, 3, 1.0}, {1, 4, 7, h}, {2, 4, 6, h}, {2, 5, 7, h}, {3, 4, 5, h},
      {1, 5, 6, -h},  {3, 6, 7, -h}, {4, 5, 8, r}, {6, 7, 8, r}};
  std::vector<StructureConstant> out;
  for (auto [a, b, c, v] : f) {
    // f is totally antisymmetric; emit the three cyclic brackets.
    out.push_back({a - 1, b - 1, c - 1, v});
    out.push_back({b - 1, c - 1, a - 1, v});
    out.push_back({c - 1, a - 1, b - 1, v});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Symmetries and samplers

/// Basis of {X skew : D_X phi = 0}, the Lie algebra of the stabilizer of phi
/// in SO(n).
inline std::vector<Matrix> symmetry_algebra(const Form& phi) {
  const int n = phi.dim();
  std::vector<Matrix> gens;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Matrix X = Matrix::Zero(n, n);
      X(i, j) = 1.0;
      X(j, i) = -1.0;
      gens.push_back(X);
    }
  if (gens.empty() || phi.degree() == 0) return {};
  Matrix M(phi.size(), static_cast<Eigen::Index>(gens.size()));
  for (std::size_t g = 0; g < gens.size(); ++g)
    M.col(static_cast<Eigen::Index>(g)) = derivation_extend(gens[g], phi).coeffs();
  const SubspaceBasis ker = null_space(M, 1e-9);
  std::vector<Matrix> alg;
  for (Eigen::Index c = 0; c < ker.basis.cols(); ++c) {
    Matrix X = Matrix::Zero(n, n);
    for (std::size_t g = 0; g < gens.size(); ++g) X += ker.basis(static_cast<Eigen::Index>(g), c) * gens[g];
    alg.push_back(X / std::sqrt(2.0));
  }
  return alg;
}

/// exp of a random element of the algebra; a product of several factors to
/// spread the distribution over the (compact) group.
inline Matrix random_group_element(const std::vector<Matrix>& alg, int n, std::mt19937_64& rng) {
  Matrix g = Matrix::Identity(n, n);
  if (alg.empty()) return g;
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int f = 0; f < 3; ++f) {
    Matrix X = Matrix::Zero(n, n);
    for (const auto& b : alg) X += normal(rng) * b;
    g = Matrix(X.exp()) * g;
  }
  return g;
}

/// Haar-random element of U(m) (or SU(m)) as a real 2m x 2m matrix in the
/// interleaved coordinates.
inline Matrix random_unitary(int m, bool special, std::mt19937_64& rng) {
  using C = std::complex<double>;
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = C(normal(rng), normal(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(G);
  Eigen::MatrixXcd Q = qr.householderQ();
  const Eigen::MatrixXcd R = qr.matrixQR();
  for (int j = 0; j < m; ++j) {
    const C d = R(j, j);
    if (std::abs(d) > 0) Q.col(j) *= d / std::abs(d);
  }
  if (special) {
    const C det = Q.determinant();
    Q.col(0) /= det / std::abs(det);
  }
  Matrix U(2 * m, 2 * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double a = Q(i, j).real(), b = Q(i, j).imag();
      U(2 * i, 2 * j) = a;
      U(2 * i, 2 * j + 1) = -b;
      U(2 * i + 1, 2 * j) = b;
      U(2 * i + 1, 2 * j + 1) = a;
    }
  return U;
}

// ---------------------------------------------------------------------------
// Construction

/// Runs a comass computation, sets comass_certified and records maximizers as
/// seed planes when none are known.
inline OptReport certify(Calibration& cal, const OptOptions& opt = {}) {
  OptReport rep = comass(cal.form, opt);
  cal.comass_certified = rep.converged && std::abs(rep.value - 1.0) <= 1e-6;
  if (cal.seeds.empty())
    for (const auto& xi : rep.argplanes)
      if (evaluate(cal.form, xi) >= 1.0 - cal.tol_plane) cal.seeds.push_back(xi.frame());
  return rep;
}

namespace detail {

inline Calibration with_seed(Form form, std::string name, std::string sampler, Matrix seed,
                             bool certified) {
  Calibration c;
  c.form = std::move(form);
  c.name = std::move(name);
  c.sampler = std::move(sampler);
  // Orientation of the seed is chosen so that phi(seed) = +1.
  if (pair(c.form, wedge_columns(seed)) < 0) seed.col(0) *= -1.0;
  c.seeds.push_back(std::move(seed));
  c.comass_certified = certified;
  return c;
}

inline OptOptions certify_options() {
  OptOptions o;
  o.restarts = 16;
  o.seed = 0;
  return o;
}

}  // namespace detail

inline Calibration make_kahler(int m) {
  return detail::with_seed(kahler_form(m), "kahler", "unitary", detail::first_columns(2 * m, 2),
                           true);
}

inline Calibration make_kahler_power(int m, int p) {
  if (p < 1 || p > m) throw ShapeError("kahler_power: need 1 <= p <= m");
  return detail::with_seed(kahler_power_form(m, p), "kahler_power", "unitary",
                           detail::first_columns(2 * m, 2 * p), true);
}

inline Calibration make_special_lagrangian(int m, double theta = 0.0) {
  if (m < 1) throw ShapeError("special_lagrangian: need m >= 1");
  Matrix F = Matrix::Zero(2 * m, m);
  const double a = theta / m;
  for (int k = 0; k < m; ++k) {
    F(2 * k, k) = std::cos(a);
    F(2 * k + 1, k) = std::sin(a);
  }
  return detail::with_seed(special_lagrangian_form(m, theta), "special_lagrangian",
                           "special_unitary", F, true);
}

inline Calibration make_associative() {
  Calibration c = detail::with_seed(associative_form(), "associative", "g2",
                                    detail::first_columns(7, 3), false);
  certify(c, detail::certify_options());
  return c;
}

inline Calibration make_coassociative() {
  Matrix F = Matrix::Identity(7, 7).rightCols(4);
  Calibration c = detail::with_seed(coassociative_form(), "coassociative", "g2", F, false);
  certify(c, detail::certify_options());
  return c;
}

inline Calibration make_cayley() {
  Calibration c =
      detail::with_seed(cayley_form(), "cayley", "spin7", detail::first_columns(8, 4), false);
  certify(c, detail::certify_options());
  return c;
}

inline Calibration make_quaternionic(int m) {
  Calibration c = detail::with_seed(quaternionic_form(m), "quaternionic", "symplectic",
                                    detail::first_columns(4 * m, 4), false);
  certify(c, detail::certify_options());
  return c;
}

inline Calibration make_generalized_cayley(int m) {
  // A quaternion line; detail::with_seed fixes its orientation.
  Calibration c = detail::with_seed(generalized_cayley_form(m), "generalized_cayley",
                                    m == 2 ? "spin7" : "", detail::first_columns(4 * m, 4),
                                    false);
  certify(c, detail::certify_options());
  return c;
}

inline Calibration make_double_point(int m) {
  Matrix X = detail::first_columns(2 * m, m);
  Matrix Y = Matrix::Identity(2 * m, 2 * m).rightCols(m);
  Calibration c = detail::with_seed(double_point_form(m), "double_point", "", X, false);
  c.seeds.push_back(Y);
  certify(c, detail::certify_options());
  return c;
}

inline Calibration make_two_plane(double lambda) {
  if (std::abs(lambda) > 1.0) throw ShapeError("two_plane: need |lambda| <= 1");
  return detail::with_seed(two_plane_form(lambda), "two_plane", "", detail::first_columns(4, 2),
                           true);
}

/// dx_{i1} ^ ... ^ dx_{ip} on R^n.
inline Calibration make_coordinate(int n, const std::vector<int>& idx) {
  check_capacity(n, static_cast<int>(idx.size()));
  Matrix F = Matrix::Zero(n, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    if (idx[c] < 0 || idx[c] >= n) throw ShapeError("coordinate: index out of range");
    F(idx[c], static_cast<Eigen::Index>(c)) = 1.0;
  }
  return detail::with_seed(Form::basis(n, idx), "coordinate", "", F, true);
}

inline Calibration make_volume(int n) {
  return detail::with_seed(volume<FormTag>(n), "volume", "", Matrix::Identity(n, n), true);
}

/// <x, [y, z]> divided by its computed comass.
inline Calibration make_lie_three_form(int dim, const std::vector<StructureConstant>& constants,
                                       const OptOptions& opt = detail::certify_options()) {
  Calibration c;
  c.name = "lie_three_form";
  const Form raw = lie_bracket_form(dim, constants);
  const OptReport rep = comass(raw, opt);
  if (rep.value <= 0.0) throw ShapeError("lie_three_form: bracket form vanishes");
  c.form = (1.0 / rep.value) * raw;
  c.params["normalization"] = rep.value;
  for (const auto& xi : rep.argplanes) c.seeds.push_back(xi.frame());
  certify(c, opt);
  return c;
}

/// Builds a catalog calibration by name. Unknown parameters are rejected.
inline Calibration make_calibration(const std::string& name, const Json& params = Json::object()) {
  using detail::param_double;
  using detail::param_int;
  static const std::map<std::string, std::vector<std::string>> allowed = {
      {"kahler", {"n"}},
      {"kahler_power", {"n", "p"}},
      {"special_lagrangian", {"n", "theta"}},
      {"associative", {}},
      {"coassociative", {}},
      {"cayley", {}},
      {"quaternionic", {"n"}},
      {"generalized_cayley", {"n"}},
      {"double_point", {"n"}},
      {"two_plane", {"lambda"}},
      {"coordinate", {"n", "idx"}},
      {"volume", {"n"}},
      {"lie_three_form", {"algebra"}},
  };
  const auto it = allowed.find(name);
  if (it == allowed.end()) throw UnknownCalibration("unknown calibration '" + name + "'");
  for (const auto& [key, value] : params.items()) {
    (void)value;
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
      throw std::invalid_argument("calibration '" + name + "' has no parameter '" + key + "'");
  }
  Calibration c;
  if (name == "kahler") {
    c = make_kahler(param_int(params, "n", 2));
  } else if (name == "kahler_power") {
    c = make_kahler_power(param_int(params, "n", 4), param_int(params, "p", 2));
  } else if (name == "special_lagrangian") {
    const double theta = param_double(params, "theta", 0.0);
    if (theta < 0.0 || theta >= 2 * M_PI)
      throw std::invalid_argument("special_lagrangian: theta must lie in [0, 2 pi)");
    c = make_special_lagrangian(param_int(params, "n", 3), theta);
  } else if (name == "associative") {
    c = make_associative();
  } else if (name == "coassociative") {
    c = make_coassociative();
  } else if (name == "cayley") {
    c = make_cayley();
  } else if (name == "quaternionic") {
    c = make_quaternionic(param_int(params, "n", 2));
  } else if (name == "generalized_cayley") {
    c = make_generalized_cayley(param_int(params, "n", 2));
  } else if (name == "double_point") {
    c = make_double_point(param_int(params, "n", 3));
  } else if (name == "two_plane") {
    c = make_two_plane(param_double(params, "lambda", 0.5));
  } else if (name == "coordinate") {
    c = make_coordinate(param_int(params, "n", 3),
                        detail::param_int_list(params, "idx", {0, 1}));
  } else if (name == "volume") {
    c = make_volume(param_int(params, "n", 3));
  } else {
    const std::string alg = params.value("algebra", std::string("su2"));
    if (alg == "su2")
      c = make_lie_three_form(3, su2_constants());
    else if (alg == "su3")
      c = make_lie_three_form(8, su3_constants());
    else
      throw std::invalid_argument("lie_three_form: algebra must be su2 or su3");
  }
  for (const auto& [key, value] : params.items()) c.params[key] = value;
  return c;
}

inline std::vector<std::string> catalog_names() {
  return {"kahler",       "kahler_power", "special_lagrangian", "associative", "coassociative",
          "cayley",       "quaternionic", "generalized_cayley", "double_point", "two_plane",
          "coordinate",   "volume",       "lie_three_form"};
}

// ---------------------------------------------------------------------------
// Plane sampling

/// Seed planes: the recorded ones, or comass maximizers.
inline std::vector<Matrix> seed_frames(const Calibration& cal, const OptOptions& opt = {}) {
  if (!cal.seeds.empty()) return cal.seeds;
  std::vector<Matrix> out;
  const OptReport rep = comass(cal.form, opt);
  for (const auto& xi : rep.argplanes)
    if (evaluate(cal.form, xi) >= 1.0 - cal.tol_plane) out.push_back(xi.frame());
  return out;
}

/// Local ascent of phi until its cousin gradient vanishes to 1e-12. Starting
/// near G(phi) this lands on a phi-plane to full working precision (a value
/// test alone would only locate the plane to about the square root of it).
inline Matrix polish_onto(const Form& phi, Matrix F) {
  LocalOptions lo;
  lo.stat_tol = 1e-12;
  lo.max_iters = 500;
  return ascend(Objective::linear(phi), std::move(F), lo).frame;
}

/// Up to `count` calibrated planes from the group orbit of the seed planes.
/// Duplicates are possible when the orbit is finite.
inline std::vector<OrientedPlane> sample_phi_planes(const Calibration& cal, int count,
                                                    std::uint64_t seed,
                                                    const OptOptions& opt = {}) {
  const std::vector<Matrix> seeds = seed_frames(cal, opt);
  std::vector<OrientedPlane> out;
  if (seeds.empty() || count <= 0) return out;
  const int n = cal.dim();
  std::vector<Matrix> alg;
  const bool unitary = cal.sampler == "unitary" || cal.sampler == "special_unitary";
  if (!unitary) alg = symmetry_algebra(cal.form);
  std::vector<Matrix> frames(count);
  parallel_for(count, opt.threads, [&](int s) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(s));
    const Matrix& F0 = seeds[s % seeds.size()];
    Matrix g = unitary ? random_unitary(n / 2, cal.sampler == "special_unitary", rng)
                       : random_group_element(alg, n, rng);
    frames[s] = polish_onto(cal.form, orthonormalize(g * F0));
  });
  for (auto& F : frames) out.emplace_back(std::move(F), 1e-8);
  return out;
}

class PlaneBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Distinct calibrated planes (phi >= 1 - tol_plane), clustered by principal
/// angle. Uses the group-orbit sampler first, then multi-start ascent.
inline std::vector<OrientedPlane> calibrated_planes(const Calibration& cal, int count,
                                                    const OptOptions& opt = {},
                                                    bool allow_fewer = false) {
  std::vector<OrientedPlane> pool;
  for (auto& xi : sample_phi_planes(cal, 2 * count, opt.seed, opt))
    if (evaluate(cal.form, xi) >= 1.0 - cal.tol_plane) pool.push_back(std::move(xi));
  auto dedupe = [&] {
    std::vector<OrientedPlane> kept;
    for (std::size_t k : cluster_planes(pool, opt.cluster_radius)) kept.push_back(pool[k]);
    pool = std::move(kept);
  };
  dedupe();
  if (static_cast<int>(pool.size()) < count) {
    for (const auto& r : multistart_ascend(Objective::linear(cal.form), opt))
      if (r.value >= 1.0 - cal.tol_plane) pool.emplace_back(r.frame, 1e-8);
    dedupe();
  }
  if (static_cast<int>(pool.size()) > count) pool.resize(count);
  if (!allow_fewer && static_cast<int>(pool.size()) < count)
    throw PlaneBudgetError("calibrated_planes: found " + std::to_string(pool.size()) +
                           " distinct planes for '" + cal.name + "', requested " +
                           std::to_string(count));
  return pool;
}

// ---------------------------------------------------------------------------
// Files

inline Json to_json(const Calibration& c) {
  Json j = to_json(c.form);
  j["name"] = c.name;
  j["sampler"] = c.sampler.empty() ? Json(nullptr) : Json(c.sampler);
  j["comass_certified"] = c.comass_certified;
  j["tol_plane"] = c.tol_plane;
  if (!c.params.empty()) j["params"] = c.params;
  return j;
}

inline Calibration calibration_from_json(const Json& j, const std::string& where = "calibration") {
  Calibration c;
  c.form = form_from_json(j, where);
  const Json& name = detail::require(j, "name", where);
  if (!name.is_string()) throw SchemaError(where + ".name: expected a string");
  c.name = name.get<std::string>();
  const Json& sampler = detail::require(j, "sampler", where);
  if (sampler.is_null()) {
    c.sampler.clear();
  } else if (sampler.is_string()) {
    c.sampler = sampler.get<std::string>();
    static const std::vector<std::string> known = {"unitary", "special_unitary", "symplectic",
                                                   "g2", "spin7"};
    if (std::find(known.begin(), known.end(), c.sampler) == known.end())
      throw SchemaError(where + ".sampler: unknown sampler '" + c.sampler + "'");
  } else {
    throw SchemaError(where + ".sampler: expected a string or null");
  }
  const Json& cert = detail::require(j, "comass_certified", where);
  if (!cert.is_boolean()) throw SchemaError(where + ".comass_certified: expected a boolean");
  c.comass_certified = cert.get<bool>();
  c.tol_plane = detail::as_number(detail::require(j, "tol_plane", where), where + ".tol_plane");
  if (j.contains("params")) c.params = j["params"];
  return c;
}

inline void save_calibration(const Calibration& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_json(c).dump(2) << "\n";
}

inline Calibration load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return calibration_from_json(parse_json_text(ss.str(), path), path);
}

}  // namespace calgeo
