// calgeo command-line front end. Every run prints (or writes to --out) one
// JSON report envelope; the payload inside it depends only on the inputs,
// the seed and the tool version.

#include <calgeo/calgeo.hpp>
#include <calgeo/verify.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace calgeo;

enum class Status { ok, flagged, error };

const char* to_string(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::flagged: return "flagged";
    case Status::error: return "error";
  }
  return "error";
}

int exit_code(Status s) { return s == Status::ok ? 0 : s == Status::flagged ? 2 : 1; }

struct Outcome {
  Json payload;
  Status status = Status::ok;
  std::string csv;  // filled when the command supports --format csv
};

// Flags shared by the subcommands that use them.
struct Common {
  std::string calibration;
  std::string jet;
  std::uint64_t seed = 0;
  int restarts = 0;  // 0: library default
  std::optional<double> tol;
  std::optional<double> tol_plane;
  std::string out;
  std::string format = "json";
  int threads = 0;  // 0: CALGEO_THREADS or 1
};

// ---------------------------------------------------------------------------
// Inputs

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Inline JSON when the text starts with '{' or '[', otherwise a file path.
Json json_arg(const std::string& text, const std::string& flag) {
  if (text.empty()) throw std::invalid_argument(flag + " is required");
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '['))
    return parse_json_text(text, flag);
  return parse_json_text(read_file(text), text);
}

/// builtin:NAME?k=v&k=v, else inline JSON, else a calibration file.
Calibration calibration_arg(const std::string& text) {
  static const std::string prefix = "builtin:";
  if (text.empty()) throw std::invalid_argument("--calibration is required");
  if (text.rfind(prefix, 0) == 0) {
    const std::string rest = text.substr(prefix.size());
    const auto q = rest.find('?');
    const std::string name = rest.substr(0, q);
    Json params = Json::object();
    if (q != std::string::npos) {
      std::stringstream ss(rest.substr(q + 1));
      std::string kv;
      while (std::getline(ss, kv, '&')) {
        if (kv.empty()) continue;
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
          throw std::invalid_argument("--calibration: expected key=value, got '" + kv + "'");
        params[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    }
    return make_calibration(name, params);
  }
  return calibration_from_json(json_arg(text, "--calibration"), "calibration");
}

Surface surface_from_json(const Json& j) {
  const std::string where = "surface";
  const Json& type = calgeo::detail::require(j, "type", where);
  if (!type.is_string()) throw SchemaError("surface.type: expected a string");
  const std::string t = type.get<std::string>();
  if (t == "affine") {
    AffineSurface s;
    s.point = vector_from_json(calgeo::detail::require(j, "point", where), "surface.point");
    s.basis = j.contains("basis") ? matrix_from_json(j["basis"], "surface.basis")
                                  : Matrix(s.point.size(), 0);
    if (s.basis.cols() > 0 && s.basis.rows() != s.point.size())
      throw SchemaError("surface.basis: expected one row per coordinate");
    return s;
  }
  if (t == "sphere") {
    SphereSurface s;
    s.center = vector_from_json(calgeo::detail::require(j, "center", where), "surface.center");
    s.r = calgeo::detail::as_number(calgeo::detail::require(j, "r", where), "surface.r");
    return s;
  }
  if (t == "torus") {
    TorusSurface s;
    s.R = calgeo::detail::as_number(calgeo::detail::require(j, "R", where), "surface.R");
    s.r = calgeo::detail::as_number(calgeo::detail::require(j, "r", where), "surface.r");
    if (j.contains("axis")) s.axis = calgeo::detail::require_int(j, "axis", where);
    return s;
  }
  if (t == "graph") {
    GraphSurface s;
    s.Q = matrix_from_json(calgeo::detail::require(j, "Q", where), "surface.Q");
    s.b = j.contains("b") ? vector_from_json(j["b"], "surface.b") : Vector(Vector::Zero(s.Q.rows()));
    return s;
  }
  throw SchemaError("surface.type: expected affine, sphere, torus or graph, got '" + t + "'");
}

/// A plane ({n, p, frame}) or a multivector ({n, p, terms}).
Multivector target_from_json(const Json& j) {
  if (j.is_object() && j.contains("frame")) return plane_from_json(j, "target").multivector();
  return multivector_from_json(j, "target");
}

// ---------------------------------------------------------------------------
// Helpers

OptOptions options_of(const Common& c) {
  OptOptions o;
  o.seed = c.seed;
  if (c.restarts > 0) o.restarts = c.restarts;
  if (c.tol_plane) o.tol_plane = *c.tol_plane;
  o.threads = c.threads > 0 ? c.threads : default_threads();
  return o;
}

Calibration load_cal(const Common& c) {
  Calibration cal = calibration_arg(c.calibration);
  if (c.tol_plane) cal.tol_plane = *c.tol_plane;
  return cal;
}

Json cal_summary(const Calibration& cal) {
  Json j = {{"name", cal.name}, {"n", cal.dim()}, {"p", cal.degree()},
            {"comass_certified", cal.comass_certified}, {"tol_plane", cal.tol_plane}};
  if (!cal.params.empty()) j["params"] = cal.params;
  return j;
}

Json config_of(const Common& c, const std::string& sub) {
  const OptOptions o = options_of(c);
  Json j = {{"subcommand", sub},     {"seed", c.seed},
            {"restarts", o.restarts}, {"tol", c.tol ? Json(*c.tol) : Json(nullptr)},
            {"tol_plane", o.tol_plane}, {"format", c.format},
            {"threads", o.threads}};
  if (!c.calibration.empty()) j["calibration"] = c.calibration;
  if (!c.jet.empty()) j["jet"] = c.jet;
  if (!c.out.empty()) j["out"] = c.out;
  return j;
}

std::string csv_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// ---------------------------------------------------------------------------
// Subcommands

struct Extra {
  int count = 10;
  int samples = 0;
  int trials = 8;
  int planes = 0;
  int resolution = 16;
  int max_iters = 60;
  double R = 2.0;
  double r = 1.0;
  bool find_threshold = false;
  double lambda_target = -0.1;
  double angle_tol = 1e-4;
  std::optional<double> delta;
  bool stabilize = false;
  std::string target, plane_pair, line, subspace, surface, point, hull, suite = "identities";
};

Outcome cmd_comass(const Common& c, const Extra&) {
  const Calibration cal = load_cal(c);
  const OptReport r = comass(cal.form, options_of(c));
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)}, {"comass", to_json(r)}};
  o.status = r.converged ? Status::ok : Status::flagged;
  return o;
}

Outcome cmd_planes(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const auto planes = calibrated_planes(cal, x.count, options_of(c), true);
  Outcome o;
  Json arr = Json::array();
  std::ostringstream csv;
  csv << "index,value,cousin_residual,frame\n";
  for (std::size_t k = 0; k < planes.size(); ++k) {
    Json pj = to_json(planes[k]);
    const double v = evaluate(cal.form, planes[k]);
    const double g = cousin_gradient_norm(cal.form, planes[k]);
    pj["value"] = v;
    pj["cousin_residual"] = g;
    arr.push_back(pj);
    csv << k << "," << csv_number(v) << "," << csv_number(g) << ",\"" << pj["frame"].dump() << "\"\n";
  }
  o.payload = {{"calibration", cal_summary(cal)},
               {"requested", x.count},
               {"found", planes.size()},
               {"planes", arr}};
  o.csv = csv.str();
  o.status = static_cast<int>(planes.size()) < x.count ? Status::flagged : Status::ok;
  return o;
}

Outcome cmd_check_psh(const Common& c, const Extra&) {
  const Calibration cal = load_cal(c);
  const Jet2 jet = jet_from_json(json_arg(c.jet, "--jet"));
  const PshReport r = psh_classify(jet, cal, options_of(c), c.tol.value_or(1e-6));
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)}, {"psh", to_json(r)}};
  o.status = r.cls == PshClass::indeterminate ? Status::flagged : Status::ok;
  return o;
}

Outcome cmd_laplacian(const Common& c, const Extra&) {
  const Calibration cal = load_cal(c);
  const Jet2 jet = jet_from_json(json_arg(c.jet, "--jet"));
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)},
               {"laplacian", phi_laplacian(jet, cal)},
               {"dd_phi", to_json(phi_hessian_point(jet, cal))},
               {"d_phi", to_json(d_phi_point(jet, cal))}};
  return o;
}

Outcome cmd_ellipticity(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const EllipticityReport r = ellipticity_report(cal, options_of(c), c.tol.value_or(1e-8), x.planes);
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)},
               {"min_symbol_norm", r.min_symbol_norm},
               {"reduced_min_norm", r.reduced_min_norm},
               {"dd_elliptic", r.dd_elliptic},
               {"reduced_elliptic", r.reduced_elliptic},
               {"planes_used", r.planes_used},
               {"note", r.note}};
  return o;
}

Outcome cmd_witness(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const WitnessResult w = nonconvex_psh_witness(cal, options_of(c), x.lambda_target);
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)},
               {"found", w.found},
               {"Q", w.found ? matrix_to_json(w.Q) : Json(nullptr)},
               {"lambda_min", w.lambda_min},
               {"margin", w.margin},
               {"lambda_target", x.lambda_target},
               {"iterations", w.iterations},
               {"working_planes", w.working_planes},
               {"note", w.note}};
  o.status = w.found ? Status::ok : Status::flagged;
  return o;
}

Outcome cmd_plh_space(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const int samples = x.samples > 0 ? x.samples : min_plh_samples(cal.dim());
  const QuadraticSpace q = pluriharmonic_quadratic_space(cal, samples, options_of(c));
  Json basis = Json::array();
  for (const auto& B : q.basis) basis.push_back(matrix_to_json(B));
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)}, {"dimension", q.dimension},
               {"basis", basis},                  {"residual", q.residual},
               {"rank_gap", q.rank_gap},          {"rank_stable", q.rank_stable},
               {"samples", q.samples}};
  o.status = q.rank_stable ? Status::ok : Status::flagged;
  return o;
}

Json richness_json(const RichnessResult& r) {
  return {{"found", r.found},
          {"best", r.best},
          {"sign", r.sign},
          {"xi0", r.xi0 ? to_json(*r.xi0) : Json(nullptr)},
          {"plane", r.plane ? to_json(*r.plane) : Json(nullptr)}};
}

Outcome cmd_richness(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const OptOptions opt = options_of(c);
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)}};
  if (!x.plane_pair.empty() || !x.line.empty()) {
    if (x.plane_pair.empty() || x.line.empty())
      throw std::invalid_argument("richness: --pair and --line must be given together");
    const Matrix P = matrix_from_json(json_arg(x.plane_pair, "--pair"), "pair", 2);
    const Vector l = vector_from_json(json_arg(x.line, "--line"), "line");
    const RichnessResult r = richness_check(cal, P, l, opt);
    o.payload["result"] = richness_json(r);
    o.status = r.found ? Status::ok : Status::flagged;
    return o;
  }
  // Random (P, l) pairs drawn from the seed.
  std::mt19937_64 rng(c.seed + 5);
  Json trials = Json::array();
  int found = 0;
  for (int t = 0; t < x.trials; ++t) {
    Matrix P(cal.dim(), 2);
    for (int k = 0; k < 2; ++k) P.col(k) = random_unit_vector(cal.dim(), rng);
    P = orthonormalize(P);
    const Vector l = P * random_unit_vector(2, rng);
    const RichnessResult r = richness_check(cal, P, l, opt);
    found += r.found;
    Json tj = richness_json(r);
    tj["pair"] = matrix_to_json(P);
    tj["line"] = vector_to_json(l);
    trials.push_back(tj);
  }
  o.payload["trials"] = trials;
  o.payload["found"] = found;
  o.payload["total"] = x.trials;
  o.status = found == x.trials ? Status::ok : Status::flagged;
  return o;
}

Outcome cmd_cone(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const Multivector t = target_from_json(json_arg(x.target, "--target"));
  ConeOptions co = default_cone_options();
  co.opt = options_of(c);
  if (c.restarts <= 0) co.opt.restarts = default_cone_options().opt.restarts;
  co.max_iters = x.max_iters;
  const ConeCertificate cert = positive_cone_membership(t, cal, co);
  const CertificateCheck chk = verify_certificate(cert, t, cal, c.seed + 424242);
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)},
               {"target", to_json(t)},
               {"certificate", to_json(cert)},
               {"check",
                {{"ok", chk.ok},
                 {"residual", chk.residual},
                 {"separator_margin", chk.separator_margin},
                 {"pairing", chk.pairing},
                 {"reason", chk.reason}}}};
  o.status = cert.verdict == Verdict::undecided || !chk.ok ? Status::flagged : Status::ok;
  return o;
}

Outcome cmd_span(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const OptOptions opt = options_of(c);
  const SubspaceBasis s = x.samples > 0 ? lambda_span(cal, x.samples, opt) : lambda_span(cal, opt);
  Outcome o;
  Json basis = Json::array();
  for (Eigen::Index k = 0; k < s.basis.cols(); ++k)
    basis.push_back(to_json(Form(cal.dim(), cal.degree(), s.basis.col(k))));
  o.payload = {{"calibration", cal_summary(cal)},
               {"ambient", s.ambient},
               {"dimension", s.dim()},
               {"ambient_dimension", binomial(cal.dim(), cal.degree())},
               {"rank_gap", std::isfinite(s.rank_gap) ? Json(s.rank_gap) : Json(nullptr)},
               {"rank_stable", s.rank_stable},
               {"singular_values", vector_to_json(s.singular_values)},
               {"basis", basis}};
  o.status = s.rank_stable ? Status::ok : Status::flagged;
  return o;
}

Outcome cmd_normality(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const NormalityReport r = normality_check(cal, x.trials, options_of(c), x.angle_tol);
  Json trials = Json::array();
  for (const auto& t : r.trials)
    trials.push_back({{"normal", vector_to_json(t.normal)},
                      {"dim_restricted", t.dim_restricted},
                      {"dim_pulled", t.dim_pulled},
                      {"angle", t.angle},
                      {"feasible", t.feasible}});
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)},
               {"normal", r.normal},
               {"worst_angle", r.worst_angle},
               {"angle_tol", x.angle_tol},
               {"trials", trials}};
  return o;
}

Outcome cmd_plh_mod_d(const Common& c, const Extra&) {
  const Calibration cal = load_cal(c);
  const Jet2 jet = jet_from_json(json_arg(c.jet, "--jet"));
  const ModDResult m = pluriharmonic_mod_d_test(jet, cal, options_of(c));
  const double tol = c.tol.value_or(1e-8);
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)},
               {"residual", m.residual},
               {"pluriharmonic_mod_d", m.residual <= tol},
               {"tolerance", tol},
               {"alpha", to_json(m.alpha)},
               {"sigma_norm", m.sigma_norm},
               {"degenerate_gradient", m.degenerate_gradient}};
  return o;
}

Outcome cmd_boundary(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const OptOptions opt = options_of(c);
  const SurfaceJet s(jet_from_json(json_arg(c.jet, "--jet")));
  const BoundaryReport r = boundary_margin(s, cal, opt, c.tol.value_or(1e-6));
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)}, {"boundary", to_json(r)}};
  o.payload["principal_curvatures"] = vector_to_json(second_fundamental(s).principal_curvatures());
  o.status = r.cls == ConvexClass::indeterminate || !r.converged ? Status::flagged : Status::ok;
  if (x.delta) {
    const OptReport d = log_delta_margin(s, cal, *x.delta, opt);
    o.payload["log_delta"] = {{"delta", *x.delta}, {"margin", d.value}, {"converged", d.converged}};
  }
  if (x.stabilize) {
    try {
      const Stabilization st = stabilize_defining(s, cal, opt);
      o.payload["stabilization"] = {
          {"A", st.A}, {"margin_at_A", st.margin_at_A}, {"evaluations", st.evaluations}};
    } catch (const NotStrictlyConvex& e) {
      o.payload["stabilization"] = {{"error", e.what()}};
    }
  }
  return o;
}

Json sample_json(const TorusSample& s) {
  return {{"u", s.u}, {"v", s.v}, {"x", vector_to_json(s.x)}, {"vacuous", s.vacuous}, {"margin", s.margin}};
}

Outcome cmd_torus_scan(const Common& c, const Extra& x) {
  const OptOptions opt = options_of(c);
  const double tol = c.tol.value_or(1e-6);
  Outcome o;
  if (x.find_threshold) {
    const double width = 1e-3 * x.R;
    const double r = torus_threshold(x.R, x.resolution, 0.25 * x.R, 0.75 * x.R, width, opt);
    o.payload = {{"R", x.R}, {"resolution", x.resolution}, {"threshold_r", r},
                 {"ratio", r / x.R}, {"width", width}};
    return o;
  }
  const TorusScan s = torus_scan(x.R, x.r, x.resolution, opt, tol);
  Json samples = Json::array();
  std::ostringstream csv;
  csv << "u,v,x,y,z,vacuous,margin\n";
  for (const auto& t : s.samples) {
    samples.push_back(sample_json(t));
    csv << csv_number(t.u) << "," << csv_number(t.v) << "," << csv_number(t.x[0]) << ","
        << csv_number(t.x[1]) << "," << csv_number(t.x[2]) << "," << (t.vacuous ? 1 : 0) << ","
        << (t.vacuous ? std::string() : csv_number(t.margin)) << "\n";
  }
  o.payload = {{"R", x.R},
               {"r", x.r},
               {"resolution", x.resolution},
               {"calibration", "dx^dy"},
               {"convex", s.convex},
               {"min_margin", s.min_margin},
               {"non_vacuous", s.non_vacuous},
               {"witness", s.witness ? sample_json(*s.witness) : Json(nullptr)},
               {"tolerance", tol},
               {"samples", samples}};
  o.csv = csv.str();
  return o;
}

Outcome cmd_free(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const Matrix T = matrix_from_json(json_arg(x.subspace, "--subspace"), "subspace");
  const FreeReport r = free_test(T, cal, options_of(c), c.tol.value_or(1e-6));
  Outcome o;
  o.payload = {{"calibration", cal_summary(cal)}, {"free", r.free},
               {"sup_phi", r.sup_phi},            {"isotropic", r.isotropic},
               {"normal_margin", r.normal_margin}, {"consistent", r.consistent}};
  o.status = r.consistent ? Status::ok : Status::flagged;
  return o;
}

Outcome cmd_dist_jet(const Common&, const Extra& x) {
  const Surface s = surface_from_json(json_arg(x.surface, "--surface"));
  const Vector p = vector_from_json(json_arg(x.point, "--point"), "point");
  const Jet2 j = dist_sq_jet(s, p);
  Outcome o;
  o.payload = {{"jet", to_json(j)}};
  return o;
}

Outcome cmd_hull(const Common& c, const Extra& x) {
  const Calibration cal = load_cal(c);
  const Json h = json_arg(x.hull, "--hull");
  HullProblem hp;
  hp.cal = cal;
  const Json& pts = calgeo::detail::require(h, "points", "hull");
  const Matrix P = matrix_from_json(pts, "hull.points");
  for (Eigen::Index i = 0; i < P.rows(); ++i) hp.points.emplace_back(P.row(i).transpose());
  hp.query = vector_from_json(calgeo::detail::require(h, "query", "hull"), "hull.query");
  const HullReport r = quad_hull_membership(hp, options_of(c), c.tol.value_or(1e-6), x.max_iters);
  Outcome o;
  Json sep = nullptr;
  if (r.separator)
    sep = {{"Q", matrix_to_json(r.separator->Q)},
           {"b", vector_to_json(r.separator->b)},
           {"c", r.separator->c},
           {"value_at_query", (*r.separator)(hp.query)}};
  o.payload = {{"calibration", cal_summary(cal)},
               {"verdict", calgeo::to_string(r.verdict)},
               {"value", r.value},
               {"separator", sep},
               {"cone_margin", r.cone_margin},
               {"iterations", r.iterations},
               {"working_planes", r.working_planes},
               {"label", r.label}};
  o.status = r.verdict == Verdict::undecided ? Status::flagged : Status::ok;
  return o;
}

Outcome cmd_verify(const Common& c, const Extra& x) {
  const verify::SuiteReport rep = verify::run_suite(x.suite, c.seed);
  Outcome o;
  o.payload = verify::to_json(rep);
  std::ostringstream csv;
  csv << "name,suite,pass,residual,threshold\n";
  for (const auto& r : rep.results)
    csv << r.name << "," << r.suite << "," << (r.pass ? 1 : 0) << "," << csv_number(r.residual) << ","
        << csv_number(r.threshold) << "\n";
  o.csv = csv.str();
  o.status = rep.ok() ? Status::ok : Status::error;
  return o;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef CALGEO_VERSION
  const std::string version = CALGEO_VERSION;
#else
  const std::string version = calgeo::kVersion;
#endif
  CLI::App app{"calgeo: calibrations, phi-plurisubharmonic tests and positive cones"};
  app.set_version_flag("--version", version);
  app.require_subcommand(1);

  Common common;
  Extra extra;

  enum Uses : unsigned { kCal = 1, kJet = 2, kCsv = 4 };
  struct Entry {
    std::string name;
    std::string help;
    unsigned uses;
    Outcome (*fn)(const Common&, const Extra&);
    CLI::App* sub = nullptr;
  };
  std::vector<Entry> entries = {
      {"comass", "comass and maximizing planes of a calibration", kCal, cmd_comass},
      {"planes", "distinct calibrated planes", kCal | kCsv, cmd_planes},
      {"check-psh", "classify a 2-jet as phi-plurisubharmonic", kCal | kJet, cmd_check_psh},
      {"laplacian", "phi-Laplacian, d^phi and dd^phi of a 2-jet", kCal | kJet, cmd_laplacian},
      {"ellipticity", "symbol norms of dd^phi and of the reduced operator", kCal, cmd_ellipticity},
      {"witness", "psh quadratic with a negative eigenvalue", kCal, cmd_witness},
      {"plh-space", "space of phi-pluriharmonic quadratics", kCal, cmd_plh_space},
      {"richness", "l ^ xi0 calibrated planes for 2-planes P and lines l in P", kCal, cmd_richness},
      {"cone", "membership in the cone generated by G(phi), with a certificate", kCal, cmd_cone},
      {"span", "linear span of G(phi)", kCal, cmd_span},
      {"normality", "restriction of the span to hyperplanes", kCal, cmd_normality},
      {"plh-mod-d", "is dd^phi f of the form df ^ alpha on the span", kCal | kJet, cmd_plh_mod_d},
      {"boundary", "phi-convexity of a level set {rho = 0}", kCal | kJet, cmd_boundary},
      {"torus-scan", "phi-convexity of a torus in R^3 for dx ^ dy", kCsv, cmd_torus_scan},
      {"free", "is a subspace phi-free", kCal, cmd_free},
      {"dist-jet", "2-jet of half the squared distance to a surface", 0, cmd_dist_jet},
      {"hull", "quadratic phi-convex hull membership", kCal, cmd_hull},
      {"verify", "built-in invariant suites", kCsv, cmd_verify},
  };

  for (auto& e : entries) {
    CLI::App* s = app.add_subcommand(e.name, e.help);
    e.sub = s;
    if (e.uses & kCal)
      s->add_option("--calibration", common.calibration,
                    "builtin:NAME?key=value&..., inline JSON or a calibration file")
          ->required();
    if (e.uses & kJet) s->add_option("--jet", common.jet, "2-jet as inline JSON or a file")->required();
    s->add_option("--seed", common.seed, "64-bit seed");
    s->add_option("--restarts", common.restarts, "optimizer restarts")->check(CLI::PositiveNumber);
    s->add_option("--tol", common.tol, "decision tolerance");
    s->add_option("--tol-plane", common.tol_plane, "phi(xi) >= 1 - tol-plane counts as calibrated")
        ->check(CLI::PositiveNumber);
    s->add_option("--out", common.out, "report path (default: standard output)");
    s->add_option("--format", common.format, "json or csv")
        ->check(CLI::IsMember(e.uses & kCsv ? std::vector<std::string>{"json", "csv"}
                                            : std::vector<std::string>{"json"}));
    s->add_option("--threads", common.threads, "worker threads (default: CALGEO_THREADS or 1)")
        ->check(CLI::PositiveNumber);
  }
  auto find = [&](const std::string& n) {
    for (auto& e : entries)
      if (e.name == n) return e.sub;
    return static_cast<CLI::App*>(nullptr);
  };
  find("planes")->add_option("--count", extra.count, "number of planes")->check(CLI::PositiveNumber);
  find("ellipticity")->add_option("--planes", extra.planes, "planes for the reduced test");
  find("witness")->add_option("--lambda-target", extra.lambda_target, "required smallest eigenvalue");
  find("plh-space")->add_option("--samples", extra.samples, "sampled phi-planes");
  find("span")->add_option("--samples", extra.samples, "sampled phi-planes");
  find("richness")->add_option("--pair", extra.plane_pair, "n x 2 matrix spanning P (JSON)");
  find("richness")->add_option("--line", extra.line, "vector l in P (JSON)");
  find("richness")->add_option("--trials", extra.trials, "random pairs when --pair is absent");
  find("cone")->add_option("--target", extra.target, "plane or multivector (JSON)")->required();
  find("cone")->add_option("--max-iters", extra.max_iters, "cutting-plane rounds");
  find("normality")->add_option("--trials", extra.trials, "random hyperplanes");
  find("normality")->add_option("--angle-tol", extra.angle_tol, "principal angle tolerance");
  find("boundary")->add_option("--delta", extra.delta, "also report the log-delta margin");
  find("boundary")->add_flag("--stabilize", extra.stabilize, "find A with rho + A rho^2 psh");
  find("torus-scan")->add_option("--R", extra.R, "core radius");
  find("torus-scan")->add_option("--r", extra.r, "tube radius");
  find("torus-scan")->add_option("--resolution", extra.resolution, "grid points per angle (multiple of 4)");
  find("torus-scan")->add_flag("--find-threshold", extra.find_threshold, "bisect for the critical r");
  find("free")->add_option("--subspace", extra.subspace, "n x k matrix of spanning columns (JSON)")->required();
  find("dist-jet")->add_option("--surface", extra.surface, "surface (JSON)")->required();
  find("dist-jet")->add_option("--point", extra.point, "point (JSON array)")->required();
  find("hull")->add_option("--hull", extra.hull, "{points, query} (JSON)")->required();
  find("hull")->add_option("--max-iters", extra.max_iters, "cutting-plane rounds");
  find("verify")
      ->add_option("--suite", extra.suite, "identities, cones, convexity or all")
      ->check(CLI::IsMember(verify::suite_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const Entry* chosen = nullptr;
  for (const auto& e : entries)
    if (e.sub->parsed()) chosen = &e;

  Json envelope;
  envelope["tool"] = "calgeo";
  envelope["version"] = version;
  Json cmd = Json::array();
  for (int i = 1; i < argc; ++i) cmd.push_back(argv[i]);
  envelope["command"] = cmd;
  envelope["config"] = config_of(common, chosen->name);
  envelope["seed"] = common.seed;

  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  std::string error;
  try {
    out = chosen->fn(common, extra);
  } catch (const std::exception& e) {
    error = e.what();
    out.status = Status::error;
  }
  envelope["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  envelope["status"] = to_string(out.status);
  envelope["payload"] = error.empty() ? out.payload : Json(nullptr);
  if (!error.empty()) envelope["error"] = error;

  if (!error.empty()) std::cerr << "calgeo " << chosen->name << ": " << error << "\n";
  if (chosen->name == "verify" && out.status == Status::error && error.empty()) {
    for (const auto& f : out.payload["failing"]) std::cerr << "calgeo verify: failed " << f.get<std::string>() << "\n";
  }
  try {
    if (common.format == "csv" && error.empty())
      write_text(common.out, out.csv);
    else
      write_text(common.out, envelope.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "calgeo: " << e.what() << "\n";
    return 1;
  }
  return exit_code(out.status);
}
