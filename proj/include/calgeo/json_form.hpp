#pragma once

// JSON encoding of forms, multivectors, matrices and planes.
//
//   form:  {"n": 4, "p": 2, "terms": [{"idx": [0, 1], "c": 1.0}, ...]}
//   plane: {"n": 4, "p": 2, "frame": [[row0...], [row1...], ...]}
//
// Doubles are written in shortest round-trip form, so save/load is exact.

#include "calgeo/exterior.hpp"
#include "calgeo/grassmann.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace calgeo {

using Json = nlohmann::json;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline const Json& require(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

inline int require_int(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_number_integer()) throw SchemaError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

inline double as_number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  return v.get<double>();
}

}  // namespace detail

template <class K>
Json to_json(const Alternating<K>& a, double drop_below = 0.0) {
  Json terms = Json::array();
  for (int r = 0; r < a.size(); ++r) {
    const double c = a.coeff(r);
    if (c == 0.0 || std::abs(c) < drop_below) continue;
    terms.push_back({{"idx", unrank(r, a.dim(), a.degree()).indices}, {"c", c}});
  }
  return {{"n", a.dim()}, {"p", a.degree()}, {"terms", terms}};
}

template <class K>
Alternating<K> alternating_from_json(const Json& j, const std::string& where = "form") {
  const int n = detail::require_int(j, "n", where);
  const int p = detail::require_int(j, "p", where);
  if (n < 0 || p < 0 || p > n) throw SchemaError(where + ": invalid (n, p)");
  if (n > kMaxDim)
    throw SchemaError(where + ": n = " + std::to_string(n) + " exceeds capacity " +
                      std::to_string(kMaxDim));
  Alternating<K> a(n, p);
  const Json& terms = detail::require(j, "terms", where);
  if (!terms.is_array()) throw SchemaError(where + ".terms: expected an array");
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const std::string tw = where + ".terms[" + std::to_string(t) + "]";
    const Json& idx = detail::require(terms[t], "idx", tw);
    if (!idx.is_array() || static_cast<int>(idx.size()) != p)
      throw SchemaError(tw + ".idx: expected " + std::to_string(p) + " indices");
    MultiIndex mi;
    for (const auto& v : idx) {
      if (!v.is_number_integer()) throw SchemaError(tw + ".idx: indices must be integers");
      mi.indices.push_back(v.get<int>());
    }
    for (int k = 0; k < p; ++k) {
      if (mi.indices[k] < 0 || mi.indices[k] >= n)
        throw SchemaError(tw + ".idx: index " + std::to_string(mi.indices[k]) +
                          " outside [0, " + std::to_string(n) + ")");
      if (k > 0 && mi.indices[k] <= mi.indices[k - 1])
        throw SchemaError(tw + ".idx: indices must be strictly increasing");
    }
    const double c = detail::as_number(detail::require(terms[t], "c", tw), tw + ".c");
    a.coeffs()[rank_of(mi, n)] += c;
  }
  return a;
}

inline Form form_from_json(const Json& j, const std::string& where = "form") {
  return alternating_from_json<FormTag>(j, where);
}

inline Multivector multivector_from_json(const Json& j, const std::string& where = "multivector") {
  return alternating_from_json<VectorTag>(j, where);
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& where, Eigen::Index cols = -1) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows > 0 && cols < 0) {
    if (!j[0].is_array()) throw SchemaError(where + "[0]: expected an array");
    cols = static_cast<Eigen::Index>(j[0].size());
  }
  if (cols < 0) cols = 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string rw = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols)
      throw SchemaError(rw + ": expected " + std::to_string(cols) + " entries");
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = detail::as_number(j[i][k], rw + "[" + std::to_string(k) + "]");
  }
  return m;
}

inline Vector vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = detail::as_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json to_json(const OrientedPlane& xi) {
  return {{"n", xi.dim()}, {"p", xi.degree()}, {"frame", matrix_to_json(xi.frame())}};
}

inline OrientedPlane plane_from_json(const Json& j, const std::string& where = "plane") {
  const int n = detail::require_int(j, "n", where);
  const int p = detail::require_int(j, "p", where);
  const Matrix F = matrix_from_json(detail::require(j, "frame", where), where + ".frame", p);
  if (F.rows() != n) throw SchemaError(where + ".frame: expected " + std::to_string(n) + " rows");
  try {
    return OrientedPlane(F);
  } catch (const ShapeError& e) {
    throw SchemaError(where + ".frame: " + e.what());
  }
}

inline Json to_json(const OptReport& r) {
  Json planes = Json::array();
  for (std::size_t i = 0; i < r.argplanes.size(); ++i) {
    Json pj = to_json(r.argplanes[i]);
    pj["value"] = r.argvalues[i];
    planes.push_back(pj);
  }
  return {{"value", r.value},       {"argplanes", planes},
          {"restarts", r.restarts}, {"converged", r.converged},
          {"gradient_norm", r.gradient_norm}, {"seed", r.seed},
          {"stat_tol", r.stat_tol}, {"tol_plane", r.tol_plane},
          {"feasible", r.feasible}, {"method", r.method}};
}

inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(source + ": " + e.what());
  }
}

}  // namespace calgeo
