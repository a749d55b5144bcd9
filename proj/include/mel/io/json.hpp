#pragma once

// JSON mapping of library objects. Complex numbers are written as [re, im];
// matrices as a list of rows.

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

#include <json.hpp>

#include "mel/error.hpp"
#include "mel/quantum_core.hpp"

namespace mel::io {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form.
inline std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Renyi orders are keyed by their shortest decimal form ("0.5", "2", ...).
inline Json to_json(const EntanglementReport& r) {
  Json j;
  j["schmidt_eigenvalues"] = r.schmidt_eigenvalues;
  j["von_neumann"] = r.von_neumann;
  Json renyi = Json::object();
  for (const auto& [q, s] : r.renyi) renyi[number(q)] = s;
  j["renyi"] = std::move(renyi);
  j["purity"] = r.purity;
  if (r.sector_spectra) {
    Json sec = Json::object();
    for (const auto& [q, ev] : *r.sector_spectra) sec[std::to_string(q)] = ev;
    j["sector_spectra"] = std::move(sec);
  } else {
    j["sector_spectra"] = nullptr;
  }
  return j;
}

inline Json to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back({m(i, k).real(), m(i, k).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Complex complex_from_json(const Json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  if (v.is_object() && v.contains("re")) return {v.at("re").get<double>(), v.value("im", 0.0)};
  throw ValidationError("matrix entry must be a number, [re, im] or {\"re\", \"im\"}");
}

/// Accepts a bare list of rows or an object with a "matrix" member.
inline ComplexMatrix matrix_from_json(const Json& j) {
  const Json& rows = j.is_object() && j.contains("matrix") ? j.at("matrix") : j;
  if (!rows.is_array() || rows.empty()) throw ValidationError("matrix must be a non-empty list of rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  ComplexMatrix m(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Json& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
      throw DimensionError("matrix row " + std::to_string(i), static_cast<std::size_t>(c), row.size());
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

}  // namespace mel::io
