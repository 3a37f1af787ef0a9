#pragma once

// Private helpers shared by the JSON loaders.

#include "json.hpp"
#include <string>

#include "sentinel/lti.hpp"

namespace sentinel::io::detail {

using json = nlohmann::json;

inline json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

inline const json& require(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) {
    throw InputError(ctx + ": missing field '" + key + "'");
  }
  return j.at(key);
}

inline double number(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw InputError(ctx + ": expected a number");
  return j.get<double>();
}

inline Index count(const json& j, const std::string& ctx) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw InputError(ctx + ": expected a non-negative integer");
  }
  return static_cast<Index>(j.get<long long>());
}

/// Nested row arrays; an empty array is accepted for any zero-size shape.
inline Matrix matrix(const json& j, Index rows, Index cols, const std::string& ctx) {
  if (!j.is_array()) throw InputError(ctx + ": expected an array of rows");
  Matrix m(rows, cols);
  if (rows == 0 || cols == 0) {
    bool ok = j.empty() || static_cast<Index>(j.size()) == rows;
    for (const auto& r : j) ok = ok && r.is_array() && r.empty();
    if (!ok) throw DimensionError(ctx + ": expected an empty " + std::to_string(rows) +
                                  "x" + std::to_string(cols) + " matrix");
    return m;
  }
  if (static_cast<Index>(j.size()) != rows) {
    throw DimensionError(ctx + ": expected " + std::to_string(rows) + " rows, got " +
                         std::to_string(j.size()));
  }
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw DimensionError(ctx + ": row " + std::to_string(r + 1) + " should have " +
                           std::to_string(cols) + " entries");
    }
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = number(row[static_cast<std::size_t>(c)], ctx);
    }
  }
  return m;
}

/// Shape taken from the data itself (non-empty, rectangular).
inline Matrix matrix(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw InputError(ctx + ": expected a non-empty array of rows");
  }
  return matrix(j, static_cast<Index>(j.size()), static_cast<Index>(j[0].size()), ctx);
}

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Vector vector(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw InputError(ctx + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = number(j[k], ctx);
  return v;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline void check_format(const json& j, const std::string& format, const std::string& ctx) {
  if (!j.is_object()) throw InputError(ctx + ": top level must be an object");
  if (j.contains("format") && j.at("format") != format) {
    throw InputError(ctx + ": format is '" + j.at("format").dump() + "', expected '" +
                     format + "'");
  }
  if (j.contains("version") && j.at("version") != 1) {
    throw InputError(ctx + ": unsupported version " + j.at("version").dump());
  }
}

}  // namespace sentinel::io::detail
