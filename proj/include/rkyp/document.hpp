#pragma once

// JSON system documents.
//
//   {
//     "name": "example",
//     "A": [[[re, im], ...], ...],   // arrays of rows, entries [re, im]
//     "B": ..., "C": ..., "D": ...,
//     "candidates": [{"name": "H1", "H": [[[re, im], ...], ...]}]   // optional
//   }

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rkyp/error.hpp"
#include "rkyp/opcore.hpp"
#include "rkyp/sysmodel.hpp"

namespace rkyp {

struct NamedCandidate {
  std::string name;
  Matrix h;

  bool operator==(const NamedCandidate&) const = default;
};

struct SystemDocument {
  std::string name;
  Matrix A, B, C, D;
  std::vector<NamedCandidate> candidates;

  SystemRealization system() const { return SystemRealization(A, B, C, D); }

  const NamedCandidate* find_candidate(std::string_view wanted) const {
    for (const NamedCandidate& c : candidates) {
      if (c.name == wanted) return &c;
    }
    return nullptr;
  }

  bool operator==(const SystemDocument& o) const {
    return name == o.name && A == o.A && B == o.B && C == o.C && D == o.D &&
           candidates == o.candidates;
  }
};

namespace internal {

inline Error parse_error(const std::string& field, const std::string& what) {
  return Error(ErrorCode::kParseError, "field '" + field + "': " + what);
}

inline Complex parse_complex(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw parse_error(field, "expected a [re, im] pair of numbers");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Matrix parse_matrix(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw parse_error(field, "expected an array of rows");
  if (j.empty()) throw parse_error(field, "matrix is empty");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw parse_error(field + "[0]", "row is empty or not an array");
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string row_field = field + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) throw parse_error(row_field, "row is not an array");
    if (j[r].size() != cols) {
      throw parse_error(row_field, "row has " + std::to_string(j[r].size()) +
                                       " entries, expected " +
                                       std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = parse_complex(
          j[r][c], row_field + "[" + std::to_string(c) + "]");
    }
  }
  if (!m.allFinite()) throw parse_error(field, "entries must be finite");
  return m;
}

// Line number of a byte offset, for JSON syntax errors.
inline std::size_t line_of(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace internal

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      row.push_back({m(r, c).real(), m(r, c).imag()});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

inline Vector vector_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw internal::parse_error(field, "expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) =
        internal::parse_complex(j[i], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

/// Validates a parsed JSON value against the document schema. Dimension
/// inconsistencies raise DimensionMismatch, everything else ParseError.
inline SystemDocument parse_system_json(const nlohmann::json& j) {
  if (!j.is_object()) throw internal::parse_error("<root>", "expected an object");
  SystemDocument doc;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw internal::parse_error("name", "expected a string");
    doc.name = j["name"].get<std::string>();
  }
  for (const char* key : {"A", "B", "C", "D"}) {
    if (!j.contains(key)) throw internal::parse_error(key, "missing");
  }
  doc.A = internal::parse_matrix(j["A"], "A");
  doc.B = internal::parse_matrix(j["B"], "B");
  doc.C = internal::parse_matrix(j["C"], "C");
  doc.D = internal::parse_matrix(j["D"], "D");
  (void)doc.system();  // dimension checks

  if (j.contains("candidates")) {
    const nlohmann::json& cands = j["candidates"];
    if (!cands.is_array()) throw internal::parse_error("candidates", "expected an array");
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const std::string field = "candidates[" + std::to_string(i) + "]";
      const nlohmann::json& c = cands[i];
      if (!c.is_object() || !c.contains("name") || !c["name"].is_string() ||
          !c.contains("H")) {
        throw internal::parse_error(field, "expected {\"name\": string, \"H\": matrix}");
      }
      NamedCandidate nc{c["name"].get<std::string>(),
                        internal::parse_matrix(c["H"], field + ".H")};
      internal::throw_unless(
          nc.h.rows() == doc.A.rows() && nc.h.cols() == doc.A.rows(),
          ErrorCode::kDimensionMismatch,
          field + ".H must be " + std::to_string(doc.A.rows()) + "x" +
              std::to_string(doc.A.rows()));
      doc.candidates.push_back(std::move(nc));
    }
  }
  return doc;
}

inline SystemDocument parse_system_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(internal::line_of(text, e.byte)) +
                    ": " + e.what());
  }
  return parse_system_json(j);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SystemDocument parse_system(const std::string& path) {
  return parse_system_text(read_file(path));
}

inline nlohmann::json to_json(const SystemDocument& doc) {
  nlohmann::json j;
  j["name"] = doc.name;
  j["A"] = matrix_to_json(doc.A);
  j["B"] = matrix_to_json(doc.B);
  j["C"] = matrix_to_json(doc.C);
  j["D"] = matrix_to_json(doc.D);
  if (!doc.candidates.empty()) {
    nlohmann::json cands = nlohmann::json::array();
    for (const NamedCandidate& c : doc.candidates) {
      cands.push_back({{"name", c.name}, {"H", matrix_to_json(c.h)}});
    }
    j["candidates"] = std::move(cands);
  }
  return j;
}

/// Serialized form. Doubles are printed in shortest round-trip form, so
/// parse_system_text(write_system(doc)) == doc for finite entries.
inline std::string write_system(const SystemDocument& doc) {
  return to_json(doc).dump(2);
}

/// Input file for `simulate`: {"x0": [[re, im], ...], "inputs": [[[re, im],
/// ...], ...]}.
struct SimulationInputs {
  Vector x0;
  std::vector<Vector> inputs;
};

inline SimulationInputs parse_inputs_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(internal::line_of(text, e.byte)) +
                    ": " + e.what());
  }
  if (!j.is_object() || !j.contains("x0") || !j.contains("inputs") ||
      !j["inputs"].is_array()) {
    throw internal::parse_error("<root>", "expected {\"x0\": ..., \"inputs\": [...]}");
  }
  SimulationInputs out;
  out.x0 = vector_from_json(j["x0"], "x0");
  for (std::size_t k = 0; k < j["inputs"].size(); ++k) {
    out.inputs.push_back(
        vector_from_json(j["inputs"][k], "inputs[" + std::to_string(k) + "]"));
  }
  return out;
}

}  // namespace rkyp
