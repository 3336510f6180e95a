#pragma once

#include <json.hpp>

#include "core/error.hpp"
#include "core/matrix.hpp"

namespace tal {

// Checkpoint containers store every tensor as {"shape":[r,c],"data":[...]}.
// nlohmann round-trips doubles exactly (shortest representation), so the
// stored precision is lossless.

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"shape", {m.rows(), m.cols()}}, {"data", m.data()}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const int rows = j.at("shape").at(0).get<int>();
  const int cols = j.at("shape").at(1).get<int>();
  Matrix m(rows, cols);
  const auto& data = j.at("data");
  if (static_cast<int>(data.size()) != rows * cols)
    throw ParseError("checkpoint tensor size does not match its shape");
  for (size_t i = 0; i < data.size(); ++i) m.data()[i] = data.at(i).get<double>();
  return m;
}

inline nlohmann::json vec_to_json(const Vec& v) {
  return {{"shape", {static_cast<int>(v.size())}}, {"data", v}};
}

inline Vec vec_from_json(const nlohmann::json& j) {
  const int n = j.at("shape").at(0).get<int>();
  Vec v = j.at("data").get<Vec>();
  if (static_cast<int>(v.size()) != n)
    throw ParseError("checkpoint tensor size does not match its shape");
  return v;
}

}  // namespace tal
