#pragma once

#include "compopt/common.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace compopt {

inline nlohmann::json vec_to_json(const Vec &v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vec vec_from_json(const nlohmann::json &j) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array()) throw InvalidInput("expected a number or an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput("expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

} // namespace compopt
