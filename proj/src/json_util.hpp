#pragma once

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "staticmap/errors.hpp"

namespace staticmap::detail {

using json = nlohmann::json;

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValueError(where + ": expected an object");
}

/// Rejects keys outside `allowed`.
inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValueError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline Eigen::Vector3d vec3(const json& j, const std::string& where) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ValueError(where + ": expected 3 values");
  return {v[0], v[1], v[2]};
}

inline json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace staticmap::detail
