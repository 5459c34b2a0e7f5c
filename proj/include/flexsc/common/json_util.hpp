#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "flexsc/common/error.hpp"

namespace flexsc::jsonio {

using nlohmann::json;

/// Rejects keys outside `allowed`; `where` prefixes the message.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ValidationError(where + ": unknown key '" + it.key() + "'");
  }
}

/// Reads j[key] into out when present.
template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

inline void read_vec3(const json& j, const char* key, Eigen::Vector3d& out, const std::string& where) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read(j, key, v, where);
  if (v.size() != 3) throw ValidationError(where + "." + key + ": expected 3 numbers");
  out = Eigen::Vector3d(v[0], v[1], v[2]);
}

inline void read_mat3(const json& j, const char* key, Eigen::Matrix3d& out, const std::string& where) {
  if (!j.contains(key)) return;
  std::vector<std::vector<double>> m;
  read(j, key, m, where);
  if (m.size() != 3) throw ValidationError(where + "." + key + ": expected a 3 x 3 array");
  for (int r = 0; r < 3; ++r) {
    if (m[static_cast<std::size_t>(r)].size() != 3) throw ValidationError(where + "." + key + ": expected a 3 x 3 array");
    for (int c = 0; c < 3; ++c) out(r, c) = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
}

inline json vec3(const Eigen::Vector3d& v) { return json::array({v(0), v(1), v(2)}); }

inline json mat(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

}  // namespace flexsc::jsonio
