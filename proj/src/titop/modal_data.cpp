#include "flexsc/titop/modal_data.hpp"

#include <Eigen/Eigenvalues>

#include "flexsc/common/error.hpp"

namespace flexsc {

using nlohmann::json;

Matrix3d skew(const Vector3d& v) {
  Matrix3d s;
  s << 0.0, -v(2), v(1), v(2), 0.0, -v(0), -v(1), v(0), 0.0;
  return s;
}

Matrix6d twist_transport(const Vector3d& r) {
  Matrix6d t = Matrix6d::Identity();
  t.topRightCorner<3, 3>() = skew(r);
  return t;
}

Matrix6d rigid_mass_matrix(double m, const Vector3d& r, const Matrix3d& j_g) {
  const Matrix3d rs = skew(r);
  Matrix6d mm;
  mm.topLeftCorner<3, 3>() = m * Matrix3d::Identity();
  mm.topRightCorner<3, 3>() = -m * rs;
  mm.bottomLeftCorner<3, 3>() = m * rs;
  const Matrix3d jp = j_g - m * rs * rs;
  mm.bottomRightCorner<3, 3>() = 0.5 * (jp + jp.transpose());
  return mm;
}

Matrix6d ModalAppendageData::residual_mass() const {
  if (lp.rows() == 0) return mr;
  return mr - lp.transpose() * lp;
}

Vector3d ModalAppendageData::center_of_mass() const {
  const double m = mr(0, 0);
  const Matrix3d s = mr.bottomLeftCorner<3, 3>() / m;
  return Vector3d(s(2, 1), s(0, 2), s(1, 0));
}

void validate(const ModalAppendageData& d) {
  const Index n = d.n_modes();
  const std::string who = "appendage '" + d.name + "': ";
  if (d.damping.size() != n) throw ValidationError(who + "damping length differs from frequency count");
  if (d.lp.rows() != n || (n > 0 && d.lp.cols() != 6)) throw ValidationError(who + "L_P must be n_modes x 6");
  for (Index k = 0; k < n; ++k) {
    if (!(d.freq(k) > 0.0)) throw ValidationError(who + "frequency " + std::to_string(k) + " is not positive");
    if (!(d.damping(k) > 0.0 && d.damping(k) < 1.0))
      throw ValidationError(who + "damping " + std::to_string(k) + " outside (0, 1)");
  }
  for (const auto& p : d.ports)
    if (p.phi_c.rows() != 6 || p.phi_c.cols() != n)
      throw ValidationError(who + "Phi_C of port '" + p.name + "' must be 6 x n_modes");
  const double scale = d.mr.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw ValidationError(who + "rigid mass is zero");
  if ((d.mr - d.mr.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw ValidationError(who + "rigid mass matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(d.mr);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw ValidationError(who + "rigid mass matrix is not positive definite");
  Eigen::SelfAdjointEigenSolver<Matrix6d> er(d.residual_mass());
  if (er.eigenvalues().minCoeff() < -1e-9 * scale)
    throw ValidationError(who + "residual mass is not positive semidefinite");
}

ModalAppendageData scale_frequencies(const ModalAppendageData& d, const VectorXd& delta) {
  if (delta.size() != d.n_modes())
    throw ValidationError("scale_frequencies: delta length " + std::to_string(delta.size()) + " != " +
                          std::to_string(d.n_modes()) + " modes of '" + d.name + "'");
  ModalAppendageData out = d;
  for (Index k = 0; k < d.n_modes(); ++k) {
    if (!(1.0 + delta(k) > 0.0)) throw ValidationError("scale_frequencies: 1 + delta must be positive");
    out.freq(k) = d.freq(k) * (1.0 + delta(k));
  }
  return out;
}

json to_json(const ModalAppendageData& d) {
  json j;
  j["name"] = d.name;
  j["n_modes"] = d.n_modes();
  j["freq_rad_s"] = std::vector<double>(d.freq.data(), d.freq.data() + d.freq.size());
  j["damping"] = std::vector<double>(d.damping.data(), d.damping.data() + d.damping.size());
  json lp = json::array();
  for (Index k = 0; k < d.lp.rows(); ++k) {
    json row = json::array();
    for (Index c = 0; c < 6; ++c) row.push_back(d.lp(k, c));
    lp.push_back(row);
  }
  j["Lp"] = lp;
  json ports = json::array();
  for (const auto& p : d.ports) {
    json jp;
    jp["name"] = p.name;
    json phi = json::array();
    for (Index r = 0; r < 6; ++r) {
      json row = json::array();
      for (Index k = 0; k < p.phi_c.cols(); ++k) row.push_back(p.phi_c(r, k));
      phi.push_back(row);
    }
    jp["PhiC"] = phi;
    jp["CP_vector"] = {p.cp(0), p.cp(1), p.cp(2)};
    ports.push_back(jp);
  }
  j["ports"] = ports;
  json mr = json::array();
  for (Index r = 0; r < 6; ++r) {
    json row = json::array();
    for (Index c = 0; c < 6; ++c) row.push_back(d.mr(r, c));
    mr.push_back(row);
  }
  j["Mr"] = mr;
  return j;
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ValidationError(where + ": unknown key '" + it.key() + "'");
  }
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  return j.at(key);
}

}  // namespace

ModalAppendageData modal_data_from_json(const json& j) {
  const std::string where = "modal data";
  check_keys(j, {"name", "n_modes", "freq_rad_s", "damping", "Lp", "ports", "Mr"}, where);
  ModalAppendageData d;
  try {
    d.name = need(j, "name", where).get<std::string>();
    const Index n = need(j, "n_modes", where).get<Index>();
    const auto f = need(j, "freq_rad_s", where).get<std::vector<double>>();
    if (static_cast<Index>(f.size()) != n) throw ValidationError(where + ": freq_rad_s length != n_modes");
    d.freq = Eigen::Map<const VectorXd>(f.data(), n);
    if (j.contains("damping")) {
      const auto z = j.at("damping").get<std::vector<double>>();
      if (static_cast<Index>(z.size()) != n) throw ValidationError(where + ": damping length != n_modes");
      d.damping = Eigen::Map<const VectorXd>(z.data(), n);
    } else {
      d.damping = VectorXd::Constant(n, 0.005);
    }
    const auto lp = need(j, "Lp", where).get<std::vector<std::vector<double>>>();
    if (static_cast<Index>(lp.size()) != n) throw ValidationError(where + ": Lp must have n_modes rows");
    d.lp = MatrixXd(n, 6);
    for (Index k = 0; k < n; ++k) {
      if (lp[k].size() != 6) throw ValidationError(where + ": Lp rows must have 6 entries");
      for (Index c = 0; c < 6; ++c) d.lp(k, c) = lp[k][c];
    }
    if (j.contains("ports")) {
      for (const auto& jp : j.at("ports")) {
        check_keys(jp, {"name", "PhiC", "CP_vector"}, where + " port");
        ModalPort p;
        p.name = need(jp, "name", where).get<std::string>();
        const auto phi = need(jp, "PhiC", where).get<std::vector<std::vector<double>>>();
        if (phi.size() != 6) throw ValidationError(where + ": PhiC must have 6 rows");
        p.phi_c = MatrixXd(6, n);
        for (Index r = 0; r < 6; ++r) {
          if (static_cast<Index>(phi[r].size()) != n) throw ValidationError(where + ": PhiC rows must have n_modes");
          for (Index k = 0; k < n; ++k) p.phi_c(r, k) = phi[r][k];
        }
        const auto cp = need(jp, "CP_vector", where).get<std::vector<double>>();
        if (cp.size() != 3) throw ValidationError(where + ": CP_vector must have 3 entries");
        p.cp = Vector3d(cp[0], cp[1], cp[2]);
        d.ports.push_back(p);
      }
    }
    const auto mr = need(j, "Mr", where).get<std::vector<std::vector<double>>>();
    if (mr.size() != 6) throw ValidationError(where + ": Mr must be 6 x 6");
    for (Index r = 0; r < 6; ++r) {
      if (mr[r].size() != 6) throw ValidationError(where + ": Mr must be 6 x 6");
      for (Index c = 0; c < 6; ++c) d.mr(r, c) = mr[r][c];
    }
  } catch (const json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
  validate(d);
  return d;
}

}  // namespace flexsc
