#include "flexsc/bench/envision.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "flexsc/common/error.hpp"
#include "flexsc/common/json_util.hpp"
#include "flexsc/lti/frequency.hpp"
#include "flexsc/titop/assembly.hpp"
#include "flexsc/titop/beam.hpp"
#include "flexsc/titop/titop.hpp"

namespace flexsc {

using nlohmann::json;

// ---------------------------------------------------------------- design

const std::vector<std::string>& DesignVector::names() {
  static const std::vector<std::string> n{"E_Y",  "rho_Y", "B_Y",   "D_Y",   "t_Y",   "t_sP",
                                          "t_cP", "LR_Y",  "AR_P",  "R_SRS", "t_SRS", "t_cV"};
  return n;
}

namespace {

double* field(DesignVector& x, const std::string& name) {
  if (name == "E_Y") return &x.E_Y;
  if (name == "rho_Y") return &x.rho_Y;
  if (name == "B_Y") return &x.B_Y;
  if (name == "D_Y") return &x.D_Y;
  if (name == "t_Y") return &x.t_Y;
  if (name == "t_sP") return &x.t_sP;
  if (name == "t_cP") return &x.t_cP;
  if (name == "LR_Y") return &x.LR_Y;
  if (name == "AR_P") return &x.AR_P;
  if (name == "R_SRS") return &x.R_SRS;
  if (name == "t_SRS") return &x.t_SRS;
  if (name == "t_cV") return &x.t_cV;
  throw ValidationError("unknown design variable '" + name + "'");
}

struct Bound {
  const char* name;
  double lo, hi;
};

constexpr Bound kBounds[] = {
    {"E_Y", 1.1e11, 1.23e11}, {"rho_Y", 2.18e3, 4.5e3},   {"B_Y", 1.5e-2, 5e-2},     {"D_Y", 1.5e-2, 5e-2},
    {"t_Y", 1e-3, 2e-3},      {"t_sP", 2e-4, 4e-4},       {"t_cP", 1e-2, 3.5e-2},    {"LR_Y", 0.42, 1.0},
    {"AR_P", 0.75, 4.0 / 3.0}, {"R_SRS", 1.25e-2, 2e-2}, {"t_SRS", 3.8e-4, 6e-4}, {"t_cV", 5e-4, 1.5e-3},
};

}  // namespace

double DesignVector::get(const std::string& name) const { return *field(const_cast<DesignVector&>(*this), name); }

void DesignVector::set(const std::string& name, double value) { *field(*this, name) = value; }

Assignment DesignVector::to_assignment() const {
  Assignment a;
  for (const auto& n : names()) a[n] = get(n);
  return a;
}

DesignVector DesignVector::from_assignment(const Assignment& a, const DesignVector& base) {
  DesignVector x = base;
  for (const auto& [k, v] : a) x.set(k, v);
  return x;
}

DesignVector DesignVector::from_assignment(const Assignment& a) { return from_assignment(a, DesignVector{}); }

std::vector<ParameterSpec> design_specs() {
  std::vector<ParameterSpec> out;
  for (const Bound& b : kBounds) out.push_back({b.name, 0.5 * (b.lo + b.hi), b.lo, b.hi, ParameterKind::design, 1});
  return out;
}

std::vector<ParameterSpec> design_specs(const std::vector<std::string>& subset) {
  const auto all = design_specs();
  std::vector<ParameterSpec> out;
  for (const auto& n : subset) {
    auto it = std::find_if(all.begin(), all.end(), [&](const ParameterSpec& s) { return s.name == n; });
    if (it == all.end()) throw ValidationError("unknown design variable '" + n + "'");
    out.push_back(*it);
  }
  return out;
}

void validate(const DesignVector& x) {
  for (const Bound& b : kBounds) {
    const double v = x.get(b.name);
    const double tol = 1e-12 * std::abs(b.hi);
    if (!(v >= b.lo - tol && v <= b.hi + tol))
      throw ValidationError("design variable " + std::string(b.name) + " = " + std::to_string(v) + " outside [" +
                            std::to_string(b.lo) + ", " + std::to_string(b.hi) + "]");
  }
}

DesignVector design_min() {
  DesignVector x;
  for (const Bound& b : kBounds) x.set(b.name, b.lo);
  return x;
}

DesignVector design_max() {
  DesignVector x;
  for (const Bound& b : kBounds) x.set(b.name, b.hi);
  return x;
}

std::vector<ParameterSpec> structural_uncertainty_specs() {
  return {
      {"m_B", 0.0, -0.15, 0.15, ParameterKind::uncertain, 3},  {"Ixx_B", 0.0, -0.15, 0.15, ParameterKind::uncertain, 1},
      {"Iyy_B", 0.0, -0.15, 0.15, ParameterKind::uncertain, 1}, {"Izz_B", 0.0, -0.15, 0.15, ParameterKind::uncertain, 1},
      {"w1_S", 0.0, -0.25, 0.25, ParameterKind::uncertain, 4},  {"w2_S", 0.0, -0.25, 0.25, ParameterKind::uncertain, 4},
      {"w1_V", 0.0, -0.25, 0.25, ParameterKind::uncertain, 2},  {"w2_V", 0.0, -0.25, 0.25, ParameterKind::uncertain, 2},
  };
}

std::vector<ParameterSpec> uncertainty_specs() {
  auto s = structural_uncertainty_specs();
  s.push_back({"sigma4", 0.0, -1.0, 1.0, ParameterKind::uncertain, 32});
  return s;
}

// ---------------------------------------------------------------- config

double LambdaTable::operator()(double ar) const {
  validate();
  const double lo = aspect_ratio.front(), hi = aspect_ratio.back();
  const double tol = 1e-12 * std::abs(hi);
  if (!(ar >= lo - tol && ar <= hi + tol))
    throw ValidationError("AR_P = " + std::to_string(ar) + " outside the lambda table domain");
  ar = std::clamp(ar, lo, hi);
  std::size_t i = 1;
  while (i + 1 < aspect_ratio.size() && aspect_ratio[i] < ar) ++i;
  const double t = (ar - aspect_ratio[i - 1]) / (aspect_ratio[i] - aspect_ratio[i - 1]);
  return lambda[i - 1] + t * (lambda[i] - lambda[i - 1]);
}

void LambdaTable::validate() const {
  if (aspect_ratio.size() < 2 || aspect_ratio.size() != lambda.size())
    throw ValidationError("lambda_table: need at least two (aspect_ratio, lambda) pairs of equal length");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!(lambda[i] > 0.0)) throw ValidationError("lambda_table: lambda must be positive");
    if (i > 0 && !(aspect_ratio[i] > aspect_ratio[i - 1]))
      throw ValidationError("lambda_table: aspect_ratio must increase");
  }
  if (aspect_ratio.front() > 0.75 + 1e-12 || aspect_ratio.back() < 4.0 / 3.0 - 1e-12)
    throw ValidationError("lambda_table: must cover AR_P in [3/4, 4/3]");
}

double launch_frequency(const DesignVector& x, const PanelConstants& panel, const LambdaTable& table) {
  const double h = 2.0 * x.t_sP;
  const double ip = std::pow(0.5 * x.t_cP + 0.25 * h, 2);
  const double rp = 12.0 * ip / (h * h * h);
  const double rho_s = panel.rho_skin * h;
  const double rho_c = panel.rho_core * x.t_cP;
  const double beta = (rho_s + rho_c) / panel.area;
  const double lam = table(x.AR_P);
  return lam * std::sqrt(rp * panel.e * h * h * h / (12.0 * beta * std::pow(1.0 - panel.nu, 2)));
}

bool launch_passes(double omega_sto) { return omega_sto > kLaunchOmega; }

LambdaTable calibrated_lambda_table(const PanelConstants& panel) {
  LambdaTable t;
  const std::vector<double> shape{0.80, 0.92, 0.99, 1.02, 1.00, 0.90};
  for (int i = 0; i < 6; ++i) t.aspect_ratio.push_back(0.75 + (4.0 / 3.0 - 0.75) * i / 5.0);
  t.lambda = shape;
  const double w = launch_frequency(DesignVector{}, panel, t);
  for (double& l : t.lambda) l *= 1.2 * kLaunchOmega / w;
  return t;
}

namespace {

Matrix3d rot_z(double deg) { return Eigen::AngleAxisd(deg * M_PI / 180.0, Vector3d::UnitZ()).toRotationMatrix(); }
Matrix3d rot_y(double deg) { return Eigen::AngleAxisd(deg * M_PI / 180.0, Vector3d::UnitY()).toRotationMatrix(); }

}  // namespace

BenchConfig default_bench_config() {
  BenchConfig c;
  c.hub.name = "hub";
  c.hub.mass = 1173.0;
  c.hub.com = Vector3d::Zero();
  c.hub.inertia = Vector3d(2415.3, 1695.3, 2929.3).asDiagonal();
  c.sa1 = {"SA1", Vector3d(0.0, 1.3, 0.0), rot_z(90.0)};
  c.sa2 = {"SA2", Vector3d(0.0, -1.3, 0.0), rot_z(-90.0)};
  c.srs1 = {"SRS1", Vector3d(0.9, 0.0, 1.1), Matrix3d::Identity()};
  c.srs2 = {"SRS2", Vector3d(-0.9, 0.0, 1.1), rot_z(180.0)};
  c.sar = {"SAR", Vector3d(0.0, 0.0, -1.25), rot_y(90.0)};
  c.lambda = calibrated_lambda_table(c.panel);
  // Hub inertia chosen so the nominal spacecraft has kNominalInertia at B.
  static const Matrix3d hub_inertia = [c]() mutable {
    const Matrix3d target = kNominalInertia.asDiagonal();
    c.hub.inertia = target;
    const Matrix3d j = rigid_inertia(build_plant(c, DesignVector{}, 0.0, {}));
    const Matrix3d h = 2.0 * target - j;
    return Matrix3d(0.5 * (h + h.transpose()));
  }();
  c.hub.inertia = hub_inertia;
  return c;
}

void validate(const BenchConfig& cfg) {
  if (!(cfg.hub.mass > 0.0)) throw ValidationError("bench.hub.mass must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(0.5 * (cfg.hub.inertia + cfg.hub.inertia.transpose()));
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw ValidationError("bench.hub.inertia must be positive definite");
  cfg.lambda.validate();
  for (const Mount* m : {&cfg.sa1, &cfg.sa2, &cfg.srs1, &cfg.srs2, &cfg.sar})
    if ((m->dcm.transpose() * m->dcm - Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        m->dcm.determinant() < 0.0)
      throw ValidationError("bench.mounts." + m->name + ".dcm must be a rotation");
  for (int n : {cfg.modes.yoke, cfg.modes.panel, cfg.modes.srs, cfg.modes.sar})
    if (n < 0 || n > kMaxBeamModes) throw ValidationError("bench.modes: counts must be in [0, 20]");
  if (cfg.yoke_residual_flexibility && cfg.modes.yoke != 0 && cfg.modes.yoke < 4)
    throw ValidationError("bench.modes.yoke must be 0 or >= 4 with yoke_residual_flexibility");
  if (!(cfg.damping > 0.0 && cfg.damping < 1.0)) throw ValidationError("bench.damping must be in (0, 1)");
  for (const auto& [k, v] : cfg.overrides)
    if (k != "yoke" && k != "panel" && k != "srs" && k != "sar")
      throw ValidationError("bench.modal_overrides: unknown appendage '" + k + "'");
  const auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ValidationError(std::string("bench.") + what + " must be positive");
  };
  positive(cfg.yoke.base_length, "yoke.base_length");
  positive(cfg.panel.e, "panel.e");
  positive(cfg.panel.area, "panel.area");
  positive(cfg.panel.rho_skin, "panel.rho_skin");
  positive(cfg.panel.rho_core, "panel.rho_core");
  if (!(cfg.panel.nu >= 0.0 && cfg.panel.nu < 0.5)) throw ValidationError("bench.panel.nu must be in [0, 0.5)");
  if (cfg.panel.nonstructural < 0.0) throw ValidationError("bench.panel.nonstructural must be non-negative");
  positive(cfg.srs.e, "srs.e");
  positive(cfg.srs.rho, "srs.rho");
  positive(cfg.srs.length, "srs.length");
  positive(cfg.sar_panel.length, "sar.length");
  positive(cfg.sar_panel.width, "sar.width");
  positive(cfg.sar_panel.backing_ei, "sar.backing_ei");
}

namespace {

json mount_json(const Mount& m) { return {{"position", jsonio::vec3(m.position)}, {"dcm", jsonio::mat(m.dcm)}}; }

void mount_from_json(const json& j, Mount& m, const std::string& where) {
  jsonio::check_keys(j, {"position", "dcm"}, where);
  jsonio::read_vec3(j, "position", m.position, where);
  jsonio::read_mat3(j, "dcm", m.dcm, where);
}

}  // namespace

json to_json(const BenchConfig& c) {
  json j;
  j["hub"] = {{"mass", c.hub.mass}, {"com", jsonio::vec3(c.hub.com)}, {"inertia", jsonio::mat(c.hub.inertia)}};
  j["mounts"] = {{"SA1", mount_json(c.sa1)},
                 {"SA2", mount_json(c.sa2)},
                 {"SRS1", mount_json(c.srs1)},
                 {"SRS2", mount_json(c.srs2)},
                 {"SAR", mount_json(c.sar)}};
  j["yoke"] = {{"base_length", c.yoke.base_length}};
  j["panel"] = {{"e", c.panel.e},
                {"nu", c.panel.nu},
                {"rho_skin", c.panel.rho_skin},
                {"rho_core", c.panel.rho_core},
                {"area", c.panel.area},
                {"nonstructural", c.panel.nonstructural}};
  j["srs"] = {{"e", c.srs.e}, {"rho", c.srs.rho}, {"length", c.srs.length}, {"nonstructural", c.srs.nonstructural}};
  j["sar"] = {{"length", c.sar_panel.length},         {"width", c.sar_panel.width},
              {"backing_ei", c.sar_panel.backing_ei}, {"skin_e", c.sar_panel.skin_e},
              {"skin_t", c.sar_panel.skin_t},         {"skin_rho", c.sar_panel.skin_rho},
              {"core_rho", c.sar_panel.core_rho},     {"nonstructural", c.sar_panel.nonstructural}};
  j["lambda_table"] = {{"aspect_ratio", c.lambda.aspect_ratio}, {"lambda", c.lambda.lambda}};
  j["theta_sa"] = c.theta_sa;
  j["damping"] = c.damping;
  j["modes"] = {{"yoke", c.modes.yoke}, {"panel", c.modes.panel}, {"srs", c.modes.srs}, {"sar", c.modes.sar}};
  j["yoke_residual_flexibility"] = c.yoke_residual_flexibility;
  json ov = json::object();
  for (const auto& [k, d] : c.overrides) ov[k] = to_json(d);
  j["modal_overrides"] = ov;
  return j;
}

BenchConfig bench_config_from_json(const json& j, const std::string& base_dir) {
  BenchConfig c = default_bench_config();
  const std::string w = "bench";
  jsonio::check_keys(j, {"hub", "mounts", "yoke", "panel", "srs", "sar", "lambda_table", "theta_sa", "damping",
                         "modes", "yoke_residual_flexibility", "modal_overrides"},
                     w);
  if (j.contains("hub")) {
    const json& h = j.at("hub");
    jsonio::check_keys(h, {"mass", "com", "inertia"}, w + ".hub");
    jsonio::read(h, "mass", c.hub.mass, w + ".hub");
    jsonio::read_vec3(h, "com", c.hub.com, w + ".hub");
    jsonio::read_mat3(h, "inertia", c.hub.inertia, w + ".hub");
  }
  if (j.contains("mounts")) {
    const json& m = j.at("mounts");
    jsonio::check_keys(m, {"SA1", "SA2", "SRS1", "SRS2", "SAR"}, w + ".mounts");
    for (Mount* mt : {&c.sa1, &c.sa2, &c.srs1, &c.srs2, &c.sar})
      if (m.contains(mt->name)) mount_from_json(m.at(mt->name), *mt, w + ".mounts." + mt->name);
  }
  if (j.contains("yoke")) {
    jsonio::check_keys(j.at("yoke"), {"base_length"}, w + ".yoke");
    jsonio::read(j.at("yoke"), "base_length", c.yoke.base_length, w + ".yoke");
  }
  bool panel_changed = false;
  if (j.contains("panel")) {
    const json& p = j.at("panel");
    const std::string pw = w + ".panel";
    jsonio::check_keys(p, {"e", "nu", "rho_skin", "rho_core", "area", "nonstructural"}, pw);
    jsonio::read(p, "e", c.panel.e, pw);
    jsonio::read(p, "nu", c.panel.nu, pw);
    jsonio::read(p, "rho_skin", c.panel.rho_skin, pw);
    jsonio::read(p, "rho_core", c.panel.rho_core, pw);
    jsonio::read(p, "area", c.panel.area, pw);
    jsonio::read(p, "nonstructural", c.panel.nonstructural, pw);
    panel_changed = true;
  }
  if (j.contains("srs")) {
    const json& s = j.at("srs");
    const std::string sw = w + ".srs";
    jsonio::check_keys(s, {"e", "rho", "length", "nonstructural"}, sw);
    jsonio::read(s, "e", c.srs.e, sw);
    jsonio::read(s, "rho", c.srs.rho, sw);
    jsonio::read(s, "length", c.srs.length, sw);
    jsonio::read(s, "nonstructural", c.srs.nonstructural, sw);
  }
  if (j.contains("sar")) {
    const json& s = j.at("sar");
    const std::string sw = w + ".sar";
    jsonio::check_keys(s, {"length", "width", "backing_ei", "skin_e", "skin_t", "skin_rho", "core_rho", "nonstructural"},
                       sw);
    jsonio::read(s, "length", c.sar_panel.length, sw);
    jsonio::read(s, "width", c.sar_panel.width, sw);
    jsonio::read(s, "backing_ei", c.sar_panel.backing_ei, sw);
    jsonio::read(s, "skin_e", c.sar_panel.skin_e, sw);
    jsonio::read(s, "skin_t", c.sar_panel.skin_t, sw);
    jsonio::read(s, "skin_rho", c.sar_panel.skin_rho, sw);
    jsonio::read(s, "core_rho", c.sar_panel.core_rho, sw);
    jsonio::read(s, "nonstructural", c.sar_panel.nonstructural, sw);
  }
  if (panel_changed) c.lambda = calibrated_lambda_table(c.panel);
  if (j.contains("lambda_table")) {
    const json& l = j.at("lambda_table");
    jsonio::check_keys(l, {"aspect_ratio", "lambda"}, w + ".lambda_table");
    jsonio::read(l, "aspect_ratio", c.lambda.aspect_ratio, w + ".lambda_table");
    jsonio::read(l, "lambda", c.lambda.lambda, w + ".lambda_table");
  }
  jsonio::read(j, "theta_sa", c.theta_sa, w);
  jsonio::read(j, "damping", c.damping, w);
  if (j.contains("modes")) {
    const json& m = j.at("modes");
    jsonio::check_keys(m, {"yoke", "panel", "srs", "sar"}, w + ".modes");
    jsonio::read(m, "yoke", c.modes.yoke, w + ".modes");
    jsonio::read(m, "panel", c.modes.panel, w + ".modes");
    jsonio::read(m, "srs", c.modes.srs, w + ".modes");
    jsonio::read(m, "sar", c.modes.sar, w + ".modes");
  }
  jsonio::read(j, "yoke_residual_flexibility", c.yoke_residual_flexibility, w);
  if (j.contains("modal_overrides")) {
    const json& o = j.at("modal_overrides");
    jsonio::check_keys(o, {"yoke", "panel", "srs", "sar"}, w + ".modal_overrides");
    for (auto it = o.begin(); it != o.end(); ++it) {
      const std::string where = w + ".modal_overrides." + it.key();
      json data = it.value();
      if (data.is_string()) {
        std::filesystem::path p = data.get<std::string>();
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        std::ifstream in(p);
        if (!in) throw ValidationError(where + ": cannot open '" + p.string() + "'");
        try {
          data = json::parse(in);
        } catch (const json::exception& e) {
          throw ValidationError(where + ": " + e.what());
        }
      }
      try {
        c.overrides[it.key()] = modal_data_from_json(data);
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
    }
  }
  validate(c);
  return c;
}

// ---------------------------------------------------------------- appendages

namespace {

ModalAppendageData strip_ports(ModalAppendageData d) {
  d.ports.clear();
  return d;
}

}  // namespace

AppendageSet generate_appendages(const BenchConfig& cfg, const DesignVector& x) {
  validate(x);
  AppendageSet s;

  {  // yoke: rectangular tube, width along local y, height along local z
    BeamSection b;
    const double bi = x.B_Y - 2.0 * x.t_Y, di = x.D_Y - 2.0 * x.t_Y;
    const double area = x.B_Y * x.D_Y - bi * di;
    const double iz = (x.D_Y * std::pow(x.B_Y, 3) - di * std::pow(bi, 3)) / 12.0;
    const double iy = (x.B_Y * std::pow(x.D_Y, 3) - bi * std::pow(di, 3)) / 12.0;
    b.length = cfg.yoke.base_length * x.LR_Y;
    b.ei_xy = x.E_Y * iz;
    b.ei_xz = x.E_Y * iy;
    b.rho_a = x.rho_Y * area;
    b.rho_jx = x.rho_Y * (iy + iz);
    b.rho_iy = x.rho_Y * iy;
    b.rho_iz = x.rho_Y * iz;
    BeamOptions o;
    o.name = "yoke";
    o.damping = cfg.damping;
    o.n_modes = cfg.modes.yoke;
    o.residual_flexibility = cfg.yoke_residual_flexibility && cfg.modes.yoke > 0;
    s.yoke = cantilever_beam_modal(b, o);
  }
  {  // panel: sandwich plate as an equivalent beam, normal along local z
    const PanelConstants& p = cfg.panel;
    const double len = std::sqrt(p.area * x.AR_P), width = std::sqrt(p.area / x.AR_P);
    const double areal = 2.0 * x.t_sP * p.rho_skin + x.t_cP * p.rho_core + p.nonstructural;
    BeamSection b;
    b.length = len;
    b.ei_xz = p.e * x.t_sP * std::pow(x.t_cP + x.t_sP, 2) / 2.0 * width;
    b.ei_xy = p.e * 2.0 * x.t_sP * std::pow(width, 3) / 12.0;
    b.rho_a = areal * width;
    b.rho_jx = b.rho_a * width * width / 12.0;
    b.rho_iz = b.rho_a * width * width / 12.0;
    b.rho_iy = b.rho_a * std::pow(x.t_cP + 2.0 * x.t_sP, 2) / 12.0;
    BeamOptions o;
    o.name = "panel";
    o.damping = cfg.damping;
    o.n_modes = cfg.modes.panel;
    s.panel = strip_ports(cantilever_beam_modal(b, o));
  }
  {  // SRS: thin circular tube
    const TubeConstants& t = cfg.srs;
    const double ri = x.R_SRS - x.t_SRS;
    const double i = M_PI / 4.0 * (std::pow(x.R_SRS, 4) - std::pow(ri, 4));
    const double area = M_PI * (x.R_SRS * x.R_SRS - ri * ri);
    BeamSection b;
    b.length = t.length;
    b.ei_xy = b.ei_xz = t.e * i;
    b.rho_a = t.rho * area + t.nonstructural;
    b.rho_jx = 2.0 * t.rho * i;
    b.rho_iy = b.rho_iz = t.rho * i;
    BeamOptions o;
    o.name = "srs";
    o.damping = cfg.damping;
    o.n_modes = cfg.modes.srs;
    s.srs = strip_ports(cantilever_beam_modal(b, o));
  }
  {  // SAR: sandwich on a stiff backing structure, normal along local z
    const SarConstants& v = cfg.sar_panel;
    const double areal = 2.0 * v.skin_t * v.skin_rho + x.t_cV * v.core_rho + v.nonstructural;
    BeamSection b;
    b.length = v.length;
    b.ei_xz = v.backing_ei + v.skin_e * v.skin_t * std::pow(x.t_cV + v.skin_t, 2) / 2.0 * v.width;
    b.ei_xy = v.skin_e * 2.0 * v.skin_t * std::pow(v.width, 3) / 12.0;
    b.rho_a = areal * v.width;
    b.rho_jx = b.rho_a * v.width * v.width / 12.0;
    b.rho_iz = b.rho_a * v.width * v.width / 12.0;
    b.rho_iy = b.rho_a * std::pow(x.t_cV + 2.0 * v.skin_t, 2) / 12.0;
    BeamOptions o;
    o.name = "sar";
    o.damping = cfg.damping;
    o.n_modes = cfg.modes.sar;
    s.sar = strip_ports(cantilever_beam_modal(b, o));
  }
  for (const auto& [k, d] : cfg.overrides) {
    if (k == "yoke") s.yoke = d;
    if (k == "panel") s.panel = strip_ports(d);
    if (k == "srs") s.srs = strip_ports(d);
    if (k == "sar") s.sar = strip_ports(d);
  }
  return s;
}

// ---------------------------------------------------------------- plant

Plant plant_from_dynamics(const StateSpace& dyn) {
  if (!dyn.has_input("W_ext") || !dyn.has_output("acc_B") || dyn.input("W_ext").width != 6 ||
      dyn.output("acc_B").width != 6)
    throw ValidationError("plant_from_dynamics: need a 6-wide W_ext -> acc_B model");
  const StateSpace g = dyn.select({"W_ext"}, {"acc_B"});
  const Index n = g.order();
  const Index nt = n + 6;
  MatrixXd a = MatrixXd::Zero(nt, nt), b = MatrixXd::Zero(nt, 6), c = MatrixXd::Zero(12, nt),
           d = MatrixXd::Zero(12, 6);
  a.topLeftCorner(n, n) = g.a();
  a.block(n, 0, 3, n) = g.c().bottomRows(3);
  a.block(n + 3, n, 3, 3) = Matrix3d::Identity();
  const MatrixXd bt = g.b().rightCols(3);
  const MatrixXd dt = g.d().bottomRightCorner(3, 3);
  b.block(0, 0, n, 3) = bt;
  b.block(0, 3, n, 3) = bt;
  b.block(n, 0, 3, 3) = dt;
  b.block(n, 3, 3, 3) = dt;
  c.block(0, n + 3, 3, 3) = Matrix3d::Identity();  // theta
  c.block(3, n, 3, 3) = Matrix3d::Identity();      // omega
  c.block(6, 0, 6, n) = g.c();                     // acc_B
  d.block(6, 0, 6, 3) = g.d().rightCols(3);
  d.block(6, 3, 6, 3) = g.d().rightCols(3);
  std::vector<PortGroup> states = g.states();
  states.push_back({"omega", 3});
  states.push_back({"theta", 3});
  Plant p;
  p.system = StateSpace(a, b, c, d, {{"T_ext", 3}, {"u", 3}}, {{"theta", 3}, {"omega", 3}, {"acc_B", 6}}, states);
  p.dynamics = g;
  return p;
}

double theta_for(const BenchConfig& cfg, const Assignment& delta) {
  auto it = delta.find("sigma4");
  return it == delta.end() ? cfg.theta_sa : sigma4_to_theta(it->second);
}

Plant assemble_plant(const BenchConfig& cfg, const AppendageSet& apps, double theta_sa, const Assignment& delta) {
  validate_assignment(uncertainty_specs(), delta);
  const auto dv = [&](const char* k) { return value_or(delta, k, 0.0); };

  RigidBodySpec hub = cfg.hub;
  hub.mass *= 1.0 + dv("m_B");
  const Vector3d s(std::sqrt(1.0 + dv("Ixx_B")), std::sqrt(1.0 + dv("Iyy_B")), std::sqrt(1.0 + dv("Izz_B")));
  hub.inertia = s.asDiagonal() * cfg.hub.inertia * s.asDiagonal();

  const auto scale2 = [](const ModalAppendageData& d, double d1, double d2) {
    VectorXd v = VectorXd::Zero(d.n_modes());
    if (v.size() > 0) v(0) = d1;
    if (v.size() > 1) v(1) = d2;
    return scale_frequencies(d, v);
  };
  const ModalAppendageData panel = scale2(apps.panel, dv("w1_S"), dv("w2_S"));
  const ModalAppendageData sar = scale2(apps.sar, dv("w1_V"), dv("w2_V"));

  auto yoke_tip = std::find_if(apps.yoke.ports.begin(), apps.yoke.ports.end(),
                               [](const ModalPort& p) { return p.name == "C"; });
  if (yoke_tip == apps.yoke.ports.end()) throw ValidationError("yoke modal data has no port 'C' for the panel");
  const Vector3d tip = -yoke_tip->cp;

  const Matrix3d sadm = sadm_dcm(theta_sa, Vector3d::UnitY());
  struct Attached {
    const Mount* mount;
    Matrix3d dcm;
    double mass;
    Vector3d com;  // appendage frame
  };
  const double m_sa = apps.yoke.mass() + panel.mass();
  const Vector3d c_sa = (apps.yoke.mass() * apps.yoke.center_of_mass() + panel.mass() * (tip + panel.center_of_mass())) / m_sa;
  const std::vector<Attached> att{
      {&cfg.sa1, sadm * cfg.sa1.dcm, m_sa, c_sa},
      {&cfg.sa2, sadm * cfg.sa2.dcm, m_sa, c_sa},
      {&cfg.srs1, cfg.srs1.dcm, apps.srs.mass(), apps.srs.center_of_mass()},
      {&cfg.srs2, cfg.srs2.dcm, apps.srs.mass(), apps.srs.center_of_mass()},
      {&cfg.sar, cfg.sar.dcm, sar.mass(), sar.center_of_mass()},
  };

  double mass = hub.mass;
  Vector3d moment = hub.mass * hub.com;
  hub.points.clear();
  for (const auto& a : att) {
    mass += a.mass;
    moment += a.mass * (a.mount->position + a.dcm * a.com);
    hub.points.push_back({a.mount->name, a.mount->position});
  }
  const Vector3d b = moment / mass;

  StateSpace g = rigid_multiport(hub, b);
  const TitopModel yoke_m = titop_from_modal(apps.yoke);
  const TitopModel panel_m = titop_from_modal(panel);
  const StateSpace sa = connect_child(yoke_m.system, "C", panel_m.system, "panel");
  const TitopModel srs_m = titop_from_modal(apps.srs);
  const TitopModel sar_m = titop_from_modal(sar);
  g = connect_child(g, cfg.sa1.name, sa, cfg.sa1.name, att[0].dcm);
  g = connect_child(g, cfg.sa2.name, sa, cfg.sa2.name, att[1].dcm);
  g = connect_child(g, cfg.srs1.name, srs_m.system, cfg.srs1.name, att[2].dcm);
  g = connect_child(g, cfg.srs2.name, srs_m.system, cfg.srs2.name, att[3].dcm);
  g = connect_child(g, cfg.sar.name, sar_m.system, cfg.sar.name, att[4].dcm);

  Plant p = plant_from_dynamics(g);
  p.assignment = delta;
  p.theta_sa = theta_sa;
  p.bookkept_mass = mass;
  p.b = b;
  return p;
}

Plant build_plant(const BenchConfig& cfg, const DesignVector& x, double theta_sa, const Assignment& delta) {
  if (delta.count("sigma4")) throw ValidationError("build_plant: pass theta_sa or sigma4, not both");
  return assemble_plant(cfg, generate_appendages(cfg, x), theta_sa, delta);
}

Plant build_plant(const BenchConfig& cfg, const DesignVector& x, const Assignment& delta) {
  return assemble_plant(cfg, generate_appendages(cfg, x), theta_for(cfg, delta), delta);
}

double total_mass(const Plant& plant) {
  const MatrixXd g = dc_gain(plant.dynamics, kMassOmega);
  const double m = 1.0 / g(0, 0);
  if (!std::isfinite(m) || !(m > 0.0)) throw NumericalError("total_mass: non-finite mass channel gain");
  return m;
}

Matrix3d rigid_inertia(const Plant& plant) {
  const StateSpace& g = plant.dynamics;
  MatrixXd dc;
  if (g.order() == 0) {
    dc = g.d();
  } else {
    Eigen::PartialPivLU<MatrixXd> lu(g.a());
    dc = g.d() - g.c() * lu.solve(g.b());
  }
  const Matrix3d blk = dc.bottomRightCorner(3, 3);
  Eigen::FullPivLU<Matrix3d> lu(blk);
  if (!lu.isInvertible()) throw NumericalError("rigid_inertia: singular torque channel");
  const Matrix3d j = lu.inverse();
  if (!j.allFinite()) throw NumericalError("rigid_inertia: non-finite result");
  return j;
}

}  // namespace flexsc
