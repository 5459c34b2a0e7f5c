#include "flexsc/acs/acs.hpp"

#include <cmath>

#include "flexsc/common/error.hpp"
#include "flexsc/common/json_util.hpp"
#include "flexsc/lti/interconnect.hpp"
#include "flexsc/lti/transfer.hpp"

namespace flexsc {

using nlohmann::json;

namespace {

void positive3(const Vector3d& v, const char* what) {
  for (int i = 0; i < 3; ++i)
    if (!(v(i) > 0.0) || !std::isfinite(v(i)))
      throw ValidationError(std::string("requirements.") + what + " must be positive");
}

StateSpace per_axis(const std::vector<double>& num, const std::vector<double>& den) {
  return replicate_diagonal(transfer_function(num, den), 3);
}

StateSpace diag_gain(const Vector3d& v) { return StateSpace::gain(v.asDiagonal(), {{"in", 3}}, {{"out", 3}}); }

}  // namespace

void validate(const Requirements& r) {
  positive3(r.ape, "ape");
  positive3(r.rpe, "rpe");
  positive3(r.t_ext, "t_ext");
  positive3(r.u_max, "u_max");
  positive3(r.psd_sst, "psd_sst");
  positive3(r.psd_gyro, "psd_gyro");
  if (!(r.dt_rpe > 0.0)) throw ValidationError("requirements.dt_rpe must be positive");
  if (!(r.gamma > 1.0)) throw ValidationError("requirements.gamma must exceed 1");
}

json to_json(const Requirements& r) {
  return {{"ape", jsonio::vec3(r.ape)},         {"rpe", jsonio::vec3(r.rpe)},
          {"dt_rpe", r.dt_rpe},                 {"t_ext", jsonio::vec3(r.t_ext)},
          {"u_max", jsonio::vec3(r.u_max)},     {"gamma", r.gamma},
          {"psd_sst", jsonio::vec3(r.psd_sst)}, {"psd_gyro", jsonio::vec3(r.psd_gyro)}};
}

Requirements requirements_from_json(const json& j) {
  const std::string w = "requirements";
  jsonio::check_keys(j, {"ape", "rpe", "dt_rpe", "t_ext", "u_max", "gamma", "psd_sst", "psd_gyro"}, w);
  Requirements r;
  jsonio::read_vec3(j, "ape", r.ape, w);
  jsonio::read_vec3(j, "rpe", r.rpe, w);
  jsonio::read(j, "dt_rpe", r.dt_rpe, w);
  jsonio::read_vec3(j, "t_ext", r.t_ext, w);
  jsonio::read_vec3(j, "u_max", r.u_max, w);
  jsonio::read(j, "gamma", r.gamma, w);
  jsonio::read_vec3(j, "psd_sst", r.psd_sst, w);
  jsonio::read_vec3(j, "psd_gyro", r.psd_gyro, w);
  validate(r);
  return r;
}

Margins margins_from_gamma(double gamma) {
  if (!(gamma > 1.0)) throw ValidationError("margins: gamma must exceed 1");
  Margins m;
  m.disk = 1.0 / gamma;
  m.gain = gamma / (gamma - 1.0);
  m.gain_db = 20.0 * std::log10(m.gain);
  m.phase_deg = 2.0 * std::asin(1.0 / (2.0 * gamma)) * 180.0 / M_PI;
  return m;
}

std::vector<double> ControllerGains::to_vector() const {
  return {kp(0), kv(0), kp(1), kv(1), kp(2), kv(2)};
}

ControllerGains ControllerGains::from_vector(const std::vector<double>& v) {
  if (v.size() != 6) throw ValidationError("controller gains: expected 6 values");
  ControllerGains g;
  for (int i = 0; i < 3; ++i) {
    g.kp(i) = v[static_cast<std::size_t>(2 * i)];
    g.kv(i) = v[static_cast<std::size_t>(2 * i + 1)];
  }
  return g;
}

void validate(const ControllerGains& g) {
  for (int i = 0; i < 3; ++i)
    if (!(g.kp(i) > 0.0) || !(g.kv(i) > 0.0)) throw ValidationError("controller gains must be positive");
}

json to_json(const ControllerGains& g) {
  return {{"Kp_x", g.kp(0)}, {"Kv_x", g.kv(0)}, {"Kp_y", g.kp(1)},
          {"Kv_y", g.kv(1)}, {"Kp_z", g.kp(2)}, {"Kv_z", g.kv(2)}};
}

ControllerGains gains_from_json(const json& j) {
  const std::string w = "gains";
  jsonio::check_keys(j, {"Kp_x", "Kv_x", "Kp_y", "Kv_y", "Kp_z", "Kv_z"}, w);
  const char* names[6] = {"Kp_x", "Kv_x", "Kp_y", "Kv_y", "Kp_z", "Kv_z"};
  std::vector<double> v(6);
  for (std::size_t i = 0; i < 6; ++i) {
    if (!j.contains(names[i])) throw ValidationError(w + ": missing " + names[i]);
    jsonio::read(j, names[i], v[i], w);
  }
  auto g = ControllerGains::from_vector(v);
  validate(g);
  return g;
}

StateSpace observer(ObserverPortOrder order) {
  MatrixXd a(2, 2), b(2, 2), c(2, 2), d(2, 2);
  a << -0.1131, -1.0, 0.003948, 0.0;
  b << 0.1131, 1.0, -0.00394, 0.0;
  c << 1.0, 0.0, -0.1131, -1.0;
  d << 0.0, 0.0, 0.1131, 1.0;
  std::vector<PortGroup> in, out;
  if (order == ObserverPortOrder::as_printed) {
    in = {{"omega_m", 1}, {"theta_m", 1}};
    out = {{"omega_hat", 1}, {"theta_hat", 1}};
  } else {
    in = {{"theta_m", 1}, {"omega_m", 1}};
    out = {{"theta_hat", 1}, {"omega_hat", 1}};
  }
  return replicate_diagonal(StateSpace(a, b, c, d, in, out), 3);
}

Avionics avionics(ObserverPortOrder order, double td) {
  if (!(td > 0.0)) throw ValidationError("avionics: delay must be positive");
  const double wn = 100.0 * M_PI;
  Avionics av;
  av.rw = per_axis({wn * wn}, {1.0, 140.0 * M_PI, wn * wn});
  av.gyro = per_axis({200.0 * M_PI}, {1.0, 200.0 * M_PI});
  av.sst = per_axis({16.0 * M_PI}, {1.0, 16.0 * M_PI});
  av.delay = per_axis({td * td, -6.0 * td, 12.0}, {td * td, 6.0 * td, 12.0});
  av.observer = observer(order);
  return av;
}

Weights weights(const Requirements& r) {
  validate(r);
  Weights w;
  w.w_ext = diag_gain(r.t_ext);
  w.wn_sst = diag_gain(r.psd_sst.cwiseSqrt());
  w.wn_gyro = diag_gain(r.psd_gyro.cwiseSqrt());
  w.w_ape = diag_gain(r.ape.cwiseInverse());
  const double t = r.dt_rpe;
  const StateSpace rpe = per_axis({t * t, t * std::sqrt(12.0), 0.0}, {t * t, 6.0 * t, 12.0});
  w.w_rpe = series(rpe, diag_gain(r.rpe.cwiseInverse()));
  w.w_s = diag_gain(Vector3d::Constant(1.0 / r.gamma));
  w.w_u = diag_gain(r.u_max.cwiseInverse());
  return w;
}

MatrixXd controller_matrix(const ControllerGains& g) {
  MatrixXd k = MatrixXd::Zero(3, 6);
  k.leftCols(3) = -g.kp.asDiagonal().toDenseMatrix();
  k.rightCols(3) = -g.kv.asDiagonal().toDenseMatrix();
  return k;
}

StateSpace controller(const ControllerGains& g) {
  return StateSpace::gain(controller_matrix(g), {{"theta_hat", 3}, {"omega_hat", 3}}, {{"u", 3}});
}

ControllerGains initial_gains(const Matrix3d& j_b, const Requirements& r, double xi, double omega,
                              bool enforce_ape_bound) {
  if (!(xi > 0.0) || !(omega > 0.0)) throw ValidationError("initial_gains: xi and omega must be positive");
  ControllerGains g;
  for (int i = 0; i < 3; ++i) {
    const double jii = j_b(i, i);
    if (!(jii > 0.0)) throw ValidationError("initial_gains: inertia diagonal must be positive");
    double w = omega;
    if (enforce_ape_bound) w = std::max(w, std::sqrt(r.t_ext(i) / (jii * r.ape(i))));
    g.kp(i) = jii * w * w;
    g.kv(i) = 2.0 * xi * jii * w;
  }
  return g;
}

double static_ape_index(const ControllerGains& g, const Requirements& r) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) worst = std::max(worst, r.t_ext(i) / (g.kp(i) * r.ape(i)));
  return worst;
}

GeneralizedPlant generalized_plant(const Plant& plant, const Avionics& av, const Weights& w) {
  const StateSpace& p = plant.system;
  for (const char* port : {"T_ext", "u"})
    if (!p.has_input(port)) throw ValidationError(std::string("generalized_plant: plant lacks input ") + port);
  for (const char* port : {"theta", "omega"})
    if (!p.has_output(port)) throw ValidationError(std::string("generalized_plant: plant lacks output ") + port);
  const StateSpace pl = p.select({"T_ext", "u"}, {"theta", "omega"});
  const StateSpace id3 = StateSpace::gain(MatrixXd::Identity(3, 3), {{"in", 3}}, {{"out", 3}});
  const std::vector<Block> blocks = {
      {"plant", pl},         {"delay", av.delay},   {"rw", av.rw},         {"gyro", av.gyro},
      {"sst", av.sst},       {"obs", av.observer},  {"wext", w.w_ext},     {"wsst", w.wn_sst},
      {"wgyro", w.wn_gyro},  {"wape", w.w_ape},     {"wrpe", w.w_rpe},     {"ws", w.w_s},
      {"torque", id3},       {"ucmd", id3},         {"wu", w.w_u},
      {"meas", StateSpace::gain(MatrixXd::Identity(6, 6), {{"theta_hat", 3}, {"omega_hat", 3}}, {{"y", 6}})},
  };
  const std::vector<Link> links = {
      {"ucmd.out", "delay.in"},
      {"delay.out", "rw.in"},
      {"rw.out", "torque.in"},
      {"torque.out", "plant.u"},
      {"torque.out", "ws.in"},
      {"wext.out", "plant.T_ext"},
      {"plant.theta", "sst.in"},
      {"plant.omega", "gyro.in"},
      {"sst.out", "obs.theta_m"},
      {"wsst.out", "obs.theta_m"},
      {"gyro.out", "obs.omega_m"},
      {"wgyro.out", "obs.omega_m"},
      {"plant.theta", "wape.in"},
      {"plant.theta", "wrpe.in"},
      {"ucmd.out", "wu.in"},
      {"obs.theta_hat", "meas.theta_hat"},
      {"obs.omega_hat", "meas.omega_hat"},
  };
  const std::vector<ExternalInput> ext_in = {
      {"T_ext_n", {"wext.in"}}, {"n_sst", {"wsst.in"}}, {"n_gyro", {"wgyro.in"}},
      {"d_T", {"torque.in"}},   {"u", {"ucmd.in"}},
  };
  const std::vector<ExternalOutput> ext_out = {
      {"ape", "wape.out"}, {"rpe", "wrpe.out"}, {"u_n", "wu.out"}, {"T_n", "ws.out"}, {"y", "meas.y"},
  };
  InterconnectOptions opt;
  opt.auto_reduce = false;
  return {interconnect(blocks, links, ext_in, ext_out, opt)};
}

ClosedLoop close_loop(const GeneralizedPlant& gp, const ControllerGains& g) {
  const StateSpace cl = close_static_feedback(gp.system, "u", "y", controller_matrix(g));
  ClosedLoop out;
  out.system = cl.select({"T_ext_n", "n_sst", "n_gyro", "d_T"}, {"ape", "rpe", "u_n", "T_n"});
  out.stable = stable(out.system);
  return out;
}

}  // namespace flexsc
