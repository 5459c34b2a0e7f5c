#include "flexsc/param/paramspace.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "flexsc/common/error.hpp"

namespace flexsc {

using nlohmann::json;

void validate(const ParameterSpec& spec) {
  if (!(spec.lo < spec.hi)) throw ValidationError("parameter '" + spec.name + "': range must satisfy lo < hi");
  if (!(spec.nominal >= spec.lo && spec.nominal <= spec.hi))
    throw ValidationError("parameter '" + spec.name + "': nominal outside its range");
}

std::vector<ParameterSpec> narrow_specs(const std::vector<ParameterSpec>& specs, const Bounds& bounds,
                                        const std::string& where) {
  for (const auto& [name, r] : bounds)
    if (std::none_of(specs.begin(), specs.end(), [&](const ParameterSpec& s) { return s.name == name; }))
      throw ValidationError(where + ": unknown parameter '" + name + "'");
  std::vector<ParameterSpec> out = specs;
  for (auto& s : out) {
    auto it = bounds.find(s.name);
    if (it == bounds.end()) continue;
    const auto [lo, hi] = it->second;
    const double slack = 1e-12 * std::max(std::abs(s.lo), std::abs(s.hi));
    if (!(lo < hi)) throw ValidationError(where + "." + s.name + ": range must satisfy lo < hi");
    if (!(lo >= s.lo - slack && hi <= s.hi + slack))
      throw ValidationError(where + "." + s.name + ": range outside [" + std::to_string(s.lo) + ", " +
                            std::to_string(s.hi) + "]");
    if (s.kind == ParameterKind::uncertain && !(s.nominal >= lo && s.nominal <= hi))
      throw ValidationError(where + "." + s.name + ": range must contain the nominal value");
    s.lo = lo;
    s.hi = hi;
    if (s.kind == ParameterKind::design) s.nominal = 0.5 * (lo + hi);
  }
  return out;
}

void validate_assignment(const std::vector<ParameterSpec>& specs, const Assignment& a) {
  for (const auto& [name, v] : a) {
    auto it = std::find_if(specs.begin(), specs.end(), [&](const ParameterSpec& s) { return s.name == name; });
    if (it == specs.end()) throw ValidationError("assignment: unknown parameter '" + name + "'");
    const double slack = 1e-12 * std::max(std::abs(it->lo), std::abs(it->hi));
    if (!(v >= it->lo - slack && v <= it->hi + slack))
      throw ValidationError("assignment: parameter '" + name + "' = " + std::to_string(v) + " outside [" +
                            std::to_string(it->lo) + ", " + std::to_string(it->hi) + "]");
  }
}

Assignment nominal_assignment(const std::vector<ParameterSpec>& specs) {
  Assignment a;
  for (const auto& s : specs) a[s.name] = s.nominal;
  return a;
}

double value_or(const Assignment& a, const std::string& name, double fallback) {
  auto it = a.find(name);
  return it == a.end() ? fallback : it->second;
}

std::vector<Assignment> sample_assignments(const std::vector<ParameterSpec>& specs, SamplingScheme scheme,
                                           int count, std::uint64_t seed, const std::vector<int>& grid_points) {
  for (const auto& s : specs) validate(s);
  const std::size_t d = specs.size();
  std::vector<Assignment> out;
  switch (scheme) {
    case SamplingScheme::vertices: {
      if (d > 20) throw ValidationError("vertices sampling supports at most 20 parameters");
      const std::uint64_t n = std::uint64_t{1} << d;
      for (std::uint64_t mask = 0; mask < n; ++mask) {
        Assignment a;
        for (std::size_t i = 0; i < d; ++i) a[specs[i].name] = (mask >> i) & 1u ? specs[i].hi : specs[i].lo;
        out.push_back(a);
      }
      break;
    }
    case SamplingScheme::random: {
      if (count < 1) throw ValidationError("random sampling needs count >= 1");
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int k = 0; k < count; ++k) {
        Assignment a;
        for (const auto& s : specs) a[s.name] = s.lo + (s.hi - s.lo) * u(rng);
        out.push_back(a);
      }
      break;
    }
    case SamplingScheme::grid: {
      std::vector<int> pts = grid_points;
      if (pts.empty()) pts.assign(d, count);
      if (pts.size() != d) throw ValidationError("grid sampling needs one point count per parameter");
      std::size_t total = 1;
      for (int p : pts) {
        if (p < 1) throw ValidationError("grid sampling needs point counts >= 1");
        total *= static_cast<std::size_t>(p);
        if (total > (std::size_t{1} << 24)) throw ValidationError("grid sampling: too many points");
      }
      for (std::size_t flat = 0; flat < total; ++flat) {
        Assignment a;
        std::size_t rest = flat;
        for (std::size_t i = 0; i < d; ++i) {
          const int p = pts[i];
          const int idx = static_cast<int>(rest % static_cast<std::size_t>(p));
          rest /= static_cast<std::size_t>(p);
          const double t = p == 1 ? 0.5 : static_cast<double>(idx) / (p - 1);
          a[specs[i].name] = specs[i].lo + t * (specs[i].hi - specs[i].lo);
        }
        out.push_back(a);
      }
      break;
    }
  }
  return out;
}

Matrix3d sadm_dcm(double theta, const Vector3d& axis) {
  if (!(axis.norm() > 0.0)) throw ValidationError("sadm_dcm: axis must be nonzero");
  return Eigen::AngleAxisd(theta, axis.normalized()).toRotationMatrix();
}

double sigma4_to_theta(double sigma4) { return 4.0 * std::atan(sigma4); }
double theta_to_sigma4(double theta) { return std::tan(theta / 4.0); }

std::vector<double> sigma4_grid(int n_tau) {
  if (n_tau < 2) throw ValidationError("sigma4_grid needs at least 2 points");
  std::vector<double> th;
  for (int i = 0; i < n_tau; ++i) th.push_back(sigma4_to_theta(static_cast<double>(i) / (n_tau - 1)));
  return th;
}

namespace {

void enumerate_exponents(int nvar, int degree, std::vector<int>& cur, int left, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == nvar) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    cur.push_back(e);
    enumerate_exponents(nvar, degree, cur, left - e, out);
    cur.pop_back();
  }
}

std::vector<std::vector<int>> total_degree_exponents(int nvar, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  enumerate_exponents(nvar, degree, cur, degree, out);
  std::stable_sort(out.begin(), out.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
    return std::accumulate(a.begin(), a.end(), 0) < std::accumulate(b.begin(), b.end(), 0);
  });
  return out;
}

VectorXd normalized_point(const Surrogate& s, const Assignment& a, bool check_box) {
  VectorXd z(static_cast<Index>(s.inputs.size()));
  for (std::size_t i = 0; i < s.inputs.size(); ++i) {
    auto it = a.find(s.inputs[i]);
    if (it == a.end()) throw ValidationError("surrogate: assignment lacks '" + s.inputs[i] + "'");
    const double span = s.hi[i] - s.lo[i];
    const double slack = 1e-9 * span;
    if (check_box && (it->second < s.lo[i] - slack || it->second > s.hi[i] + slack))
      throw ValidationError("surrogate extrapolation: '" + s.inputs[i] + "' = " + std::to_string(it->second) +
                            " outside the fitted box [" + std::to_string(s.lo[i]) + ", " + std::to_string(s.hi[i]) +
                            "]");
    z(static_cast<Index>(i)) = 2.0 * (it->second - s.lo[i]) / span - 1.0;
  }
  return z;
}

VectorXd basis_row(const std::vector<std::vector<int>>& exps, const VectorXd& z) {
  VectorXd row(static_cast<Index>(exps.size()));
  for (std::size_t k = 0; k < exps.size(); ++k) {
    double v = 1.0;
    for (std::size_t i = 0; i < exps[k].size(); ++i) v *= std::pow(z(static_cast<Index>(i)), exps[k][i]);
    row(static_cast<Index>(k)) = v;
  }
  return row;
}

// coefficient matrix (basis x entries) for the rows listed in `use`
MatrixXd solve_fit(const MatrixXd& phi, const MatrixXd& y, int degree) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(phi);
  qr.setThreshold(1e-10);
  if (qr.rank() < phi.cols())
    throw ValidationError("fit_surrogate: rank-deficient basis (rank " + std::to_string(qr.rank()) + " < " +
                          std::to_string(phi.cols()) + " terms at degree " + std::to_string(degree) +
                          "); lower the degree or add samples");
  return qr.solve(y);
}

}  // namespace

double entry_relative_error(double fit, double data, double scale) {
  const double floor = 1e-3 * scale;
  const double den = std::max(std::abs(data), floor);
  if (den == 0.0) return std::abs(fit - data) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(fit - data) / den;
}

Surrogate fit_surrogate(const std::vector<SurrogateSample>& samples, const std::vector<ParameterSpec>& box,
                        int degree) {
  if (degree < 0) throw ValidationError("fit_surrogate: degree must be >= 0");
  if (samples.empty()) throw ValidationError("fit_surrogate: no samples");
  Surrogate s;
  s.degree = degree;
  for (const auto& p : box) {
    validate(p);
    s.inputs.push_back(p.name);
    s.lo.push_back(p.lo);
    s.hi.push_back(p.hi);
  }
  s.exponents = total_degree_exponents(static_cast<int>(box.size()), degree);
  const Index nb = static_cast<Index>(s.exponents.size());
  const Index ns = static_cast<Index>(samples.size());
  if (ns < nb)
    throw ValidationError("fit_surrogate: " + std::to_string(ns) + " samples for " + std::to_string(nb) +
                          " basis terms; lower the degree or add samples");
  s.n_samples = static_cast<int>(ns);

  MatrixXd phi(ns, nb);
  for (Index i = 0; i < ns; ++i) {
    validate_assignment(box, samples[static_cast<std::size_t>(i)].assignment);
    phi.row(i) = basis_row(s.exponents, normalized_point(s, samples[static_cast<std::size_t>(i)].assignment, true));
  }

  // stack every entry of every target as one column block
  const auto& first = samples.front().matrices;
  std::vector<std::string> names;
  Index total = 0;
  std::map<std::string, Index> offset;
  for (const auto& [name, m] : first) {
    names.push_back(name);
    offset[name] = total;
    total += m.size();
  }
  MatrixXd y(ns, total);
  std::map<std::string, double> scale;
  for (Index i = 0; i < ns; ++i) {
    const auto& mats = samples[static_cast<std::size_t>(i)].matrices;
    if (mats.size() != first.size()) throw ValidationError("fit_surrogate: samples disagree on target names");
    for (const auto& name : names) {
      auto it = mats.find(name);
      if (it == mats.end()) throw ValidationError("fit_surrogate: sample lacks target '" + name + "'");
      const MatrixXd& m = it->second;
      if (m.rows() != first.at(name).rows() || m.cols() != first.at(name).cols())
        throw ValidationError("fit_surrogate: target '" + name + "' changes shape across samples");
      y.block(i, offset[name], 1, m.size()) = Eigen::Map<const MatrixXd>(m.data(), 1, m.size());
      scale[name] = std::max(scale[name], m.cwiseAbs().maxCoeff());
    }
  }

  auto max_error = [&](const MatrixXd& coef, const std::vector<Index>& rows) {
    double worst = 0.0;
    for (Index r : rows) {
      const VectorXd pred = (phi.row(r) * coef).transpose();
      for (const auto& name : names) {
        const Index off = offset[name], len = first.at(name).size();
        for (Index e = 0; e < len; ++e)
          worst = std::max(worst, entry_relative_error(pred(off + e), y(r, off + e), scale[name]));
      }
    }
    return worst;
  };

  // every fifth sample held out
  std::vector<Index> train, hold;
  for (Index i = 0; i < ns; ++i) (i % 5 == 4 ? hold : train).push_back(i);
  s.holdout_max_rel_error = std::numeric_limits<double>::quiet_NaN();
  if (!hold.empty() && static_cast<Index>(train.size()) >= nb) {
    MatrixXd pt(static_cast<Index>(train.size()), nb), yt(static_cast<Index>(train.size()), total);
    for (std::size_t k = 0; k < train.size(); ++k) {
      pt.row(static_cast<Index>(k)) = phi.row(train[k]);
      yt.row(static_cast<Index>(k)) = y.row(train[k]);
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(pt);
    qr.setThreshold(1e-10);
    if (qr.rank() == nb) {
      s.holdout_max_rel_error = max_error(qr.solve(yt), hold);
      s.n_holdout = static_cast<int>(hold.size());
    }
  }

  const MatrixXd coef = solve_fit(phi, y, degree);
  std::vector<Index> all(static_cast<std::size_t>(ns));
  std::iota(all.begin(), all.end(), Index{0});
  s.in_sample_max_rel_error = max_error(coef, all);
  for (const auto& name : names) {
    Surrogate::Target t;
    t.rows = first.at(name).rows();
    t.cols = first.at(name).cols();
    t.coeffs = coef.middleCols(offset[name], t.rows * t.cols);
    s.targets[name] = t;
  }
  return s;
}

std::map<std::string, MatrixXd> eval_surrogate(const Surrogate& s, const Assignment& a) {
  const VectorXd row = basis_row(s.exponents, normalized_point(s, a, true));
  std::map<std::string, MatrixXd> out;
  for (const auto& [name, t] : s.targets) {
    const VectorXd v = (row.transpose() * t.coeffs).transpose();
    out[name] = Eigen::Map<const MatrixXd>(v.data(), t.rows, t.cols);
  }
  return out;
}

json to_json(const Surrogate& s) {
  json j;
  j["inputs"] = s.inputs;
  j["lo"] = s.lo;
  j["hi"] = s.hi;
  j["degree"] = s.degree;
  j["exponents"] = s.exponents;
  j["in_sample_max_rel_error"] = s.in_sample_max_rel_error;
  if (std::isfinite(s.holdout_max_rel_error))
    j["holdout_max_rel_error"] = s.holdout_max_rel_error;
  else
    j["holdout_max_rel_error"] = nullptr;
  j["n_samples"] = s.n_samples;
  j["n_holdout"] = s.n_holdout;
  json t = json::object();
  for (const auto& [name, tg] : s.targets) {
    json c = json::array();
    for (Index r = 0; r < tg.coeffs.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(tg.coeffs.cols()));
      for (Index k = 0; k < tg.coeffs.cols(); ++k) row[static_cast<std::size_t>(k)] = tg.coeffs(r, k);
      c.push_back(row);
    }
    t[name] = {{"rows", tg.rows}, {"cols", tg.cols}, {"coeffs", c}};
  }
  j["targets"] = t;
  return j;
}

Surrogate surrogate_from_json(const json& j) {
  Surrogate s;
  try {
    s.inputs = j.at("inputs").get<std::vector<std::string>>();
    s.lo = j.at("lo").get<std::vector<double>>();
    s.hi = j.at("hi").get<std::vector<double>>();
    s.degree = j.at("degree").get<int>();
    s.exponents = j.at("exponents").get<std::vector<std::vector<int>>>();
    s.in_sample_max_rel_error = j.at("in_sample_max_rel_error").get<double>();
    s.holdout_max_rel_error = j.at("holdout_max_rel_error").is_null()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : j.at("holdout_max_rel_error").get<double>();
    s.n_samples = j.at("n_samples").get<int>();
    s.n_holdout = j.at("n_holdout").get<int>();
    for (auto it = j.at("targets").begin(); it != j.at("targets").end(); ++it) {
      Surrogate::Target t;
      t.rows = it.value().at("rows").get<Index>();
      t.cols = it.value().at("cols").get<Index>();
      const auto c = it.value().at("coeffs").get<std::vector<std::vector<double>>>();
      t.coeffs = MatrixXd(static_cast<Index>(c.size()), t.rows * t.cols);
      for (std::size_t r = 0; r < c.size(); ++r) {
        if (static_cast<Index>(c[r].size()) != t.rows * t.cols)
          throw ValidationError("surrogate: coefficient row width mismatch in '" + it.key() + "'");
        for (std::size_t k = 0; k < c[r].size(); ++k) t.coeffs(static_cast<Index>(r), static_cast<Index>(k)) = c[r][k];
      }
      s.targets[it.key()] = t;
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("surrogate: ") + e.what());
  }
  if (s.lo.size() != s.inputs.size() || s.hi.size() != s.inputs.size())
    throw ValidationError("surrogate: box size differs from input count");
  for (const auto& [name, t] : s.targets)
    if (t.coeffs.rows() != static_cast<Index>(s.exponents.size()))
      throw ValidationError("surrogate: coefficient count of '" + name + "' differs from the basis size");
  return s;
}

bool sort_modes(ModalAppendageData& d) {
  const Index n = d.n_modes();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d.freq(a) < d.freq(b); });
  bool changed = false;
  for (Index i = 0; i < n; ++i) changed = changed || order[static_cast<std::size_t>(i)] != i;
  if (!changed) return false;
  ModalAppendageData out = d;
  for (Index i = 0; i < n; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    out.freq(i) = d.freq(src);
    out.damping(i) = d.damping(src);
    out.lp.row(i) = d.lp.row(src);
    for (std::size_t p = 0; p < d.ports.size(); ++p) out.ports[p].phi_c.col(i) = d.ports[p].phi_c.col(src);
  }
  d = out;
  return true;
}

}  // namespace flexsc
