#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "flexsc/titop/modal_data.hpp"

namespace flexsc {

enum class ParameterKind { uncertain, design };

struct ParameterSpec {
  std::string name;
  double nominal = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  ParameterKind kind = ParameterKind::uncertain;
  int occurrences = 0;  ///< informational
};

using Assignment = std::map<std::string, double>;

void validate(const ParameterSpec& spec);

/// Throws ValidationError naming the first out-of-range or unknown entry.
/// Parameters absent from the assignment are allowed.
void validate_assignment(const std::vector<ParameterSpec>& specs, const Assignment& a);

/// Replacement ranges keyed by parameter name.
using Bounds = std::map<std::string, std::pair<double, double>>;

/// `specs` with the ranges of `bounds` substituted. Each range must lie inside
/// the original one and, for uncertain parameters, contain the nominal value;
/// narrowed design parameters take the new mid-range as nominal.
std::vector<ParameterSpec> narrow_specs(const std::vector<ParameterSpec>& specs, const Bounds& bounds,
                                        const std::string& where);

/// Nominal value of every spec.
Assignment nominal_assignment(const std::vector<ParameterSpec>& specs);

/// Value of `name` in `a`, else the parameter nominal, else `fallback`.
double value_or(const Assignment& a, const std::string& name, double fallback);

enum class SamplingScheme { vertices, random, grid };

/// vertices: all 2^d corners (count ignored, d <= 20). random: `count` uniform
/// draws. grid: full factorial with `grid_points[i]` points per parameter
/// (or `count` points for every parameter when grid_points is empty).
std::vector<Assignment> sample_assignments(const std::vector<ParameterSpec>& specs, SamplingScheme scheme,
                                           int count, std::uint64_t seed, const std::vector<int>& grid_points = {});

/// Rotation by theta about `axis`.
Matrix3d sadm_dcm(double theta, const Vector3d& axis = Vector3d::UnitY());
double sigma4_to_theta(double sigma4);
double theta_to_sigma4(double theta);
/// n_tau equispaced sigma4 in [0, 1] mapped to theta = 4 atan(sigma4).
std::vector<double> sigma4_grid(int n_tau);

/// Per-entry total-degree polynomial fit over a box normalised to [-1, 1].
struct Surrogate {
  std::vector<std::string> inputs;
  std::vector<double> lo, hi;
  int degree = 3;
  std::vector<std::vector<int>> exponents;  ///< one multi-index per basis term
  struct Target {
    Index rows = 0, cols = 0;
    MatrixXd coeffs;  ///< basis x (rows*cols), column-major entries
  };
  std::map<std::string, Target> targets;
  double in_sample_max_rel_error = 0.0;
  double holdout_max_rel_error = 0.0;  ///< NaN when too few samples to hold out
  int n_samples = 0;
  int n_holdout = 0;
};

struct SurrogateSample {
  Assignment assignment;
  std::map<std::string, MatrixXd> matrices;
};

/// Relative error of an entry, floored at 1e-3 of the matrix scale.
double entry_relative_error(double fit, double data, double scale);

Surrogate fit_surrogate(const std::vector<SurrogateSample>& samples, const std::vector<ParameterSpec>& box,
                        int degree = 3);

/// Throws ValidationError when the assignment leaves the fitted box.
std::map<std::string, MatrixXd> eval_surrogate(const Surrogate& s, const Assignment& a);

nlohmann::json to_json(const Surrogate& s);
Surrogate surrogate_from_json(const nlohmann::json& j);

/// Sorts modes by frequency, permuting L_P rows and Phi_C columns alongside.
/// Returns true when the order changed (mode crossing).
bool sort_modes(ModalAppendageData& d);

}  // namespace flexsc
