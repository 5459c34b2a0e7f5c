#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flexsc/titop/modal_data.hpp"

namespace flexsc {

/// Uniform Euler-Bernoulli beam along +x from its clamped root P.
struct BeamSection {
  double length = 1.0;
  double ei_xy = 1.0;   ///< bending in the xy plane (deflection along y), N m^2
  double ei_xz = 1.0;   ///< bending in the xz plane (deflection along z), N m^2
  double rho_a = 1.0;   ///< mass per length, kg/m
  double rho_jx = 0.0;  ///< torsional mass inertia per length, kg m
  double rho_iy = 0.0;  ///< rotary inertia per length about y, kg m
  double rho_iz = 0.0;  ///< rotary inertia per length about z, kg m
};

struct BeamOptions {
  std::string name = "beam";
  double damping = 0.005;
  int n_modes = 4;
  /// Free ports (name, abscissa in (0, L]); empty means a single tip port "C".
  std::vector<std::pair<std::string, double>> ports;
  /// Replaces the top 4 modes per port by Ritz vectors spanning the static
  /// force and moment responses at the port, one pair per bending plane.
  bool residual_flexibility = false;
};

inline constexpr int kMaxBeamModes = 20;

/// k-th root (k >= 1) of cos(z) cosh(z) = -1.
double cantilever_root(int k);

/// k-th nonzero root of cos(z) cosh(z) = 1 (free-free beam).
double free_free_root(int k);

/// Clamped-free modal data: the lowest n_modes over both bending planes, ties
/// ordered xy first. Axial and torsion enter through M_r only.
ModalAppendageData cantilever_beam_modal(const BeamSection& beam, const BeamOptions& options = {});

/// Convenience overload for an axisymmetric section without rotary inertia.
ModalAppendageData cantilever_beam_modal(double length, double ei, double rho_a, double damping, int n_modes,
                                         double port_x);

}  // namespace flexsc
