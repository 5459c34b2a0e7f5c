#pragma once

#include <string>
#include <vector>

#include "flexsc/lti/state_space.hpp"

namespace flexsc {

/// Proper SISO transfer function num(s)/den(s), coefficients in descending
/// powers, realized in controllable canonical form.
StateSpace transfer_function(std::vector<double> num, std::vector<double> den, const std::string& in = "in",
                             const std::string& out = "out");

}  // namespace flexsc
