#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flexsc/titop/titop.hpp"

namespace flexsc {

/// Attaches `child` (inputs "acc_P", outputs "W_P") to the parent port pair
/// ("W_<port>", "acc_<port>"). `dcm` maps child-frame vectors into the parent
/// frame. Remaining child ports are exposed as "<child_name>.<port>".
StateSpace connect_child(const StateSpace& parent, const std::string& port, const StateSpace& child,
                         const std::string& child_name, const Matrix3d& dcm = Matrix3d::Identity());

StateSpace connect_child(const StateSpace& parent, const std::string& port, const TitopModel& child,
                         const Matrix3d& dcm = Matrix3d::Identity());

/// Re-expresses every 6-wide port in a frame rotated by `dcm`
/// (new = blkdiag(R, R) old).
StateSpace rotated(const StateSpace& g, const Matrix3d& dcm);

/// Exchanges inputs and outputs of the listed channels (input name, output
/// name). The new input takes the output's name and slot position of the old
/// input; the new output takes the input's name in the old output slot.
StateSpace invert_channels(const StateSpace& g, const std::vector<std::pair<std::string, std::string>>& channels);

}  // namespace flexsc
