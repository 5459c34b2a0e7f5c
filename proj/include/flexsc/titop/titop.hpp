#pragma once

#include <string>

#include "flexsc/titop/modal_data.hpp"

namespace flexsc {

/// Two-port flexible block. Inputs: "W_<port>" (wrench applied by the child at
/// each free port) then "acc_P"; outputs: "acc_<port>" then "W_P" (wrench
/// applied to the parent at P). States: "eta", "eta_dot".
struct TitopModel {
  std::string name;
  StateSpace system;
  std::string frame = "R0";
  Vector3d reference = Vector3d::Zero();
};

TitopModel titop_from_modal(const ModalAppendageData& data);

}  // namespace flexsc
