#include "flexsc/titop/assembly.hpp"

#include <Eigen/LU>

#include "flexsc/common/error.hpp"
#include "flexsc/lti/interconnect.hpp"

namespace flexsc {

namespace {

Matrix6d twist_rotation(const Matrix3d& r) {
  Matrix6d out = Matrix6d::Zero();
  out.topLeftCorner<3, 3>() = r;
  out.bottomRightCorner<3, 3>() = r;
  return out;
}

void check_rotation(const Matrix3d& r) {
  if ((r.transpose() * r - Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 || r.determinant() < 0.0)
    throw ValidationError("dcm must be orthonormal with determinant +1");
}

}  // namespace

StateSpace connect_child(const StateSpace& parent, const std::string& port, const StateSpace& child,
                         const std::string& child_name, const Matrix3d& dcm) {
  check_rotation(dcm);
  const std::string w = "W_" + port, acc = "acc_" + port;
  if (!parent.has_input(w) || !parent.has_output(acc))
    throw ValidationError("connect_child: parent has no port pair '" + w + "'/'" + acc + "'");
  if (parent.input(w).width != 6 || parent.output(acc).width != 6)
    throw ValidationError("connect_child: parent port '" + port + "' is not 6 wide");
  if (!child.has_input("acc_P") || !child.has_output("W_P"))
    throw ValidationError("connect_child: child '" + child_name + "' lacks acc_P/W_P");
  const Matrix6d r2 = twist_rotation(dcm);

  std::vector<Block> blocks{{"parent", parent}, {"child", child}};
  std::vector<Link> links{{"parent." + acc, "child.acc_P", r2.transpose()}, {"child.W_P", "parent." + w, r2}};
  std::vector<ExternalInput> ein;
  std::vector<ExternalOutput> eout;
  for (const auto& p : parent.inputs())
    if (p.name != w) ein.push_back({p.name, {"parent." + p.name}});
  for (const auto& p : child.inputs())
    if (p.name != "acc_P") ein.push_back({child_name + "." + p.name, {"child." + p.name}});
  for (const auto& p : parent.outputs())
    if (p.name != acc) eout.push_back({p.name, "parent." + p.name});
  for (const auto& p : child.outputs())
    if (p.name != "W_P") eout.push_back({child_name + "." + p.name, "child." + p.name});

  InterconnectOptions opt;
  opt.auto_reduce = false;
  const StateSpace joined = interconnect(blocks, links, ein, eout, opt);
  // state groups: drop the block prefixes introduced above
  std::vector<PortGroup> st;
  for (const auto& p : parent.states()) st.push_back(p);
  for (const auto& p : child.states()) st.push_back({child_name + "." + p.name, p.width});
  return StateSpace(joined.a(), joined.b(), joined.c(), joined.d(), joined.inputs(), joined.outputs(), st);
}

StateSpace connect_child(const StateSpace& parent, const std::string& port, const TitopModel& child,
                         const Matrix3d& dcm) {
  return connect_child(parent, port, child.system, child.name, dcm);
}

StateSpace rotated(const StateSpace& g, const Matrix3d& dcm) {
  check_rotation(dcm);
  const Matrix6d r2 = twist_rotation(dcm);
  MatrixXd tin = MatrixXd::Identity(g.n_inputs(), g.n_inputs());
  MatrixXd tout = MatrixXd::Identity(g.n_outputs(), g.n_outputs());
  Index off = 0;
  for (const auto& p : g.inputs()) {
    if (p.width == 6) tin.block(off, off, 6, 6) = r2.transpose();
    off += p.width;
  }
  off = 0;
  for (const auto& p : g.outputs()) {
    if (p.width == 6) tout.block(off, off, 6, 6) = r2;
    off += p.width;
  }
  return StateSpace(g.a(), g.b() * tin, tout * g.c(), tout * g.d() * tin, g.inputs(), g.outputs(), g.states());
}

StateSpace invert_channels(const StateSpace& g, const std::vector<std::pair<std::string, std::string>>& channels) {
  const Index m = g.n_inputs();
  std::vector<Index> ii, oo;
  std::vector<PortGroup> in = g.inputs(), out = g.outputs();
  std::string label;
  for (const auto& [iname, oname] : channels) {
    const PortRange ri = g.input(iname), ro = g.output(oname);
    if (ri.width != ro.width)
      throw ValidationError("invert_channels: '" + iname + "' and '" + oname + "' differ in width");
    for (Index k = 0; k < ri.width; ++k) {
      ii.push_back(ri.offset + k);
      oo.push_back(ro.offset + k);
    }
    for (auto& q : in)
      if (q.name == iname) q.name = oname;
    for (auto& q : out)
      if (q.name == oname) q.name = iname;
    label += (label.empty() ? "" : ", ") + iname + "->" + oname;
  }
  const Index q = static_cast<Index>(ii.size());

  MatrixXd dsel(q, q);
  for (Index r = 0; r < q; ++r)
    for (Index c = 0; c < q; ++c) dsel(r, c) = g.d()(oo[r], ii[c]);
  Eigen::FullPivLU<MatrixXd> lu(dsel);
  if (q > 0 && (!lu.isInvertible() || lu.rcond() < 1e-13))
    throw ValidationError("invert_channels: feedthrough of channel " + label + " is singular");
  const MatrixXd dinv = q > 0 ? lu.inverse() : MatrixXd(0, 0);

  // split the realization by selected (s) and remaining (r) indices
  auto rows = [](const MatrixXd& x, const std::vector<Index>& idx) {
    MatrixXd y(static_cast<Index>(idx.size()), x.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) y.row(static_cast<Index>(k)) = x.row(idx[k]);
    return y;
  };
  // u_s = Dinv (y_s - C_s x - D_{s,.} u_r);  full input vector v: slot i_s holds y_s
  const MatrixXd cs = rows(g.c(), oo);
  const MatrixXd ds_all = rows(g.d(), oo);  // q x m
  // express u (old inputs) as T x + S v, where v is the new input vector
  MatrixXd t = MatrixXd::Zero(m, g.order());
  MatrixXd s = MatrixXd::Identity(m, m);
  MatrixXd ds_rest = ds_all;
  for (Index k : ii) ds_rest.col(k).setZero();
  const MatrixXd us_x = -dinv * cs;
  MatrixXd us_v = -dinv * ds_rest;
  // slot ii[c] of v carries y_s(c)
  for (Index r = 0; r < q; ++r)
    for (Index c = 0; c < q; ++c) us_v(r, ii[c]) = dinv(r, c);
  for (Index r = 0; r < q; ++r) {
    t.row(ii[r]) = us_x.row(r);
    s.row(ii[r]) = us_v.row(r);
  }
  const MatrixXd a = g.a() + g.b() * t;
  const MatrixXd b = g.b() * s;
  MatrixXd c = g.c() + g.d() * t;
  MatrixXd d = g.d() * s;
  // selected output slots now carry the old selected inputs
  for (Index r = 0; r < q; ++r) {
    c.row(oo[r]) = t.row(ii[r]);
    d.row(oo[r]) = s.row(ii[r]);
  }
  return StateSpace(a, b, c, d, in, out, g.states());
}

}  // namespace flexsc
