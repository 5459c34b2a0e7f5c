#include "flexsc/lti/state_space.hpp"

#include <Eigen/Eigenvalues>
#include <set>

#include "flexsc/common/error.hpp"

namespace flexsc {

namespace {

PortRange find_port(const std::vector<PortGroup>& ports, const std::string& name, const char* kind) {
  Index off = 0;
  for (const auto& p : ports) {
    if (p.name == name) return {off, p.width};
    off += p.width;
  }
  throw ValidationError(std::string("unknown ") + kind + " port '" + name + "'");
}

void check_unique(const std::vector<PortGroup>& ports, const char* kind) {
  std::set<std::string> seen;
  for (const auto& p : ports) {
    if (p.width < 0) throw ValidationError(std::string("negative width on ") + kind + " port '" + p.name + "'");
    if (!seen.insert(p.name).second) throw ValidationError(std::string("duplicate ") + kind + " port '" + p.name + "'");
  }
}

}  // namespace

Index total_width(const std::vector<PortGroup>& ports) {
  Index w = 0;
  for (const auto& p : ports) w += p.width;
  return w;
}

StateSpace::StateSpace(MatrixXd a, MatrixXd b, MatrixXd c, MatrixXd d, std::vector<PortGroup> inputs,
                       std::vector<PortGroup> outputs, std::vector<PortGroup> states)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)),
      d_(std::move(d)),
      inputs_(std::move(inputs)),
      outputs_(std::move(outputs)),
      states_(std::move(states)) {
  const Index n = a_.rows();
  if (a_.cols() != n) throw ValidationError("A must be square");
  if (b_.rows() != n) throw ValidationError("B row count must equal state dimension");
  if (c_.cols() != n) throw ValidationError("C column count must equal state dimension");
  if (d_.rows() != c_.rows() || d_.cols() != b_.cols()) throw ValidationError("D is not conformant with B and C");
  if (states_.empty() && n > 0) states_.push_back({"x", n});
  check_unique(inputs_, "input");
  check_unique(outputs_, "output");
  if (total_width(inputs_) != d_.cols()) throw ValidationError("input port widths do not sum to the input count");
  if (total_width(outputs_) != d_.rows()) throw ValidationError("output port widths do not sum to the output count");
  if (total_width(states_) != n) throw ValidationError("state group widths do not sum to the state count");
}

StateSpace StateSpace::gain(MatrixXd d, std::vector<PortGroup> inputs, std::vector<PortGroup> outputs) {
  const Index p = d.rows(), m = d.cols();
  return StateSpace(MatrixXd(0, 0), MatrixXd(0, m), MatrixXd(p, 0), std::move(d), std::move(inputs),
                    std::move(outputs));
}

bool StateSpace::has_input(const std::string& name) const {
  for (const auto& p : inputs_)
    if (p.name == name) return true;
  return false;
}

bool StateSpace::has_output(const std::string& name) const {
  for (const auto& p : outputs_)
    if (p.name == name) return true;
  return false;
}

PortRange StateSpace::input(const std::string& name) const { return find_port(inputs_, name, "input"); }
PortRange StateSpace::output(const std::string& name) const { return find_port(outputs_, name, "output"); }
PortRange StateSpace::state_group(const std::string& name) const { return find_port(states_, name, "state"); }

StateSpace StateSpace::select(const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) const {
  std::vector<PortGroup> in_ports, out_ports;
  std::vector<Index> cols, rows;
  for (const auto& name : inputs) {
    auto r = input(name);
    in_ports.push_back({name, r.width});
    for (Index k = 0; k < r.width; ++k) cols.push_back(r.offset + k);
  }
  for (const auto& name : outputs) {
    auto r = output(name);
    out_ports.push_back({name, r.width});
    for (Index k = 0; k < r.width; ++k) rows.push_back(r.offset + k);
  }
  const Index n = order();
  MatrixXd b(n, cols.size()), c(rows.size(), n), d(rows.size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) b.col(j) = b_.col(cols[j]);
  for (std::size_t i = 0; i < rows.size(); ++i) c.row(i) = c_.row(rows[i]);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) d(i, j) = d_(rows[i], cols[j]);
  return StateSpace(a_, b, c, d, in_ports, out_ports, states_);
}

StateSpace StateSpace::prefixed(const std::string& prefix) const {
  auto in = inputs_, out = outputs_, st = states_;
  for (auto& p : in) p.name = prefix + p.name;
  for (auto& p : out) p.name = prefix + p.name;
  for (auto& p : st) p.name = prefix + p.name;
  return StateSpace(a_, b_, c_, d_, in, out, st);
}

StateSpace StateSpace::renamed_input(const std::string& from, const std::string& to) const {
  auto in = inputs_;
  bool found = false;
  for (auto& p : in)
    if (p.name == from) {
      p.name = to;
      found = true;
    }
  if (!found) throw ValidationError("unknown input port '" + from + "'");
  return StateSpace(a_, b_, c_, d_, in, outputs_, states_);
}

StateSpace StateSpace::renamed_output(const std::string& from, const std::string& to) const {
  auto out = outputs_;
  bool found = false;
  for (auto& p : out)
    if (p.name == from) {
      p.name = to;
      found = true;
    }
  if (!found) throw ValidationError("unknown output port '" + from + "'");
  return StateSpace(a_, b_, c_, d_, inputs_, out, states_);
}

StateSpace StateSpace::scaled(double alpha) const {
  return StateSpace(a_, b_, alpha * c_, alpha * d_, inputs_, outputs_, states_);
}

StateSpace series(const StateSpace& first, const StateSpace& second) {
  if (first.n_outputs() != second.n_inputs()) throw ValidationError("series: width mismatch");
  const Index n1 = first.order(), n2 = second.order();
  MatrixXd a = MatrixXd::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = first.a();
  a.bottomLeftCorner(n2, n1) = second.b() * first.c();
  a.bottomRightCorner(n2, n2) = second.a();
  MatrixXd b(n1 + n2, first.n_inputs());
  b << first.b(), second.b() * first.d();
  MatrixXd c(second.n_outputs(), n1 + n2);
  c << second.d() * first.c(), second.c();
  MatrixXd d = second.d() * first.d();
  std::vector<PortGroup> st;
  for (auto p : first.states()) st.push_back({"1." + p.name, p.width});
  for (auto p : second.states()) st.push_back({"2." + p.name, p.width});
  return StateSpace(a, b, c, d, first.inputs(), second.outputs(), st);
}

StateSpace append(const std::vector<StateSpace>& systems) {
  Index n = 0, m = 0, p = 0;
  for (const auto& s : systems) {
    n += s.order();
    m += s.n_inputs();
    p += s.n_outputs();
  }
  MatrixXd a = MatrixXd::Zero(n, n), b = MatrixXd::Zero(n, m), c = MatrixXd::Zero(p, n), d = MatrixXd::Zero(p, m);
  std::vector<PortGroup> in, out, st;
  Index on = 0, om = 0, op = 0;
  for (const auto& s : systems) {
    a.block(on, on, s.order(), s.order()) = s.a();
    b.block(on, om, s.order(), s.n_inputs()) = s.b();
    c.block(op, on, s.n_outputs(), s.order()) = s.c();
    d.block(op, om, s.n_outputs(), s.n_inputs()) = s.d();
    in.insert(in.end(), s.inputs().begin(), s.inputs().end());
    out.insert(out.end(), s.outputs().begin(), s.outputs().end());
    st.insert(st.end(), s.states().begin(), s.states().end());
    on += s.order();
    om += s.n_inputs();
    op += s.n_outputs();
  }
  return StateSpace(a, b, c, d, in, out, st);
}

StateSpace replicate_diagonal(const StateSpace& g, int copies) {
  if (copies < 1) throw ValidationError("replicate_diagonal: copies must be >= 1");
  const Index n = g.order(), m = g.n_inputs(), p = g.n_outputs();
  const Index k = copies;
  MatrixXd a = MatrixXd::Zero(n * k, n * k), b = MatrixXd::Zero(n * k, m * k);
  MatrixXd c = MatrixXd::Zero(p * k, n * k), d = MatrixXd::Zero(p * k, m * k);
  // channel j of copy c lands at  port_offset*k + c*port_width + (j - port_offset)
  auto remap = [k](const std::vector<PortGroup>& ports, Index copy, Index j) {
    Index off = 0;
    for (const auto& pg : ports) {
      if (j < off + pg.width) return off * k + copy * pg.width + (j - off);
      off += pg.width;
    }
    return Index(-1);
  };
  for (Index cp = 0; cp < k; ++cp) {
    a.block(cp * n, cp * n, n, n) = g.a();
    for (Index j = 0; j < m; ++j) {
      const Index jj = remap(g.inputs(), cp, j);
      b.block(cp * n, jj, n, 1) = g.b().col(j);
      for (Index i = 0; i < p; ++i) d(remap(g.outputs(), cp, i), jj) = g.d()(i, j);
    }
    for (Index i = 0; i < p; ++i) c.block(remap(g.outputs(), cp, i), cp * n, 1, n) = g.c().row(i);
  }
  auto in = g.inputs(), out = g.outputs();
  for (auto& pg : in) pg.width *= k;
  for (auto& pg : out) pg.width *= k;
  std::vector<PortGroup> st;
  for (Index cp = 0; cp < k; ++cp)
    if (n > 0) st.push_back({"copy" + std::to_string(cp), n});
  return StateSpace(a, b, c, d, in, out, st);
}

bool stable(const StateSpace& g) {
  if (g.order() == 0) return true;
  Eigen::EigenSolver<MatrixXd> es(g.a(), false);
  if (es.info() != Eigen::Success) return false;
  for (Index i = 0; i < g.order(); ++i) {
    const auto lam = es.eigenvalues()(i);
    if (!(lam.real() < -1e-12 * (1.0 + std::abs(lam)))) return false;
  }
  return true;
}

}  // namespace flexsc
