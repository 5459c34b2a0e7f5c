#include "flexsc/lti/interconnect.hpp"

#include <Eigen/LU>
#include <map>

#include "flexsc/common/error.hpp"
#include "flexsc/lti/reduce.hpp"

namespace flexsc {

namespace {

struct Resolved {
  std::size_t block;
  PortRange range;  // in stacked coordinates
};

class Layout {
 public:
  explicit Layout(const std::vector<Block>& blocks) : blocks_(blocks) {
    Index n = 0, m = 0, p = 0;
    for (const auto& b : blocks) {
      if (index_.count(b.name)) throw ValidationError("duplicate block name '" + b.name + "'");
      index_[b.name] = state_off_.size();
      state_off_.push_back(n);
      in_off_.push_back(m);
      out_off_.push_back(p);
      n += b.system.order();
      m += b.system.n_inputs();
      p += b.system.n_outputs();
    }
    n_ = n;
    m_ = m;
    p_ = p;
  }

  Resolved input(const std::string& ref) const { return resolve(ref, true); }
  Resolved output(const std::string& ref) const { return resolve(ref, false); }

  Index n() const { return n_; }
  Index m() const { return m_; }
  Index p() const { return p_; }
  Index state_offset(std::size_t i) const { return state_off_[i]; }
  Index input_offset(std::size_t i) const { return in_off_[i]; }
  Index output_offset(std::size_t i) const { return out_off_[i]; }

 private:
  Resolved resolve(const std::string& ref, bool is_input) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& name = blocks_[i].name;
      if (ref.size() <= name.size() + 1 || ref.compare(0, name.size(), name) != 0 || ref[name.size()] != '.') continue;
      const std::string port = ref.substr(name.size() + 1);
      const auto& sys = blocks_[i].system;
      if (is_input && sys.has_input(port)) {
        auto r = sys.input(port);
        return {i, {in_off_[i] + r.offset, r.width}};
      }
      if (!is_input && sys.has_output(port)) {
        auto r = sys.output(port);
        return {i, {out_off_[i] + r.offset, r.width}};
      }
    }
    throw ValidationError(std::string("cannot resolve ") + (is_input ? "input" : "output") + " reference '" + ref +
                          "'");
  }

  const std::vector<Block>& blocks_;
  std::map<std::string, std::size_t> index_;
  std::vector<Index> state_off_, in_off_, out_off_;
  Index n_ = 0, m_ = 0, p_ = 0;
};

}  // namespace

StateSpace interconnect(const std::vector<Block>& blocks, const std::vector<Link>& links,
                        const std::vector<ExternalInput>& ext_in, const std::vector<ExternalOutput>& ext_out,
                        const InterconnectOptions& options) {
  Layout lay(blocks);
  const Index n = lay.n(), m = lay.m(), p = lay.p();

  MatrixXd a = MatrixXd::Zero(n, n), b = MatrixXd::Zero(n, m), c = MatrixXd::Zero(p, n), d = MatrixXd::Zero(p, m);
  std::vector<PortGroup> states;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& s = blocks[i].system;
    const Index on = lay.state_offset(i), om = lay.input_offset(i), op = lay.output_offset(i);
    a.block(on, on, s.order(), s.order()) = s.a();
    b.block(on, om, s.order(), s.n_inputs()) = s.b();
    c.block(op, on, s.n_outputs(), s.order()) = s.c();
    d.block(op, om, s.n_outputs(), s.n_inputs()) = s.d();
    for (const auto& g : s.states()) states.push_back({blocks[i].name + "." + g.name, g.width});
  }

  MatrixXd L = MatrixXd::Zero(m, p);
  for (const auto& lk : links) {
    const auto src = lay.output(lk.from);
    const auto dst = lay.input(lk.to);
    if (lk.gain.size() == 0) {
      if (src.range.width != dst.range.width)
        throw ValidationError("port width mismatch on link " + lk.from + " -> " + lk.to + " (" +
                              std::to_string(src.range.width) + " vs " + std::to_string(dst.range.width) + ")");
      L.block(dst.range.offset, src.range.offset, dst.range.width, src.range.width) +=
          MatrixXd::Identity(dst.range.width, src.range.width);
    } else {
      if (lk.gain.rows() != dst.range.width || lk.gain.cols() != src.range.width)
        throw ValidationError("gain shape mismatch on link " + lk.from + " -> " + lk.to);
      L.block(dst.range.offset, src.range.offset, dst.range.width, src.range.width) += lk.gain;
    }
  }

  std::vector<PortGroup> in_ports, out_ports;
  Index w = 0;
  for (const auto& e : ext_in) {
    if (e.sinks.empty()) throw ValidationError("external input '" + e.name + "' has no sink");
    Index width = lay.input(e.sinks.front()).range.width;
    in_ports.push_back({e.name, width});
    w += width;
  }
  MatrixXd E = MatrixXd::Zero(m, w);
  Index wo = 0;
  for (const auto& e : ext_in) {
    const Index width = in_ports[&e - ext_in.data()].width;
    for (const auto& s : e.sinks) {
      const auto dst = lay.input(s);
      if (dst.range.width != width)
        throw ValidationError("port width mismatch on external input '" + e.name + "' -> " + s);
      E.block(dst.range.offset, wo, width, width) += MatrixXd::Identity(width, width);
    }
    wo += width;
  }

  std::vector<Index> rows;
  for (const auto& e : ext_out) {
    const auto src = lay.output(e.source);
    out_ports.push_back({e.name, src.range.width});
    for (Index k = 0; k < src.range.width; ++k) rows.push_back(src.range.offset + k);
  }

  MatrixXd loop = MatrixXd::Identity(m, m) - L * d;
  Eigen::FullPivLU<MatrixXd> lu(loop);
  if (m > 0) {
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw AlgebraicLoopError("algebraic loop: I - L*D is singular");
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) throw AlgebraicLoopError("algebraic loop: I - L*D is numerically singular");
  }
  const MatrixXd mlc = m > 0 ? MatrixXd(lu.solve(L * c)) : MatrixXd::Zero(0, n);
  const MatrixXd me = m > 0 ? MatrixXd(lu.solve(E)) : MatrixXd::Zero(0, w);

  MatrixXd acl = a + b * mlc;
  MatrixXd bcl = b * me;
  MatrixXd call = c + d * mlc;
  MatrixXd dall = d * me;
  MatrixXd ccl(rows.size(), n), dcl(rows.size(), w);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ccl.row(i) = call.row(rows[i]);
    dcl.row(i) = dall.row(rows[i]);
  }
  StateSpace out(acl, bcl, ccl, dcl, in_ports, out_ports, states);
  if (options.auto_reduce && out.order() > options.auto_reduce_order) {
    auto red = reduce_minimal(out, options.reduce_tol);
    if (!red.passthrough) return red.system;
  }
  return out;
}

StateSpace close_static_feedback(const StateSpace& g, const std::string& u_port, const std::string& y_port,
                                 const MatrixXd& k) {
  const auto ur = g.input(u_port);
  const auto yr = g.output(y_port);
  if (k.rows() != ur.width || k.cols() != yr.width) throw ValidationError("feedback gain shape mismatch");
  const Index n = g.order();
  // u = K (C_y x + D_yu u + D_yw w)  =>  u = (I - K D_yu)^{-1} K (C_y x + D_yw w)
  std::vector<Index> wcols, zrows;
  std::vector<PortGroup> in, out;
  {
    Index off = 0;
    for (const auto& p : g.inputs()) {
      if (p.name != u_port) {
        in.push_back(p);
        for (Index j = 0; j < p.width; ++j) wcols.push_back(off + j);
      }
      off += p.width;
    }
    off = 0;
    for (const auto& p : g.outputs()) {
      if (p.name != y_port) {
        out.push_back(p);
        for (Index j = 0; j < p.width; ++j) zrows.push_back(off + j);
      }
      off += p.width;
    }
  }
  const MatrixXd bu = g.b().middleCols(ur.offset, ur.width);
  const MatrixXd cy = g.c().middleRows(yr.offset, yr.width);
  const MatrixXd dyu = g.d().block(yr.offset, ur.offset, yr.width, ur.width);
  MatrixXd bw(n, wcols.size()), dyw(yr.width, wcols.size());
  for (std::size_t j = 0; j < wcols.size(); ++j) {
    bw.col(j) = g.b().col(wcols[j]);
    dyw.col(j) = g.d().block(yr.offset, wcols[j], yr.width, 1);
  }
  MatrixXd loop = MatrixXd::Identity(ur.width, ur.width) - k * dyu;
  Eigen::FullPivLU<MatrixXd> lu(loop);
  if (!lu.isInvertible()) throw AlgebraicLoopError("algebraic loop: I - K*D is singular");
  const MatrixXd kx = lu.solve(k * cy);   // u = kx x + kw w
  const MatrixXd kw = lu.solve(k * dyw);
  MatrixXd a = g.a() + bu * kx;
  MatrixXd b = bw + bu * kw;
  MatrixXd c(zrows.size(), n), d(zrows.size(), wcols.size());
  for (std::size_t i = 0; i < zrows.size(); ++i) {
    const MatrixXd dzu = g.d().block(zrows[i], ur.offset, 1, ur.width);
    c.row(i) = g.c().row(zrows[i]) + dzu * kx;
    for (std::size_t j = 0; j < wcols.size(); ++j) d(i, j) = g.d()(zrows[i], wcols[j]);
    d.row(i) += dzu * kw;
  }
  return StateSpace(a, b, c, d, in, out, g.states());
}

}  // namespace flexsc
