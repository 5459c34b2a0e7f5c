#include "flexsc/titop/beam.hpp"

#include <algorithm>
#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>

#include "flexsc/common/error.hpp"

namespace flexsc {

namespace {

double bracketed_root(double (*f)(double), double lo, double hi) {
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

// cos z + 1/cosh z, same roots as cos z cosh z + 1
double clamped_free_char(double z) { return std::cos(z) + 1.0 / std::cosh(z); }
double free_free_char(double z) { return std::cos(z) - 1.0 / std::cosh(z); }

// Clamped-free shape cosh - cos - s (sinh - sin) and its derivative over beta,
// written to avoid cancellation at large beta L.
struct ShapeEval {
  double bl = 0.0;
  double sigma = 0.0;
  double one_minus_sigma = 0.0;

  explicit ShapeEval(double beta_l) : bl(beta_l) {
    const double denom = std::sinh(bl) + std::sin(bl);
    sigma = (std::cosh(bl) + std::cos(bl)) / denom;
    one_minus_sigma = (-std::exp(-bl) + std::sin(bl) - std::cos(bl)) / denom;
  }

  double value(double z) const {
    const double hyp = 0.5 * (one_minus_sigma * std::exp(z) + (1.0 + sigma) * std::exp(-z));
    return hyp - std::cos(z) + sigma * std::sin(z);
  }

  double slope(double z) const {
    const double hyp = 0.5 * (one_minus_sigma * std::exp(z) - (1.0 + sigma) * std::exp(-z));
    return hyp + std::sin(z) + sigma * std::cos(z);
  }
};

struct PlaneMode {
  int plane = 0;  // 0: xy, 1: xz
  double beta_l = 0.0;
  double omega = 0.0;
};

}  // namespace

double cantilever_root(int k) {
  if (k < 1) throw ValidationError("cantilever_root: k must be >= 1");
  return bracketed_root(clamped_free_char, (k - 1) * M_PI, k * M_PI);
}

double free_free_root(int k) {
  if (k < 1) throw ValidationError("free_free_root: k must be >= 1");
  return bracketed_root(free_free_char, k * M_PI, (k + 1) * M_PI);
}

namespace {

struct ModeRecord {
  int plane = 0;
  double omega = 0.0;
  std::vector<double> value, slope;  // per port
  double int_phi = 0.0, int_x_phi = 0.0;
};

// Composite Gauss rule on [0, L] with breakpoints at the ports.
void quadrature(double len, const std::vector<double>& breaks, std::vector<double>& x, std::vector<double>& w) {
  std::vector<double> cuts{0.0, len};
  for (double b : breaks)
    if (b > 0.0 && b < len) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  using rule = boost::math::quadrature::gauss<double, 20>;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    if (b - a <= 0.0) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil(96.0 * (b - a) / len)));
    for (int p = 0; p < panels; ++p) {
      const double lo = a + (b - a) * p / panels, hi = a + (b - a) * (p + 1) / panels;
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (std::size_t i = 0; i < rule::abscissa().size(); ++i) {
        x.push_back(mid + half * rule::abscissa()[i]);
        w.push_back(half * rule::weights()[i]);
        x.push_back(mid - half * rule::abscissa()[i]);
        w.push_back(half * rule::weights()[i]);
      }
    }
  }
}

// Static deflection under a unit force (kind 0) or unit moment (kind 1) at a,
// times EI; derivative order 0, 1 or 2.
double static_shape(int kind, double a, double x, int order) {
  if (kind == 0) {
    if (x <= a) {
      if (order == 0) return x * x * (3.0 * a - x) / 6.0;
      if (order == 1) return x * (2.0 * a - x) / 2.0;
      return a - x;
    }
    if (order == 0) return a * a * (3.0 * x - a) / 6.0;
    if (order == 1) return a * a / 2.0;
    return 0.0;
  }
  if (x <= a) {
    if (order == 0) return x * x / 2.0;
    if (order == 1) return x;
    return 1.0;
  }
  if (order == 0) return a * (2.0 * x - a) / 2.0;
  if (order == 1) return a;
  return 0.0;
}

}  // namespace

ModalAppendageData cantilever_beam_modal(const BeamSection& beam, const BeamOptions& options) {
  const std::string who = "cantilever_beam_modal '" + options.name + "': ";
  if (!(beam.length > 0.0 && beam.ei_xy > 0.0 && beam.ei_xz > 0.0 && beam.rho_a > 0.0))
    throw ValidationError(who + "length, stiffness and mass per length must be positive");
  if (beam.rho_jx < 0.0 || beam.rho_iy < 0.0 || beam.rho_iz < 0.0)
    throw ValidationError(who + "rotary inertias must be non-negative");
  if (options.n_modes < 0) throw ValidationError(who + "n_modes must be non-negative");
  if (options.n_modes > kMaxBeamModes)
    throw ValidationError(who + "n_modes exceeds the supported analytic mode count " + std::to_string(kMaxBeamModes));
  if (!(options.damping > 0.0 && options.damping < 1.0)) throw ValidationError(who + "damping must be in (0, 1)");

  const double len = beam.length;
  const double ra = beam.rho_a;
  std::vector<std::pair<std::string, double>> ports = options.ports;
  if (ports.empty()) ports.push_back({"C", len});
  for (const auto& [pname, x] : ports)
    if (!(x > 0.0 && x <= len * (1.0 + 1e-12))) throw ValidationError(who + "port '" + pname + "' is off the beam");
  const int np = static_cast<int>(ports.size());
  const int n_static = options.residual_flexibility ? 2 * np : 0;
  const int n_exact = options.n_modes - 2 * n_static;
  if (n_exact < 0)
    throw ValidationError(who + "residual flexibility needs n_modes >= " + std::to_string(4 * np));

  const double ei[2] = {beam.ei_xy, beam.ei_xz};
  std::vector<PlaneMode> picked;
  for (int k = 1; k <= n_exact; ++k) {
    const double bl = cantilever_root(k);
    for (int plane = 0; plane < 2; ++plane)
      picked.push_back({plane, bl, bl * bl * std::sqrt(ei[plane] / ra) / (len * len)});
  }
  std::stable_sort(picked.begin(), picked.end(), [](const PlaneMode& a, const PlaneMode& b) {
    if (a.omega != b.omega) return a.omega < b.omega;
    return a.plane < b.plane;
  });
  picked.resize(static_cast<std::size_t>(n_exact));

  const double amp = 1.0 / std::sqrt(ra * len);
  std::vector<ModeRecord> records;
  for (const PlaneMode& m : picked) {
    const double beta = m.beta_l / len;
    const ShapeEval shape(m.beta_l);
    // tip deflection positive
    const double c = shape.value(m.beta_l) >= 0.0 ? amp : -amp;
    ModeRecord r;
    r.plane = m.plane;
    r.omega = m.omega;
    for (const auto& pt : ports) {
      const double z = beta * pt.second;
      r.value.push_back(c * shape.value(z));
      r.slope.push_back(c * beta * shape.slope(z));
    }
    r.int_phi = 2.0 * shape.sigma * c * ra / beta;
    r.int_x_phi = 2.0 * c * ra / (beta * beta);
    records.push_back(r);
  }

  if (n_static > 0) {
    // Static port-load shapes, made M-orthogonal to the retained modes, then
    // Rayleigh-Ritz in their span. Retained modes stay exact eigenpairs.
    std::vector<double> breaks;
    for (const auto& pt : ports) breaks.push_back(pt.second);
    std::vector<double> xq, wq;
    quadrature(len, breaks, xq, wq);
    const Index nq = static_cast<Index>(xq.size());
    for (int plane = 0; plane < 2; ++plane) {
      std::vector<const PlaneMode*> in_plane;
      for (const auto& m : picked)
        if (m.plane == plane) in_plane.push_back(&m);
      const Index ne = static_cast<Index>(in_plane.size());
      MatrixXd phi(nq, ne), s0(nq, n_static), s2(nq, n_static);
      VectorXd lam(ne);
      for (Index j = 0; j < ne; ++j) {
        const PlaneMode& m = *in_plane[static_cast<std::size_t>(j)];
        const double beta = m.beta_l / len;
        const ShapeEval shape(m.beta_l);
        const double c = shape.value(m.beta_l) >= 0.0 ? amp : -amp;
        for (Index q = 0; q < nq; ++q) phi(q, j) = c * shape.value(beta * xq[static_cast<std::size_t>(q)]);
        lam(j) = m.omega * m.omega;
      }
      for (int s = 0; s < n_static; ++s) {
        const int kind = s % 2;
        const double a = ports[static_cast<std::size_t>(s / 2)].second;
        for (Index q = 0; q < nq; ++q) {
          s0(q, s) = static_shape(kind, a, xq[static_cast<std::size_t>(q)], 0) / ei[plane];
          s2(q, s) = static_shape(kind, a, xq[static_cast<std::size_t>(q)], 2) / ei[plane];
        }
      }
      const VectorXd wm = Eigen::Map<const VectorXd>(wq.data(), nq) * ra;
      const VectorXd wk = Eigen::Map<const VectorXd>(wq.data(), nq) * ei[plane];
      const MatrixXd mps = phi.transpose() * wm.asDiagonal() * s0;  // ne x ns
      MatrixXd mss = s0.transpose() * wm.asDiagonal() * s0 - mps.transpose() * mps;
      MatrixXd kss = s2.transpose() * wk.asDiagonal() * s2 - mps.transpose() * lam.asDiagonal() * mps;
      mss = 0.5 * (mss + mss.transpose()).eval();
      kss = 0.5 * (kss + kss.transpose()).eval();
      Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(kss, mss);
      if (ges.info() != Eigen::Success || !(ges.eigenvalues().minCoeff() > 0.0))
        throw NumericalError(who + "residual flexibility basis is degenerate");
      const MatrixXd v = ges.eigenvectors();  // M-orthonormal in the s-tilde metric
      for (Index r = 0; r < n_static; ++r) {
        ModeRecord rec;
        rec.plane = plane;
        rec.omega = std::sqrt(ges.eigenvalues()(r));
        // shape = sum_s v_s (s_s - sum_j phi_j mps_js)
        const VectorXd coef_s = v.col(r);
        const VectorXd coef_phi = -mps * coef_s;
        auto eval = [&](double x, int order) {
          double acc = 0.0;
          for (int s = 0; s < n_static; ++s)
            acc += coef_s(s) * static_shape(s % 2, ports[static_cast<std::size_t>(s / 2)].second, x, order) /
                   ei[plane];
          for (Index j = 0; j < ne; ++j) {
            const PlaneMode& m = *in_plane[static_cast<std::size_t>(j)];
            const double beta = m.beta_l / len;
            const ShapeEval shape(m.beta_l);
            const double c = shape.value(m.beta_l) >= 0.0 ? amp : -amp;
            acc += coef_phi(j) * c * (order == 0 ? shape.value(beta * x) : beta * shape.slope(beta * x));
          }
          return acc;
        };
        const double sign = eval(len, 0) >= 0.0 ? 1.0 : -1.0;
        for (const auto& pt : ports) {
          rec.value.push_back(sign * eval(pt.second, 0));
          rec.slope.push_back(sign * eval(pt.second, 1));
        }
        double i0 = 0.0, i1 = 0.0;
        for (Index q = 0; q < nq; ++q) {
          const double val = (s0.row(q).dot(coef_s) + phi.row(q).dot(coef_phi)) * wm(q);
          i0 += val;
          i1 += val * xq[static_cast<std::size_t>(q)];
        }
        rec.int_phi = sign * i0;
        rec.int_x_phi = sign * i1;
        records.push_back(rec);
      }
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const ModeRecord& a, const ModeRecord& b) { return a.omega < b.omega; });
  }

  const Index n = static_cast<Index>(records.size());
  ModalAppendageData d;
  d.name = options.name;
  d.freq.resize(n);
  d.damping = VectorXd::Constant(n, options.damping);
  d.lp = MatrixXd::Zero(n, 6);
  for (const auto& [pname, x] : ports) d.ports.push_back({pname, MatrixXd::Zero(6, n), Vector3d(-x, 0.0, 0.0)});
  for (Index i = 0; i < n; ++i) {
    const ModeRecord& r = records[static_cast<std::size_t>(i)];
    d.freq(i) = r.omega;
    for (std::size_t p = 0; p < ports.size(); ++p) {
      MatrixXd& pc = d.ports[p].phi_c;
      if (r.plane == 0) {
        pc(1, i) = r.value[p];
        pc(5, i) = r.slope[p];
      } else {
        pc(2, i) = r.value[p];
        pc(4, i) = -r.slope[p];
      }
    }
    if (r.plane == 0) {
      d.lp(i, 1) = r.int_phi;
      d.lp(i, 5) = r.int_x_phi;
    } else {
      d.lp(i, 2) = r.int_phi;
      d.lp(i, 4) = -r.int_x_phi;
    }
  }

  const double mass = ra * len;
  Matrix3d jg = Matrix3d::Zero();
  jg(0, 0) = beam.rho_jx * len;
  jg(1, 1) = mass * len * len / 12.0 + beam.rho_iy * len;
  jg(2, 2) = mass * len * len / 12.0 + beam.rho_iz * len;
  // a line beam has no torsional inertia; keep M_r definite
  if (jg(0, 0) <= 0.0) jg(0, 0) = 1e-9 * mass * len * len;
  d.mr = rigid_mass_matrix(mass, Vector3d(0.5 * len, 0.0, 0.0), jg);
  validate(d);
  return d;
}

ModalAppendageData cantilever_beam_modal(double length, double ei, double rho_a, double damping, int n_modes,
                                         double port_x) {
  BeamSection s;
  s.length = length;
  s.ei_xy = ei;
  s.ei_xz = ei;
  s.rho_a = rho_a;
  BeamOptions o;
  o.damping = damping;
  o.n_modes = n_modes;
  o.ports = {{"C", port_x}};
  return cantilever_beam_modal(s, o);
}

}  // namespace flexsc
