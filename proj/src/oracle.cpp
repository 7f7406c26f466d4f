#include "brachi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/SparseCholesky>

namespace brachi {

double PenaltyConfig::chi(double s) const {
  const double x = s - 1.0 / epsilon;
  if (!(x > 0.0)) return 0.0;
  return std::expm1(x) - x - 0.5 * x * x;
}

double PenaltyConfig::chi_prime(double s) const {
  const double x = s - 1.0 / epsilon;
  if (!(x > 0.0)) return 0.0;
  return std::expm1(x) - x;
}

namespace {

constexpr OdeTolerances kFlowTol{1e-13, 1e-13};

void require_penalty(const PenaltyConfig& pc) {
  if (!(pc.epsilon > 0.0 && pc.epsilon <= 1.0)) throw Error(ErrorKind::InvalidParams, "epsilon must lie in (0,1]");
  if (!(pc.k > 1.0)) throw Error(ErrorKind::InvalidParams, "k must exceed 1");
}

struct EnergyParts {
  double raw = 0.0;
  double penalty = 0.0;
  double total() const { return raw + penalty; }
};

EnergyParts energy_parts(const ConformalGeometry& cg, const std::vector<double>& t, const std::vector<Event>& q,
                         const PenaltyConfig& pc) {
  const SpacetimeModel& model = cg.model();
  EnergyParts e;
  for (std::size_t i = 0; i + 1 < q.size(); ++i) {
    const Event mid = 0.5 * (q[i] + q[i + 1]);
    if (!model.in_domain(mid)) throw Error(ErrorKind::OutOfChart, "polyline left the chart");
    const double psi = pc.psi(model, mid);
    if (!(psi > 0.0)) throw Error(ErrorKind::OutsideUk, "polyline left U_k");
    const double h = t[i + 1] - t[i];
    const Tangent d = q[i + 1] - q[i];
    e.raw += d.dot(cg.metric(mid) * d) / (2.0 * h);
    // added only when active so that interior curves see the raw sum unchanged
    const double pen = pc.chi(1.0 / (psi * psi));
    if (pen != 0.0) e.penalty += h * pen;
  }
  return e;
}

// Node gradient of the penalized energy (all nodes, including both ends).
std::vector<Vec> energy_gradient(const ConformalGeometry& cg, const std::vector<double>& t,
                                 const std::vector<Event>& q, const PenaltyConfig& pc) {
  const SpacetimeModel& model = cg.model();
  const int m = model.dim();
  std::vector<Vec> grad(q.size(), Vec::Zero(m));
  for (std::size_t i = 0; i + 1 < q.size(); ++i) {
    const Event mid = 0.5 * (q[i] + q[i + 1]);
    const double h = t[i + 1] - t[i];
    const Tangent d = q[i + 1] - q[i];
    const Mat G = cg.metric(mid);
    const MetricDerivatives dG = cg.metric_derivatives(mid);
    Vec dmid(m);
    for (int c = 0; c < m; ++c) dmid[c] = d.dot(dG[c] * d) / (2.0 * h);
    const double psi = pc.psi(model, mid);
    const double cp = pc.chi_prime(1.0 / (psi * psi));
    if (cp != 0.0) {
      const Mat g = model.metric(mid);
      const Tangent Y = model.killing(mid);
      const MetricDerivatives dg = model.metric_derivatives(mid);
      const Mat dY = model.killing_jacobian(mid);
      for (int c = 0; c < m; ++c) {
        const double dpsi = Y.dot(dg[c] * Y) + 2.0 * (g * Y).dot(dY.col(c));
        dmid[c] += h * cp * (-2.0 / (psi * psi * psi)) * dpsi;
      }
    }
    const Vec dd = G * d / h;
    grad[i] += 0.5 * dmid - dd;
    grad[i + 1] += 0.5 * dmid + dd;
  }
  return grad;
}

// Interior nodes are free, the first node is pinned and the last one moves
// along the Killing orbit through `end_base` by the flow parameter.
struct PolylineState {
  std::vector<Event> q;
  double flow = 0.0;
};

struct Problem {
  const ConformalGeometry& cg;
  const std::vector<double>& t;
  const PenaltyConfig& pc;
  Event end_base;

  int nodes() const { return static_cast<int>(t.size()); }
  int size() const { return (nodes() - 2) * cg.dim() + 1; }

  PolylineState step(const PolylineState& s, const Eigen::VectorXd& dir, double alpha) const {
    const int m = cg.dim();
    PolylineState out = s;
    for (int i = 1; i + 1 < nodes(); ++i) out.q[i] += alpha * dir.segment((i - 1) * m, m);
    out.flow = s.flow + alpha * dir[size() - 1];
    out.q.back() = cg.model().flow(end_base, out.flow, kFlowTol);
    return out;
  }

  Eigen::VectorXd reduced_gradient(const PolylineState& s) const {
    const int m = cg.dim();
    const auto g = energy_gradient(cg, t, s.q, pc);
    Eigen::VectorXd out(size());
    for (int i = 1; i + 1 < nodes(); ++i) out.segment((i - 1) * m, m) = g[i];
    out[size() - 1] = g.back().dot(cg.model().killing(s.q.back()));
    return out;
  }

  // Discrete H^1 form weighted by the conformal metric at segment midpoints.
  Eigen::SparseMatrix<double> preconditioner(const PolylineState& s) const {
    const int m = cg.dim(), n = nodes(), last = size() - 1;
    const Tangent Y = cg.model().killing(s.q.back());
    std::vector<Eigen::Triplet<double>> trip;
    auto add_block = [&](int r, int c, const Mat& A) {
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) trip.emplace_back(r + a, c + b, A(a, b));
    };
    for (int i = 0; i + 1 < n; ++i) {
      const Mat A = cg.metric(0.5 * (s.q[i] + s.q[i + 1])) / (t[i + 1] - t[i]);
      const bool left = i >= 1, right = i + 1 <= n - 2;
      if (left) add_block((i - 1) * m, (i - 1) * m, A);
      if (right) add_block(i * m, i * m, A);
      if (left && right) {
        add_block((i - 1) * m, i * m, -A);
        add_block(i * m, (i - 1) * m, -A);
      }
      if (i + 1 == n - 1) {
        const Vec AY = A * Y;
        trip.emplace_back(last, last, Y.dot(AY));
        if (left)
          for (int a = 0; a < m; ++a) {
            trip.emplace_back((i - 1) * m + a, last, -AY[a]);
            trip.emplace_back(last, (i - 1) * m + a, -AY[a]);
          }
      }
    }
    Eigen::SparseMatrix<double> P(size(), size());
    P.setFromTriplets(trip.begin(), trip.end());
    return P;
  }

  double energy(const PolylineState& s) const { return energy_parts(cg, t, s.q, pc).total(); }

  double safe_energy(const PolylineState& s) const {
    try {
      return energy(s);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::OutsideUk || e.kind() == ErrorKind::OutOfChart || e.kind() == ErrorKind::FlowEscape ||
          e.kind() == ErrorKind::StepFailure)
        return std::numeric_limits<double>::infinity();
      throw;
    }
  }
};

// One directional finite-difference check of the explicit gradient.
void check_gradient(const Problem& pb, const PolylineState& s) {
  const int n = pb.size(), m = pb.cg.dim();
  Eigen::VectorXd dir(n);
  for (int i = 0; i < n; ++i) dir[i] = std::sin(0.7 * i + 0.3) * std::sin(3.1 * (i / m + 1) / pb.nodes());
  dir[n - 1] = 0.3;
  const double h = 1e-6;
  const double fd = (pb.energy(pb.step(s, dir, h)) - pb.energy(pb.step(s, dir, -h))) / (2 * h);
  const double an = pb.reduced_gradient(s).dot(dir);
  if (std::abs(fd - an) > 1e-6 * (std::abs(an) + std::abs(pb.energy(s))))
    throw std::logic_error("energy gradient disagrees with finite differences: " + std::to_string(an) + " vs " +
                           std::to_string(fd));
}

Curve linear_resample(const Curve& c, int N) {
  Curve out;
  out.t = uniform_grid(N);
  for (double t : out.t) {
    std::size_t i = static_cast<std::size_t>(std::upper_bound(c.t.begin(), c.t.end(), t) - c.t.begin());
    i = std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, c.size() - 2);
    const double a = (t - c.t[i]) / (c.t[i + 1] - c.t[i]);
    out.q.push_back((1 - a) * c.q[i] + a * c.q[i + 1]);
  }
  out.q.back() = c.q.back();
  out.v.assign(out.t.size(), Tangent::Zero(c.dim()));
  return out;
}

}  // namespace

double penalized_energy(const ConformalGeometry& cg, const Curve& w, const PenaltyConfig& pc) {
  require_penalty(pc);
  check_curve(cg.model(), w);
  return energy_parts(cg, w.t, w.q, pc).total();
}

Curve straight_polyline(const Event& p, const Event& q, int N) {
  Curve c;
  c.t = uniform_grid(N);
  for (double t : c.t) {
    c.q.push_back((1 - t) * p + t * q);
    c.v.push_back(q - p);
  }
  c.q.back() = q;
  return c;
}

DiscreteCandidate discrete_minimize(const SpacetimeModel& model, const Event& p, const ObserverWorldline& gamma,
                                    double k, const Curve& init, const PenaltyConfig& pc_in,
                                    const MinimizeConfig& cfg) {
  PenaltyConfig pc = pc_in;
  pc.k = k;
  require_penalty(pc);
  if (cfg.N < 4) throw Error(ErrorKind::GridTooCoarse, "oracle needs N >= 4");
  check_curve(model, init);
  if ((init.q.front() - p).norm() > 1e-12 * (1 + p.norm()))
    throw Error(ErrorKind::InvalidArgument, "initial polyline does not start at p");

  const Curve start = init.segments() == cfg.N ? init : linear_resample(init, cfg.N);
  const OrbitOffset off = orbit_offset(model, gamma, start.q.back());
  if (off.displacement.norm() > 1e-6)
    throw Error(ErrorKind::InvalidArgument, "initial polyline does not end on the observer orbit");
  const Event on_orbit = model.flow(gamma.anchor, off.flow_time, kFlowTol);
  // keep the end node in the same sheet of any periodic coordinate
  const Event end_base = start.q.back() - model.chart_difference(start.q.back(), on_orbit);

  const ConformalGeometry cg(model, k);
  const Problem pb{cg, start.t, pc, end_base};
  PolylineState s{start.q, 0.0};
  s.q.front() = p;
  s.q.back() = end_base;

  double E = pb.energy(s);
  check_gradient(pb, s);

  DiscreteCandidate out;
  out.energy_history.push_back(E);
  double gnorm = std::numeric_limits<double>::infinity();
  int it = 0;
  for (;; ++it) {
    const Eigen::VectorXd g = pb.reduced_gradient(s);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(pb.preconditioner(s));
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::Stalled, "preconditioner factorization failed");
    const Eigen::VectorXd d = -solver.solve(g);
    const double slope = g.dot(d);
    gnorm = std::sqrt(std::max(-slope, 0.0));
    if (gnorm < cfg.grad_tol) break;
    if (it >= cfg.max_iter)
      throw Error(ErrorKind::Stalled, "no convergence after " + std::to_string(it) + " iterations, gradient norm " +
                                          std::to_string(gnorm));
    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-14; alpha *= 0.5) {
      const PolylineState trial = pb.step(s, d, alpha);
      const double Et = pb.safe_energy(trial);
      const bool armijo = Et <= E + cfg.armijo * alpha * slope;
      // predicted decrease below rounding of the energy sum: accept any non-increase
      const bool flat = -alpha * slope < 1e3 * std::numeric_limits<double>::epsilon() * std::abs(E) && Et <= E;
      if (armijo || flat) {
        s = trial;
        E = Et;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw Error(ErrorKind::Stalled, "line search found no descent, gradient norm " + std::to_string(gnorm));
    out.energy_history.push_back(E);
  }

  const EnergyParts parts = energy_parts(cg, start.t, s.q, pc);
  Curve& w = out.polyline;
  w.t = start.t;
  w.q = s.q;
  const std::size_t n = w.t.size();
  std::vector<Tangent> slope(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) slope[i] = (w.q[i + 1] - w.q[i]) / (w.t[i + 1] - w.t[i]);
  w.v.resize(n);
  w.v.front() = slope.front();
  w.v.back() = slope.back();
  for (std::size_t i = 1; i + 1 < n; ++i) w.v[i] = 0.5 * (slope[i - 1] + slope[i]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Event mid = 0.5 * (w.q[i] + w.q[i + 1]);
    const Mat g = model.metric(mid);
    const double len = std::sqrt(slope[i].dot(model.riemannian_metric(mid) * slope[i]));
    if (len > 0) out.horizontality = std::max(out.horizontality, std::abs(slope[i].dot(g * model.killing(mid))) / len);
  }
  out.energy = parts.total();
  out.constraint_penalty = parts.penalty;
  out.T_estimate = std::sqrt(2.0 * parts.raw);
  out.gradient_norm = gnorm;
  out.flow_parameter = s.flow;
  out.iterations = it;
  return out;
}

std::vector<BrachistochroneSolution> fd_variation_family(const SpacetimeModel& model,
                                                         const BrachistochroneSolution& sol,
                                                         const LaunchPerturbation& perturbation,
                                                         const std::vector<double>& s_values) {
  const Event& p = sol.sigma.q.front();
  const Tangent u = launch_direction(model, sol);
  if (perturbation.du.size() != model.dim()) throw Error(ErrorKind::InvalidArgument, "perturbation has wrong size");
  // Differences of members amplify integration error by 1/s, so integrate tighter.
  IntegratorConfig cfg;
  cfg.grid_N = sol.sigma.segments();
  cfg.tol = {1e-12, 1e-12};
  std::vector<BrachistochroneSolution> out;
  out.reserve(s_values.size());
  for (double s : s_values) {
    if (!(std::abs(s) <= 1e-4)) throw Error(ErrorKind::InvalidArgument, "family parameter must satisfy |s| <= 1e-4");
    if (s == 0.0) {
      out.push_back(sol);
      continue;
    }
    const Tangent us = horizontal_unit(model, p, u + s * perturbation.du);
    out.push_back(integrate_brachistochrone(model, sol.k, p, us, sol.T + s * perturbation.dT, cfg));
  }
  return out;
}

FieldAlongCurve central_difference(const SpacetimeModel& model, const BrachistochroneSolution& plus,
                                   const BrachistochroneSolution& minus, double ds) {
  if (plus.sigma.size() != minus.sigma.size()) throw Error(ErrorKind::GridMismatch, "family members differ in size");
  std::vector<Tangent> v(plus.sigma.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = model.chart_difference(plus.sigma.q[i], minus.sigma.q[i]) / (2 * ds);
  return field_from(std::move(v));
}

}  // namespace brachi
