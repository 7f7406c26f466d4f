#include "brachi/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace brachi {

namespace {

double rnorm(const Mat& gR, const Vec& v) { return std::sqrt(std::max(v.dot(gR * v), 0.0)); }

Curve unpack_curve(const std::vector<OdeState>& states, const std::vector<double>& t, int m) {
  Curve c;
  c.t = t;
  c.q.reserve(t.size());
  c.v.reserve(t.size());
  for (const OdeState& y : states) {
    c.q.push_back(Eigen::Map<const Vec>(y.data(), m));
    c.v.push_back(Eigen::Map<const Vec>(y.data() + m, m));
  }
  return c;
}

}  // namespace

Tangent horizontal_unit(const SpacetimeModel& model, const Event& p, const Tangent& seed) {
  const Mat gR = model.riemannian_metric(p);
  const Tangent Y = model.killing(p);
  const Vec h = seed - (seed.dot(gR * Y) / Y.dot(gR * Y)) * Y;
  const double n = rnorm(gR, h);
  if (!(n > 1e-12 * std::max(1.0, rnorm(gR, seed)))) throw Error(ErrorKind::ZeroSeed, "seed has no horizontal part");
  return h / n;
}

Tangent initial_velocity(const SpacetimeModel& model, double k, const Event& p, const Tangent& u, double T) {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "travel time T must be positive");
  const Mat g = model.metric(p);
  const Tangent Y = model.killing(p);
  const double yy = model.killing_norm(p);
  const double D = k * k + yy;
  if (!(D > 0.0)) throw Error(ErrorKind::OutsideUk, "launch event outside U_k");
  const Mat gR = model.riemannian_metric(p);
  if (std::abs(u.dot(gR * u) - 1.0) > 1e-8 || std::abs(u.dot(g * Y)) > 1e-8 * std::sqrt(-yy))
    throw Error(ErrorKind::InvalidArgument, "launch direction must be g_R-unit and orthogonal to Y");
  const double ny = std::sqrt(-yy);
  return (T / ny) * (k * Y / ny + std::sqrt(D) * u);
}

Tangent brachistochrone_covariant_acceleration(const SpacetimeModel& model, double k, double T, const Event& q,
                                               const Tangent& v) {
  const Mat g = model.metric(q);
  const Tangent Y = model.killing(q);
  const double yy = Y.dot(g * Y);
  if (!(yy < 0.0)) throw Error(ErrorKind::DegenerateKilling, "<Y,Y> >= 0");
  const double D = k * k + yy;
  if (!(D > 0.0)) throw Error(ErrorKind::OutsideUk, "trajectory left U_k");
  const Tangent dY = model.covariant_killing(q) * v;  // nabla_v Y
  const double A = dY.dot(g * Y);
  const double c1 = 2.0 * k * k * A / (yy * D);
  const double c2 = 2.0 * k * T / yy;
  const double c3 = -2.0 * k * T * A / (yy * D);
  return -(c1 * v + c2 * dY + c3 * Y);
}

std::pair<Tangent, Tangent> brachistochrone_rhs(const SpacetimeModel& model, double k, double T, const Event& q,
                                                const Tangent& v) {
  Tangent acc = brachistochrone_covariant_acceleration(model, k, T, q, v) - model.christoffel(q).contract(v, v);
  return {v, acc};
}

BrachistochroneSolution integrate_from_velocity(const SpacetimeModel& model, double k, const Event& p,
                                                const Tangent& v0, double T, const IntegratorConfig& cfg) {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "travel time T must be positive");
  if (!model.in_uk(p, k)) throw Error(ErrorKind::OutsideUk, "launch event outside U_k");
  const int m = model.dim();
  OdeSystem f = [&](const OdeState& y, OdeState& dy, double) {
    const Event q = Eigen::Map<const Vec>(y.data(), m);
    const Tangent v = Eigen::Map<const Vec>(y.data() + m, m);
    auto [dq, dv] = brachistochrone_rhs(model, k, T, q, v);
    for (int i = 0; i < m; ++i) {
      dy[i] = dq[i];
      dy[m + i] = dv[i];
    }
  };
  OdeState y0(2 * m);
  for (int i = 0; i < m; ++i) {
    y0[i] = p[i];
    y0[m + i] = v0[i];
  }
  const std::vector<double> t = uniform_grid(cfg.grid_N);
  BrachistochroneSolution sol;
  sol.sigma = unpack_curve(integrate_at(f, y0, t, cfg.tol), t, m);
  sol.T = T;
  sol.k = k;
  for (const Event& q : sol.sigma.q)
    if (!model.in_uk(q, k)) throw Error(ErrorKind::OutsideUk, "trajectory left U_k");
  refresh_residuals(model, sol);
  return sol;
}

BrachistochroneSolution integrate_brachistochrone(const SpacetimeModel& model, double k, const Event& p,
                                                  const Tangent& u, double T, const IntegratorConfig& cfg) {
  return integrate_from_velocity(model, k, p, initial_velocity(model, k, p, u, T), T, cfg);
}

namespace {

struct NodeResiduals {
  std::vector<double> y, speed;
};

NodeResiduals node_residuals(const SpacetimeModel& model, const Curve& c, double k, double T) {
  NodeResiduals r;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Mat g = model.metric(c.q[i]);
    const Tangent Y = model.killing(c.q[i]);
    r.y.push_back(std::abs(c.v[i].dot(g * Y) + k * T));
    r.speed.push_back(std::abs(c.v[i].dot(g * c.v[i]) + T * T));
  }
  return r;
}

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

double l2_of(const std::vector<double>& t, const std::vector<double>& v) {
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
  return std::sqrt(trapezoid(t, sq));
}

}  // namespace

double brachistochrone_residual(const SpacetimeModel& model, double k, double T, const Curve& c) {
  const std::vector<Vec> acc = differentiate(c.t, c.v, DiffOrder::Fourth);
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec cov = acc[i] + model.christoffel(c.q[i]).contract(c.v[i], c.v[i]);
    const Vec res = cov - brachistochrone_covariant_acceleration(model, k, T, c.q[i], c.v[i]);
    worst = std::max(worst, rnorm(model.riemannian_metric(c.q[i]), res));
  }
  return worst;
}

void refresh_residuals(const SpacetimeModel& model, BrachistochroneSolution& sol) {
  const NodeResiduals r = node_residuals(model, sol.sigma, sol.k, sol.T);
  sol.residual_conservation_Y = max_of(r.y);
  sol.residual_conservation_speed = max_of(r.speed);
  sol.residual_ode = brachistochrone_residual(model, sol.k, sol.T, sol.sigma);
}

ConservationReport conservation_report(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                                       const IntegratorConfig& cfg) {
  ConservationReport rep;
  const NodeResiduals r = node_residuals(model, sol.sigma, sol.k, sol.T);
  rep.max_Y = max_of(r.y);
  rep.max_speed = max_of(r.speed);
  rep.l2_Y = l2_of(sol.sigma.t, r.y);
  rep.l2_speed = l2_of(sol.sigma.t, r.speed);
  IntegratorConfig fine = cfg;
  fine.grid_N = 2 * sol.sigma.segments();
  const BrachistochroneSolution again =
      integrate_from_velocity(model, sol.k, sol.sigma.q.front(), sol.sigma.v.front(), sol.T, fine);
  rep.refined_max_Y = again.residual_conservation_Y;
  rep.refined_max_speed = again.residual_conservation_speed;
  const double T = sol.T, k = sol.k;
  rep.within_tolerance = std::max(rep.max_Y, rep.refined_max_Y) <= cfg.tol_cons * (1.0 + k * T) &&
                         std::max(rep.max_speed, rep.refined_max_speed) <= cfg.tol_cons * (1.0 + T * T);
  return rep;
}

Tangent launch_direction(const SpacetimeModel& model, const BrachistochroneSolution& sol) {
  const Event& p = sol.sigma.q.front();
  const Tangent& v0 = sol.sigma.v.front();
  const Mat g = model.metric(p);
  const Tangent Y = model.killing(p);
  return horizontal_unit(model, p, v0 - (v0.dot(g * Y) / Y.dot(g * Y)) * Y);
}

Curve integrate_conformal_geodesic(const ConformalGeometry& cg, const Event& q, const Tangent& v,
                                   const IntegratorConfig& cfg) {
  const SpacetimeModel& model = cg.model();
  if (!model.in_uk(q, cg.k())) throw Error(ErrorKind::OutsideUk, "start outside U_k");
  const Mat gR = model.riemannian_metric(q);
  const Tangent Y = model.killing(q);
  const double speed = rnorm(gR, v);
  if (!(speed > 0.0)) throw Error(ErrorKind::InvalidArgument, "zero initial velocity");
  if (std::abs(v.dot(model.metric(q) * Y)) > 1e-8 * speed * rnorm(gR, Y))
    throw Error(ErrorKind::NotHorizontal, "initial velocity is not orthogonal to Y");
  const int m = model.dim();
  OdeSystem f = [&](const OdeState& y, OdeState& dy, double) {
    const Event x = Eigen::Map<const Vec>(y.data(), m);
    const Tangent u = Eigen::Map<const Vec>(y.data() + m, m);
    if (!model.in_uk(x, cg.k())) throw Error(ErrorKind::OutsideUk, "geodesic left U_k");
    const Tangent a = -cg.christoffel(x).contract(u, u);
    for (int i = 0; i < m; ++i) {
      dy[i] = u[i];
      dy[m + i] = a[i];
    }
  };
  OdeState y0(2 * m);
  for (int i = 0; i < m; ++i) {
    y0[i] = q[i];
    y0[m + i] = v[i];
  }
  const std::vector<double> t = uniform_grid(cfg.grid_N);
  return unpack_curve(integrate_at(f, y0, t, cfg.tol), t, m);
}

double horizontality(const SpacetimeModel& model, const Curve& w) {
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Mat g = model.metric(w.q[i]);
    const Tangent Y = model.killing(w.q[i]);
    const double speed = rnorm(model.riemannian_metric(w.q[i]), w.v[i]);
    const double yn = std::sqrt(-Y.dot(g * Y));
    if (speed > 0.0) worst = std::max(worst, std::abs(w.v[i].dot(g * Y)) / (speed * yn));
  }
  return worst;
}

double geodesic_residual(const SpacetimeModel& model, double k, const Curve& w) {
  if (horizontality(model, w) > 1e-6) throw Error(ErrorKind::NotHorizontal, "curve is not horizontal");
  FieldAlongCurve momentum;
  for (std::size_t i = 0; i < w.size(); ++i) momentum.values.push_back(model.conformal_factor(w.q[i], k) * w.v[i]);
  const FieldAlongCurve dP = covariant_derivative_along(model, w, momentum, DiffOrder::Fourth);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Mat g = model.metric(w.q[i]);
    const Vec grad = g.ldlt().solve(model.conformal_factor_differential(w.q[i], k));
    const Vec res = dP.values[i] - 0.5 * grad * w.v[i].dot(g * w.v[i]);
    worst = std::max(worst, rnorm(model.riemannian_metric(w.q[i]), res));
  }
  return worst;
}

LagrangeMultiplierField multiplier_field(const SpacetimeModel& model, double k, const Curve& c) {
  LagrangeMultiplierField out;
  for (const Event& q : c.q) {
    const double D = k * k + model.killing_norm(q);
    if (!(D > 0.0)) throw Error(ErrorKind::OutsideUk, "node outside U_k");
    out.mu.push_back(1.0 / (2.0 * D));
  }
  return out;
}

}  // namespace brachi
