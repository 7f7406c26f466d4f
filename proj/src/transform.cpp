#include "brachi/transform.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

#include "brachi/variation.hpp"

namespace brachi {

namespace {

constexpr std::array<double, 4> kGaussX4 = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                                            0.9305681557970263};
constexpr std::array<double, 4> kGaussW4 = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                                            0.1739274225687269};

double rnorm(const Mat& gR, const Vec& v) { return std::sqrt(std::max(v.dot(gR * v), 0.0)); }

void check_constraints(const SpacetimeModel& model, const Curve& c, double k, double T, double tol) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Mat g = model.metric(c.q[i]);
    const Tangent Y = model.killing(c.q[i]);
    if (std::abs(c.v[i].dot(g * Y) + k * T) > tol * (1.0 + k * T) ||
        std::abs(c.v[i].dot(g * c.v[i]) + T * T) > tol * (1.0 + T * T))
      throw Error(ErrorKind::ConstraintViolated, "curve violates the energy or travel-time constraint");
  }
}

}  // namespace

Deformation deform(const SpacetimeModel& model, const Curve& sigma, double k, double T, double tol) {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "travel time T must be positive");
  check_curve(model, sigma);
  check_constraints(model, sigma, k, T, tol);
  std::vector<double> rate(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const Tangent Y = model.killing(sigma.q[i]);
    rate[i] = -sigma.v[i].dot(model.metric(sigma.q[i]) * Y) / model.killing_norm(sigma.q[i]);
  }
  Deformation out;
  out.tau = cumulative_integral(sigma.t, rate);
  out.w.t = sigma.t;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const Event& q = sigma.q[i];
    out.w.q.push_back(model.flow(q, out.tau[i], {1e-12, 1e-12}));
    out.w.v.push_back(model.flow_differential(q, out.tau[i]) * (sigma.v[i] + rate[i] * model.killing(q)));
  }
  return out;
}

Curve deform_D(const SpacetimeModel& model, const BrachistochroneSolution& sol) {
  return deform(model, sol.sigma, sol.k, sol.T).w;
}

BrachistochroneSolution lift_G(const SpacetimeModel& model, double k, const Curve& w) {
  check_curve(model, w);
  if (!model.in_uk(w.q.front(), k)) throw Error(ErrorKind::OutsideUk, "horizontal curve starts outside U_k");
  if (horizontality(model, w) > 1e-6) throw Error(ErrorKind::NotHorizontal, "lift needs a horizontal curve");
  const Event& w0 = w.q.front();
  const double T = std::sqrt(model.conformal_factor(w0, k) * w.v.front().dot(model.riemannian_metric(w0) * w.v.front()));
  std::vector<double> rate(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) rate[i] = -k * T / model.killing_norm(w.q[i]);
  const std::vector<double> h = cumulative_integral(w.t, rate);
  BrachistochroneSolution sol;
  sol.k = k;
  sol.T = T;
  sol.sigma.t = w.t;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Event q = model.flow(w.q[i], h[i], {1e-12, 1e-12});
    sol.sigma.q.push_back(q);
    sol.sigma.v.push_back(model.flow_differential(w.q[i], h[i]) * w.v[i] + rate[i] * model.killing(q));
  }
  refresh_residuals(model, sol);
  return sol;
}

FieldAlongCurve dD_differential(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                                const FieldAlongCurve& zeta) {
  const Curve& s = sol.sigma;
  check_hosted(s, zeta);
  const VariationConstraintReport rep = constraint_residual(model, sol, zeta);
  if (rep.residual_Y > 1e-5 * rep.scale || rep.residual_speed > 1e-5 * rep.scale)
    throw Error(ErrorKind::ConstraintViolated, "field is not tangent to the constraint set");
  const double k = sol.k, T = sol.T;
  std::vector<double> rate(s.size()), tau_sigma_rate(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Mat g = model.metric(s.q[i]);
    const Tangent Y = model.killing(s.q[i]);
    const double yy = Y.dot(g * Y);
    const double b = (model.covariant_killing(s.q[i]) * zeta.values[i]).dot(g * Y);
    rate[i] = -(rep.C_zeta * yy + 2.0 * k * T * b) / (yy * yy);
    tau_sigma_rate[i] = -s.v[i].dot(g * Y) / yy;
  }
  const std::vector<double> tau_zeta = cumulative_integral(s.t, rate);
  const std::vector<double> tau_sigma = cumulative_integral(s.t, tau_sigma_rate);
  std::vector<Tangent> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    out.push_back(model.flow_differential(s.q[i], tau_sigma[i]) * (zeta.values[i] + tau_zeta[i] * model.killing(s.q[i])));
  return field_from(std::move(out));
}

double conformal_energy(const SpacetimeModel& model, double k, const Curve& w) {
  std::vector<double> f(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    f[i] = 0.5 * model.conformal_factor(w.q[i], k) * w.v[i].dot(model.riemannian_metric(w.q[i]) * w.v[i]);
  return integrate(w.t, f);
}

double node_distance(const SpacetimeModel& model, const Curve& a, const Curve& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::GridMismatch, "curves have different node counts");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, rnorm(model.riemannian_metric(b.q[i]), model.chart_difference(a.q[i], b.q[i])));
  return worst;
}

CorrespondenceReport correspondence_report(const SpacetimeModel& model, const BrachistochroneSolution& sol) {
  CorrespondenceReport rep;
  const Curve w = deform_D(model, sol);
  rep.horizontality = horizontality(model, w);
  rep.geodesic_residual = geodesic_residual(model, sol.k, w);
  rep.energy_value = conformal_energy(model, sol.k, w);
  rep.energy_vs_halfT2 = std::abs(rep.energy_value - 0.5 * sol.T * sol.T);
  rep.roundtrip_error = node_distance(model, lift_G(model, sol.k, w).sigma, sol.sigma);
  return rep;
}

double perpendicularity_residual(const SpacetimeModel& model, double k, const Curve& w, const FieldAlongCurve& V) {
  const FieldAlongCurve dV = covariant_derivative_along(model, w, V, DiffOrder::Fourth);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Mat g = model.metric(w.q[i]);
    const double r = model.conformal_factor_differential(w.q[i], k).dot(V.values[i]) * w.v[i].dot(g * w.v[i]) +
                     2.0 * model.conformal_factor(w.q[i], k) * dV.values[i].dot(g * w.v[i]);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

BrachistochroneSolution constrained_curve(const SpacetimeModel& model, double k, const CurveMap& c, int N,
                                          int substeps) {
  // conformal speed of the horizontal projection, computed at c itself: flows are
  // isometries that leave phi_k and g_R unchanged
  struct Local {
    double tau_rate, speed, yy;
  };
  auto local = [&](double t) {
    auto [q, v] = c(t);
    const Mat g = model.metric(q);
    const Tangent Y = model.killing(q);
    const double yy = Y.dot(g * Y);
    const double tau_rate = -v.dot(g * Y) / yy;
    const Tangent hv = v + tau_rate * Y;
    const double speed = std::sqrt(model.conformal_factor(q, k) * hv.dot(model.riemannian_metric(q) * hv));
    if (!(speed > 0.0)) throw Error(ErrorKind::InvalidArgument, "curve has a stationary point");
    return Local{tau_rate, speed, yy};
  };
  // Fixed-step rules keep the result a smooth function of the curve, which
  // finite differences across a family of curves rely on.
  const int panels = substeps * N;
  double L = 0.0;
  for (int i = 0; i < panels; ++i)
    for (int g = 0; g < 4; ++g) L += kGaussW4[g] * local((i + kGaussX4[g]) / panels).speed;
  L /= panels;

  // state (t, theta) in the new parameter r; theta = horizontalizing flow + lift
  auto reparam = [&](const std::array<double, 2>& y, std::array<double, 2>& dy, double) {
    const Local l = local(std::clamp(y[0], 0.0, 1.0));
    dy[0] = L / l.speed;
    dy[1] = l.tau_rate * dy[0] - k * L / l.yy;
  };
  BrachistochroneSolution sol;
  sol.k = k;
  sol.T = L;
  sol.sigma.t = uniform_grid(N);
  std::vector<std::array<double, 2>> states{{0.0, 0.0}};
  boost::numeric::odeint::runge_kutta4<std::array<double, 2>> rk4;
  std::array<double, 2> y{0.0, 0.0};
  const double dr = 1.0 / panels;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < substeps; ++j) rk4.do_step(reparam, y, (i * substeps + j) * dr, dr);
    states.push_back(y);
  }
  if (std::abs(states.back()[0] - 1.0) > 1e-8) throw Error(ErrorKind::StepFailure, "reparametrization drifted");
  for (const auto& st : states) {
    const double t = std::clamp(st[0], 0.0, 1.0);
    auto [q, v] = c(t);
    const Local l = local(t);
    const double dt = L / l.speed;
    const double dtheta = l.tau_rate * dt - k * L / l.yy;
    const Event x = model.flow(q, st[1], {1e-12, 1e-12});
    sol.sigma.q.push_back(x);
    sol.sigma.v.push_back(model.flow_differential(q, st[1]) * (dt * v) + dtheta * model.killing(x));
  }
  refresh_residuals(model, sol);
  return sol;
}

}  // namespace brachi
