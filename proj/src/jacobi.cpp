#include "brachi/jacobi.hpp"

#include <algorithm>
#include <cmath>

#include "brachi/transform.hpp"

namespace brachi {

const char* to_string(JacobiKind kind) {
  return kind == JacobiKind::BJacobi ? "b_jacobi" : "riemannian_gamma";
}

namespace {

double rnorm(const Mat& G, const Vec& v) { return std::sqrt(std::max(v.dot(G * v), 0.0)); }

Vec block(const OdeState& y, int i, int m) { return Eigen::Map<const Vec>(y.data() + i * m, m); }
void put(OdeState& y, int i, const Vec& v) {
  for (int a = 0; a < v.size(); ++a) y[i * v.size() + a] = v[a];
}

// nabla_s' nabla_s' V for the linearized brachistochrone equation; W = nabla_s' V
Tangent bjacobi_second(const SpacetimeModel& model, double k, double T, double C, const Event& q, const Tangent& v,
                       const Christoffel&, const Riemann& R, const Tangent& V, const Tangent& W) {
  const Mat g = model.metric(q);
  const Tangent Y = model.killing(q);
  const Mat NY = model.covariant_killing(q);
  const double yy = Y.dot(g * Y), D = k * k + yy;
  const Tangent dY = NY * v;
  const double A = dY.dot(g * Y);
  const Tangent NYV = NY * V;
  const Tangent dNYV = model.covariant_killing_derivative(q, v) * V + NY * W;  // nabla_s' nabla_V Y
  const double b = NYV.dot(g * Y);
  const Tangent P = 2.0 * k * k * v - 2.0 * k * T * Y;
  const Tangent RvV = R.apply(v, V, v);
  const Tangent rest = 2.0 * k * T / (yy * yy) * (yy * dNYV - yy * R.apply(v, V, Y) - 2.0 * b * dY) -
                       2.0 * C / yy * dY + P * ((dNYV.dot(g * Y) + NYV.dot(g * dY)) / (yy * D)) +
                       P * ((-4.0 * A * yy * b - 2.0 * k * k * A * b) / (yy * yy * D * D)) +
                       2.0 * A / (yy * D) * (C * Y - k * T * NYV + k * k * W);
  return RvV - rest;
}

// state: q, v, V, W
OdeSystem bjacobi_system(const SpacetimeModel& model, double k, double T, double C) {
  const int m = model.dim();
  return [&model, k, T, C, m](const OdeState& y, OdeState& dy, double) {
    const Event q = block(y, 0, m);
    const Tangent v = block(y, 1, m), V = block(y, 2, m), W = block(y, 3, m);
    if (!model.in_uk(q, k)) throw Error(ErrorKind::OutsideUk, "b-Jacobi integration left U_k");
    const Christoffel gam = model.christoffel(q);
    const Riemann R = model.curvature(q);
    auto [dq, dv] = brachistochrone_rhs(model, k, T, q, v);
    put(dy, 0, dq);
    put(dy, 1, dv);
    put(dy, 2, W - gam.contract(v, V));
    put(dy, 3, bjacobi_second(model, k, T, C, q, v, gam, R, V, W) - gam.contract(v, W));
  };
}

double b_constant(const SpacetimeModel& model, const Event& q, const Tangent& v, const Tangent& V, const Tangent& W) {
  const Mat g = model.metric(q);
  return W.dot(g * model.killing(q)) - V.dot(g * (model.covariant_killing(q) * v));
}

std::pair<Event, Tangent> brachistochrone_state_at(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                                                   double a, const OdeTolerances& tol) {
  const int m = model.dim();
  if (a == 0.0) return {sol.sigma.q.front(), sol.sigma.v.front()};
  OdeSystem f = [&](const OdeState& y, OdeState& dy, double) {
    auto [dq, dv] = brachistochrone_rhs(model, sol.k, sol.T, block(y, 0, m), block(y, 1, m));
    put(dy, 0, dq);
    put(dy, 1, dv);
  };
  OdeState y0(2 * m);
  put(y0, 0, sol.sigma.q.front());
  put(y0, 1, sol.sigma.v.front());
  const OdeState y = integrate_to(f, y0, 0.0, a, tol);
  return {block(y, 0, m), block(y, 1, m)};
}

// b-Jacobi field through V(a) = Va, nabla V(a) = Wa, sampled on the grid of sol
JacobiFieldData bjacobi_run(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a,
                            const Tangent& Va, const Tangent& Wa, const JacobiConfig& cfg) {
  const int m = model.dim();
  const auto [qa, va] = brachistochrone_state_at(model, sol, a, cfg.tol);
  const double C = b_constant(model, qa, va, Va, Wa);
  const OdeSystem f = bjacobi_system(model, sol.k, sol.T, C);
  OdeState y0(4 * m);
  put(y0, 0, qa);
  put(y0, 1, va);
  put(y0, 2, Va);
  put(y0, 3, Wa);

  const std::vector<double>& t = sol.sigma.t;
  std::vector<OdeState> states(t.size());
  // forward from a, and backward through the time-reversed system
  std::vector<double> fwd{a}, bwd{0.0};
  std::vector<std::size_t> fwd_idx, bwd_idx;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == a) states[i] = y0;
    else if (t[i] > a) { fwd.push_back(t[i]); fwd_idx.push_back(i); }
  }
  for (std::size_t i = t.size(); i-- > 0;)
    if (t[i] < a) { bwd.push_back(a - t[i]); bwd_idx.push_back(i); }
  if (fwd.size() > 1) {
    const auto out = integrate_at(f, y0, fwd, cfg.tol);
    for (std::size_t j = 0; j < fwd_idx.size(); ++j) states[fwd_idx[j]] = out[j + 1];
  }
  if (bwd.size() > 1) {
    OdeSystem back = [&f](const OdeState& y, OdeState& dy, double s) {
      f(y, dy, -s);
      for (double& x : dy) x = -x;
    };
    const auto out = integrate_at(back, y0, bwd, cfg.tol);
    for (std::size_t j = 0; j < bwd_idx.size(); ++j) states[bwd_idx[j]] = out[j + 1];
  }

  JacobiFieldData J;
  J.kind = JacobiKind::BJacobi;
  J.C_V = C;
  std::vector<Tangent> rates;
  for (const OdeState& y : states) {
    const Event q = block(y, 0, m);
    const Tangent v = block(y, 1, m), V = block(y, 2, m), W = block(y, 3, m);
    J.field.values.push_back(V);
    rates.push_back(W - model.christoffel(q).contract(v, V));
    J.derivative.values.push_back(W);
    J.C_drift = std::max(J.C_drift, std::abs(b_constant(model, q, v, V, W) - C));
  }
  J.field.rates = std::move(rates);
  return J;
}

// state: q, v, then nj pairs (J, W), then ne frame vectors
OdeSystem rjacobi_system(const ConformalGeometry& cg, int nj, int ne) {
  const int m = cg.dim();
  return [&cg, nj, ne, m](const OdeState& y, OdeState& dy, double) {
    const Event q = block(y, 0, m);
    const Tangent v = block(y, 1, m);
    if (!cg.model().in_uk(q, cg.k())) throw Error(ErrorKind::OutsideUk, "Jacobi integration left U_k");
    const Christoffel gam = cg.christoffel(q);
    put(dy, 0, v);
    put(dy, 1, -gam.contract(v, v));
    if (nj > 0) {
      const Riemann R = cg.curvature(q);
      for (int j = 0; j < nj; ++j) {
        const Tangent J = block(y, 2 + 2 * j, m), W = block(y, 3 + 2 * j, m);
        put(dy, 2 + 2 * j, W - gam.contract(v, J));
        put(dy, 3 + 2 * j, R.apply(v, J, v) - gam.contract(v, W));
      }
    }
    for (int e = 0; e < ne; ++e) put(dy, 2 + 2 * nj + e, -gam.contract(v, block(y, 2 + 2 * nj + e, m)));
  };
}

void require_orthogonal_start(const ConformalGeometry& cg, const Curve& w) {
  const Mat G = cg.metric(w.q.front());
  const Tangent Y = cg.model().killing(w.q.front());
  if (std::abs(w.v.front().dot(G * Y)) > 1e-6 * rnorm(G, w.v.front()) * rnorm(G, Y))
    throw Error(ErrorKind::NotOrthogonalStart, "curve does not leave the observer line orthogonally");
}

// initial data (J0, W0) of the gamma-Jacobi basis
std::vector<std::pair<Tangent, Tangent>> gamma_initial_data(const ConformalGeometry& cg, const Curve& w) {
  const Event& q = w.q.front();
  const int m = cg.dim();
  const Mat G = cg.metric(q);
  const Tangent Y = cg.model().killing(q);
  std::vector<std::pair<Tangent, Tangent>> out;
  out.emplace_back(Y, cg.covariant_killing(q) * w.v.front());
  const Mat E = orthonormal_complement(G, Y);
  for (int c = 0; c < E.cols(); ++c) out.emplace_back(Tangent::Zero(m), E.col(c));
  return out;
}

struct FocalScan {
  const ConformalGeometry& cg;
  const JacobiConfig& cfg;
  int m;
  OdeSystem f;

  Mat matrix(const OdeState& y) const {
    const Mat G = cg.metric(block(y, 0, m));
    Mat M(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) M(i, j) = block(y, 2 + 2 * i, m).dot(G * block(y, 2 + 2 * m + j, m));
    return M;
  }
  OdeState advance(const OdeState& y, double t0, double t1) const {
    return t1 > t0 ? integrate_to(f, y, t0, t1, cfg.tol) : y;
  }
  double ratio(const OdeState& y) const {
    const Eigen::JacobiSVD<Mat> svd(matrix(y));
    const Vec s = svd.singularValues();
    return s[m - 1] / s[0];
  }
  int multiplicity(const OdeState& y) const {
    const Eigen::JacobiSVD<Mat> svd(matrix(y));
    const Vec s = svd.singularValues();
    int n = 0;
    for (int i = 0; i < m; ++i) n += s[i] < cfg.rank_threshold * s[0];
    return n;
  }
};

double golden_min(const std::function<double(double)>& f, double lo, double hi, double& best) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi, x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1; x1 = b - r * (b - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2; x2 = a + r * (b - a); f2 = f(x2);
    }
  }
  best = std::min(f1, f2);
  return f1 < f2 ? x1 : x2;
}

}  // namespace

double bjacobi_initial_residual(const SpacetimeModel& model, double k, double T, const Event& q, const Tangent& v,
                                const Tangent& V0, const Tangent& dV0) {
  const double C = b_constant(model, q, v, V0, dV0);
  return std::abs(-T * C + k * dV0.dot(model.metric(q) * v));
}

JacobiFieldData integrate_bjacobi(const SpacetimeModel& model, const BrachistochroneSolution& sol, const Tangent& V0,
                                  const Tangent& dV0, const JacobiConfig& cfg) {
  return integrate_bjacobi_from(model, sol, 0.0, V0, dV0, cfg);
}

JacobiFieldData integrate_bjacobi_from(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a,
                                       const Tangent& V0, const Tangent& dV0, const JacobiConfig& cfg) {
  if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorKind::InvalidArgument, "start parameter must lie in [0, 1]");
  const auto [q, v] = brachistochrone_state_at(model, sol, a, cfg.tol);
  const Mat gR = model.riemannian_metric(q);
  const double scale = 1.0 + (sol.T + sol.k) * rnorm(gR, v) * (rnorm(gR, dV0) + rnorm(gR, V0));
  if (bjacobi_initial_residual(model, sol.k, sol.T, q, v, V0, dV0) > 1e-8 * scale)
    throw Error(ErrorKind::InitialConditionViolated, "initial data violate -T C_V + k <V'(0), s'(0)> = 0");
  return bjacobi_run(model, sol, a, V0, dV0, cfg);
}

JacobiFieldData integrate_rjacobi(const ConformalGeometry& cg, const Curve& w, const Tangent& J0, const Tangent& dJ0,
                                  const JacobiConfig& cfg) {
  const int m = cg.dim();
  OdeState y0(4 * m);
  put(y0, 0, w.q.front());
  put(y0, 1, w.v.front());
  put(y0, 2, J0);
  put(y0, 3, dJ0);
  const auto states = integrate_at(rjacobi_system(cg, 1, 0), y0, w.t, cfg.tol);
  JacobiFieldData J;
  J.kind = JacobiKind::RiemannianGamma;
  std::vector<Tangent> rates;
  for (const OdeState& y : states) {
    const Event q = block(y, 0, m);
    const Tangent V = block(y, 2, m), W = block(y, 3, m);
    J.field.values.push_back(V);
    J.derivative.values.push_back(W);
    rates.push_back(W - cg.christoffel(q).contract(block(y, 1, m), V));
  }
  J.field.rates = std::move(rates);
  return J;
}

double bjacobi_residual(const SpacetimeModel& model, const BrachistochroneSolution& sol, const FieldAlongCurve& V) {
  const Curve& c = sol.sigma;
  check_hosted(c, V);
  const FieldAlongCurve W = covariant_derivative_along(model, c, V, DiffOrder::Fourth);
  const FieldAlongCurve ddV = covariant_derivative_along(model, c, W, DiffOrder::Fourth);
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Event& q = c.q[i];
    const double C = b_constant(model, q, c.v[i], V.values[i], W.values[i]);
    const Tangent r = ddV.values[i] - bjacobi_second(model, sol.k, sol.T, C, q, c.v[i], model.christoffel(q),
                                                     model.curvature(q), V.values[i], W.values[i]);
    worst = std::max(worst, rnorm(model.riemannian_metric(q), r));
  }
  return worst;
}

double rjacobi_residual(const ConformalGeometry& cg, const Curve& w, const FieldAlongCurve& J) {
  check_hosted(w, J);
  const FieldAlongCurve dJ = covariant_derivative_along(cg, w, J, DiffOrder::Fourth);
  const FieldAlongCurve ddJ = covariant_derivative_along(cg, w, dJ, DiffOrder::Fourth);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Vec r = ddJ.values[i] - cg.curvature(w.q[i]).apply(w.v[i], J.values[i], w.v[i]);
    worst = std::max(worst, rnorm(cg.metric(w.q[i]), r));
  }
  return worst;
}

std::vector<JacobiFieldData> gamma_jacobi_basis(const ConformalGeometry& cg, const Curve& w, const JacobiConfig& cfg) {
  require_orthogonal_start(cg, w);
  const auto data = gamma_initial_data(cg, w);
  const int m = cg.dim();
  Mat init(2 * m, m);
  for (int j = 0; j < m; ++j) init.col(j) << data[j].first, data[j].second;
  const Vec s = Eigen::JacobiSVD<Mat>(init).singularValues();
  if (s[m - 1] <= 1e-8) throw Error(ErrorKind::FrameDegenerate, "gamma-Jacobi initial data are dependent");
  std::vector<JacobiFieldData> out;
  for (const auto& [J0, W0] : data) out.push_back(integrate_rjacobi(cg, w, J0, W0, cfg));
  return out;
}

FocalReport focal_points(const ConformalGeometry& cg, const Curve& w, const JacobiConfig& cfg) {
  require_orthogonal_start(cg, w);
  const int m = cg.dim();
  const auto data = gamma_initial_data(cg, w);
  const Event& q0 = w.q.front();
  const Mat G0 = cg.metric(q0);
  const Tangent Y0 = cg.model().killing(q0);
  Mat frame(m, m);
  frame.col(0) = Y0 / rnorm(G0, Y0);
  frame.rightCols(m - 1) = orthonormal_complement(G0, Y0);

  FocalScan scan{cg, cfg, m, rjacobi_system(cg, m, m)};
  OdeState y0(2 * m + 3 * m * m);
  put(y0, 0, q0);
  put(y0, 1, w.v.front());
  for (int j = 0; j < m; ++j) {
    put(y0, 2 + 2 * j, data[j].first);
    put(y0, 3 + 2 * j, data[j].second);
    put(y0, 2 + 2 * m + j, frame.col(j));
  }
  const int n = std::max(2, static_cast<int>(std::lround(1.0 / cfg.scan_step)));
  const std::vector<double> grid = uniform_grid(n);
  const auto states = integrate_at(scan.f, y0, grid, cfg.tol);

  FocalReport rep;
  std::vector<double> ratio(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rep.trace_t.push_back(grid[i]);
    rep.trace_det.push_back(scan.matrix(states[i]).determinant());
    ratio[i] = i == 0 ? 0.0 : scan.ratio(states[i]);
  }
  {
    const OdeState& yl = states.back();
    Mat E(m, m);
    for (int j = 0; j < m; ++j) E.col(j) = block(yl, 2 + 2 * m + j, m);
    if ((E.transpose() * cg.metric(block(yl, 0, m)) * E - Mat::Identity(m, m)).norm() > 1e-6)
      throw Error(ErrorKind::FrameDegenerate, "parallel frame lost orthonormality");
  }

  auto add = [&](double t, const OdeState& y) {
    for (const FocalPoint& f : rep.focal)
      if (std::abs(f.t - t) < 1e-6) return;
    FocalPoint f;
    f.t = t;
    f.singular_ratio = scan.ratio(y);
    f.multiplicity = std::max(1, scan.multiplicity(y));
    rep.focal.push_back(f);
  };
  std::vector<bool> bracketed(grid.size(), false);
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double d0 = rep.trace_det[i], d1 = rep.trace_det[i + 1];
    if (d0 == 0.0 || d0 * d1 >= 0.0) continue;
    bracketed[i] = bracketed[i + 1] = true;
    double lo = grid[i], hi = grid[i + 1];
    const double sign_lo = d0 > 0 ? 1.0 : -1.0;
    for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double d = scan.matrix(scan.advance(states[i], grid[i], mid)).determinant();
      if (d * sign_lo > 0) lo = mid;
      else hi = mid;
    }
    const double t0 = 0.5 * (lo + hi);
    add(t0, scan.advance(states[i], grid[i], t0));
  }
  // zeros without a sign change (even multiplicity)
  for (std::size_t i = 2; i + 1 < grid.size(); ++i) {
    if (bracketed[i] || bracketed[i - 1] || !(ratio[i] <= ratio[i - 1] && ratio[i] <= ratio[i + 1])) continue;
    if (ratio[i] > 1e-2) continue;
    double best = 0.0;
    const auto at = [&](double t) { return scan.ratio(scan.advance(states[i - 1], grid[i - 1], t)); };
    const double t0 = golden_min(at, grid[i - 1], grid[i + 1], best);
    if (best < cfg.rank_threshold) add(t0, scan.advance(states[i - 1], grid[i - 1], t0));
  }
  if (ratio.back() < cfg.rank_threshold) add(1.0, states.back());

  std::sort(rep.focal.begin(), rep.focal.end(), [](const FocalPoint& a, const FocalPoint& b) { return a.t < b.t; });
  for (const FocalPoint& f : rep.focal) rep.geometric_index += f.multiplicity;
  return rep;
}

namespace {

// value at a of the cumulative integral F sampled on t (cubic through 4 nodes)
double interpolate(const std::vector<double>& t, const std::vector<double>& F, double a) {
  const int n = static_cast<int>(t.size());
  int i = static_cast<int>(std::upper_bound(t.begin(), t.end(), a) - t.begin()) - 1;
  const int start = std::clamp(i - 1, 0, n - 4);
  double out = 0.0;
  for (int j = 0; j < 4; ++j) {
    double l = 1.0;
    for (int r = 0; r < 4; ++r)
      if (r != j) l *= (a - t[start + r]) / (t[start + j] - t[start + r]);
    out += l * F[start + j];
  }
  return out;
}

std::vector<double> tau_from(const SpacetimeModel& model, const Curve& s, double a) {
  std::vector<double> rate(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    rate[i] = -s.v[i].dot(model.metric(s.q[i]) * model.killing(s.q[i])) / model.killing_norm(s.q[i]);
  std::vector<double> tau = cumulative_integral(s.t, rate);
  const double shift = interpolate(s.t, tau, a);
  for (double& x : tau) x -= shift;
  return tau;
}

}  // namespace

Curve deform_from(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a) {
  const Curve& s = sol.sigma;
  const std::vector<double> tau = tau_from(model, s, a);
  Curve w;
  w.t = s.t;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Tangent Y = model.killing(s.q[i]);
    const double rate = -s.v[i].dot(model.metric(s.q[i]) * Y) / model.killing_norm(s.q[i]);
    w.q.push_back(model.flow(s.q[i], tau[i], {1e-12, 1e-12}));
    w.v.push_back(model.flow_differential(s.q[i], tau[i]) * (s.v[i] + rate * Y));
  }
  return w;
}

FieldAlongCurve map_L(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a,
                      const FieldAlongCurve& zeta) {
  const Curve& s = sol.sigma;
  check_hosted(s, zeta);
  if (!(a >= 0.0 && a < 1.0)) throw Error(ErrorKind::InvalidArgument, "start parameter must lie in [0, 1)");
  const FieldAlongCurve dz = covariant_derivative_along(model, s, zeta, DiffOrder::Fourth);
  // constant of zeta, averaged over the nodes in [a, 1]
  std::vector<double> c(s.size()), sub_t, sub_c;
  double scale = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Mat g = model.metric(s.q[i]), gR = model.riemannian_metric(s.q[i]);
    const Tangent Y = model.killing(s.q[i]);
    const Tangent dY = model.covariant_killing(s.q[i]) * s.v[i];
    c[i] = dz.values[i].dot(g * Y) - zeta.values[i].dot(g * dY);
    if (s.t[i] >= a) {
      sub_t.push_back(s.t[i]);
      sub_c.push_back(c[i]);
      scale = std::max(scale, rnorm(gR, dz.values[i]) * rnorm(gR, Y) + rnorm(gR, zeta.values[i]) * rnorm(gR, dY));
    }
  }
  if (sub_t.size() < 2) throw Error(ErrorKind::GridTooCoarse, "no grid segment after the start parameter");
  const double C = trapezoid(sub_t, sub_c) / (sub_t.back() - sub_t.front());
  for (double x : sub_c)
    if (std::abs(x - C) > 1e-5 * (1.0 + scale))
      throw Error(ErrorKind::ConstraintViolated, "field is not tangent to the constraint set on [a, 1]");

  const double k = sol.k, T = sol.T;
  std::vector<double> rate(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Mat g = model.metric(s.q[i]);
    const Tangent Y = model.killing(s.q[i]);
    const double yy = Y.dot(g * Y);
    const double b = (model.covariant_killing(s.q[i]) * zeta.values[i]).dot(g * Y);
    rate[i] = -(C * yy + 2.0 * k * T * b) / (yy * yy);
  }
  std::vector<double> tau_z = cumulative_integral(s.t, rate);
  const double shift = interpolate(s.t, tau_z, a);
  const std::vector<double> tau_s = tau_from(model, s, a);
  std::vector<Tangent> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    out.push_back(model.flow_differential(s.q[i], tau_s[i]) *
                  (zeta.values[i] + (tau_z[i] - shift) * model.killing(s.q[i])));
  return field_from(std::move(out));
}

double bfocal_endpoint_ratio(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a,
                             const JacobiConfig& cfg) {
  if (!(a >= 0.0 && a < 1.0)) throw Error(ErrorKind::InvalidArgument, "start parameter must lie in [0, 1)");
  const int m = model.dim();
  const auto [qa, va] = brachistochrone_state_at(model, sol, a, cfg.tol);
  const Mat g = model.metric(qa), gR = model.riemannian_metric(qa);
  // V(a) = 0: the initial condition reads <V'(a), k s' - T Y> = 0
  const Tangent n = sol.k * va - sol.T * model.killing(qa);
  const Mat data = orthonormal_complement(gR, gR.ldlt().solve(g * n));
  const Event& q1 = sol.sigma.q.back();
  const Mat gR1 = model.riemannian_metric(q1);
  const Mat P = orthonormal_complement(gR1, model.killing(q1));
  Mat E(m - 1, m - 1);
  for (int j = 0; j < m - 1; ++j) {
    const Tangent W = data.col(j);
    const double C = W.dot(g * model.killing(qa));
    OdeState y0(4 * m);
    put(y0, 0, qa);
    put(y0, 1, va);
    put(y0, 2, Tangent::Zero(m));
    put(y0, 3, W);
    const OdeState y1 = integrate_to(bjacobi_system(model, sol.k, sol.T, C), y0, a, 1.0, cfg.tol);
    const Tangent V1 = block(y1, 2, m);
    for (int l = 0; l < m - 1; ++l) E(l, j) = P.col(l).dot(gR1 * V1);
  }
  const Vec s = Eigen::JacobiSVD<Mat>(E).singularValues();
  return s[m - 2] / s[0];
}

FocalPoint bfocal_refine(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a, double width,
                         const JacobiConfig& cfg) {
  const double lo = std::max(0.0, a - width), hi = std::min(1.0 - 1e-9, a + width);
  double best = 0.0;
  const double t = golden_min([&](double x) { return bfocal_endpoint_ratio(model, sol, x, cfg); }, lo, hi, best);
  FocalPoint f;
  f.t = t;
  f.multiplicity = 1;
  f.endpoint_ratio = best;
  return f;
}

FocalReport bfocal_points(const SpacetimeModel& model, const BrachistochroneSolution& sol, const JacobiConfig& cfg) {
  const ConformalGeometry cg(model, sol.k);
  const Curve w = reverse_curve(deform_D(model, sol));
  const FocalReport riem = focal_points(cg, w, cfg);
  FocalReport rep;
  rep.geometric_index = riem.geometric_index;
  for (std::size_t i = riem.trace_t.size(); i-- > 0;) {
    rep.trace_t.push_back(1.0 - riem.trace_t[i]);
    rep.trace_det.push_back(riem.trace_det[i]);
  }
  for (const FocalPoint& f : riem.focal) {
    FocalPoint b = f;
    b.t = 1.0 - f.t;
    b.endpoint_ratio = bfocal_endpoint_ratio(model, sol, b.t, cfg);
    rep.focal.push_back(b);
  }
  std::sort(rep.focal.begin(), rep.focal.end(), [](const FocalPoint& a, const FocalPoint& b) { return a.t < b.t; });
  return rep;
}

}  // namespace brachi
