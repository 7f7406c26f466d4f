#include "brachi/variation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace brachi {

namespace {

double rnorm(const Mat& gR, const Vec& v) { return std::sqrt(std::max(v.dot(gR * v), 0.0)); }

// per-node data along a curve in the Lorentzian model
struct NodeGeometry {
  Mat g;
  Tangent Y;
  Mat NY;  // nabla Y
  Riemann R;
};

std::vector<NodeGeometry> node_geometry(const SpacetimeModel& model, const Curve& c, bool with_curvature) {
  std::vector<NodeGeometry> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    out[i].g = model.metric(c.q[i]);
    out[i].Y = model.killing(c.q[i]);
    out[i].NY = model.covariant_killing(c.q[i]);
    if (with_curvature) out[i].R = model.curvature(c.q[i]);
  }
  return out;
}

FieldAlongCurve combine(const FieldAlongCurve& a, const FieldAlongCurve& b, double sb) {
  FieldAlongCurve out;
  out.values.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = a.values[i] + sb * b.values[i];
  if (a.rates && b.rates) {
    std::vector<Tangent> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = (*a.rates)[i] + sb * (*b.rates)[i];
    out.rates = std::move(r);
  }
  return out;
}

void require_admissible(const SpacetimeModel& model, const BrachistochroneSolution& sol, const FieldAlongCurve& z) {
  const VariationConstraintReport rep = constraint_residual(model, sol, z);
  if (!rep.boundary_ok || rep.residual_Y > 1e-4 * rep.scale || rep.residual_speed > 1e-4 * rep.scale)
    throw Error(ErrorKind::ConstraintViolated, "field is not tangent to the constraint set");
}

void require_brachistochrone(const BrachistochroneSolution& sol) {
  if (sol.residual_ode > 1e-6 * (1.0 + sol.T * sol.T))
    throw Error(ErrorKind::NotCritical, "curve does not solve the brachistochrone equation");
}

// 4-point Gauss-Legendre on [0,1]
constexpr std::array<double, 4> kGx = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                                       0.9305681557970263};
constexpr std::array<double, 4> kGw = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                                       0.1739274225687269};

// W[g][j] = int_{x_g}^1 l_j, l_j the cubic Lagrange basis through the Gauss nodes
std::array<std::array<double, 4>, 4> tail_weights() {
  std::array<std::array<double, 4>, 4> W{};
  auto lag = [](int j, double x) {
    double p = 1.0;
    for (int l = 0; l < 4; ++l)
      if (l != j) p *= (x - kGx[l]) / (kGx[j] - kGx[l]);
    return p;
  };
  for (int g = 0; g < 4; ++g) {
    const double a = kGx[g], len = 1.0 - a;
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int r = 0; r < 4; ++r) s += kGw[r] * lag(j, a + len * kGx[r]);
      W[g][j] = s * len;
    }
  }
  return W;
}

}  // namespace

VariationConstraintReport constraint_residual(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                                              const FieldAlongCurve& zeta) {
  const Curve& s = sol.sigma;
  check_hosted(s, zeta);
  const FieldAlongCurve dz = covariant_derivative_along(model, s, zeta, DiffOrder::Fourth);
  std::vector<double> a(s.size()), b(s.size());
  double scale = 0.0, zmax = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Mat g = model.metric(s.q[i]);
    const Mat gR = model.riemannian_metric(s.q[i]);
    const Tangent Y = model.killing(s.q[i]);
    const Tangent dY = model.covariant_killing(s.q[i]) * s.v[i];
    const Vec& z = zeta.values[i];
    const Vec& d = dz.values[i];
    a[i] = d.dot(g * Y) - z.dot(g * dY);
    b[i] = d.dot(g * s.v[i]);
    scale = std::max({scale, rnorm(gR, d) * rnorm(gR, Y) + rnorm(gR, z) * rnorm(gR, dY), rnorm(gR, d) * rnorm(gR, s.v[i])});
    zmax = std::max(zmax, rnorm(gR, z));
  }
  VariationConstraintReport rep;
  rep.C_zeta = integrate(s.t, a);
  rep.scale = 1.0 + scale;
  for (std::size_t i = 0; i < s.size(); ++i) {
    rep.residual_Y = std::max(rep.residual_Y, std::abs(a[i] - rep.C_zeta));
    rep.residual_speed = std::max(rep.residual_speed, std::abs(b[i] - sol.T * rep.C_zeta / sol.k));
  }
  const Event& q1 = s.q.back();
  const Tangent Y1 = model.killing(q1);
  const Mat gR1 = model.riemannian_metric(q1);
  const Vec& z1 = zeta.values.back();
  const double a1 = z1.dot(model.metric(q1) * Y1) / model.killing_norm(q1);
  rep.boundary_ok = rnorm(model.riemannian_metric(s.q.front()), zeta.values.front()) <= 1e-8 * (1.0 + zmax) &&
                    rnorm(gR1, z1 - a1 * Y1) <= 1e-6 * (1.0 + zmax);
  return rep;
}

double travel_time_differential(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                                const FieldAlongCurve& zeta, double tol) {
  const VariationConstraintReport rep = constraint_residual(model, sol, zeta);
  if (!rep.boundary_ok || rep.residual_Y > tol * rep.scale || rep.residual_speed > tol * rep.scale)
    throw Error(ErrorKind::ConstraintViolated, "field is not tangent to the constraint set");
  return -rep.C_zeta / sol.k;
}

double hessian_F_eval(const SpacetimeModel& model, const BrachistochroneSolution& sol, const FieldAlongCurve& z1,
                      const FieldAlongCurve& z2) {
  require_brachistochrone(sol);
  require_admissible(model, sol, z1);
  require_admissible(model, sol, z2);
  const Curve& s = sol.sigma;
  const double k = sol.k, T = sol.T;
  const auto geo = node_geometry(model, s, true);
  auto quadratic = [&](const FieldAlongCurve& z) {
    const FieldAlongCurve dz = covariant_derivative_along(model, s, z, DiffOrder::Fourth);
    std::vector<double> f(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const NodeGeometry& n = geo[i];
      const Vec& zi = z.values[i];
      const Vec& di = dz.values[i];
      const Vec& v = s.v[i];
      const double yy = n.Y.dot(n.g * n.Y), D = k * k + yy;
      const Vec Rzv = n.R.apply(zi, v, zi);
      f[i] = yy / D * (di.dot(n.g * di) + Rzv.dot(n.g * v)) +
             2.0 * k * T * (di.dot(n.g * (n.NY * zi)) + Rzv.dot(n.g * n.Y)) / D;
    }
    const NodeGeometry& e = geo.back();
    const double yy = e.Y.dot(e.g * e.Y), D = k * k + yy;
    const double a = z.values.back().dot(e.g * e.Y) / yy;
    return integrate(s.t, f) + yy / D * a * a * (e.NY * e.Y).dot(e.g * s.v.back());
  };
  return 0.25 * (quadratic(combine(z1, z2, 1.0)) - quadratic(combine(z1, z2, -1.0)));
}

double conformal_geodesic_residual(const ConformalGeometry& cg, const Curve& w) {
  const FieldAlongCurve acc = covariant_derivative_along(cg, w, field_from(w.v), DiffOrder::Fourth);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, rnorm(cg.metric(w.q[i]), acc.values[i]));
  return worst;
}

namespace {

void require_conformal_geodesic(const ConformalGeometry& cg, const Curve& w) {
  double speed2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) speed2 = std::max(speed2, w.v[i].dot(cg.metric(w.q[i]) * w.v[i]));
  if (conformal_geodesic_residual(cg, w) > 1e-5 * (1.0 + speed2))
    throw Error(ErrorKind::NotGeodesic, "curve is not a geodesic of the conformal metric");
}

// v = nu Y; `ref` sets the size below which a transverse part is noise
double killing_coefficient(const Mat& G, const Tangent& Y, const Tangent& v, double tol, double ref = 0.0) {
  const double nu = v.dot(G * Y) / Y.dot(G * Y);
  if (rnorm(G, v - nu * Y) > tol * (1e-300 + std::max(ref, rnorm(G, v))))
    throw Error(ErrorKind::NotTangentToGamma, "vector is not tangent to the observer line");
  return nu;
}

}  // namespace

double index_form(const ConformalGeometry& cg, const Curve& w, const FieldAlongCurve& V1, const FieldAlongCurve& V2) {
  check_hosted(w, V1);
  check_hosted(w, V2);
  require_conformal_geodesic(cg, w);
  const FieldAlongCurve d1 = covariant_derivative_along(cg, w, V1, DiffOrder::Fourth);
  const FieldAlongCurve d2 = covariant_derivative_along(cg, w, V2, DiffOrder::Fourth);
  std::vector<double> f(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Mat G = cg.metric(w.q[i]);
    const Riemann R = cg.curvature(w.q[i]);
    const Vec& x = w.v[i];
    const double curv = 0.5 * (R.apply(x, V1.values[i], x).dot(G * V2.values[i]) +
                               R.apply(x, V2.values[i], x).dot(G * V1.values[i]));
    f[i] = d1.values[i].dot(G * d2.values[i]) + curv;
  }
  return integrate(w.t, f);
}

double hessian_E_eval(const ConformalGeometry& cg, const Curve& w, const FieldAlongCurve& V1,
                      const FieldAlongCurve& V2) {
  const double I = index_form(cg, w, V1, V2);
  const Event& q0 = w.q.front();
  const Mat G = cg.metric(q0);
  const Tangent Y = cg.model().killing(q0);
  const Tangent& v0 = w.v.front();
  if (std::abs(v0.dot(G * Y)) > 1e-6 * rnorm(G, v0) * rnorm(G, Y))
    throw Error(ErrorKind::NotGeodesic, "geodesic does not leave the observer line orthogonally");
  auto size = [&](const FieldAlongCurve& V) {
    double out = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) out = std::max(out, rnorm(cg.metric(w.q[i]), V.values[i]));
    return out;
  };
  const double n1 = killing_coefficient(G, Y, V1.values.front(), 1e-6, size(V1));
  const double n2 = killing_coefficient(G, Y, V2.values.front(), 1e-6, size(V2));
  return I - n1 * n2 * (cg.covariant_killing(q0) * Y).dot(G * v0);
}

double hessian_E_lorentzian(const SpacetimeModel& model, double k, const Curve& w, const FieldAlongCurve& V1,
                            const FieldAlongCurve& V2) {
  check_hosted(w, V1);
  check_hosted(w, V2);
  double speed2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) speed2 = std::max(speed2, w.v[i].dot(model.metric(w.q[i]) * w.v[i]));
  if (geodesic_residual(model, k, w) > 1e-5 * (1.0 + speed2))
    throw Error(ErrorKind::NotGeodesic, "curve is not a horizontal conformal geodesic");
  const auto geo = node_geometry(model, w, true);
  std::vector<double> phi(w.size());
  std::vector<Vec> dphi(w.size());
  std::vector<Mat> hphi(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    phi[i] = model.conformal_factor(w.q[i], k);
    dphi[i] = model.conformal_factor_differential(w.q[i], k);
    hphi[i] = model.conformal_factor_hessian(w.q[i], k);
  }
  auto quadratic = [&](const FieldAlongCurve& V) {
    const FieldAlongCurve dV = covariant_derivative_along(model, w, V, DiffOrder::Fourth);
    std::vector<double> f(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const NodeGeometry& n = geo[i];
      const Vec& x = w.v[i];
      const Vec& v = V.values[i];
      const Vec& d = dV.values[i];
      f[i] = phi[i] * (d.dot(n.g * d) + n.R.apply(v, x, v).dot(n.g * x)) + 2.0 * dphi[i].dot(v) * d.dot(n.g * x) +
             0.5 * v.dot(hphi[i] * v) * x.dot(n.g * x);
    }
    double size = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) size = std::max(size, rnorm(model.riemannian_metric(w.q[i]), V.values[i]));
    const NodeGeometry& e = geo.back();
    const double nu = killing_coefficient(model.riemannian_metric(w.q.back()), e.Y, V.values.back(), 1e-6, size);
    return integrate(w.t, f) + phi.back() * nu * nu * (e.NY * e.Y).dot(e.g * w.v.back());
  };
  return 0.25 * (quadratic(combine(V1, V2, 1.0)) - quadratic(combine(V1, V2, -1.0)));
}

double second_fundamental_form_gamma(const SpacetimeModel& model, const Event& q, const Tangent& n,
                                     const Tangent& v1, const Tangent& v2) {
  const Mat g = model.metric(q), gR = model.riemannian_metric(q);
  const Tangent Y = model.killing(q);
  if (std::abs(n.dot(g * Y)) > 1e-8 * rnorm(gR, n) * rnorm(gR, Y))
    throw Error(ErrorKind::NotNormal, "n is not orthogonal to Y");
  const double nu1 = killing_coefficient(gR, Y, v1, 1e-8);
  const double nu2 = killing_coefficient(gR, Y, v2, 1e-8);
  return nu1 * nu2 * (model.covariant_killing(q) * Y).dot(g * n);
}

std::string to_string(BoundaryConditions bc) {
  switch (bc) {
    case BoundaryConditions::Full: return "full";
    case BoundaryConditions::Horizontal: return "horizontal";
    case BoundaryConditions::Perpendicular: return "perpendicular";
  }
  return "?";
}

void classify_eigenvalues(HessianMatrix& H, double rel) {
  const double top = H.eigenvalues.size() ? H.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  H.eps_eig = rel * top;
  H.n_negative = H.n_zero = 0;
  for (double l : H.eigenvalues) {
    if (l < -H.eps_eig) ++H.n_negative;
    else if (std::abs(l) <= H.eps_eig) ++H.n_zero;
  }
}

HessianMatrix assemble_hessian(const ConformalGeometry& cg, const Curve& w, BoundaryConditions bc, int n_basis) {
  if (n_basis < 2) throw Error(ErrorKind::GridTooCoarse, "need at least two elements");
  require_conformal_geodesic(cg, w);
  const SpacetimeModel& model = cg.model();
  const int m = cg.dim();
  const int ne = n_basis, ngp = 4 * ne;
  const double h = 1.0 / ne;

  // geometry at Gauss points
  struct Point {
    double t, weight;
    Vec x;  // w'
    Mat G, Rm, NY;
    Christoffel gam;
    Tangent Y;
  };
  std::vector<Point> pts(ngp);
  for (int e = 0; e < ne; ++e)
    for (int g = 0; g < 4; ++g) {
      Point& p = pts[4 * e + g];
      p.t = (e + kGx[g]) * h;
      p.weight = kGw[g] * h;
      auto [q, v] = hermite_eval(w, p.t);
      p.x = v;
      p.G = cg.metric(q);
      p.gam = cg.christoffel(q);
      p.NY = cg.covariant_killing(q);
      p.Y = model.killing(q);
      const Riemann R = cg.curvature(q);
      p.Rm = Mat(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          p.Rm(a, b) = R.apply(v, Vec::Unit(m, a), v).dot(p.G * Vec::Unit(m, b));
      p.Rm = (0.5 * (p.Rm + p.Rm.transpose())).eval();
    }
  const Event q0 = w.q.front();
  const Mat G0 = cg.metric(q0);
  const Tangent Y0 = model.killing(q0);
  if (std::abs(w.v.front().dot(G0 * Y0)) > 1e-6 * rnorm(G0, w.v.front()) * rnorm(G0, Y0))
    throw Error(ErrorKind::NotGeodesic, "geodesic does not leave the observer line orthogonally");

  // trial fields: (node, constant coordinate vector)
  std::vector<std::pair<int, Vec>> basis;
  std::string desc;
  if (bc == BoundaryConditions::Full) basis.emplace_back(0, Y0);
  for (int j = 1; j < ne; ++j) {
    auto [q, v] = hermite_eval(w, j * h);
    const Mat G = cg.metric(q);
    Mat E;
    if (bc == BoundaryConditions::Full) {
      E = Mat::Identity(m, m);
    } else {
      Mat ex(m, bc == BoundaryConditions::Horizontal ? 1 : 2);
      ex.col(0) = model.killing(q);
      if (bc == BoundaryConditions::Perpendicular) ex.col(1) = v;
      E = orthonormal_complement(G, ex);
    }
    for (int c = 0; c < E.cols(); ++c) basis.emplace_back(j, E.col(c));
  }
  switch (bc) {
    case BoundaryConditions::Full:
      desc = "P1 hats x coordinate vectors at interior nodes, plus the first hat x Y";
      break;
    case BoundaryConditions::Horizontal:
      desc = "P1 hats x orthonormal frame of Y-perp at interior nodes, corrected along Y to stay horizontal";
      break;
    case BoundaryConditions::Perpendicular:
      desc = "P1 hats x orthonormal frame of {Y, w'}-perp at interior nodes, horizontal correction, minus the w' component";
      break;
  }
  const int nb = static_cast<int>(basis.size());

  // values and covariant derivatives at every Gauss point
  Eigen::MatrixXd Vv = Eigen::MatrixXd::Zero(nb, ngp * m), Dv = Eigen::MatrixXd::Zero(nb, ngp * m);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(nb);
  const auto W = tail_weights();
  for (int I = 0; I < nb; ++I) {
    const auto& [j, E] = basis[I];
    for (int e = std::max(0, j - 1); e <= std::min(ne - 1, j); ++e)
      for (int g = 0; g < 4; ++g) {
        const int k = 4 * e + g;
        const Point& p = pts[k];
        const double s = p.t / h - j;  // in [-1, 1]
        const double hat = 1.0 - std::abs(s);
        const double dhat = (s < 0.0 ? 1.0 : -1.0) / h;
        Vv.block(I, k * m, 1, m) = (hat * E).transpose();
        Dv.block(I, k * m, 1, m) = (dhat * E + hat * p.gam.contract(p.x, E)).transpose();
      }
    if (bc == BoundaryConditions::Full) {
      if (j == 0) nu[I] = 1.0;
      continue;
    }
    // horizontal correction B + mu Y with mu' = -L_B / g~(Y,Y), mu(1) = 0
    std::vector<double> f(ngp);
    for (int k = 0; k < ngp; ++k) {
      const Point& p = pts[k];
      const Vec V = Vv.block(I, k * m, 1, m).transpose(), D = Dv.block(I, k * m, 1, m).transpose();
      f[k] = (D.dot(p.G * p.Y) - V.dot(p.G * (p.NY * p.x))) / p.Y.dot(p.G * p.Y);
    }
    double tail = 0.0;
    for (int e = ne - 1; e >= 0; --e) {
      for (int g = 0; g < 4; ++g) {
        double mu = tail;
        for (int r = 0; r < 4; ++r) mu += h * W[g][r] * f[4 * e + r];
        const int k = 4 * e + g;
        const Point& p = pts[k];
        Vv.block(I, k * m, 1, m) += (mu * p.Y).transpose();
        Dv.block(I, k * m, 1, m) += (-f[k] * p.Y + mu * (p.NY * p.x)).transpose();
      }
      for (int g = 0; g < 4; ++g) tail += h * kGw[g] * f[4 * e + g];
    }
    nu[I] = tail;  // V(0) = mu(0) Y
    if (bc == BoundaryConditions::Perpendicular) {
      for (int k = 0; k < ngp; ++k) {
        const Point& p = pts[k];
        const double xx = p.x.dot(p.G * p.x);
        const Vec V = Vv.block(I, k * m, 1, m).transpose(), D = Dv.block(I, k * m, 1, m).transpose();
        const double lam = V.dot(p.G * p.x) / xx, dlam = D.dot(p.G * p.x) / xx;
        Vv.block(I, k * m, 1, m) -= (lam * p.x).transpose();
        Dv.block(I, k * m, 1, m) -= (dlam * p.x).transpose();
      }
    }
  }

  // H = sum_k weight [D^T G D + V^T Rm V] - nu nu^T S
  Eigen::MatrixXd X(nb, ngp * m), RV(nb, ngp * m);
  for (int k = 0; k < ngp; ++k) {
    const Point& p = pts[k];
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(p.G).matrixL();
    X.middleCols(k * m, m) = std::sqrt(p.weight) * Dv.middleCols(k * m, m) * L;
    RV.middleCols(k * m, m) = p.weight * Vv.middleCols(k * m, m) * p.Rm;
  }
  Eigen::MatrixXd H = X * X.transpose() + Vv * RV.transpose();
  const double shape = (cg.covariant_killing(q0) * Y0).dot(G0 * w.v.front());
  H -= shape * nu * nu.transpose();
  H = 0.5 * (H + H.transpose()).eval();

  HessianMatrix out;
  out.bc = bc;
  out.n_basis = n_basis;
  out.basis = desc;
  out.entries = H;
  out.eigenvalues = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly).eigenvalues();
  classify_eigenvalues(out);
  return out;
}

RestrictedIndices restricted_index_report(const ConformalGeometry& cg, const Curve& w, int n_basis) {
  RestrictedIndices r;
  for (BoundaryConditions bc :
       {BoundaryConditions::Full, BoundaryConditions::Horizontal, BoundaryConditions::Perpendicular}) {
    const HessianMatrix H = assemble_hessian(cg, w, bc, n_basis);
    if (H.n_zero > 0)
      throw Error(ErrorKind::FocalEndpoint, "degenerate Hessian on the " + to_string(bc) + " space");
    (bc == BoundaryConditions::Full ? r.full : bc == BoundaryConditions::Horizontal ? r.horizontal : r.perpendicular) =
        H.n_negative;
  }
  return r;
}

}  // namespace brachi
