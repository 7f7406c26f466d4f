#include "brachi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace brachi {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OutOfChart: return "OutOfChart";
    case ErrorKind::StencilOutOfChart: return "StencilOutOfChart";
    case ErrorKind::OutsideUk: return "OutsideUk";
    case ErrorKind::DegenerateKilling: return "DegenerateKilling";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::NotHorizontal: return "NotHorizontal";
    case ErrorKind::ConstraintViolated: return "ConstraintViolated";
    case ErrorKind::FlowEscape: return "FlowEscape";
    case ErrorKind::NotCritical: return "NotCritical";
    case ErrorKind::NotGeodesic: return "NotGeodesic";
    case ErrorKind::NotTangentToGamma: return "NotTangentToGamma";
    case ErrorKind::NotNormal: return "NotNormal";
    case ErrorKind::InitialConditionViolated: return "InitialConditionViolated";
    case ErrorKind::NotOrthogonalStart: return "NotOrthogonalStart";
    case ErrorKind::FrameDegenerate: return "FrameDegenerate";
    case ErrorKind::FocalEndpoint: return "FocalEndpoint";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ZeroSeed: return "ZeroSeed";
    case ErrorKind::Stalled: return "Stalled";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::string describe(const Event& q) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (int i = 0; i < q.size(); ++i) os << (i ? ", " : "") << q[i];
  os << ")";
  return os.str();
}

Vec unit(int m, int i) {
  Vec e = Vec::Zero(m);
  e[i] = 1.0;
  return e;
}

}  // namespace

// ---------------------------------------------------------------- MetricField

void MetricField::require_stencil(const Event& q, double h) const {
  if (!in_domain(q)) throw Error(ErrorKind::OutOfChart, describe(q));
  for (int c = 0; c < dim(); ++c) {
    Vec e = unit(dim(), c) * h;
    if (!in_domain(q + e) || !in_domain(q - e))
      throw Error(ErrorKind::StencilOutOfChart, describe(q));
  }
}

Christoffel MetricField::christoffel_from(const Mat& g, const MetricDerivatives& dg) {
  const int m = static_cast<int>(g.rows());
  const Mat ginv = g.inverse();
  Christoffel lowered(m);  // Gamma_{d,bc}
  for (int d = 0; d < m; ++d)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) lowered(d, b, c) = 0.5 * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
  Christoffel out(m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = b; c < m; ++c) {
        double s = 0.0;
        for (int d = 0; d < m; ++d) s += ginv(a, d) * lowered(d, b, c);
        out(a, b, c) = s;
        out(a, c, b) = s;
      }
  return out;
}

Christoffel MetricField::christoffel(const Event& q) const {
  const double h = fd_step();
  require_stencil(q, h);
  const int m = dim();
  MetricDerivatives dg;
  for (int c = 0; c < m; ++c) {
    Vec e = unit(m, c) * h;
    dg[c] = (metric(q + e) - metric(q - e)) / (2.0 * h);
  }
  return christoffel_from(metric(q), dg);
}

Riemann MetricField::curvature(const Event& q) const {
  const double h = fd_step();
  require_stencil(q, h);
  const int m = dim();
  const Christoffel G = christoffel(q);
  std::array<Christoffel, kMaxDim> dG;  // [e] = d_e Gamma
  for (int e = 0; e < m; ++e) {
    Vec s = unit(m, e) * h;
    const Christoffel gp = christoffel(q + s);
    const Christoffel gm = christoffel(q - s);
    dG[e] = Christoffel(m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) dG[e](a, b, c) = (gp(a, b, c) - gm(a, b, c)) / (2.0 * h);
  }
  Riemann R(m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) {
          double v = dG[c](a, d, b) - dG[d](a, c, b);
          for (int e = 0; e < m; ++e) v += G(a, c, e) * G(e, d, b) - G(a, d, e) * G(e, c, b);
          R(a, b, c, d) = v;
        }
  return R;
}

// -------------------------------------------------------------- SpacetimeModel

SpacetimeModel::SpacetimeModel(ModelDefinition def) {
  if (def.m < 2 || def.m > kMaxDim)
    throw Error(ErrorKind::InvalidParams, "chart dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
  if (!def.metric || !def.killing || !def.domain)
    throw Error(ErrorKind::InvalidParams, "model needs metric, Killing field and chart domain");
  if (def.periods.size() == 0) def.periods = Vec::Zero(def.m);
  if (!(def.fd_step > 0.0)) throw Error(ErrorKind::InvalidParams, "fd_step must be positive");
  def_ = std::make_shared<const ModelDefinition>(std::move(def));
}

bool SpacetimeModel::in_domain(const Event& q) const {
  if (q.size() != def_->m) return false;
  for (int i = 0; i < q.size(); ++i)
    if (!std::isfinite(q[i])) return false;
  return def_->domain(q);
}

Mat SpacetimeModel::metric(const Event& q) const {
  if (!in_domain(q)) throw Error(ErrorKind::OutOfChart, describe(q));
  return def_->metric(q);
}

Christoffel SpacetimeModel::christoffel(const Event& q) const {
  if (def_->christoffel) {
    if (!in_domain(q)) throw Error(ErrorKind::OutOfChart, describe(q));
    return def_->christoffel(q);
  }
  return MetricField::christoffel(q);
}

Tangent SpacetimeModel::killing(const Event& q) const {
  if (!in_domain(q)) throw Error(ErrorKind::OutOfChart, describe(q));
  return def_->killing(q);
}

double SpacetimeModel::killing_norm(const Event& q) const {
  const Tangent Y = killing(q);
  const double yy = Y.dot(metric(q) * Y);
  if (!(yy < 0.0)) throw Error(ErrorKind::DegenerateKilling, "<Y,Y> >= 0 at " + describe(q));
  return yy;
}

Mat SpacetimeModel::killing_jacobian(const Event& q) const {
  const double h = fd_step();
  require_stencil(q, h);
  const int m = dim();
  Mat J(m, m);
  for (int c = 0; c < m; ++c) {
    Vec e = unit(m, c) * h;
    J.col(c) = (def_->killing(q + e) - def_->killing(q - e)) / (2.0 * h);
  }
  return J;
}

Mat SpacetimeModel::covariant_killing(const Event& q) const {
  return killing_jacobian(q) + christoffel(q).along(killing(q));
}

Mat SpacetimeModel::covariant_killing_derivative(const Event& q, const Tangent& x) const {
  const double scale = x.lpNorm<Eigen::Infinity>();
  const int m = dim();
  if (scale == 0.0) return Mat::Zero(m, m);
  const double h = fd_step() / scale;
  const Mat N = covariant_killing(q);
  const Mat dN = (covariant_killing(q + h * x) - covariant_killing(q - h * x)) / (2.0 * h);
  const Mat Gx = christoffel(q).along(x);
  return dN + Gx * N - N * Gx;
}

MetricDerivatives SpacetimeModel::metric_derivatives(const Event& q) const {
  const int m = dim();
  MetricDerivatives dg;
  if (!def_->christoffel) {
    const double h = fd_step();
    require_stencil(q, h);
    for (int c = 0; c < m; ++c) {
      Vec e = unit(m, c) * h;
      dg[c] = (metric(q + e) - metric(q - e)) / (2.0 * h);
    }
    return dg;
  }
  // metric compatibility: d_c g_ab = g_ad Gamma^d_cb + g_bd Gamma^d_ca
  const Mat g = metric(q);
  const Christoffel G = christoffel(q);
  for (int c = 0; c < m; ++c) {
    Mat lower(m, m);  // (g Gamma_c)_{a b} = g_ad Gamma^d_{cb}
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double s = 0.0;
        for (int d = 0; d < m; ++d) s += g(a, d) * G(d, c, b);
        lower(a, b) = s;
      }
    dg[c] = lower + lower.transpose();
  }
  return dg;
}

Mat SpacetimeModel::riemannian_metric(const Event& q) const {
  const Mat g = metric(q);
  const Tangent Y = killing(q);
  const Vec Yf = g * Y;
  const double yy = Y.dot(Yf);
  if (!(yy < 0.0)) throw Error(ErrorKind::DegenerateKilling, "<Y,Y> >= 0 at " + describe(q));
  return g - 2.0 * Yf * Yf.transpose() / yy;
}

bool SpacetimeModel::in_uk(const Event& q, double k) const {
  return killing_norm(q) + k * k > 0.0;
}

double SpacetimeModel::conformal_factor(const Event& q, double k) const {
  const double yy = killing_norm(q);
  const double D = k * k + yy;
  if (!(D > 0.0)) throw Error(ErrorKind::OutsideUk, describe(q));
  return -yy / D;
}

Vec SpacetimeModel::conformal_factor_differential(const Event& q, double k) const {
  const int m = dim();
  const Mat g = metric(q);
  const Tangent Y = killing(q);
  const Vec Yf = g * Y;
  const double yy = Y.dot(Yf);
  const double D = k * k + yy;
  if (!(D > 0.0)) throw Error(ErrorKind::OutsideUk, describe(q));
  const MetricDerivatives dg = metric_derivatives(q);
  const Mat dY = killing_jacobian(q);
  Vec dphi(m);
  for (int c = 0; c < m; ++c) {
    const double dyy = Y.dot(dg[c] * Y) + 2.0 * Yf.dot(dY.col(c));
    dphi[c] = -k * k * dyy / (D * D);
  }
  return dphi;
}

Mat SpacetimeModel::conformal_factor_hessian(const Event& q, double k) const {
  const double h = fd_step();
  require_stencil(q, h);
  const int m = dim();
  Mat H(m, m);
  for (int b = 0; b < m; ++b) {
    Vec e = unit(m, b) * h;
    H.col(b) = (conformal_factor_differential(q + e, k) - conformal_factor_differential(q - e, k)) / (2.0 * h);
  }
  H = 0.5 * (H + H.transpose()).eval();
  const Vec dphi = conformal_factor_differential(q, k);
  const Christoffel G = christoffel(q);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double s = 0.0;
      for (int c = 0; c < m; ++c) s += G(c, a, b) * dphi[c];
      H(a, b) -= s;
    }
  return H;
}

Vec SpacetimeModel::chart_difference(const Event& a, const Event& b) const {
  Vec d = a - b;
  for (int i = 0; i < d.size(); ++i) {
    const double P = def_->periods[i];
    if (P > 0.0) d[i] -= P * std::round(d[i] / P);
  }
  return d;
}

Event SpacetimeModel::flow(const Event& q, double s, const OdeTolerances& tol) const {
  if (s == 0.0) return q;
  if (!in_domain(q)) throw Error(ErrorKind::OutOfChart, describe(q));
  const double sign = s > 0.0 ? 1.0 : -1.0;
  const int m = dim();
  OdeSystem f = [this, sign, m](const OdeState& y, OdeState& dy, double) {
    Vec p = Eigen::Map<const Vec>(y.data(), m);
    if (!in_domain(p)) throw Error(ErrorKind::FlowEscape, "Killing flow left the chart at " + describe(p));
    Vec Y = def_->killing(p);
    for (int i = 0; i < m; ++i) dy[i] = sign * Y[i];
  };
  OdeState y0(q.data(), q.data() + m);
  OdeState y1 = integrate_to(f, y0, 0.0, std::abs(s), tol);
  Event out = Eigen::Map<const Vec>(y1.data(), m);
  if (!in_domain(out)) throw Error(ErrorKind::FlowEscape, "Killing flow left the chart at " + describe(out));
  return out;
}

Mat SpacetimeModel::flow_differential(const Event& q, double s) const {
  const int m = dim();
  if (s == 0.0) return Mat::Identity(m, m);
  const double h = 2e-3;
  require_stencil(q, h);
  const OdeTolerances tight{1e-13, 1e-13};
  Mat D(m, m);
  for (int j = 0; j < m; ++j) {
    const Vec e = unit(m, j);
    auto central = [&](double step) {
      return Vec((chart_difference(flow(q + step * e, s, tight), flow(q - step * e, s, tight))) / (2.0 * step));
    };
    D.col(j) = (4.0 * central(0.5 * h) - central(h)) / 3.0;
  }
  // flows of Killing fields are isometries
  const Event qs = flow(q, s, tight);
  const Mat g0 = metric(q);
  const Mat mismatch = D.transpose() * metric(qs) * D - g0;
  if (mismatch.lpNorm<Eigen::Infinity>() > 1e-7 * (1.0 + g0.lpNorm<Eigen::Infinity>()))
    throw Error(ErrorKind::FlowEscape, "flow differential fails the isometry check at " + describe(q));
  return D;
}

// ----------------------------------------------------------- ConformalGeometry

ConformalGeometry::ConformalGeometry(SpacetimeModel model, double k) : model_(std::move(model)), k_(k) {
  if (!(k > 0.0)) throw Error(ErrorKind::InvalidArgument, "energy constant k must be positive");
}

bool ConformalGeometry::in_domain(const Event& q) const {
  if (!model_.in_domain(q)) return false;
  return model_.in_uk(q, k_);
}

Mat ConformalGeometry::metric(const Event& q) const {
  return model_.conformal_factor(q, k_) * model_.riemannian_metric(q);
}

MetricDerivatives ConformalGeometry::metric_derivatives(const Event& q) const {
  const int m = dim();
  const Mat g = model_.metric(q);
  const Tangent Y = model_.killing(q);
  const Vec Yf = g * Y;
  const double yy = Y.dot(Yf);
  const double D = k_ * k_ + yy;
  if (!(D > 0.0)) throw Error(ErrorKind::OutsideUk, describe(q));
  const double phi = -yy / D;
  const Mat gR = g - 2.0 * Yf * Yf.transpose() / yy;
  const MetricDerivatives dg = model_.metric_derivatives(q);
  const Mat dY = model_.killing_jacobian(q);
  MetricDerivatives out;
  for (int c = 0; c < m; ++c) {
    const Vec dYf = dg[c] * Y + g * dY.col(c);
    const double dyy = Y.dot(dg[c] * Y) + 2.0 * Yf.dot(dY.col(c));
    const Mat dgR = dg[c] - 2.0 * (dYf * Yf.transpose() + Yf * dYf.transpose()) / yy +
                    2.0 * Yf * Yf.transpose() * dyy / (yy * yy);
    const double dphi = -k_ * k_ * dyy / (D * D);
    out[c] = dphi * gR + phi * dgR;
  }
  return out;
}

Christoffel ConformalGeometry::christoffel(const Event& q) const {
  return christoffel_from(metric(q), metric_derivatives(q));
}

Mat ConformalGeometry::covariant_killing(const Event& q) const {
  return model_.killing_jacobian(q) + christoffel(q).along(model_.killing(q));
}

// ------------------------------------------------------------------ free ops

double metric_eval(const SpacetimeModel& model, const Event& q, const Tangent& v, const Tangent& w) {
  return v.dot(model.metric(q) * w);
}

Tangent killing_eval(const SpacetimeModel& model, const Event& q) {
  const Tangent Y = model.killing(q);
  model.killing_norm(q);
  return Y;
}

Christoffel connection_coeffs(const SpacetimeModel& model, const Event& q) { return model.christoffel(q); }

Riemann curvature_tensor(const SpacetimeModel& model, const Event& q) { return model.curvature(q); }

double riemannian_metric_eval(const SpacetimeModel& model, const Event& q, const Tangent& v, const Tangent& w) {
  return v.dot(model.riemannian_metric(q) * w);
}

double conformal_factor(const SpacetimeModel& model, const Event& q, double k) {
  return model.conformal_factor(q, k);
}

bool uk_membership(const SpacetimeModel& model, const Event& q, double k) { return model.in_uk(q, k); }

ConformalGeometry conformal_geometry(const SpacetimeModel& model, double k) { return ConformalGeometry(model, k); }

Mat orthonormal_complement(const Mat& gr, const Mat& exclude) {
  const int m = static_cast<int>(gr.rows());
  const int nx = static_cast<int>(exclude.cols());
  std::vector<Vec> basis;
  auto ip = [&gr](const Vec& a, const Vec& b) { return a.dot(gr * b); };
  auto absorb = [&](Vec v) {
    for (const Vec& b : basis) v -= ip(v, b) * b;
    for (const Vec& b : basis) v -= ip(v, b) * b;  // second pass for stability
    return v;
  };
  for (int j = 0; j < nx; ++j) {
    Vec v = absorb(exclude.col(j));
    const double n = std::sqrt(std::max(ip(v, v), 0.0));
    if (n < 1e-12) throw Error(ErrorKind::FrameDegenerate, "dependent vectors in frame construction");
    basis.push_back(v / n);
  }
  Mat out(m, m - nx);
  int filled = 0;
  // candidates ordered by how much survives projection, for robustness
  while (filled < m - nx) {
    int best = -1;
    double best_norm = 0.0;
    Vec best_v;
    for (int i = 0; i < m; ++i) {
      Vec v = absorb(unit(m, i));
      const double n = std::sqrt(std::max(ip(v, v), 0.0));
      if (n > best_norm) {
        best_norm = n;
        best = i;
        best_v = v;
      }
    }
    if (best < 0 || best_norm < 1e-10) throw Error(ErrorKind::FrameDegenerate, "cannot complete frame");
    basis.push_back(best_v / best_norm);
    out.col(filled++) = basis.back();
  }
  return out;
}

}  // namespace brachi
