#include "brachi/models.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace brachi {

namespace {

double take(std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double v = it->second;
  params.erase(it);
  if (!std::isfinite(v)) throw Error(ErrorKind::InvalidParams, key + " must be finite");
  return v;
}

ModelDefinition flat(int m, const std::string& name) {
  ModelDefinition d;
  d.name = name;
  d.m = m;
  d.metric = [m](const Event&) {
    Mat g = Mat::Identity(m, m);
    g(m - 1, m - 1) = -1.0;
    return g;
  };
  d.killing = [m](const Event&) {
    Vec Y = Vec::Zero(m);
    Y[m - 1] = 1.0;
    return Y;
  };
  d.christoffel = [m](const Event&) { return Christoffel(m); };
  d.domain = [](const Event&) { return true; };
  return d;
}

ModelDefinition einstein_cylinder(double margin) {
  if (!(margin > 0.0 && margin < 1.0)) throw Error(ErrorKind::InvalidParams, "theta_margin must lie in (0, 1)");
  ModelDefinition d;
  d.name = "einstein_cylinder";
  d.m = 3;
  d.metric = [](const Event& q) {
    Mat g = Mat::Zero(3, 3);
    const double s = std::sin(q[0]);
    g(0, 0) = 1.0;
    g(1, 1) = s * s;
    g(2, 2) = -1.0;
    return g;
  };
  d.killing = [](const Event&) { return Vec(Vec::Unit(3, 2)); };
  d.christoffel = [](const Event& q) {
    Christoffel G(3);
    const double s = std::sin(q[0]), c = std::cos(q[0]);
    G(0, 1, 1) = -s * c;
    G(1, 0, 1) = c / s;
    G(1, 1, 0) = c / s;
    return G;
  };
  d.domain = [margin](const Event& q) { return q[0] >= margin && q[0] <= std::numbers::pi - margin; };
  d.periods = Vec::Zero(3);
  d.periods[1] = 2.0 * std::numbers::pi;
  return d;
}

ModelDefinition static_well(double a) {
  if (!(a >= 0.0)) throw Error(ErrorKind::InvalidParams, "well curvature a must be >= 0");
  ModelDefinition d;
  d.name = "static_well";
  d.m = 3;
  d.metric = [a](const Event& q) {
    Mat g = Mat::Identity(3, 3);
    g(2, 2) = -(1.0 + a * q[0] * q[0]);
    return g;
  };
  d.killing = [](const Event&) { return Vec(Vec::Unit(3, 2)); };
  d.christoffel = [a](const Event& q) {
    Christoffel G(3);
    const double x = q[0];
    G(2, 2, 0) = a * x / (1.0 + a * x * x);
    G(2, 0, 2) = G(2, 2, 0);
    G(0, 2, 2) = a * x;
    return G;
  };
  d.domain = [](const Event&) { return true; };
  return d;
}

ModelDefinition rotating_frame(double omega, double r_max) {
  if (!(omega >= 0.0)) throw Error(ErrorKind::InvalidParams, "omega must be >= 0");
  if (!(r_max > 0.0) || !(omega * r_max < 1.0))
    throw Error(ErrorKind::InvalidParams, "rotating_frame needs r_max > 0 and omega * r_max < 1");
  ModelDefinition d;
  d.name = "rotating_frame";
  d.m = 3;
  // x = X cos wt + Y sin wt, y = -X sin wt + Y cos wt relative to inertial (X, Y)
  d.metric = [omega](const Event& q) {
    const double x = q[0], y = q[1];
    Mat g = Mat::Identity(3, 3);
    g(0, 2) = g(2, 0) = -omega * y;
    g(1, 2) = g(2, 1) = omega * x;
    g(2, 2) = -(1.0 - omega * omega * (x * x + y * y));
    return g;
  };
  d.killing = [](const Event&) { return Vec(Vec::Unit(3, 2)); };
  d.christoffel = [omega](const Event& q) {
    const double x = q[0], y = q[1], w2 = omega * omega;
    Christoffel low(3);  // Gamma_{d,bc}
    low(0, 1, 2) = low(0, 2, 1) = -omega;
    low(0, 2, 2) = -w2 * x;
    low(1, 0, 2) = low(1, 2, 0) = omega;
    low(1, 2, 2) = -w2 * y;
    low(2, 0, 2) = low(2, 2, 0) = w2 * x;
    low(2, 1, 2) = low(2, 2, 1) = w2 * y;
    Mat g = Mat::Identity(3, 3);
    g(0, 2) = g(2, 0) = -omega * y;
    g(1, 2) = g(2, 1) = omega * x;
    g(2, 2) = -(1.0 - w2 * (x * x + y * y));
    const Mat ginv = g.inverse();
    Christoffel G(3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          double s = 0.0;
          for (int e = 0; e < 3; ++e) s += ginv(a, e) * low(e, b, c);
          G(a, b, c) = s;
        }
    return G;
  };
  d.domain = [r_max](const Event& q) { return q[0] * q[0] + q[1] * q[1] < r_max * r_max; };
  return d;
}

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"minkowski3", "minkowski4", "einstein_cylinder", "static_well",
                                                 "rotating_frame"};
  return names;
}

SpacetimeModel make_model(const ModelSpec& spec) {
  auto params = spec.params;
  const double fd = take(params, "fd_step", 1e-5);
  ModelDefinition def;
  if (spec.name == "minkowski3") {
    def = flat(3, "minkowski3");
  } else if (spec.name == "minkowski4") {
    def = flat(4, "minkowski4");
  } else if (spec.name == "einstein_cylinder") {
    def = einstein_cylinder(take(params, "theta_margin", 0.1));
  } else if (spec.name == "static_well") {
    def = static_well(take(params, "a", 1.0));
  } else if (spec.name == "rotating_frame") {
    const double omega = take(params, "omega", 0.3);
    def = rotating_frame(omega, take(params, "r_max", 2.0));
  } else {
    throw Error(ErrorKind::UnknownModel, spec.name);
  }
  if (!params.empty()) throw Error(ErrorKind::InvalidParams, "unknown parameter '" + params.begin()->first + "'");
  def.fd_step = fd;
  return SpacetimeModel(std::move(def));
}

}  // namespace brachi
