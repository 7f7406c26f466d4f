#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "brachi/models.hpp"

namespace testing_support {

inline brachi::Vec vec(std::initializer_list<double> xs) {
  brachi::Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline brachi::SpacetimeModel model(const std::string& name, std::map<std::string, double> params = {}) {
  return brachi::make_model({name, std::move(params)});
}

// Small deterministic sampler for property checks.
struct Sampler {
  std::mt19937_64 gen;
  explicit Sampler(std::uint64_t seed) : gen(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
  brachi::Vec box(int m, double lo, double hi) {
    brachi::Vec v(m);
    for (int i = 0; i < m; ++i) v[i] = uniform(lo, hi);
    return v;
  }
};

// A point well inside each shipped chart.
inline brachi::Vec sample_point(const std::string& name, Sampler& s) {
  if (name == "minkowski4") return s.box(4, -1.0, 1.0);
  if (name == "einstein_cylinder") return vec({s.uniform(0.5, 2.6), s.uniform(-3.0, 3.0), s.uniform(-1.0, 1.0)});
  if (name == "rotating_frame") {
    const double r = s.uniform(0.0, 1.9), a = s.uniform(0.0, 6.28);
    return vec({r * std::cos(a), r * std::sin(a), s.uniform(-1.0, 1.0)});
  }
  return s.box(3, -1.0, 1.0);
}

}  // namespace testing_support

#include <functional>

#include "brachi/curves.hpp"

namespace testing_support {

// Curve sampled from closed-form position and velocity on a uniform grid.
inline brachi::Curve sampled_curve(int N, const std::function<std::pair<brachi::Vec, brachi::Vec>(double)>& f) {
  brachi::Curve c;
  c.t = brachi::uniform_grid(N);
  for (double t : c.t) {
    auto [q, v] = f(t);
    c.q.push_back(q);
    c.v.push_back(v);
  }
  return c;
}

// Spherical chart (theta, phi) components of an ambient R^3 tangent vector w at unit x.
inline brachi::Vec sphere_components(const Eigen::Vector3d& x, const Eigen::Vector3d& w) {
  const double rho2 = x.x() * x.x() + x.y() * x.y();
  return vec({-w.z() / std::sqrt(rho2), (x.x() * w.y() - x.y() * w.x()) / rho2, 0.0});
}

inline brachi::Vec sphere_point(const Eigen::Vector3d& x, double t) {
  return vec({std::acos(x.z()), std::atan2(x.y(), x.x()), t});
}

// Tilted great circle x(s) = cos(a s) e1 + sin(a s) e2 on the cylinder's spatial sphere.
struct GreatCircle {
  Eigen::Vector3d e1, e2;
  double rate;
  GreatCircle(double tilt, double rate_) : rate(rate_) {
    e1 = Eigen::Vector3d(std::cos(0.3), std::sin(0.3), 0.0);
    e2 = Eigen::Vector3d(-std::sin(0.3) * std::cos(tilt), std::cos(0.3) * std::cos(tilt), std::sin(tilt));
  }
  Eigen::Vector3d x(double s) const { return std::cos(rate * s) * e1 + std::sin(rate * s) * e2; }
  Eigen::Vector3d dx(double s) const { return rate * (-std::sin(rate * s) * e1 + std::cos(rate * s) * e2); }
  Eigen::Vector3d normal() const { return e1.cross(e2); }
  brachi::Curve curve(int N) const {
    return sampled_curve(N, [&](double s) { return std::pair{sphere_point(x(s), 0.0), sphere_components(x(s), dx(s))}; });
  }
};

}  // namespace testing_support

#include "brachi/transform.hpp"

namespace testing_support {

// Constrained curves through the horizontal traces of base(t) + s eta(t).
// eta vanishes at both ends, so every member starts at the same event and
// ends on the same observer line.
struct ConstrainedFamily {
  const brachi::SpacetimeModel* model;
  double k;
  brachi::CurveMap base;
  std::function<std::pair<brachi::Vec, brachi::Vec>(double)> eta;  // value and t-derivative
  int N = 400;

  brachi::BrachistochroneSolution member(double s) const {
    auto c = [this, s](double t) {
      auto [q, v] = base(t);
      auto [e, de] = eta(t);
      return std::pair<brachi::Event, brachi::Tangent>{q + s * e, v + s * de};
    };
    return brachi::constrained_curve(*model, k, c, N);
  }

  // d/ds at s = 0 by central differences, with exact-in-t rates.
  brachi::FieldAlongCurve field(double h = 1e-4) const {
    const auto plus = member(h), minus = member(-h);
    brachi::FieldAlongCurve z;
    std::vector<brachi::Tangent> rates;
    for (std::size_t i = 0; i < plus.sigma.size(); ++i) {
      z.values.push_back(model->chart_difference(plus.sigma.q[i], minus.sigma.q[i]) / (2 * h));
      rates.push_back((plus.sigma.v[i] - minus.sigma.v[i]) / (2 * h));
    }
    z.rates = std::move(rates);
    return z;
  }
};

inline brachi::CurveMap interpolant(const brachi::Curve& c) {
  return [c](double t) { return brachi::hermite_eval(c, t); };
}

// eta(t) = sum_j sin(j pi t) a_j with random coefficient vectors.
inline std::function<std::pair<brachi::Vec, brachi::Vec>(double)> random_bump(Sampler& s, int m, double size,
                                                                              int modes = 3) {
  std::vector<brachi::Vec> a;
  for (int j = 0; j < modes; ++j) a.push_back(s.box(m, -size, size) / (j + 1));
  return [a](double t) {
    const double pi = 3.14159265358979323846;
    brachi::Vec e = brachi::Vec::Zero(a[0].size()), de = e;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double w = (j + 1) * pi;
      e += std::sin(w * t) * a[j];
      de += w * std::cos(w * t) * a[j];
    }
    return std::pair{e, de};
  };
}

}  // namespace testing_support
