#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>

#include "brachi/errors.hpp"
#include "brachi/linalg.hpp"
#include "brachi/ode.hpp"

namespace brachi {

using Event = Vec;    // chart coordinates of a point
using Tangent = Vec;  // components in the coordinate frame

using MetricDerivatives = std::array<Mat, kMaxDim>;  // [c] = d_c g_ab

// Anything carrying a metric on one chart; connection and curvature follow from it.
class MetricField {
 public:
  virtual ~MetricField() = default;

  virtual int dim() const = 0;
  virtual bool in_domain(const Event& q) const = 0;
  virtual Mat metric(const Event& q) const = 0;
  virtual double fd_step() const = 0;

  // Defaults to central differences of the metric.
  virtual Christoffel christoffel(const Event& q) const;

  // Coordinate formula with d(Gamma) by central differences of christoffel().
  Riemann curvature(const Event& q) const;

  // Levi-Civita coefficients from g and its first derivatives.
  static Christoffel christoffel_from(const Mat& g, const MetricDerivatives& dg);

 protected:
  void require_stencil(const Event& q, double h) const;
};

struct ModelDefinition {
  std::string name;
  int m = 0;
  std::function<Mat(const Event&)> metric;
  std::function<Tangent(const Event&)> killing;
  std::function<Christoffel(const Event&)> christoffel;  // optional
  std::function<bool(const Event&)> domain;
  Vec periods;  // per coordinate; 0 marks a non-periodic coordinate
  double fd_step = 1e-5;
};

// Stationary Lorentzian metric (-,+,...,+) with timelike Killing field Y on a single chart.
class SpacetimeModel final : public MetricField {
 public:
  explicit SpacetimeModel(ModelDefinition def);

  const std::string& name() const { return def_->name; }
  int dim() const override { return def_->m; }
  bool in_domain(const Event& q) const override;
  Mat metric(const Event& q) const override;
  double fd_step() const override { return def_->fd_step; }
  Christoffel christoffel(const Event& q) const override;
  bool has_analytic_christoffels() const { return static_cast<bool>(def_->christoffel); }
  Christoffel christoffel_by_differences(const Event& q) const { return MetricField::christoffel(q); }

  Tangent killing(const Event& q) const;
  double killing_norm(const Event& q) const;  // <Y,Y>
  Mat killing_jacobian(const Event& q) const;  // d_b Y^a
  Mat covariant_killing(const Event& q) const;  // (nabla Y)^a_b, so nabla_v Y = M v
  // (nabla_x nabla Y)^a_b: covariant derivative of the (1,1) tensor nabla Y along x
  Mat covariant_killing_derivative(const Event& q, const Tangent& x) const;
  MetricDerivatives metric_derivatives(const Event& q) const;

  Mat riemannian_metric(const Event& q) const;  // g_R
  bool in_uk(const Event& q, double k) const;
  double conformal_factor(const Event& q, double k) const;
  Vec conformal_factor_differential(const Event& q, double k) const;  // d_a phi_k
  Mat conformal_factor_hessian(const Event& q, double k) const;       // nabla d phi_k (Lorentzian)

  const Vec& periods() const { return def_->periods; }
  // Coordinate difference a - b reduced into the fundamental domain of periodic coordinates.
  Vec chart_difference(const Event& a, const Event& b) const;

  // Killing flow psi(q, s) and its differential in the base point.
  Event flow(const Event& q, double s, const OdeTolerances& tol = {}) const;
  Mat flow_differential(const Event& q, double s) const;

 private:
  std::shared_ptr<const ModelDefinition> def_;
};

// The Riemannian metric phi_k * g_R on U_k.
class ConformalGeometry final : public MetricField {
 public:
  ConformalGeometry(SpacetimeModel model, double k);

  const SpacetimeModel& model() const { return model_; }
  double k() const { return k_; }

  int dim() const override { return model_.dim(); }
  bool in_domain(const Event& q) const override;
  Mat metric(const Event& q) const override;
  double fd_step() const override { return model_.fd_step(); }
  // Assembled from the model's metric derivatives and Killing Jacobian.
  Christoffel christoffel(const Event& q) const override;
  Christoffel christoffel_by_differences(const Event& q) const { return MetricField::christoffel(q); }

  double phi(const Event& q) const { return model_.conformal_factor(q, k_); }
  Mat covariant_killing(const Event& q) const;  // w.r.t. the conformal connection
  MetricDerivatives metric_derivatives(const Event& q) const;

 private:
  SpacetimeModel model_;
  double k_;
};

// Operation-level entry points.
double metric_eval(const SpacetimeModel& model, const Event& q, const Tangent& v, const Tangent& w);
Tangent killing_eval(const SpacetimeModel& model, const Event& q);
Christoffel connection_coeffs(const SpacetimeModel& model, const Event& q);
Riemann curvature_tensor(const SpacetimeModel& model, const Event& q);
double riemannian_metric_eval(const SpacetimeModel& model, const Event& q, const Tangent& v, const Tangent& w);
double conformal_factor(const SpacetimeModel& model, const Event& q, double k);
bool uk_membership(const SpacetimeModel& model, const Event& q, double k);
ConformalGeometry conformal_geometry(const SpacetimeModel& model, double k);

// g_R-orthonormal basis of the g_R-orthogonal complement of `exclude` (columns).
Mat orthonormal_complement(const Mat& gr, const Mat& exclude);

}  // namespace brachi
