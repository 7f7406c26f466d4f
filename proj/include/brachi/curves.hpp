#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "brachi/geometry.hpp"

namespace brachi {

// Sampled curve on [0,1].
struct Curve {
  std::vector<double> t;
  std::vector<Event> q;
  std::vector<Tangent> v;

  std::size_t size() const { return t.size(); }
  int segments() const { return static_cast<int>(t.size()) - 1; }
  int dim() const { return q.empty() ? 0 : static_cast<int>(q.front().size()); }
};

// Vector field along a curve. `rates` optionally carries exact coordinate
// t-derivatives of the components; they replace finite differences when present.
struct FieldAlongCurve {
  std::vector<Tangent> values;
  std::optional<std::vector<Tangent>> rates;

  std::size_t size() const { return values.size(); }
};

enum class DiffOrder { Second, Fourth };

std::vector<double> uniform_grid(int N);
void check_curve(const MetricField& geometry, const Curve& c);
void check_hosted(const Curve& c, const FieldAlongCurve& f);

// Lagrange-stencil differentiation along the grid (3-point or 5-point stencils,
// one-sided near the ends).
std::vector<Vec> differentiate(const std::vector<double>& t, const std::vector<Vec>& f, DiffOrder order);
std::vector<double> differentiate(const std::vector<double>& t, const std::vector<double>& f, DiffOrder order);

// Quadrature over the grid: trapezoid, and a fourth-order rule built from
// local cubic interpolants (cumulative version starts at 0).
double trapezoid(const std::vector<double>& t, const std::vector<double>& f);
double integrate(const std::vector<double>& t, const std::vector<double>& f);
std::vector<double> cumulative_integral(const std::vector<double>& t, const std::vector<double>& f);

// nabla_c f = df/dt + Gamma(c)(c', f) node-wise.
FieldAlongCurve covariant_derivative_along(const MetricField& geometry, const Curve& c, const FieldAlongCurve& f,
                                           DiffOrder order = DiffOrder::Second);

// Composite trapezoid of weight * <f, g> (Lorentzian metric of the model).
double field_integral(const SpacetimeModel& model, const Curve& c, const FieldAlongCurve& f,
                      const FieldAlongCurve& g, const std::vector<double>& weight);

// Cubic Hermite interpolation through the stored points and velocities.
std::pair<Event, Tangent> hermite_eval(const Curve& c, double t);
Curve resample_curve(const Curve& c, int N);

// Direction reversal t -> 1 - t.
Curve reverse_curve(const Curve& c);
FieldAlongCurve reverse_field(const FieldAlongCurve& f);

// Field with the same values on another grid of the same size.
FieldAlongCurve field_from(std::vector<Tangent> values);

}  // namespace brachi
