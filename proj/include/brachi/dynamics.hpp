#pragma once

#include <utility>
#include <vector>

#include "brachi/curves.hpp"
#include "brachi/geometry.hpp"

namespace brachi {

struct IntegratorConfig {
  OdeTolerances tol{1e-10, 1e-10};
  int grid_N = 400;
  double tol_cons = 1e-8;
};

struct BrachistochroneSolution {
  Curve sigma;
  double T = 0.0;
  double k = 0.0;
  double residual_conservation_Y = 0.0;      // max |<s',Y> + kT|
  double residual_conservation_speed = 0.0;  // max |<s',s'> + T^2|
  double residual_ode = 0.0;                 // max g_R-norm of the equation's left side
};

struct ConservationReport {
  double max_Y = 0.0;
  double max_speed = 0.0;
  double l2_Y = 0.0;
  double l2_speed = 0.0;
  double refined_max_Y = 0.0;  // re-integrated from the initial data on a 2N grid
  double refined_max_speed = 0.0;
  bool within_tolerance = false;
};

struct LagrangeMultiplierField {
  double lambda = 0.0;
  std::vector<double> mu;
};

// g_R-unit horizontal direction built from the horizontal part of `seed`.
Tangent horizontal_unit(const SpacetimeModel& model, const Event& p, const Tangent& seed);

// s'(0) = (T / sqrt(-<Y,Y>)) (k Yhat + sqrt(k^2 + <Y,Y>) u) for a g_R-unit horizontal u.
Tangent initial_velocity(const SpacetimeModel& model, double k, const Event& p, const Tangent& u, double T);

// Covariant acceleration nabla_s' s' prescribed by the brachistochrone equation.
Tangent brachistochrone_covariant_acceleration(const SpacetimeModel& model, double k, double T, const Event& q,
                                               const Tangent& v);
// (s', coordinate acceleration)
std::pair<Tangent, Tangent> brachistochrone_rhs(const SpacetimeModel& model, double k, double T, const Event& q,
                                                const Tangent& v);

BrachistochroneSolution integrate_brachistochrone(const SpacetimeModel& model, double k, const Event& p,
                                                  const Tangent& u, double T, const IntegratorConfig& cfg = {});
// Same, from an explicit initial velocity (not checked against the constraints).
BrachistochroneSolution integrate_from_velocity(const SpacetimeModel& model, double k, const Event& p,
                                                const Tangent& v0, double T, const IntegratorConfig& cfg = {});

// Recomputes the residual fields of `sol` from its samples.
void refresh_residuals(const SpacetimeModel& model, BrachistochroneSolution& sol);
ConservationReport conservation_report(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                                       const IntegratorConfig& cfg = {});
// Node-wise left side of the brachistochrone equation, max g_R norm.
double brachistochrone_residual(const SpacetimeModel& model, double k, double T, const Curve& c);

// Horizontal unit launch direction u of a solution.
Tangent launch_direction(const SpacetimeModel& model, const BrachistochroneSolution& sol);

Curve integrate_conformal_geodesic(const ConformalGeometry& cg, const Event& q, const Tangent& v,
                                   const IntegratorConfig& cfg = {});
double horizontality(const SpacetimeModel& model, const Curve& w);  // max |<w',Y>| / |w'|_R
// max g_R-norm of nabla_w'(phi w') - grad(phi) <w',w'> / 2
double geodesic_residual(const SpacetimeModel& model, double k, const Curve& w);

LagrangeMultiplierField multiplier_field(const SpacetimeModel& model, double k, const Curve& c);

}  // namespace brachi
