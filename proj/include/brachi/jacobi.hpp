#pragma once

#include <optional>
#include <vector>

#include "brachi/dynamics.hpp"

namespace brachi {

enum class JacobiKind { BJacobi, RiemannianGamma };
const char* to_string(JacobiKind kind);

struct JacobiFieldData {
  FieldAlongCurve field;
  FieldAlongCurve derivative;  // covariant derivative along the curve
  double C_V = 0.0;            // b-Jacobi constant; 0 for Riemannian fields
  double C_drift = 0.0;        // max deviation of the b-Jacobi constant along the solution
  JacobiKind kind = JacobiKind::BJacobi;
};

struct FocalPoint {
  double t = 0.0;
  int multiplicity = 0;
  double singular_ratio = 0.0;              // smallest / largest singular value at t
  std::optional<double> endpoint_ratio;     // b-side confirmation, when run
};

struct FocalReport {
  std::vector<FocalPoint> focal;
  int geometric_index = 0;
  std::vector<double> trace_t;
  std::vector<double> trace_det;  // det of <J_i, E_j> on the scan grid
};

struct JacobiConfig {
  OdeTolerances tol{1e-11, 1e-11};
  double scan_step = 1e-3;
  double rank_threshold = 1e-5;
};

// Linearized brachistochrone equation along sol, from V(0) = V0, nabla V(0) = dV0.
JacobiFieldData integrate_bjacobi(const SpacetimeModel& model, const BrachistochroneSolution& sol, const Tangent& V0,
                                  const Tangent& dV0, const JacobiConfig& cfg = {});
// Same, with the data given at t = a (integrated both ways over the grid).
JacobiFieldData integrate_bjacobi_from(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a,
                                       const Tangent& Va, const Tangent& dVa, const JacobiConfig& cfg = {});
// Residual of the initial condition -T C_V + k <dV0, s'(0)> at a start point.
double bjacobi_initial_residual(const SpacetimeModel& model, double k, double T, const Event& q, const Tangent& v,
                                const Tangent& V0, const Tangent& dV0);
// max g_R-norm of the linearized brachistochrone equation applied to V (fourth-order differences)
double bjacobi_residual(const SpacetimeModel& model, const BrachistochroneSolution& sol, const FieldAlongCurve& V);

// nabla nabla J = R(w', J) w' for the conformal metric.
JacobiFieldData integrate_rjacobi(const ConformalGeometry& cg, const Curve& w, const Tangent& J0, const Tangent& dJ0,
                                  const JacobiConfig& cfg = {});
// max g~-norm of nabla nabla J - R(w', J) w' from samples (fourth-order differences)
double rjacobi_residual(const ConformalGeometry& cg, const Curve& w, const FieldAlongCurve& J);

// m independent Jacobi fields with J(0) along Y and <nabla J, Y> + <w', nabla_J Y> = 0.
std::vector<JacobiFieldData> gamma_jacobi_basis(const ConformalGeometry& cg, const Curve& w,
                                                const JacobiConfig& cfg = {});
// Zeros of det <J_i, E_j> on (0, 1] for a curve leaving the observer line at t = 0.
FocalReport focal_points(const ConformalGeometry& cg, const Curve& w, const JacobiConfig& cfg = {});

// Horizontal curve obtained by flowing sol so that it agrees with sol at t = a.
Curve deform_from(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a);
// Linearization of deform_from along zeta (the constant of zeta is taken on [a, 1]).
FieldAlongCurve map_L(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a,
                      const FieldAlongCurve& zeta);

// b-focal points of a brachistochrone in its own orientation (p at t = 0),
// each confirmed by the endpoint map of b-Jacobi fields vanishing there.
FocalReport bfocal_points(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                          const JacobiConfig& cfg = {});
// Smallest/largest singular value of V'(a) -> V(1) mod Y over b-Jacobi fields with V(a) = 0.
double bfocal_endpoint_ratio(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a,
                             const JacobiConfig& cfg = {});
// Golden-section minimization of the endpoint ratio on [a - width, a + width].
FocalPoint bfocal_refine(const SpacetimeModel& model, const BrachistochroneSolution& sol, double a,
                         double width = 0.02, const JacobiConfig& cfg = {});

}  // namespace brachi
