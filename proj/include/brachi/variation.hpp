#pragma once

#include <string>

#include <Eigen/Dense>

#include "brachi/transform.hpp"

namespace brachi {

struct VariationConstraintReport {
  double C_zeta = 0.0;
  double residual_Y = 0.0;      // max |<nabla z, Y> - <z, nabla Y> - C|
  double residual_speed = 0.0;  // max |<nabla z, s'> - T C / k|
  bool boundary_ok = false;     // z(0) = 0 and z(1) parallel to Y
  double scale = 1.0;           // magnitude the residuals should be compared against
};

VariationConstraintReport constraint_residual(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                                              const FieldAlongCurve& zeta);

// dT[z] = -C_z / k on admissible fields.
double travel_time_differential(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                                const FieldAlongCurve& zeta, double tol = 1e-5);

// Second variation of the action -T^2/2 at a brachistochrone, by polarization of
// the closed-form quadratic form.
double hessian_F_eval(const SpacetimeModel& model, const BrachistochroneSolution& sol, const FieldAlongCurve& z1,
                      const FieldAlongCurve& z2);

// Index form and Hessian of the conformal energy along a conformal geodesic
// running from the observer line (t = 0) to the launch event (t = 1).
double index_form(const ConformalGeometry& cg, const Curve& w, const FieldAlongCurve& V1, const FieldAlongCurve& V2);
double hessian_E_eval(const ConformalGeometry& cg, const Curve& w, const FieldAlongCurve& V1,
                      const FieldAlongCurve& V2);
// Same Hessian written with Lorentzian data, for a horizontal geodesic running
// from the launch event (t = 0) to the observer line (t = 1).
double hessian_E_lorentzian(const SpacetimeModel& model, double k, const Curve& w, const FieldAlongCurve& V1,
                            const FieldAlongCurve& V2);

// nu1 nu2 <nabla_Y Y, n> for v_i = nu_i Y(q) and n orthogonal to Y(q).
double second_fundamental_form_gamma(const SpacetimeModel& model, const Event& q, const Tangent& n,
                                     const Tangent& v1, const Tangent& v2);

enum class BoundaryConditions { Full, Horizontal, Perpendicular };
std::string to_string(BoundaryConditions bc);

struct HessianMatrix {
  BoundaryConditions bc = BoundaryConditions::Full;
  int n_basis = 0;           // mesh elements
  std::string basis;         // human-readable description of the trial fields
  Eigen::MatrixXd entries;
  Eigen::VectorXd eigenvalues;
  int n_negative = 0;
  int n_zero = 0;
  double eps_eig = 0.0;
};

// Recounts eigenvalues with eps = rel * max |lambda|.
void classify_eigenvalues(HessianMatrix& H, double rel = 1e-6);

// Galerkin matrix of the conformal-energy Hessian on piecewise-linear fields.
// `w` runs from the observer line to the launch event.
HessianMatrix assemble_hessian(const ConformalGeometry& cg, const Curve& w, BoundaryConditions bc, int n_basis);

struct RestrictedIndices {
  int full = 0, horizontal = 0, perpendicular = 0;
  bool equal() const { return full == horizontal && horizontal == perpendicular; }
};
RestrictedIndices restricted_index_report(const ConformalGeometry& cg, const Curve& w, int n_basis);

// max g~-norm of the conformal acceleration of w
double conformal_geodesic_residual(const ConformalGeometry& cg, const Curve& w);

}  // namespace brachi
