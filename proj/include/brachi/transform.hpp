#pragma once

#include <functional>
#include <utility>

#include "brachi/dynamics.hpp"

namespace brachi {

struct CorrespondenceReport {
  double geodesic_residual = 0.0;
  double energy_value = 0.0;
  double energy_vs_halfT2 = 0.0;
  double roundtrip_error = 0.0;  // max node g_R distance between G(D(s)) and s
  double horizontality = 0.0;
};

// Horizontal curve together with the flow times used to reach it.
struct Deformation {
  Curve w;
  std::vector<double> tau;
};

// Slides every point of `sigma` along the Killing flow until the curve is
// orthogonal to Y. Requires both constraints (energy k, travel time T) to hold
// to relative tolerance `tol`.
Deformation deform(const SpacetimeModel& model, const Curve& sigma, double k, double T, double tol = 1e-6);
Curve deform_D(const SpacetimeModel& model, const BrachistochroneSolution& sol);

// Left inverse of deform on horizontal curves of constant conformal speed.
BrachistochroneSolution lift_G(const SpacetimeModel& model, double k, const Curve& w);

// Differential of deform at a constrained curve, along an admissible field.
FieldAlongCurve dD_differential(const SpacetimeModel& model, const BrachistochroneSolution& sol,
                                const FieldAlongCurve& zeta);

// 1/2 int phi_k g_R(w', w')
double conformal_energy(const SpacetimeModel& model, double k, const Curve& w);

CorrespondenceReport correspondence_report(const SpacetimeModel& model, const BrachistochroneSolution& sol);

// max g_R distance between matching nodes (periodic coordinates wrapped)
double node_distance(const SpacetimeModel& model, const Curve& a, const Curve& b);

// Residual of the condition that V along the horizontal geodesic w is
// perpendicular: <grad phi, V><w',w'> + 2 phi <nabla_w' V, w'>, max over nodes.
double perpendicularity_residual(const SpacetimeModel& model, double k, const Curve& w, const FieldAlongCurve& V);

// Curve given in closed form, with its velocity.
using CurveMap = std::function<std::pair<Event, Tangent>(double)>;

// The constrained curve whose horizontal trace is that of `c`: c is flowed to a
// horizontal curve, reparametrized to constant conformal speed and lifted.
// Sampled on a uniform grid of N segments; T is the conformal length. Fixed
// RK4 steps and Gauss panels, `substeps` per grid segment.
BrachistochroneSolution constrained_curve(const SpacetimeModel& model, double k, const CurveMap& c, int N,
                                          int substeps = 8);

}  // namespace brachi
