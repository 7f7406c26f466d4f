#pragma once

#include <vector>

#include "brachi/bvp.hpp"
#include "brachi/dynamics.hpp"

namespace brachi {

// Barrier keeping minimizers away from the boundary of U_k: chi(1/Psi^2 - 1/eps)
// with chi(s) = e^s - (1 + s + s^2/2) for s > 0 and Psi = <Y,Y> + k^2.
struct PenaltyConfig {
  double epsilon = 1e-2;
  double k = 0.0;

  double psi(const SpacetimeModel& model, const Event& q) const { return model.killing_norm(q) + k * k; }
  double chi(double s) const;        // shifted cutoff applied
  double chi_prime(double s) const;
};

struct MinimizeConfig {
  int N = 200;
  double grad_tol = 1e-7;
  int max_iter = 5000;
  double armijo = 1e-4;
};

struct DiscreteCandidate {
  Curve polyline;  // node velocities are averages of the adjacent segment slopes
  double T_estimate = 0.0;          // sqrt(2 E) of the raw energy
  double constraint_penalty = 0.0;  // barrier part of the final energy
  double energy = 0.0;
  double gradient_norm = 0.0;       // dual norm of the preconditioner
  double horizontality = 0.0;       // max |<w',Y>| / |w'|_R over segments
  double flow_parameter = 0.0;      // Killing flow time of the end node from the initial one
  int iterations = 0;
  std::vector<double> energy_history;
};

// Midpoint quadrature of 1/2 int phi_k g_R(w',w') plus the barrier, w read as a polyline.
double penalized_energy(const ConformalGeometry& cg, const Curve& w, const PenaltyConfig& pc);

// Straight coordinate polyline from p to the anchor of gamma.
Curve straight_polyline(const Event& p, const Event& q, int N);

DiscreteCandidate discrete_minimize(const SpacetimeModel& model, const Event& p, const ObserverWorldline& gamma,
                                    double k, const Curve& init, const PenaltyConfig& pc,
                                    const MinimizeConfig& cfg = {});

// Launch perturbation: u -> unit(u + s du), T -> T + s dT.
struct LaunchPerturbation {
  Tangent du;
  double dT = 0.0;
};

// Brachistochrones from the same start with perturbed launch data, one per s (|s| <= 1e-4).
// Members other than s = 0 are integrated at rtol = atol = 1e-12.
std::vector<BrachistochroneSolution> fd_variation_family(const SpacetimeModel& model,
                                                         const BrachistochroneSolution& sol,
                                                         const LaunchPerturbation& perturbation,
                                                         const std::vector<double>& s_values);

// (plus - minus) / (2 ds) node-wise, as a field along the middle member.
FieldAlongCurve central_difference(const SpacetimeModel& model, const BrachistochroneSolution& plus,
                                   const BrachistochroneSolution& minus, double ds);

}  // namespace brachi
