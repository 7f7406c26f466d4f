#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brachi/dynamics.hpp"

namespace brachi {

// Integral curve of Y through `anchor`.
struct ObserverWorldline {
  Event anchor;
};

struct BvpConfig {
  double tol_bvp = 1e-9;
  int max_iter = 40;
  double fd_step = 1e-6;
  OdeTolerances shot_tol{1e-12, 1e-12};
  IntegratorConfig integrator;  // for the returned solution
};

struct ShootingProblem {
  SpacetimeModel model;
  Event p;
  ObserverWorldline gamma;
  double k = 0.0;
  BvpConfig config;
};

struct ShootResult {
  BrachistochroneSolution solution;
  ConservationReport conservation;
  Tangent direction;  // launch direction u at p
  double residual = 0.0;
  int iterations = 0;
};

struct SurveyEntry {
  BrachistochroneSolution solution;
  int morse_index = 0;
  int geometric_index = 0;
  int n_zero = 0;
  double endpoint_residual = 0.0;
  ConservationReport conservation;
};

struct SurveyConfig {
  int n_starts = 64;
  double T_min = 0.1, T_max = 5.0;
  std::uint64_t seed = 0;
  int threads = 1;
  double dedup_threshold = 1e-4;
  int dedup_grid = 200;
  int hessian_basis = 60;
  int probe_starts = 8;  // extra starts seeded in [T_max, 2 T_max], only used to detect truncation
};

struct SurveyResult {
  std::vector<SurveyEntry> solutions;  // sorted by T
  double dedup_threshold = 1e-4;
  int parity = 0;                       // count mod 2
  int discarded_outside = 0;            // starts (probes included) that converged outside the T bracket
  std::vector<std::string> log;         // per-start failures and discards
  // Solutions beyond the bracket exist, so the count is only a lower bound.
  bool truncated() const { return discarded_outside > 0; }
  bool consistent_with_odd() const { return parity == 1 || truncated(); }
};

// v0 on the launch cone: <v0,Y>^2 + k^2 <v0,v0> = 0 with <v0,Y> < 0.
Tangent sample_initial_velocity(const SpacetimeModel& model, const Event& p, double k, double T, const Tangent& u_seed);

// g_R displacement of x from the orbit of the anchor, and the flow time of the closest point.
struct OrbitOffset {
  Vec displacement;  // components in a g_R-orthonormal frame of Y-perp at the closest point
  double flow_time = 0.0;
};
OrbitOffset orbit_offset(const SpacetimeModel& model, const ObserverWorldline& gamma, const Event& x,
                         double flow_guess = 0.0);

ShootResult shoot(const ShootingProblem& problem, const Tangent& u_guess, double T_guess);

SurveyResult multistart_survey(const ShootingProblem& problem, const SurveyConfig& cfg);

}  // namespace brachi
