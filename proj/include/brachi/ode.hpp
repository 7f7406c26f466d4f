#pragma once

#include <functional>
#include <span>
#include <vector>

namespace brachi {

struct OdeTolerances {
  double rtol = 1e-10;
  double atol = 1e-10;
};

using OdeState = std::vector<double>;
using OdeSystem = std::function<void(const OdeState& y, OdeState& dydt, double t)>;

// Adaptive Dormand-Prince 5(4) with dense output. `times` must be strictly
// increasing and start at the initial time; the state is returned at each entry.
// Exceptions thrown by `f` propagate; step-control breakdown raises StepFailure.
std::vector<OdeState> integrate_at(const OdeSystem& f, const OdeState& y0,
                                   std::span<const double> times, const OdeTolerances& tol);

// Convenience: state at t1 only.
OdeState integrate_to(const OdeSystem& f, const OdeState& y0, double t0, double t1,
                      const OdeTolerances& tol);

}  // namespace brachi
