#include "brachi/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "brachi/errors.hpp"

namespace brachi {

namespace odeint = boost::numeric::odeint;

std::vector<OdeState> integrate_at(const OdeSystem& f, const OdeState& y0,
                                   std::span<const double> times, const OdeTolerances& tol) {
  if (times.empty()) return {};
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw Error(ErrorKind::InvalidArgument, "output times must be strictly increasing");

  std::vector<OdeState> out;
  out.reserve(times.size());
  if (times.size() == 1) {
    out.push_back(y0);
    return out;
  }

  // A NaN state would be silently accepted by the step controller.
  auto guarded = [&f](const OdeState& y, OdeState& dydt, double t) {
    for (double v : y)
      if (!std::isfinite(v)) throw Error(ErrorKind::StepFailure, "non-finite state at t=" + std::to_string(t));
    f(y, dydt, t);
  };

  // odeint's dense output compares times with an absolute epsilon and reads
  // uninitialized state when outputs are closer than that; such spans get
  // single fixed RK4 steps instead.
  const double tiny = 1e-12 * std::max(1.0, std::abs(times.front()));
  if (times.back() - times.front() <= tiny) {
    OdeState y = y0;
    out.push_back(y);
    odeint::runge_kutta4<OdeState> rk4;
    for (std::size_t i = 1; i < times.size(); ++i) {
      rk4.do_step(guarded, y, times[i - 1], times[i] - times[i - 1]);
      out.push_back(y);
    }
    return out;
  }

  OdeState y = y0;
  const double span = times.back() - times.front();
  const double dt0 = std::min(1e-3 * span, times[1] - times[0]);
  auto stepper = odeint::make_dense_output(tol.atol, tol.rtol, odeint::runge_kutta_dopri5<OdeState>());
  try {
    odeint::integrate_times(stepper, guarded, y, times.begin(), times.end(), dt0,
                            [&out](const OdeState& s, double) { out.push_back(s); },
                            odeint::max_step_checker(200000));
  } catch (const odeint::odeint_error& e) {
    throw Error(ErrorKind::StepFailure, e.what());
  }
  if (out.size() != times.size())
    throw Error(ErrorKind::StepFailure, "integrator stopped before the final output time");
  return out;
}

OdeState integrate_to(const OdeSystem& f, const OdeState& y0, double t0, double t1,
                      const OdeTolerances& tol) {
  if (t1 == t0) return y0;
  const double ts[2] = {t0, t1};
  return integrate_at(f, y0, ts, tol).back();
}

}  // namespace brachi
