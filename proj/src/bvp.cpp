#include "brachi/bvp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "brachi/jacobi.hpp"
#include "brachi/transform.hpp"
#include "brachi/variation.hpp"

namespace brachi {

namespace {

double rnorm(const Mat& gR, const Vec& v) { return std::sqrt(std::max(v.dot(gR * v), 0.0)); }

std::string describe(const Vec& v) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (int i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

// endpoint of the brachistochrone launched with (u, T)
Event shot(const ShootingProblem& pb, const Tangent& u, double T) {
  const SpacetimeModel& model = pb.model;
  const int m = model.dim();
  const Tangent v0 = initial_velocity(model, pb.k, pb.p, u, T);
  OdeSystem f = [&](const OdeState& y, OdeState& dy, double) {
    const Event q = Eigen::Map<const Vec>(y.data(), m);
    if (!model.in_uk(q, pb.k)) throw Error(ErrorKind::OutsideUk, "shot left U_k at " + describe(q));
    auto [dq, dv] = brachistochrone_rhs(model, pb.k, T, q, Eigen::Map<const Vec>(y.data() + m, m));
    for (int i = 0; i < m; ++i) {
      dy[i] = dq[i];
      dy[m + i] = dv[i];
    }
  };
  OdeState y0(2 * m);
  for (int i = 0; i < m; ++i) {
    y0[i] = pb.p[i];
    y0[m + i] = v0[i];
  }
  const OdeState y = integrate_to(f, y0, 0.0, 1.0, pb.config.shot_tol);
  return Eigen::Map<const Vec>(y.data(), m);
}

}  // namespace

Tangent sample_initial_velocity(const SpacetimeModel& model, const Event& p, double k, double T, const Tangent& u_seed) {
  if (!model.in_uk(p, k)) throw Error(ErrorKind::OutsideUk, "launch event outside U_k");
  return initial_velocity(model, k, p, horizontal_unit(model, p, u_seed), T);
}

OrbitOffset orbit_offset(const SpacetimeModel& model, const ObserverWorldline& gamma, const Event& x,
                         double flow_guess) {
  // stationarity of the g_R distance in the flow time, by scalar Newton
  auto slope = [&](double s) {
    const Event c = model.flow(gamma.anchor, s, {1e-13, 1e-13});
    return model.chart_difference(x, c).dot(model.riemannian_metric(c) * model.killing(c));
  };
  double s = flow_guess;
  {
    const Mat gR = model.riemannian_metric(gamma.anchor);
    const Tangent Y = model.killing(gamma.anchor);
    if (flow_guess == 0.0) s = model.chart_difference(x, gamma.anchor).dot(gR * Y) / Y.dot(gR * Y);
  }
  for (int it = 0; it < 50; ++it) {
    const double h = 1e-6 * (1.0 + std::abs(s));
    const double f0 = slope(s);
    const double d = (slope(s + h) - slope(s - h)) / (2 * h);
    if (d == 0.0) break;
    const double step = f0 / d;
    s -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(s))) break;
  }
  const Event c = model.flow(gamma.anchor, s, {1e-13, 1e-13});
  const Mat gR = model.riemannian_metric(c);
  const Mat frame = orthonormal_complement(gR, model.killing(c));
  const Vec diff = model.chart_difference(x, c);
  OrbitOffset out;
  out.flow_time = s;
  out.displacement = frame.transpose() * gR * diff;
  return out;
}

ShootResult shoot(const ShootingProblem& pb, const Tangent& u_guess, double T_guess) {
  const SpacetimeModel& model = pb.model;
  const int m = model.dim();
  if (!model.in_uk(pb.p, pb.k)) throw Error(ErrorKind::OutsideUk, "launch event outside U_k");
  if (!(T_guess > 0.0)) throw Error(ErrorKind::InvalidArgument, "travel time guess must be positive");
  if (orbit_offset(model, pb.gamma, pb.p).displacement.norm() <= 1e-6)
    throw Error(ErrorKind::InvalidArgument, "launch event lies on the observer line");

  // fixed horizontal frame at p; u = frame * x with |x| = 1
  const Mat gR = model.riemannian_metric(pb.p);
  const Mat frame = orthonormal_complement(gR, model.killing(pb.p));
  Vec x = frame.transpose() * gR * horizontal_unit(model, pb.p, u_guess);
  x.normalize();
  double T = T_guess;
  double flow_guess = 0.0;

  auto residual = [&](const Vec& xs, double Ts) {
    const OrbitOffset off = orbit_offset(model, pb.gamma, shot(pb, frame * xs.normalized(), Ts), flow_guess);
    return off;
  };
  OrbitOffset cur;
  try {
    cur = residual(x, T);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " (launch u=" + describe(frame * x) + ", T=" + std::to_string(T) + ")");
  }
  flow_guess = cur.flow_time;
  int it = 0;
  for (; it < pb.config.max_iter && cur.displacement.norm() >= pb.config.tol_bvp; ++it) {
    // sphere chart centred at x
    Mat tangent(m - 1, m - 2);
    {
      Mat ex(m - 1, 1);
      ex.col(0) = x;
      tangent = orthonormal_complement(Mat::Identity(m - 1, m - 1), ex);
    }
    auto point = [&](const Vec& a) { return Vec((x + tangent * a).normalized()); };
    Mat J(m - 1, m - 1);
    const double h = pb.config.fd_step;
    for (int j = 0; j < m - 1; ++j) {
      Vec a = Vec::Zero(m - 2);
      double Tp = T, Tm = T;
      Vec ap = a, am = a;
      if (j < m - 2) {
        ap[j] += h;
        am[j] -= h;
      } else {
        Tp += h * std::max(1.0, T);
        Tm -= h * std::max(1.0, T);
      }
      const double width = j < m - 2 ? 2 * h : Tp - Tm;
      J.col(j) = (residual(point(ap), Tp).displacement - residual(point(am), Tm).displacement) / width;
    }
    const Vec step = J.fullPivLu().solve(-cur.displacement);
    // backtracking on |r|
    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt, lambda *= 0.5) {
      const Vec a = lambda * step.head(m - 2);
      const double Tn = T + lambda * step[m - 2];
      if (!(Tn > 0.0)) continue;
      try {
        const OrbitOffset trial = residual(point(a), Tn);
        if (trial.displacement.norm() < cur.displacement.norm()) {
          x = point(a);
          T = Tn;
          cur = trial;
          flow_guess = cur.flow_time;
          accepted = true;
          break;
        }
      } catch (const Error&) {
        // shot left the chart or U_k: shorten the step
      }
    }
    if (!accepted) break;
  }
  if (!(cur.displacement.norm() < pb.config.tol_bvp))
    throw Error(ErrorKind::NoConvergence, "shooting stalled at |r|=" + std::to_string(cur.displacement.norm()) +
                                              " after " + std::to_string(it) + " iterations");
  ShootResult out;
  out.direction = frame * x;
  out.solution = integrate_brachistochrone(model, pb.k, pb.p, out.direction, T, pb.config.integrator);
  out.conservation = conservation_report(model, out.solution, pb.config.integrator);
  out.residual = cur.displacement.norm();
  out.iterations = it;
  return out;
}

namespace {

double curve_distance(const SpacetimeModel& model, const Curve& a, const Curve& b, int N) {
  const Curve ra = resample_curve(a, N), rb = resample_curve(b, N);
  double worst = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i)
    worst = std::max(worst, rnorm(model.riemannian_metric(rb.q[i]), model.chart_difference(ra.q[i], rb.q[i])));
  return worst;
}

}  // namespace

SurveyResult multistart_survey(const ShootingProblem& pb, const SurveyConfig& cfg) {
  if (cfg.n_starts < 1) throw Error(ErrorKind::InvalidArgument, "n_starts must be at least 1");
  if (!(cfg.T_min > 0.0 && cfg.T_max > cfg.T_min)) throw Error(ErrorKind::InvalidArgument, "invalid T bracket");
  const SpacetimeModel& model = pb.model;
  const int m = model.dim();
  const Mat gR = model.riemannian_metric(pb.p);
  const Mat frame = orthonormal_complement(gR, model.killing(pb.p));

  const int total = cfg.n_starts + std::max(0, cfg.probe_starts);
  std::vector<std::optional<ShootResult>> results(total);
  std::vector<std::string> messages(total);
  std::vector<char> outside(total, 0);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < total; i = next++) {
      const bool probe = i >= cfg.n_starts;
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                        static_cast<std::uint32_t>(i)};
      std::mt19937_64 gen(seq);
      std::normal_distribution<double> normal;
      std::uniform_real_distribution<double> uniform(probe ? cfg.T_max : cfg.T_min, probe ? 2 * cfg.T_max : cfg.T_max);
      Vec x(m - 1);
      for (int j = 0; j < m - 1; ++j) x[j] = normal(gen);
      const double T = uniform(gen);
      const std::string tag = (probe ? "probe " : "start ") + std::to_string(i) + ": ";
      try {
        ShootResult r = shoot(pb, frame * x.normalized(), T);
        if (r.solution.T < cfg.T_min || r.solution.T > cfg.T_max) {
          outside[i] = 1;
          messages[i] = tag + "converged outside the T bracket (T=" + std::to_string(r.solution.T) + "), discarded";
        } else if (!probe) {
          results[i] = std::move(r);
        }
      } catch (const Error& e) {
        messages[i] = tag + e.what();
      }
    }
  };
  const int nt = std::max(1, cfg.threads);
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  SurveyResult out;
  out.dedup_threshold = cfg.dedup_threshold;
  for (int i = 0; i < total; ++i)
    if (!messages[i].empty()) {
      out.log.push_back(messages[i]);
      if (outside[i]) ++out.discarded_outside;
    }
  std::vector<ShootResult> found;
  for (auto& r : results)
    if (r) found.push_back(std::move(*r));
  std::stable_sort(found.begin(), found.end(),
                   [](const ShootResult& a, const ShootResult& b) { return a.solution.T < b.solution.T; });
  const ConformalGeometry cg(model, pb.k);
  for (ShootResult& r : found) {
    bool duplicate = false;
    for (const SurveyEntry& e : out.solutions)
      if (curve_distance(model, e.solution.sigma, r.solution.sigma, cfg.dedup_grid) < cfg.dedup_threshold) {
        duplicate = true;
        break;
      }
    if (duplicate) continue;
    SurveyEntry e;
    e.solution = std::move(r.solution);
    e.conservation = r.conservation;
    e.endpoint_residual = r.residual;
    const Curve w = reverse_curve(deform_D(model, e.solution));
    try {
      const HessianMatrix H = assemble_hessian(cg, w, BoundaryConditions::Full, cfg.hessian_basis);
      e.morse_index = H.n_negative;
      e.n_zero = H.n_zero;
      e.geometric_index = focal_points(cg, w).geometric_index;
    } catch (const Error& err) {
      out.log.push_back("index computation failed at T=" + std::to_string(e.solution.T) + ": " + err.what());
      e.morse_index = e.geometric_index = -1;
    }
    out.solutions.push_back(std::move(e));
  }
  out.parity = static_cast<int>(out.solutions.size() % 2);
  return out;
}

}  // namespace brachi
