#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"

#include "brachi/transform.hpp"
#include "scenario.hpp"

namespace fs = std::filesystem;
using namespace brachi;
using brachi::cli::ConfigError;
using brachi::cli::Scenario;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Numerical failure carrying the names of the failed checks.
struct CheckFailure : std::runtime_error {
  std::vector<std::string> names;
  CheckFailure(const std::string& what, std::vector<std::string> n) : std::runtime_error(what), names(std::move(n)) {}
};

struct Context {
  Scenario sc;
  std::string command;
  fs::path out_dir;
  SpacetimeModel model;

  std::string stem() const { return sc.output.value_or(command); }
  fs::path out(const std::string& suffix) const { return out_dir / (stem() + suffix); }

  const Event& start() const {
    if (!sc.p) throw ConfigError(command + " needs \"p\"");
    return *sc.p;
  }
  ShootingProblem problem() const {
    if (!sc.gamma_anchor) throw ConfigError(command + " needs \"gamma_anchor\"");
    return ShootingProblem{model, start(), ObserverWorldline{*sc.gamma_anchor}, sc.k, sc.bvp};
  }
  void check_dim(const Vec& v, const char* what) const {
    if (v.size() != model.dim())
      throw ConfigError(std::string(what) + " has " + std::to_string(v.size()) + " entries, model dimension is " +
                        std::to_string(model.dim()));
  }
};

template <typename T>
const T& require(const std::optional<T>& block, const std::string& name) {
  if (!block) throw ConfigError("missing \"" + name + "\" block");
  return *block;
}

StoredSolution load_for(const Context& ctx, const fs::path& path) {
  StoredSolution s;
  try {
    s = read_solution(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (s.spec.name != ctx.sc.model.name || s.spec.params != ctx.sc.model.params)
    throw ConfigError("solution " + path.string() + " was computed on another model");
  if (s.solution.k != ctx.sc.k) throw ConfigError("solution " + path.string() + " has a different k");
  return s;
}

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json solution_extras(const Context& ctx, const BrachistochroneSolution& sol) {
  return Json{{"conservation", to_json(conservation_report(ctx.model, sol, ctx.sc.integrator))},
              {"correspondence", to_json(correspondence_report(ctx.model, sol))}};
}

void write_solution_with(const Context& ctx, const std::string& stem, const BrachistochroneSolution& sol,
                         const Json& extra) {
  write_solution(ctx.out_dir, stem, ctx.sc.model, sol);
  Json j = read_json(ctx.out_dir / (stem + ".json"));
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_json(ctx.out_dir / (stem + ".json"), j);
}

std::string run_solve(const Context& ctx) {
  const auto& b = require(ctx.sc.solve, "solve");
  ctx.check_dim(b.direction, "solve.direction");
  const Tangent u = horizontal_unit(ctx.model, ctx.start(), b.direction);
  const auto sol = integrate_brachistochrone(ctx.model, ctx.sc.k, ctx.start(), u, b.T, ctx.sc.integrator);
  write_solution_with(ctx, ctx.stem(), sol, solution_extras(ctx, sol));
  return "T=" + g17(sol.T) + " conservation_Y=" + g17(sol.residual_conservation_Y);
}

std::string run_shoot(const Context& ctx) {
  const auto& b = require(ctx.sc.shoot, "shoot");
  ctx.check_dim(b.direction, "shoot.direction");
  const ShootResult r = shoot(ctx.problem(), b.direction, b.T);
  Json extra = solution_extras(ctx, r.solution);
  extra["shoot"] = Json{{"direction", to_json(r.direction)}, {"endpoint_residual", r.residual},
                        {"iterations", r.iterations}};
  write_solution_with(ctx, ctx.stem(), r.solution, extra);
  return "T=" + g17(r.solution.T) + " iterations=" + std::to_string(r.iterations);
}

std::string run_survey(const Context& ctx) {
  const SurveyConfig cfg = require(ctx.sc.survey, "survey");
  const ShootingProblem pb = ctx.problem();
  const SurveyResult res = multistart_survey(pb, cfg);
  Json sols = Json::array();
  for (std::size_t i = 0; i < res.solutions.size(); ++i) {
    const SurveyEntry& e = res.solutions[i];
    char idx[16];
    std::snprintf(idx, sizeof idx, "_%03zu", i);
    const std::string ref = ctx.stem() + idx + ".csv";
    write_curve_csv(ctx.out_dir / ref, e.solution.sigma);
    sols.push_back(Json{{"T", e.solution.T},
                        {"index_morse", e.morse_index},
                        {"index_geometric", e.geometric_index},
                        {"n_zero", e.n_zero},
                        {"residuals",
                         {{"conservation_Y", e.solution.residual_conservation_Y},
                          {"conservation_speed", e.solution.residual_conservation_speed},
                          {"ode", e.solution.residual_ode},
                          {"endpoint", e.endpoint_residual}}},
                        {"curve_ref", ref}});
  }
  const Json j{{"model", to_json(ctx.sc.model)},
               {"k", ctx.sc.k},
               {"p", to_json(pb.p)},
               {"gamma_anchor", to_json(pb.gamma.anchor)},
               {"seed", cfg.seed},
               {"n_starts", cfg.n_starts},
               {"probe_starts", cfg.probe_starts},
               {"T_bracket", {cfg.T_min, cfg.T_max}},
               {"dedup_threshold", res.dedup_threshold},
               {"count", res.solutions.size()},
               {"parity", res.parity % 2 ? "odd" : "even"},
               {"truncated", res.truncated()},
               {"discarded_outside", res.discarded_outside},
               {"consistent_with_odd", res.consistent_with_odd()},
               {"solutions", sols},
               {"log", res.log}};
  write_json(ctx.out(".json"), j);
  return "solutions=" + std::to_string(res.solutions.size()) +
         " consistent_with_odd=" + (res.consistent_with_odd() ? "true" : "false");
}

std::string run_jacobi(const Context& ctx) {
  const auto& b = require(ctx.sc.jacobi, "jacobi");
  const StoredSolution s = load_for(ctx, b.solution);
  const ConformalGeometry cg(ctx.model, ctx.sc.k);
  const Curve w = reverse_curve(deform_D(ctx.model, s.solution));
  const FocalReport riem = focal_points(cg, w, b.cfg);
  const FocalReport bside = bfocal_points(ctx.model, s.solution, b.cfg);
  // b-side parameters located independently by minimizing the endpoint map
  Json refined = Json::array();
  double worst = 0.0;
  const bool matched = riem.focal.size() == bside.focal.size();
  for (std::size_t i = 0; i < bside.focal.size() && matched; ++i) {
    const FocalPoint f = bfocal_refine(ctx.model, s.solution, bside.focal[i].t, 0.02, b.cfg);
    worst = std::max(worst, std::abs(f.t - (1.0 - riem.focal[riem.focal.size() - 1 - i].t)));
    refined.push_back(Json{{"t", f.t}, {"endpoint_ratio", f.endpoint_ratio.value_or(NAN)}});
  }
  std::string trace = "t,det\n";
  for (std::size_t i = 0; i < riem.trace_t.size(); ++i) trace += g17(riem.trace_t[i]) + "," + g17(riem.trace_det[i]) + "\n";
  write_text(ctx.out("_trace.csv"), trace);
  write_json(ctx.out(".json"), Json{{"solution", b.solution.string()},
                                    {"T", s.solution.T},
                                    {"riemannian", to_json(riem)},
                                    {"b_focal", to_json(bside)},
                                    {"b_focal_refined", refined},
                                    {"same_count", matched},
                                    {"max_parameter_mismatch", worst},
                                    {"trace", ctx.stem() + "_trace.csv"}});
  return "geometric_index=" + std::to_string(riem.geometric_index) +
         " b_focal=" + std::to_string(bside.geometric_index);
}

std::string run_index(const Context& ctx) {
  const auto& b = require(ctx.sc.index, "index");
  const StoredSolution s = load_for(ctx, b.solution);
  const ConformalGeometry cg(ctx.model, ctx.sc.k);
  const Curve w = reverse_curve(deform_D(ctx.model, s.solution));
  const HessianMatrix H = assemble_hessian(cg, w, BoundaryConditions::Full, b.n_basis);
  const RestrictedIndices r = restricted_index_report(cg, w, b.n_basis);
  write_matrix_csv(ctx.out("_matrix.csv"), H.entries);
  write_json(ctx.out(".json"), Json{{"solution", b.solution.string()},
                                    {"T", s.solution.T},
                                    {"hessian", hessian_header(H)},
                                    {"matrix", ctx.stem() + "_matrix.csv"},
                                    {"restricted", to_json(r)}});
  return "morse_index=" + std::to_string(H.n_negative) + " restricted=" + std::to_string(r.full) + "," +
         std::to_string(r.horizontal) + "," + std::to_string(r.perpendicular);
}

std::string run_verify(const Context& ctx) {
  const auto& b = require(ctx.sc.verify, "verify");
  const StoredSolution s = load_for(ctx, b.solution);
  const BrachistochroneSolution& sol = s.solution;
  const double k = sol.k, T = sol.T, tol = ctx.sc.integrator.tol_cons;
  Json checks = Json::array();
  std::vector<std::string> failed;
  auto add = [&](const std::string& name, double value, double threshold) {
    const bool pass = std::isfinite(value) && value < threshold;
    checks.push_back(Json{{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}});
    if (!pass) failed.push_back(name);
  };
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      checks.push_back(Json{{"name", name}, {"error", e.what()}, {"pass", false}});
      failed.push_back(name);
    }
  };
  add("conservation_Y", sol.residual_conservation_Y, tol * (1 + k * T));
  add("conservation_speed", sol.residual_conservation_speed, tol * (1 + T * T));
  add("brachistochrone_equation", sol.residual_ode, 1e-6 * (1 + T * T));
  guarded("reintegration", [&] {
    const ConservationReport c = conservation_report(ctx.model, sol, ctx.sc.integrator);
    add("reintegrated_conservation_Y", c.refined_max_Y, tol * (1 + k * T));
    add("reintegrated_conservation_speed", c.refined_max_speed, tol * (1 + T * T));
  });
  guarded("samples", [&] {
    // positions and stored velocities must describe the same curve
    const auto dq = differentiate(sol.sigma.t, sol.sigma.q, DiffOrder::Fourth);
    double worst = 0.0;
    for (std::size_t i = 0; i < dq.size(); ++i) {
      const Vec d = dq[i] - sol.sigma.v[i];
      worst = std::max(worst, std::sqrt(d.dot(ctx.model.riemannian_metric(sol.sigma.q[i]) * d)));
    }
    add("position_velocity_consistency", worst, 1e-5 * (1 + T));
    IntegratorConfig cfg = ctx.sc.integrator;
    cfg.grid_N = sol.sigma.segments();
    const auto again = integrate_from_velocity(ctx.model, k, sol.sigma.q.front(), sol.sigma.v.front(), T, cfg);
    add("reintegration_distance", node_distance(ctx.model, again.sigma, sol.sigma), 1e-7 * (1 + T));
  });
  guarded("correspondence", [&] {
    const CorrespondenceReport c = correspondence_report(ctx.model, sol);
    add("geodesic_residual", c.geodesic_residual, 1e-6);
    add("energy_vs_halfT2", c.energy_vs_halfT2, 1e-8 * (1 + T * T));
    add("roundtrip_error", c.roundtrip_error, 1e-7);
  });
  const bool pass = failed.empty();
  write_json(ctx.out(".json"), Json{{"solution", b.solution.string()}, {"pass", pass}, {"checks", checks}});
  if (!pass) {
    std::string names;
    for (const auto& n : failed) names += (names.empty() ? "" : ",") + n;
    throw CheckFailure("verification failed: " + names, failed);
  }
  return "pass checks=" + std::to_string(checks.size());
}

std::string run_oracle(const Context& ctx) {
  const auto& b = require(ctx.sc.oracle, "oracle");
  const ShootingProblem pb = ctx.problem();
  Curve init = straight_polyline(pb.p, pb.gamma.anchor, b.minimize.N);
  if (b.bump) {
    ctx.check_dim(*b.bump, "oracle.bump");
    for (std::size_t i = 0; i < init.size(); ++i) init.q[i] += std::sin(std::numbers::pi * init.t[i]) * *b.bump;
  }
  const DiscreteCandidate cand =
      discrete_minimize(ctx.model, pb.p, pb.gamma, ctx.sc.k, init, PenaltyConfig{b.epsilon, ctx.sc.k}, b.minimize);
  write_curve_csv(ctx.out(".csv"), cand.polyline);
  Json j = candidate_header(cand);
  j["model"] = to_json(ctx.sc.model);
  j["k"] = ctx.sc.k;
  j["curve"] = ctx.stem() + ".csv";
  bool agree = true;
  if (ctx.sc.shoot) {
    ctx.check_dim(ctx.sc.shoot->direction, "shoot.direction");
    const ShootResult r = shoot(pb, ctx.sc.shoot->direction, ctx.sc.shoot->T);
    const double dT = std::abs(cand.T_estimate - r.solution.T);
    const double dist = node_distance(ctx.model, cand.polyline, resample_curve(deform_D(ctx.model, r.solution),
                                                                               cand.polyline.segments()));
    const double tolT = 1e-3 * (1 + r.solution.T);
    agree = dT < tolT && dist < 1e-3;
    j["cross_check"] = Json{{"T_shoot", r.solution.T}, {"T_difference", dT},   {"T_tolerance", tolT},
                            {"sup_distance", dist},    {"distance_tolerance", 1e-3}, {"agree", agree}};
  }
  write_json(ctx.out(".json"), j);
  if (!agree) throw CheckFailure("oracle and shooting disagree", {"T_difference", "sup_distance"});
  return "T=" + g17(cand.T_estimate) + " iterations=" + std::to_string(cand.iterations);
}

void write_error(const fs::path& out_dir, const std::string& command, const std::string& kind, const std::string& msg,
                 const std::vector<std::string>& names = {}) {
  Json j{{"command", command}, {"error_kind", kind}, {"message", msg}};
  if (!names.empty()) j["failed"] = names;
  try {
    fs::create_directories(out_dir);
    write_json(out_dir / "error.json", j);
  } catch (const std::exception& e) {
    std::cerr << "could not write error record: " << e.what() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::string (*)(const Context&)> commands = {
      {"solve", run_solve},   {"shoot", run_shoot},   {"survey", run_survey}, {"jacobi", run_jacobi},
      {"index", run_index},   {"verify", run_verify}, {"oracle", run_oracle}};

  CLI::App app{"Brachistochrones in stationary spacetimes"};
  std::string command, config;
  std::string out_dir = ".";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> names;
  for (const auto& [name, _] : commands) names.push_back(name);
  app.add_option("command", command, "solve | shoot | survey | jacobi | index | verify | oracle")
      ->required()
      ->check(CLI::IsMember(names));
  app.add_option("--config", config, "scenario JSON")->required();
  app.add_option("--out-dir", out_dir, "directory for result files");
  app.add_option("--threads", threads, "worker threads for survey")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "overrides the survey seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    Scenario sc = cli::load_scenario(config);
    if (sc.survey) {
      if (threads) sc.survey->threads = *threads;
      if (seed) sc.survey->seed = *seed;
    }
    SpacetimeModel model = [&] {
      try {
        return make_model(sc.model);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }();
    Context ctx{std::move(sc), command, out_dir, std::move(model)};
    if (ctx.sc.p) ctx.check_dim(*ctx.sc.p, "p");
    if (ctx.sc.gamma_anchor) ctx.check_dim(*ctx.sc.gamma_anchor, "gamma_anchor");
    fs::create_directories(ctx.out_dir);
    std::cerr << command << ": model " << ctx.sc.model.name << ", k=" << g17(ctx.sc.k) << "\n";
    const std::string summary = commands.at(command)(ctx);
    std::cout << command << " ok " << summary << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CheckFailure& e) {
    std::cerr << e.what() << "\n";
    write_error(out_dir, command, "CheckFailure", e.what(), e.names);
    std::cout << command << " failed\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    write_error(out_dir, command, to_string(e.kind()), e.what());
    std::cout << command << " failed\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}
