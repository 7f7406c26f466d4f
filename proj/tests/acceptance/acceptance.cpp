// Acceptance run: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "brachi/bvp.hpp"
#include "brachi/jacobi.hpp"
#include "brachi/oracle.hpp"
#include "brachi/transform.hpp"
#include "brachi/variation.hpp"
#include "unit/support.hpp"

namespace fs = std::filesystem;
using namespace brachi;
using testing_support::ConstrainedFamily;
using testing_support::model;
using testing_support::Sampler;
using testing_support::vec;

namespace {

const double kPi = std::numbers::pi;
const double kSqrt2 = std::numbers::sqrt2;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed check; the first few are kept in the detail line.
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || failures < 4) detail << " [failed: " << what << "]";
    pass = false;
    ++failures;
  }
  int failures = 0;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

double h1_norm2(const SpacetimeModel& mdl, const Curve& c, const FieldAlongCurve& z) {
  const FieldAlongCurve dz = covariant_derivative_along(mdl, c, z, DiffOrder::Fourth);
  std::vector<double> f(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Mat gR = mdl.riemannian_metric(c.q[i]);
    f[i] = z.values[i].dot(gR * z.values[i]) + dz.values[i].dot(gR * dz.values[i]);
  }
  return integrate(c.t, f);
}

// Brachistochrones used as critical points for the variation checks.
struct CriticalCase {
  std::string name;
  double k, T;
  Vec p, seed;
};

const std::vector<CriticalCase>& critical_cases() {
  static const std::vector<CriticalCase> cases = {
      {"minkowski3", 1.5, 0.8, vec({0.1, -0.2, 0.0}), vec({1, 0.3, 0})},
      {"static_well", 1.6, 0.8, vec({0.1, 0.1, 0.0}), vec({1, 0.4, 0})},
      {"rotating_frame", 1.5, 0.8, vec({0.2, -0.1, 0.0}), vec({0.3, 1, 0})},
      {"einstein_cylinder", 1.6, 0.9, vec({1.2, 0.4, 0.0}), vec({1, 0.5, 0})}};
  return cases;
}

BrachistochroneSolution critical_solution(const SpacetimeModel& mdl, const CriticalCase& c) {
  return integrate_brachistochrone(mdl, c.k, c.p, horizontal_unit(mdl, c.p, c.seed), c.T);
}

const std::vector<std::string> kModels = {"minkowski3", "minkowski4", "einstein_cylinder", "static_well",
                                          "rotating_frame"};

// Random launch that stays inside the chart; draws again on failure.
struct Launch {
  double k, T;
  Event p;
  Tangent u;
};

std::vector<Launch> random_launches(const SpacetimeModel& mdl, const std::string& name, int count, Sampler& s) {
  std::vector<Launch> out;
  for (int attempt = 0; static_cast<int>(out.size()) < count && attempt < 20 * count; ++attempt) {
    Launch l{s.uniform(1.6, 2.2), s.uniform(0.3, 1.0), testing_support::sample_point(name, s), {}};
    try {
      l.u = horizontal_unit(mdl, l.p, s.box(mdl.dim(), -1.0, 1.0));
      integrate_brachistochrone(mdl, l.k, l.p, l.u, l.T);
      out.push_back(l);
    } catch (const Error&) {
    }
  }
  return out;
}

std::map<std::string, std::vector<Launch>>& launch_table() {
  static std::map<std::string, std::vector<Launch>> table = [] {
    std::map<std::string, std::vector<Launch>> t;
    Sampler s(2024);
    for (const auto& name : kModels) t[name] = random_launches(model(name), name, 20, s);
    return t;
  }();
  return table;
}

// --- criteria ---------------------------------------------------------------

// Residuals below this are roundoff and cannot shrink with rtol.
double roundoff_floor(const Launch& l) {
  return 1e3 * std::numeric_limits<double>::epsilon() * (1.0 + l.k * l.T + l.T * l.T);
}

void conservation(Outcome& o) {
  double worst = 0.0, worst_shrink = 1e300;
  for (const auto& name : kModels) {
    const auto mdl = model(name);
    const auto& launches = launch_table()[name];
    o.require(launches.size() == 20, name + " launches");
    double coarse = 0.0, fine = 0.0, floor = 0.0;
    for (const Launch& l : launches) {
      IntegratorConfig base;
      base.tol = {1e-10, 1e-10};
      IntegratorConfig tight;
      tight.tol = {1e-11, 1e-11};
      const auto a = integrate_brachistochrone(mdl, l.k, l.p, l.u, l.T, base);
      const auto b = integrate_brachistochrone(mdl, l.k, l.p, l.u, l.T, tight);
      coarse = std::max({coarse, a.residual_conservation_Y, a.residual_conservation_speed});
      fine = std::max({fine, b.residual_conservation_Y, b.residual_conservation_speed});
      floor = std::max(floor, roundoff_floor(l));
    }
    o.require(coarse < 1e-8, name + " residual");
    worst = std::max(worst, coarse);
    if (coarse <= floor) {
      o.detail << " " << name << " " << sci(coarse) << " (roundoff, shrink n/a);";
      continue;
    }
    const double shrink = coarse / std::max(fine, 1e-300);
    o.detail << " " << name << " " << sci(coarse) << " shrink " << sci(shrink) << ";";
    o.require(shrink >= 5.0, name + " shrink");
    worst_shrink = std::min(worst_shrink, shrink);
  }
  o.detail << " max residual " << sci(worst) << ", min shrink " << sci(worst_shrink);
}

void first_variational(Outcome& o) {
  double geo = 0.0, energy = 0.0, round = 0.0;
  int n = 0;
  for (const auto& name : kModels) {
    const auto mdl = model(name);
    for (const Launch& l : launch_table()[name]) {
      const auto sol = integrate_brachistochrone(mdl, l.k, l.p, l.u, l.T);
      const auto rep = correspondence_report(mdl, sol);
      const double scale = 1.0 + sol.T * sol.T;
      geo = std::max(geo, rep.geodesic_residual);
      energy = std::max(energy, rep.energy_vs_halfT2 / scale);
      round = std::max(round, rep.roundtrip_error);
      ++n;
    }
  }
  o.require(geo < 1e-6, "geodesic residual");
  o.require(energy < 1e-8, "energy vs T^2/2");
  o.require(round < 1e-7, "round trip");
  o.detail << " " << n << " curves; geodesic " << sci(geo) << ", energy/(1+T^2) " << sci(energy) << ", round trip "
           << sci(round);
}

void flat_closed_form(Outcome& o) {
  const auto mk = model("minkowski3");
  for (double k : {kSqrt2, 2.0, 3.0}) {
    const auto r = shoot(ShootingProblem{mk, vec({0, 0, 0}), ObserverWorldline{vec({1, 0, 0})}, k, {}},
                         vec({1, 0.3, 0}), 0.6);
    const double err = std::abs(r.solution.T - 1.0 / std::sqrt(k * k - 1));
    o.require(err < 1e-8, "k=" + std::to_string(k));
    o.detail << " k=" << k << " err " << sci(err);
  }
}

void travel_time_identity(Outcome& o) {
  Sampler s(3);
  const CurveMap wiggly = [](double t) {
    return std::pair<Event, Tangent>{vec({0.1 + 0.5 * t, 0.2 * std::sin(3 * t), 0.05 * t}),
                                     vec({0.5, 0.6 * std::cos(3 * t), 0.05})};
  };
  double worst = 0.0;
  for (int n = 0; n < 10; ++n) {
    const auto& c = critical_cases()[n % 3];
    const auto mdl = model(c.name);
    ConstrainedFamily fam{&mdl, 1.6, wiggly, testing_support::random_bump(s, 3, 0.2)};
    const double h = 1e-4;
    const double fd = (fam.member(h).T - fam.member(-h).T) / (2 * h);
    const double dT = travel_time_differential(mdl, fam.member(0.0), fam.field());
    worst = std::max(worst, std::abs(fd - dT) / std::abs(fd));
  }
  o.require(worst < 1e-4, "relative error");
  double critical = 0.0;
  for (const auto& c : critical_cases()) {
    const auto mdl = model(c.name);
    const auto sol = critical_solution(mdl, c);
    for (int n = 0; n < 2; ++n) {
      ConstrainedFamily fam{&mdl, c.k, testing_support::interpolant(sol.sigma), testing_support::random_bump(s, 3, 0.2)};
      critical = std::max(critical, std::abs(travel_time_differential(mdl, fam.member(0.0), fam.field())));
    }
  }
  o.require(critical < 1e-7, "critical value");
  o.detail << " 10 variations, max rel err " << sci(worst) << "; at critical points max |dT| " << sci(critical);
}

void hessian_vs_fd(Outcome& o) {
  Sampler s(11);
  double worst = 0.0;
  for (int n = 0; n < 10; ++n) {
    const auto& c = critical_cases()[n % 3];
    const auto mdl = model(c.name);
    const auto sol0 = critical_solution(mdl, c);
    ConstrainedFamily fam{&mdl, c.k, testing_support::interpolant(sol0.sigma), testing_support::random_bump(s, 3, 0.3)};
    const auto sol = fam.member(0.0);
    const double h = 1e-3;
    auto F = [&](double x) {
      const double t = fam.member(x).T;
      return -0.5 * t * t;
    };
    const double fd2 = (F(h) - 2 * F(0.0) + F(-h)) / (h * h);
    const double HF = hessian_F_eval(mdl, sol, fam.field(), fam.field());
    worst = std::max(worst, std::abs(HF - fd2) / std::abs(fd2));
  }
  o.require(worst < 1e-3, "relative error");
  o.detail << " 10 fields, max rel err " << sci(worst);
}

void second_variational(Outcome& o) {
  Sampler s(17);
  for (const auto& c : critical_cases()) {
    const auto mdl = model(c.name);
    const auto sol0 = critical_solution(mdl, c);
    double worst = 0.0;
    for (int n = 0; n < 10; ++n) {
      ConstrainedFamily fam{&mdl, c.k, testing_support::interpolant(sol0.sigma), testing_support::random_bump(s, 3, 0.3)};
      const auto sol = fam.member(0.0);
      const FieldAlongCurve z = fam.field();
      const FieldAlongCurve v = dD_differential(mdl, sol, z);
      const double sum = hessian_F_eval(mdl, sol, z, z) + hessian_E_lorentzian(mdl, c.k, deform_D(mdl, sol), v, v);
      worst = std::max(worst, std::abs(sum) / (1.0 + h1_norm2(mdl, sol.sigma, z)));
    }
    o.require(worst < 1e-5, c.name);
    o.detail << " " << c.name << " " << sci(worst);
  }
}

// Cylinder brachistochrones with k = sqrt(2), where the deformed curve has arc length T.
struct IndexFixture {
  std::string label;
  std::string name;
  double k, T;
  Vec p, seed;
  int expected;  // floor(length / pi) for the cylinder, 0 when flat
};

const std::vector<IndexFixture>& index_fixtures() {
  static const std::vector<IndexFixture> f = {
      {"cylinder L=1.5pi", "einstein_cylinder", kSqrt2, 1.5 * kPi, vec({kPi / 2, 0, 0}), vec({0, 1, 0}), 1},
      {"cylinder L=2.5pi", "einstein_cylinder", kSqrt2, 2.5 * kPi, vec({kPi / 2, 0, 0}), vec({0, 1, 0}), 2},
      {"cylinder tilted L=1.3pi", "einstein_cylinder", kSqrt2, 1.3 * kPi, vec({1.2, 0.4, 0}), vec({0.6, 1, 0}), 1},
      {"cylinder tilted L=2.7pi", "einstein_cylinder", kSqrt2, 2.7 * kPi, vec({1.2, 0.4, 0}), vec({0.6, 1, 0}), 2},
      {"minkowski3", "minkowski3", kSqrt2, 1.0, vec({0, 0, 0}), vec({1, 0, 0}), 0},
      {"minkowski4", "minkowski4", 2.0, 1.5, vec({0, 0, 0, 0}), vec({1, 0.5, -0.2, 0}), 0}};
  return f;
}

void morse_index(Outcome& o) {
  for (const auto& f : index_fixtures()) {
    const auto mdl = model(f.name);
    const auto sol = integrate_brachistochrone(mdl, f.k, f.p, horizontal_unit(mdl, f.p, f.seed), f.T);
    const ConformalGeometry cg(mdl, f.k);
    const Curve back = reverse_curve(deform_D(mdl, sol));
    const int geometric = focal_points(cg, back).geometric_index;
    const int m50 = assemble_hessian(cg, back, BoundaryConditions::Full, 50).n_negative;
    const int m100 = assemble_hessian(cg, back, BoundaryConditions::Full, 100).n_negative;
    o.require(geometric == f.expected, f.label + " geometric");
    o.require(m50 == geometric && m100 == geometric, f.label + " morse");
    o.detail << " " << f.label << ": " << geometric << "/" << m50 << "/" << m100 << ";";
  }
}

void restricted_indices(Outcome& o) {
  for (const auto& f : index_fixtures()) {
    const auto mdl = model(f.name);
    const auto sol = integrate_brachistochrone(mdl, f.k, f.p, horizontal_unit(mdl, f.p, f.seed), f.T);
    const ConformalGeometry cg(mdl, f.k);
    const Curve back = reverse_curve(deform_D(mdl, sol));
    for (int nb : {50, 100}) {
      const auto r = restricted_index_report(cg, back, nb);
      o.require(r.equal() && r.full == f.expected, f.label + " n=" + std::to_string(nb));
      if (nb == 50) o.detail << " " << f.label << ": " << r.full << "," << r.horizontal << "," << r.perpendicular << ";";
    }
  }
}

void jacobi_correspondence(Outcome& o) {
  double worst = 0.0;
  for (const std::string name : {"static_well", "rotating_frame", "einstein_cylinder"}) {
    const auto mdl = model(name);
    const Event p = name == "einstein_cylinder" ? vec({1.2, 0.4, 0}) : vec({0.1, 0.1, 0});
    const double k = 1.6;
    const auto sol = integrate_brachistochrone(mdl, k, p, horizontal_unit(mdl, p, vec({1, 0.5, 0})), 0.9);
    const ConformalGeometry cg(mdl, k);
    const Curve w = deform_D(mdl, sol);
    const double ds = 1e-5;
    for (double dT : {0.0, 0.4}) {
      const auto fam = fd_variation_family(mdl, sol, LaunchPerturbation{vec({-0.4, 1, 0}), dT}, {-ds, ds});
      const FieldAlongCurve V = central_difference(mdl, fam[1], fam[0], ds);
      const double r = rjacobi_residual(cg, w, map_L(mdl, sol, 0.0, V));
      worst = std::max(worst, r);
    }
  }
  o.require(worst < 1e-3, "Jacobi residual");
  o.detail << " max residual of mapped fields " << sci(worst) << ";";

  double mismatch = 0.0;
  for (const auto& f : index_fixtures()) {
    const auto mdl = model(f.name);
    const auto sol = integrate_brachistochrone(mdl, f.k, f.p, horizontal_unit(mdl, f.p, f.seed), f.T);
    const ConformalGeometry cg(mdl, f.k);
    const auto riem = focal_points(cg, reverse_curve(deform_D(mdl, sol)));
    const auto bfoc = bfocal_points(mdl, sol);
    const std::size_t n = riem.focal.size();
    o.require(bfoc.focal.size() == n, f.label + " count");
    if (bfoc.focal.size() != n) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double tb = bfocal_refine(mdl, sol, bfoc.focal[i].t).t;
      mismatch = std::max(mismatch, std::abs(tb - (1.0 - riem.focal[n - 1 - i].t)));
    }
  }
  o.require(mismatch < 1e-4, "focal parameters");
  o.detail << " max focal parameter mismatch " << sci(mismatch);
}

void oracle_equivalence(Outcome& o) {
  struct Case {
    std::string label, name;
    double k;
    Event p, anchor;
    Vec bump, seed;
    double T_guess;
  };
  const std::vector<Case> cases = {
      {"minkowski3", "minkowski3", kSqrt2, vec({0, 0, 0}), vec({1, 0, 0}), vec({0.1, 0.2, 0.3}), vec({1, 0.2, 0}), 0.8},
      {"cylinder short arc", "einstein_cylinder", kSqrt2, vec({kPi / 2, 0, 0}), vec({kPi / 2, kPi / 2, 0}),
       vec({0.2, 0.1, 0.3}), vec({0, 1, 0}), 1.5}};
  for (const auto& c : cases) {
    const auto mdl = model(c.name);
    Curve init = straight_polyline(c.p, c.anchor, 200);
    for (std::size_t i = 0; i < init.size(); ++i) init.q[i] += std::sin(kPi * init.t[i]) * c.bump;
    const auto cand = discrete_minimize(mdl, c.p, ObserverWorldline{c.anchor}, c.k, init, PenaltyConfig{});
    const auto shot = shoot(ShootingProblem{mdl, c.p, ObserverWorldline{c.anchor}, c.k, {}}, c.seed, c.T_guess);
    const double dT = std::abs(cand.T_estimate - shot.solution.T);
    const double dist = node_distance(mdl, cand.polyline, resample_curve(deform_D(mdl, shot.solution), 200));
    o.require(dT < 1e-3, c.label + " T");
    o.require(dist < 1e-3, c.label + " distance");
    o.detail << " " << c.label << ": dT " << sci(dT) << ", distance " << sci(dist) << ";";
  }
}

void parity(Outcome& o) {
  SurveyConfig cfg;
  cfg.n_starts = 32;
  cfg.T_min = 0.1;
  cfg.T_max = 5.0;
  cfg.seed = 5;
  const auto mk = multistart_survey(ShootingProblem{model("minkowski3"), vec({0, 0, 0}), ObserverWorldline{vec({1, 0, 0})},
                                                    kSqrt2, {}},
                                    cfg);
  o.require(mk.solutions.size() == 1 && mk.parity == 1, "minkowski count");
  o.detail << " minkowski3: " << mk.solutions.size() << ";";

  // Arcs from p to the orbit a quarter turn away have lengths pi/2 + 2 pi n and
  // 3pi/2 + 2 pi n; j counts full wraps of the longest arc inside the bracket.
  const ShootingProblem cyl{model("einstein_cylinder"), vec({kPi / 2, 0, 0}), ObserverWorldline{vec({kPi / 2, kPi / 2, 0})},
                            kSqrt2, {}};
  for (double T_max : {3.0, 9.0, 12.0}) {
    cfg.n_starts = 48;
    cfg.T_max = T_max;
    const auto r = multistart_survey(cyl, cfg);
    const int j = static_cast<int>(std::floor((T_max - kPi / 2) / (2 * kPi)));
    const int count = static_cast<int>(r.solutions.size());
    const std::string tag = "T_max=" + std::to_string(T_max).substr(0, 4);
    o.require(count == 2 * j + 1 || count == 2 * j + 2, tag + " count");
    o.require(r.consistent_with_odd(), tag + " consistency flag");
    o.require(count % 2 == 1 || r.truncated(), tag + " truncation flag");
    o.detail << " cylinder " << tag << " j=" << j << ": " << count << (r.truncated() ? " truncated" : "")
             << (r.consistent_with_odd() ? " consistent;" : " inconsistent;");
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(Outcome& o) {
#ifdef BRACHI_CLI
  const fs::path work = BRACHI_ACCEPTANCE_WORKDIR;
  const fs::path scenario = fs::path(BRACHI_SCENARIO_DIR) / "cylinder_survey.json";
  fs::remove_all(work);
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string(BRACHI_CLI) + " survey --seed 7 --config " + scenario.string() + " --out-dir " +
                            (work / run).string() + " > " + (work / (std::string(run) + ".log")).string() + " 2>&1";
    fs::create_directories(work);
    const int raw = std::system(cmd.c_str());
    o.require(raw == 0, std::string("run ") + run + " exit status");
  }
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(work / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), work / "a");
    o.require(fs::exists(work / "b" / rel) && slurp(e.path()) == slurp(work / "b" / rel), rel.string());
    ++files;
  }
  for (const auto& e : fs::recursive_directory_iterator(work / "b"))
    if (e.is_regular_file()) o.require(fs::exists(work / "a" / fs::relative(e.path(), work / "b")), "extra file");
  o.require(files > 0, "no output");
  o.detail << " " << files << " output files compared";
#else
  o.require(false, "command line tool not built");
#endif
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"conservation", conservation},
      {"first variational principle", first_variational},
      {"flat closed form", flat_closed_form},
      {"travel time differential", travel_time_identity},
      {"action Hessian vs finite differences", hessian_vs_fd},
      {"second variational principle", second_variational},
      {"Morse index", morse_index},
      {"restricted indices", restricted_indices},
      {"Jacobi correspondence", jacobi_correspondence},
      {"oracle equivalence", oracle_equivalence},
      {"survey parity", parity},
      {"survey determinism", determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2zu %s (%.1fs):%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
