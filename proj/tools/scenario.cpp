#include "scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace brachi::cli {

namespace fs = std::filesystem;

namespace {

// Reads keys of one JSON object and rejects anything left over.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const Json& at(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(std::string("missing \"") + key + "\"");
    return j_.at(key);
  }

  double number(const char* key) {
    const Json& v = at(key);
    if (!v.is_number()) fail(std::string("\"") + key + "\" must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(std::string("\"") + key + "\" must be finite");
    return x;
  }
  void number(const char* key, double& out) {
    if (has(key)) out = number(key);
  }
  void positive(const char* key, double& out) {
    if (!has(key)) return;
    out = number(key);
    if (!(out > 0)) fail(std::string("\"") + key + "\" must be positive");
  }

  long long integer(const char* key) {
    const Json& v = at(key);
    if (!v.is_number_integer()) fail(std::string("\"") + key + "\" must be an integer");
    return v.get<long long>();
  }
  void count(const char* key, int& out, int min) {
    if (!has(key)) return;
    const long long x = integer(key);
    if (x < min || x > 1'000'000'000) fail(std::string("\"") + key + "\" must be >= " + std::to_string(min));
    out = static_cast<int>(x);
  }

  std::string string(const char* key) {
    const Json& v = at(key);
    if (!v.is_string()) fail(std::string("\"") + key + "\" must be a string");
    return v.get<std::string>();
  }

  Vec vector(const char* key) {
    const Json& v = at(key);
    try {
      return vec_from_json(v);
    } catch (const Error& e) {
      fail(std::string("\"") + key + "\": " + e.what());
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) fail("unknown key \"" + key + "\"");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

ModelSpec parse_model(const Json& j) {
  Reader r(j, "model");
  ModelSpec spec;
  spec.name = r.string("name");
  if (r.has("params")) {
    const Json& params = r.at("params");
    if (!params.is_object()) r.fail("\"params\" must be an object");
    for (const auto& [k, v] : params.items()) {
      if (!v.is_number()) r.fail("parameter \"" + k + "\" must be a number");
      spec.params[k] = v.get<double>();
    }
  }
  r.finish();
  return spec;
}

LaunchBlock parse_launch(const Json& j, const std::string& where) {
  Reader r(j, where);
  LaunchBlock b{r.vector("direction"), r.number("T")};
  if (!(b.T > 0)) r.fail("\"T\" must be positive");
  r.finish();
  return b;
}

fs::path solution_path(Reader& r, const fs::path& base) {
  const fs::path p = r.string("solution");
  return p.is_absolute() ? p : base / p;
}

}  // namespace

Scenario parse_scenario(const Json& j, const fs::path& base_dir) {
  Reader r(j, "scenario");
  Scenario s;
  s.base_dir = base_dir;
  s.model = parse_model(r.at("model"));
  s.k = r.number("k");
  if (!(s.k > 1)) r.fail("\"k\" must exceed 1");
  if (r.has("p")) s.p = r.vector("p");
  if (r.has("gamma_anchor")) s.gamma_anchor = r.vector("gamma_anchor");
  if (r.has("output")) s.output = r.string("output");

  if (r.has("tolerances")) {
    Reader t(r.at("tolerances"), "tolerances");
    t.positive("rtol", s.integrator.tol.rtol);
    t.positive("atol", s.integrator.tol.atol);
    t.count("grid_N", s.integrator.grid_N, 4);
    t.positive("tol_cons", s.integrator.tol_cons);
    t.positive("tol_bvp", s.bvp.tol_bvp);
    t.count("max_iter", s.bvp.max_iter, 1);
    t.positive("fd_step", s.bvp.fd_step);
    t.finish();
  }
  s.bvp.integrator = s.integrator;

  if (r.has("solve")) s.solve = parse_launch(r.at("solve"), "solve");
  if (r.has("shoot")) s.shoot = parse_launch(r.at("shoot"), "shoot");
  if (r.has("survey")) {
    Reader b(r.at("survey"), "survey");
    SurveyConfig c;
    b.count("n_starts", c.n_starts, 1);
    if (b.has("seed")) {
      const long long seed = b.integer("seed");
      if (seed < 0) b.fail("\"seed\" must be non-negative");
      c.seed = static_cast<std::uint64_t>(seed);
    }
    if (b.has("T_bracket")) {
      const Vec br = b.vector("T_bracket");
      if (br.size() != 2 || !(br[0] > 0) || !(br[1] > br[0])) b.fail("\"T_bracket\" must be [T_min, T_max] with 0 < T_min < T_max");
      c.T_min = br[0];
      c.T_max = br[1];
    }
    b.count("threads", c.threads, 1);
    b.positive("dedup_threshold", c.dedup_threshold);
    b.count("dedup_grid", c.dedup_grid, 4);
    b.count("hessian_basis", c.hessian_basis, 4);
    b.count("probe_starts", c.probe_starts, 0);
    b.finish();
    s.survey = c;
  }
  if (r.has("jacobi")) {
    Reader b(r.at("jacobi"), "jacobi");
    JacobiBlock c;
    c.solution = solution_path(b, base_dir);
    b.positive("scan_step", c.cfg.scan_step);
    b.positive("rank_threshold", c.cfg.rank_threshold);
    b.finish();
    s.jacobi = c;
  }
  if (r.has("index")) {
    Reader b(r.at("index"), "index");
    IndexBlock c;
    c.solution = solution_path(b, base_dir);
    b.count("n_basis", c.n_basis, 4);
    b.finish();
    s.index = c;
  }
  if (r.has("verify")) {
    Reader b(r.at("verify"), "verify");
    s.verify = SolutionRef{solution_path(b, base_dir)};
    b.finish();
  }
  if (r.has("oracle")) {
    Reader b(r.at("oracle"), "oracle");
    OracleBlock c;
    b.count("N", c.minimize.N, 4);
    b.positive("epsilon", c.epsilon);
    if (c.epsilon > 1) b.fail("\"epsilon\" must lie in (0,1]");
    b.positive("grad_tol", c.minimize.grad_tol);
    b.count("max_iter", c.minimize.max_iter, 1);
    if (b.has("bump")) c.bump = b.vector("bump");
    b.finish();
    s.oracle = c;
  }
  r.finish();
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(j, path.parent_path());
}

}  // namespace brachi::cli
