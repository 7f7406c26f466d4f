#include "brachi/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace brachi {

namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void require_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& what) {
  for (const char* k : keys)
    if (!j.contains(k)) throw Error(ErrorKind::InvalidArgument, what + " lacks \"" + k + "\"");
}

Json array_of(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_curve_csv(const fs::path& path, const Curve& c) {
  const int m = c.dim();
  std::string s = "t";
  for (int a = 1; a <= m; ++a) s += ",q_" + std::to_string(a);
  for (int a = 1; a <= m; ++a) s += ",v_" + std::to_string(a);
  s += '\n';
  for (std::size_t i = 0; i < c.size(); ++i) {
    s += fmt(c.t[i]);
    for (int a = 0; a < m; ++a) s += ',' + fmt(c.q[i][a]);
    for (int a = 0; a < m; ++a) s += ',' + fmt(c.v[i][a]);
    s += '\n';
  }
  write_text(path, s);
}

Curve read_curve_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  if (columns < 3 || columns % 2 == 0) throw Error(ErrorKind::InvalidArgument, path.string() + ": bad curve header");
  const int m = static_cast<int>((columns - 1) / 2);
  Curve c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidArgument, path.string() + ": bad number \"" + cell + "\"");
      }
    }
    if (static_cast<long>(vals.size()) != columns)
      throw Error(ErrorKind::InvalidArgument, path.string() + ": ragged row");
    c.t.push_back(vals[0]);
    c.q.push_back(Eigen::Map<const Vec>(vals.data() + 1, m));
    c.v.push_back(Eigen::Map<const Vec>(vals.data() + 1 + m, m));
  }
  return c;
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim))
    throw Error(ErrorKind::InvalidArgument, "expected a coordinate array of length 1.." + std::to_string(kMaxDim));
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorKind::InvalidArgument, "coordinate entries must be numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

Json to_json(const ModelSpec& spec) {
  Json params = Json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  return Json{{"name", spec.name}, {"params", params}};
}

ModelSpec model_spec_from_json(const Json& j) {
  require_keys(j, {"name"}, "model");
  ModelSpec spec;
  spec.name = j.at("name").get<std::string>();
  if (j.contains("params"))
    for (const auto& [k, v] : j.at("params").items()) spec.params[k] = v.get<double>();
  return spec;
}

Json to_json(const ConservationReport& r) {
  return Json{{"max_Y", r.max_Y},         {"max_speed", r.max_speed},
              {"l2_Y", r.l2_Y},           {"l2_speed", r.l2_speed},
              {"refined_max_Y", r.refined_max_Y}, {"refined_max_speed", r.refined_max_speed},
              {"within_tolerance", r.within_tolerance}};
}

Json to_json(const CorrespondenceReport& r) {
  return Json{{"geodesic_residual", r.geodesic_residual}, {"energy_value", r.energy_value},
              {"energy_vs_halfT2", r.energy_vs_halfT2},   {"roundtrip_error", r.roundtrip_error},
              {"horizontality", r.horizontality}};
}

Json to_json(const FocalReport& r) {
  Json focal = Json::array();
  for (const FocalPoint& f : r.focal) {
    Json e{{"t", f.t}, {"multiplicity", f.multiplicity}, {"singular_ratio", f.singular_ratio}};
    if (f.endpoint_ratio) e["endpoint_ratio"] = *f.endpoint_ratio;
    focal.push_back(e);
  }
  return Json{{"geometric_index", r.geometric_index}, {"focal", focal}};
}

Json to_json(const RestrictedIndices& r) {
  return Json{{"full", r.full}, {"horizontal", r.horizontal}, {"perpendicular", r.perpendicular}, {"equal", r.equal()}};
}

Json hessian_header(const HessianMatrix& H) {
  return Json{{"boundary_conditions", to_string(H.bc)},
              {"n_basis", H.n_basis},
              {"basis", H.basis},
              {"dimension", H.entries.rows()},
              {"n_negative", H.n_negative},
              {"n_zero", H.n_zero},
              {"eps_eig", H.eps_eig},
              {"eigenvalues", array_of(H.eigenvalues)}};
}

Json candidate_header(const DiscreteCandidate& c) {
  return Json{{"T_estimate", c.T_estimate},   {"energy", c.energy},
              {"constraint_penalty", c.constraint_penalty}, {"gradient_norm", c.gradient_norm},
              {"horizontality", c.horizontality}, {"flow_parameter", c.flow_parameter},
              {"iterations", c.iterations},   {"segments", c.polyline.segments()}};
}

Json solution_header(const ModelSpec& spec, const BrachistochroneSolution& sol) {
  return Json{{"model", to_json(spec)},
              {"k", sol.k},
              {"T", sol.T},
              {"residuals",
               {{"conservation_Y", sol.residual_conservation_Y},
                {"conservation_speed", sol.residual_conservation_speed},
                {"ode", sol.residual_ode}}}};
}

void write_solution(const fs::path& dir, const std::string& stem, const ModelSpec& spec,
                    const BrachistochroneSolution& sol) {
  Json j = solution_header(spec, sol);
  j["curve"] = stem + ".csv";
  write_curve_csv(dir / (stem + ".csv"), sol.sigma);
  write_json(dir / (stem + ".json"), j);
}

StoredSolution read_solution(const fs::path& json_path) {
  const Json j = read_json(json_path);
  require_keys(j, {"model", "k", "T", "curve"}, json_path.string());
  StoredSolution s;
  s.spec = model_spec_from_json(j.at("model"));
  s.solution.k = j.at("k").get<double>();
  s.solution.T = j.at("T").get<double>();
  s.solution.sigma = read_curve_csv(json_path.parent_path() / j.at("curve").get<std::string>());
  const SpacetimeModel model = make_model(s.spec);
  check_curve(model, s.solution.sigma);
  refresh_residuals(model, s.solution);
  return s;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& M) {
  std::string s;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) s += (j ? "," : "") + fmt(M(i, j));
    s += '\n';
  }
  write_text(path, s);
}

}  // namespace brachi
