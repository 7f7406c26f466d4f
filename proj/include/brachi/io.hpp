#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "brachi/bvp.hpp"
#include "brachi/jacobi.hpp"
#include "brachi/models.hpp"
#include "brachi/oracle.hpp"
#include "brachi/variation.hpp"

namespace brachi {

using Json = nlohmann::ordered_json;

// CSV columns t, q_1..q_m, v_1..v_m, every value printed with %.17g.
void write_curve_csv(const std::filesystem::path& path, const Curve& c);
Curve read_curve_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

Json to_json(const Vec& v);
Vec vec_from_json(const Json& j);
Json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const Json& j);

Json to_json(const ConservationReport& r);
Json to_json(const CorrespondenceReport& r);
Json to_json(const FocalReport& r);
Json to_json(const RestrictedIndices& r);
Json hessian_header(const HessianMatrix& H);
Json candidate_header(const DiscreteCandidate& c);
Json solution_header(const ModelSpec& spec, const BrachistochroneSolution& sol);

// Writes <stem>.json (header, curve reference) and <stem>.csv next to it.
void write_solution(const std::filesystem::path& dir, const std::string& stem, const ModelSpec& spec,
                    const BrachistochroneSolution& sol);

struct StoredSolution {
  ModelSpec spec;
  BrachistochroneSolution solution;  // residual fields recomputed from the samples
};
StoredSolution read_solution(const std::filesystem::path& json_path);

// Dense matrix as CSV, %.17g.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& M);

}  // namespace brachi
