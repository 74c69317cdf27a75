#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "clfsynth/integrate.hpp"
#include "clfsynth/linear_core.hpp"
#include "clfsynth/sampling.hpp"

namespace clfsynth {

using Json = nlohmann::ordered_json;

/// {"rows": r, "cols": c, "data": [row-major entries]}.
Json MatrixToJson(const Eigen::MatrixXd& M);
/// Accepts the object form above (flat or nested "data"), a nested array of
/// rows, or a bare number (1 × 1). Throws ValidationError on bad shapes.
Eigen::MatrixXd MatrixFromJson(const Json& j);

Json VectorToJson(const Eigen::VectorXd& v);
/// A flat array, or a matrix object with one column or one row.
Eigen::VectorXd VectorFromJson(const Json& j);

/// {"half_width": w or [w...]} or {"lower": [...], "upper": [...]}.
Box BoxFromJson(const Json& j, int n);

/// Reads "care_tol", "max_newton_iter", "hurwitz_margin" when present.
LinearCoreConfig LinearCoreConfigFromJson(const Json& j);

/// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double value);

/// Comma-separated doubles, e.g. "0.1,0.05,-0.05".
Eigen::VectorXd ParseVectorList(const std::string& text);

/// Header t, x1..xn, u1..up (or the given names), then the annotation
/// columns in the order requested.
void WriteTrajectoryCsv(std::ostream& out, const Trajectory& traj,
                        const std::vector<std::string>& state_names,
                        const std::vector<std::string>& input_names,
                        const std::vector<std::string>& annotation_names);

/// 64-bit FNV-1a.
std::uint64_t Fnv1a64(const std::string& bytes);
std::string HexDigest(std::uint64_t hash);

Json ReadJsonFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& text);

}  // namespace clfsynth
