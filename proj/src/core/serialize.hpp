#pragma once

#include <string>

#include "core/baselines.hpp"
#include "core/trainer.hpp"
#include "json.hpp"

namespace cnhp {

/// Matrices serialize as {"rows", "cols", "data"} with row-major data; the
/// JSON layer stores doubles with shortest round-trip text, so persistence is
/// bit-exact.
nlohmann::json matrix_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json config_json(const FitConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
FitConfig config_from_json(const nlohmann::json& j);

nlohmann::json model_json(const CoupledModel& model);
CoupledModel model_from_json(const nlohmann::json& j);

nlohmann::json baseline_json(const BaselineModel& model);
BaselineModel baseline_from_json(const nlohmann::json& j);

void save_json(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json(const std::string& path);

/// FNV-1a 64 over the raw file bytes, as 16 lowercase hex digits.
std::string file_digest(const std::string& path);

std::string library_version();

}  // namespace cnhp
