#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "uncond/norms.hpp"
#include "uncond/stiefel.hpp"

namespace uncond::run {

struct SamplingConfig {
  int dual_sphere = 0;     // directions for building A; 0 = 64 |M_d|
  int verify_sphere = 4096;  // samples for eps / sandwich verification
};

// One experiment: a norm on R^n, a target frame size k, and a lift degree
// (0 = pick the largest feasible odd degree). Serialization is canonical:
// sorted keys, so equal configs produce byte-equal files.
struct ExperimentConfig {
  norms::NormSpec norm;
  int n = 0;
  int k = 0;
  int d = 0;  // 0 = auto
  SamplingConfig sampling;
  st::SolverOptions solver;
  uint64_t seed = 0;
  std::string output_path = "report.json";
};

nlohmann::json norm_to_json(const norms::NormSpec& spec);
norms::NormSpec norm_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

}  // namespace uncond::run
