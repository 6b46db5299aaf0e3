#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "uncond/config.hpp"
#include "uncond/eqmap.hpp"

namespace uncond::run {

// Everything a finished search reports. wall_time_sec is the only field that
// is not a deterministic function of (config, seed).
struct RunReport {
  ExperimentConfig config;
  int d = 0;
  int set_size = 0;       // |M_d|
  int parity_count = 0;   // vanishing entries the degree demands
  double theory_eps = 0.0;
  double bound_eps_shape = 0.0;
  double achieved_eps = 0.0;
  double objective = 0.0;
  double sandwich_lo = 0.0;
  double sandwich_hi = 0.0;
  double equivariance_residual = 0.0;
  Eigen::MatrixXd frame;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  double wall_time_sec = 0.0;
};

nlohmann::json report_to_json(const RunReport& report);

std::string report_csv_header();
std::string report_csv_row(const RunReport& report);

RunReport run_find(const ExperimentConfig& cfg, int threads);

// Command fronts used by the CLI; each one catches the failures it documents
// and returns the process exit code: 0 done, 2 infeasible or bad config,
// 3 finished without converging, 4 numerical failure.
int cmd_find(const ExperimentConfig& cfg, int threads);
int cmd_sweep(const ExperimentConfig& base, const std::vector<int>& n_values,
              const std::vector<uint64_t>& seeds, const std::string& csv_path,
              int threads);
int cmd_verify_map(int n, int k, int d, uint64_t seed,
                   const std::string& out_path, int threads);
int cmd_approx(const ExperimentConfig& cfg, const std::string& out_path,
               const std::string& dump_a_path, const std::string& dump_m_path,
               int threads);

}  // namespace uncond::run
