#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uncond/config.hpp"
#include "uncond/errors.hpp"
#include "uncond/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nearly unconditional frames via homogeneous polynomial lifts"};
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads, "worker threads (results are identical for any count)")
      ->capture_default_str();

  std::string config_path;
  std::string out_path;
  uint64_t seed = 0;

  auto* find = app.add_subcommand(
      "find", "search for a k-frame whose restricted norm is nearly unconditional");
  find->add_option("--config", config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* find_seed = find->add_option("--seed", seed, "override the config seed");
  auto* find_out = find->add_option("--out", out_path, "override the report path");

  std::vector<int> n_values;
  std::vector<uint64_t> sweep_seeds;
  auto* sweep = app.add_subcommand(
      "sweep", "run find over a grid of dimensions and seeds, one CSV row each");
  sweep->add_option("--config", config_path, "base config (JSON); n and seed are overridden")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--n", n_values, "dimensions, e.g. 10,18,34")
      ->required()
      ->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "seeds, e.g. 1,2,3")
      ->required()
      ->delimiter(',');
  auto* sweep_out = sweep->add_option("--out", out_path, "CSV path");

  int vm_n = 0, vm_k = 0, vm_d = 1;
  auto* verify = app.add_subcommand(
      "verify-map", "check the sign-equivariant map: zero set and Jacobian ranks");
  verify->add_option("--n", vm_n, "ambient dimension")->required();
  verify->add_option("--k", vm_k, "frame size")->required();
  verify->add_option("--d", vm_d, "odd degree whose parity pairs shape the map")
      ->capture_default_str();
  verify->add_option("--seed", seed, "restart seed");
  auto* verify_out = verify->add_option("--out", out_path, "report path");

  std::string dump_a_path, dump_m_path;
  auto* approx = app.add_subcommand(
      "approx", "build the polynomial approximation of a norm and check its band");
  approx->add_option("--config", config_path, "config (JSON); norm lives on R^k, d explicit")
      ->required()
      ->check(CLI::ExistingFile);
  auto* approx_seed = approx->add_option("--seed", seed, "override the config seed");
  auto* approx_out = approx->add_option("--out", out_path, "report path");
  approx->add_option("--dump-a", dump_a_path, "write the quadratic form to CSV");
  approx->add_option("--dump-m", dump_m_path, "write the ellipsoid shape matrix to CSV");

  CLI11_PARSE(app, argc, argv);
  if (threads < 1) {
    std::cerr << "config error: --threads must be positive\n";
    return 2;
  }

  try {
    if (find->parsed()) {
      uncond::run::ExperimentConfig cfg = uncond::run::load_config(config_path);
      if (find_seed->count() > 0) cfg.seed = seed;
      if (find_out->count() > 0) cfg.output_path = out_path;
      return uncond::run::cmd_find(cfg, threads);
    }
    if (sweep->parsed()) {
      const uncond::run::ExperimentConfig base = uncond::run::load_config(config_path);
      const std::string csv = sweep_out->count() > 0 ? out_path : "sweep.csv";
      return uncond::run::cmd_sweep(base, n_values, sweep_seeds, csv, threads);
    }
    if (verify->parsed()) {
      const std::string path = verify_out->count() > 0 ? out_path : "verify_map.json";
      return uncond::run::cmd_verify_map(vm_n, vm_k, vm_d, seed, path, threads);
    }
    if (approx->parsed()) {
      uncond::run::ExperimentConfig cfg = uncond::run::load_config(config_path);
      if (approx_seed->count() > 0) cfg.seed = seed;
      const std::string path = approx_out->count() > 0 ? out_path : "approx.json";
      return uncond::run::cmd_approx(cfg, path, dump_a_path, dump_m_path, threads);
    }
  } catch (const uncond::InvalidParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
