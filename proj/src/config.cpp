#include "uncond/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <string>

#include "uncond/errors.hpp"

namespace uncond::run {

using nlohmann::json;

namespace {

void expect_keys(const json& j, const std::set<std::string>& allowed,
                 const std::string& where) {
  if (!j.is_object())
    throw InvalidParameterError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (allowed.find(key) == allowed.end())
      throw InvalidParameterError(where + ": unknown key '" + key + "'");
}

int get_int(const json& j, const std::string& key, int fallback,
            const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    throw InvalidParameterError(where + ": '" + key + "' must be an integer");
  return j.at(key).get<int>();
}

double get_double(const json& j, const std::string& key, double fallback,
                  const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw InvalidParameterError(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

json norm_to_json(const norms::NormSpec& spec) {
  json j;
  j["kind"] = spec.kind;
  j["dim"] = spec.dim;
  if (spec.kind == "lp" || spec.kind == "weighted_lp") {
    if (std::isinf(spec.p))
      j["p"] = "inf";
    else
      j["p"] = spec.p;
  }
  if (spec.kind == "weighted_lp") {
    json w = json::array();
    for (int i = 0; i < spec.weights.size(); ++i) w.push_back(spec.weights[i]);
    j["weights"] = w;
  }
  if (spec.kind == "polytope_gauge") {
    json gens = json::array();
    for (int c = 0; c < spec.generators.cols(); ++c) {
      json g = json::array();
      for (int r = 0; r < spec.generators.rows(); ++r)
        g.push_back(spec.generators(r, c));
      gens.push_back(g);
    }
    j["generators"] = gens;
  }
  if (spec.kind == "rotated") {
    j["seed"] = spec.seed;
    if (!spec.base) throw InvalidParameterError("norm_to_json: rotated without base");
    j["base"] = norm_to_json(*spec.base);
  }
  if (spec.kind == "smooth_random") {
    j["seed"] = spec.seed;
    j["power_q"] = spec.power_q;
    j["num_vectors"] = spec.num_vectors;
  }
  return j;
}

norms::NormSpec norm_from_json(const json& j) {
  expect_keys(j, {"kind", "dim", "p", "weights", "generators", "base", "seed",
                  "power_q", "num_vectors"},
              "norm");
  norms::NormSpec spec;
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw InvalidParameterError("norm: 'kind' must be a string");
  spec.kind = j.at("kind").get<std::string>();
  spec.dim = get_int(j, "dim", 0, "norm");

  if (j.contains("p")) {
    const json& p = j.at("p");
    if (p.is_string()) {
      if (p.get<std::string>() != "inf")
        throw InvalidParameterError("norm: 'p' must be a number or \"inf\"");
      spec.p = std::numeric_limits<double>::infinity();
    } else if (p.is_number()) {
      spec.p = p.get<double>();
    } else {
      throw InvalidParameterError("norm: 'p' must be a number or \"inf\"");
    }
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    if (!w.is_array()) throw InvalidParameterError("norm: 'weights' must be an array");
    spec.weights.resize(Eigen::Index(w.size()));
    for (size_t i = 0; i < w.size(); ++i) spec.weights[Eigen::Index(i)] = w[i].get<double>();
  }
  if (j.contains("generators")) {
    const json& gens = j.at("generators");
    if (!gens.is_array() || gens.empty())
      throw InvalidParameterError("norm: 'generators' must be a non-empty array");
    const size_t rows = gens[0].size();
    spec.generators.resize(Eigen::Index(rows), Eigen::Index(gens.size()));
    for (size_t c = 0; c < gens.size(); ++c) {
      if (!gens[c].is_array() || gens[c].size() != rows)
        throw InvalidParameterError("norm: ragged generator list");
      for (size_t r = 0; r < rows; ++r)
        spec.generators(Eigen::Index(r), Eigen::Index(c)) = gens[c][r].get<double>();
    }
  }
  if (j.contains("seed")) spec.seed = j.at("seed").get<uint64_t>();
  spec.power_q = get_int(j, "power_q", 2, "norm");
  spec.num_vectors = get_int(j, "num_vectors", 0, "norm");
  if (j.contains("base"))
    spec.base = std::make_shared<norms::NormSpec>(norm_from_json(j.at("base")));
  return spec;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["norm"] = norm_to_json(cfg.norm);
  j["n"] = cfg.n;
  j["k"] = cfg.k;
  if (cfg.d == 0)
    j["d"] = "auto";
  else
    j["d"] = cfg.d;
  j["sampling"] = {{"dual_sphere", cfg.sampling.dual_sphere},
                   {"verify_sphere", cfg.sampling.verify_sphere}};
  j["solver"] = {{"restarts", cfg.solver.restarts},
                 {"max_iters", cfg.solver.max_iters},
                 {"tol_g", cfg.solver.tol_g},
                 {"fd_step", cfg.solver.fd_step},
                 {"mode", cfg.solver.mode}};
  j["seed"] = cfg.seed;
  j["output_path"] = cfg.output_path;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  expect_keys(j, {"norm", "n", "k", "d", "sampling", "solver", "seed", "output_path"},
              "config");
  ExperimentConfig cfg;
  if (!j.contains("norm")) throw InvalidParameterError("config: missing 'norm'");
  cfg.norm = norm_from_json(j.at("norm"));
  cfg.n = get_int(j, "n", 0, "config");
  cfg.k = get_int(j, "k", 0, "config");

  if (j.contains("d")) {
    const json& d = j.at("d");
    if (d.is_string()) {
      if (d.get<std::string>() != "auto")
        throw InvalidParameterError("config: 'd' must be an odd integer or \"auto\"");
      cfg.d = 0;
    } else if (d.is_number_integer()) {
      cfg.d = d.get<int>();
      if (cfg.d < 1 || cfg.d % 2 == 0)
        throw InvalidParameterError("config: 'd' must be an odd integer or \"auto\"");
    } else {
      throw InvalidParameterError("config: 'd' must be an odd integer or \"auto\"");
    }
  }
  if (j.contains("sampling")) {
    const json& s = j.at("sampling");
    expect_keys(s, {"dual_sphere", "verify_sphere"}, "sampling");
    cfg.sampling.dual_sphere = get_int(s, "dual_sphere", 0, "sampling");
    cfg.sampling.verify_sphere = get_int(s, "verify_sphere", 4096, "sampling");
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    expect_keys(s, {"restarts", "max_iters", "tol_g", "fd_step", "mode"}, "solver");
    cfg.solver.restarts = get_int(s, "restarts", 16, "solver");
    cfg.solver.max_iters = get_int(s, "max_iters", 200, "solver");
    cfg.solver.tol_g = get_double(s, "tol_g", 1e-8, "solver");
    cfg.solver.fd_step = get_double(s, "fd_step", 1e-5, "solver");
    if (s.contains("mode")) cfg.solver.mode = s.at("mode").get<std::string>();
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  if (j.contains("output_path"))
    cfg.output_path = j.at("output_path").get<std::string>();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameterError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidParameterError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidParameterError("cannot write config file '" + path + "'");
  out << config_to_json(cfg).dump(2) << "\n";
}

}  // namespace uncond::run
