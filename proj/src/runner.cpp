#include "uncond/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "uncond/barvinok.hpp"
#include "uncond/errors.hpp"
#include "uncond/rng.hpp"

namespace uncond::run {

using nlohmann::json;

namespace {

constexpr uint64_t kSandwichSamplesTag = 0x73616e64ull;
constexpr uint64_t kSandwichVerifyTag = 0x76657262ull;
constexpr uint64_t kEquivarianceTag = 0x65717569ull;

std::string fmt(double v, const char* format = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw InvalidParameterError("cannot write '" + path + "'");
  out << body;
}

std::string csv_sibling(const std::string& json_path) {
  std::filesystem::path p(json_path);
  p.replace_extension(".csv");
  if (p.string() == json_path) p += ".csv";
  return p.string();
}

norms::NormSpec with_dim(const norms::NormSpec& spec, int dim) {
  norms::NormSpec out = spec;
  out.dim = dim;
  if (spec.base) out.base = std::make_shared<norms::NormSpec>(with_dim(*spec.base, dim));
  return out;
}

std::string label_of(const mi::MultiIndex& alpha) {
  std::string s;
  for (int i = 0; i < alpha.size(); ++i) {
    if (i) s += '_';
    s += std::to_string(alpha[i]);
  }
  return s;
}

void dump_indexed_csv(const std::string& path, const mi::MultiIndexSet& set,
                      const Eigen::MatrixXd& mat) {
  std::string body = "alpha";
  for (int c = 0; c < set.size(); ++c) body += "," + label_of(set.member(c));
  body += "\n";
  for (int r = 0; r < set.size(); ++r) {
    body += label_of(set.member(r));
    for (int c = 0; c < set.size(); ++c) body += "," + fmt(mat(r, c), "%.17g");
    body += "\n";
  }
  write_text(path, body);
}

std::string error_row(int n, uint64_t seed, const std::string& status) {
  return std::to_string(n) + "," + std::to_string(seed) + ",,nan,nan,nan," +
         status + "\n";
}

}  // namespace

json report_to_json(const RunReport& report) {
  json j;
  j["config"] = config_to_json(report.config);
  j["d"] = report.d;
  j["set_size"] = report.set_size;
  j["parity_count"] = report.parity_count;
  j["theory_eps"] = report.theory_eps;
  j["bound_eps_shape"] = report.bound_eps_shape;
  j["achieved_eps"] = report.achieved_eps;
  j["objective"] = report.objective;
  j["sandwich_lo"] = report.sandwich_lo;
  j["sandwich_hi"] = report.sandwich_hi;
  j["equivariance_residual"] = report.equivariance_residual;
  json frame = json::array();
  for (int r = 0; r < report.frame.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < report.frame.cols(); ++c) row.push_back(report.frame(r, c));
    frame.push_back(row);
  }
  j["frame"] = frame;
  j["iterations"] = report.iterations;
  j["restarts_used"] = report.restarts_used;
  j["converged"] = report.converged;
  j["wall_time_sec"] = report.wall_time_sec;
  return j;
}

std::string report_csv_header() {
  return "n,seed,d,theory_eps,achieved_eps,bound_eps_shape,status\n";
}

std::string report_csv_row(const RunReport& report) {
  return std::to_string(report.config.n) + "," + std::to_string(report.config.seed) +
         "," + std::to_string(report.d) + "," + fmt(report.theory_eps) + "," +
         fmt(report.achieved_eps) + "," + fmt(report.bound_eps_shape) + "," +
         (report.converged ? "converged" : "not_converged") + "\n";
}

RunReport run_find(const ExperimentConfig& cfg, int threads) {
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentConfig run_cfg = cfg;
  if (run_cfg.norm.dim == 0) run_cfg.norm = with_dim(run_cfg.norm, run_cfg.n);
  if (run_cfg.k < 2 || run_cfg.k >= run_cfg.n)
    throw InvalidParameterError("find: need 2 <= k < n");
  if (run_cfg.norm.dim != run_cfg.n)
    throw InvalidParameterError("find: norm dimension " +
                                std::to_string(run_cfg.norm.dim) +
                                " does not match n = " + std::to_string(run_cfg.n));

  const int d = run_cfg.d == 0 ? st::choose_degree(run_cfg.n, run_cfg.k) : run_cfg.d;
  const auto ambient = norms::build_norm(run_cfg.norm);

  st::SolverOptions sopts = run_cfg.solver;
  sopts.directions = run_cfg.sampling.dual_sphere;
  sopts.verify_samples = run_cfg.sampling.verify_sphere;
  sopts.threads = threads;
  sopts.seed = run_cfg.seed;

  const st::SearchResult search = st::solve_frame(ambient, run_cfg.n, run_cfg.k, d, sopts);

  RunReport rep;
  rep.config = run_cfg;
  rep.d = d;
  const auto set = mi::enumerate_multiindices(run_cfg.k, d);
  rep.set_size = set->size();
  rep.parity_count = mi::odd_parity_pairs(set).size();
  rep.theory_eps = search.theory_eps;
  rep.bound_eps_shape = st::bound_eps_shape(run_cfg.n, run_cfg.k);
  rep.achieved_eps = search.achieved_eps;
  rep.objective = search.objective_value;
  rep.frame = search.frame;
  rep.iterations = search.iterations;
  rep.restarts_used = search.restarts_used;
  rep.converged = search.converged;

  const auto restricted = ambient->restricted(search.frame);
  bar::EllipsoidOptions eopts;
  eopts.threads = threads;
  const int m = sopts.directions > 0 ? sopts.directions
                                     : bar::default_directions(run_cfg.k, d);
  const auto samples = bar::dual_sphere_samples(
      *restricted, m, rng::child_seed(run_cfg.seed, kSandwichSamplesTag), threads);
  const auto a = bar::quadform_of_samples(samples, d, eopts);
  const auto band = bar::sandwich_check(
      a, *restricted, run_cfg.sampling.verify_sphere,
      rng::child_seed(run_cfg.seed, kSandwichVerifyTag), threads);
  rep.sandwich_lo = band.lo;
  rep.sandwich_hi = band.hi;

  const int m_eq = bar::default_directions(run_cfg.k, d);
  double worst = 0.0;
  Eigen::VectorXi delta(run_cfg.k);
  for (uint32_t bits = 1; bits < (1u << run_cfg.k); ++bits) {
    for (int r = 0; r < run_cfg.k; ++r)
      delta[r] = (bits >> r) & 1u ? -1 : 1;
    worst = std::max(worst, bar::equivariance_residual(
                                *restricted, delta, d, m_eq,
                                rng::child_seed(run_cfg.seed, kEquivarianceTag),
                                eopts));
  }
  rep.equivariance_residual = worst;

  rep.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

int cmd_find(const ExperimentConfig& cfg, int threads) {
  try {
    const RunReport rep = run_find(cfg, threads);
    write_text(cfg.output_path, report_to_json(rep).dump(2) + "\n");
    write_text(csv_sibling(cfg.output_path), report_csv_header() + report_csv_row(rep));
    std::cout << "find: " << (rep.converged ? "converged" : "NOT converged")
              << "  d=" << rep.d << "  objective=" << fmt(rep.objective, "%.3e")
              << "  achieved_eps=" << fmt(rep.achieved_eps, "%.4f")
              << "  theory_eps=" << fmt(rep.theory_eps, "%.4f") << "  -> "
              << cfg.output_path << "\n";
    return rep.converged ? 0 : 3;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const InvalidParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateCloudError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
}

int cmd_sweep(const ExperimentConfig& base, const std::vector<int>& n_values,
              const std::vector<uint64_t>& seeds, const std::string& csv_path,
              int threads) {
  if (n_values.empty() || seeds.empty()) {
    std::cerr << "config error: sweep needs at least one n and one seed\n";
    return 2;
  }
  std::string body = report_csv_header();
  for (const int n : n_values) {
    for (const uint64_t seed : seeds) {
      ExperimentConfig cfg = base;
      cfg.n = n;
      cfg.seed = seed;
      cfg.norm = with_dim(base.norm, n);
      try {
        const RunReport rep = run_find(cfg, threads);
        body += report_csv_row(rep);
        std::cout << "sweep: n=" << n << " seed=" << seed << " d=" << rep.d
                  << " achieved_eps=" << fmt(rep.achieved_eps, "%.4f")
                  << (rep.converged ? "" : " (not converged)") << "\n";
      } catch (const InfeasibleError&) {
        body += error_row(n, seed, "infeasible");
        std::cout << "sweep: n=" << n << " seed=" << seed << " infeasible\n";
      } catch (const std::runtime_error& e) {
        body += error_row(n, seed, "numerical_error");
        std::cout << "sweep: n=" << n << " seed=" << seed << " failed: " << e.what()
                  << "\n";
      }
    }
  }
  try {
    write_text(csv_path, body);
  } catch (const InvalidParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "sweep: wrote " << csv_path << "\n";
  return 0;
}

int cmd_verify_map(int n, int k, int d, uint64_t seed,
                   const std::string& out_path, int threads) {
  try {
    if (k < 1 || n <= k)
      throw InvalidParameterError("verify-map: need n > k >= 1");
    if (d < 1 || d % 2 == 0)
      throw InvalidParameterError("verify-map: d must be odd");
    const auto set = mi::enumerate_multiindices(k, d);
    const auto pairs = mi::odd_parity_pairs(set);
    const auto tau = eq::parity_representation(pairs);
    const auto split = eq::split_by_max(tau, n, k);
    const eq::EquivariantMap f = eq::build_f(n, k, split);
    const int dim_out = f.output_dim();

    const int restarts = 8 * (1 << k);
    const double tol = 1e-10;
    const auto zeros = eq::find_zeros(f, restarts, tol, seed, threads);

    const int expected = 1 << k;
    bool all_standard = true;
    std::set<std::vector<int>> patterns;
    std::vector<int> ranks;
    for (const auto& z : zeros) {
      if (eq::is_signed_standard(z, 1e-6)) {
        const Eigen::VectorXi s = eq::standard_signs(z, 1e-6);
        patterns.insert(std::vector<int>(s.data(), s.data() + s.size()));
      } else {
        all_standard = false;
      }
      ranks.push_back(eq::jacobian_rank_at(f, z));
    }
    const bool full_rank =
        std::all_of(ranks.begin(), ranks.end(),
                    [dim_out](int r) { return r == dim_out; });

    double equiv = 0.0;
    Eigen::VectorXi g(k);
    for (int probe = 0; probe < 3; ++probe) {
      const st::Frame u = st::random_frame(n, k, rng::child_seed(seed, 1000 + probe));
      const Eigen::VectorXd fu = f.eval(u);
      for (uint32_t bits = 0; bits < (1u << k); ++bits) {
        for (int r = 0; r < k; ++r) g[r] = (bits >> r) & 1u ? -1 : 1;
        const Eigen::VectorXd fgu = f.eval(st::group_action(g, u));
        for (int c = 0; c < dim_out; ++c)
          equiv = std::max(equiv, std::abs(fgu[c] - f.character_sign(c, g) * fu[c]));
      }
    }

    const bool pass = int(zeros.size()) == expected && all_standard &&
                      int(patterns.size()) == expected && full_rank &&
                      equiv <= 1e-12;

    json j;
    j["n"] = n;
    j["k"] = k;
    j["d"] = d;
    j["output_dim"] = dim_out;
    json sizes = json::array();
    for (const auto& part : split.parts) sizes.push_back(int(part.size()));
    j["split_sizes"] = sizes;
    j["zeros_found"] = int(zeros.size());
    j["zeros_expected"] = expected;
    j["all_standard_frames"] = all_standard;
    j["distinct_sign_patterns"] = int(patterns.size());
    j["jacobian_ranks"] = ranks;
    j["rank_expected"] = dim_out;
    j["equivariance_residual"] = equiv;
    j["pass"] = pass;
    write_text(out_path, j.dump(2) + "\n");

    std::cout << "verify-map: n=" << n << " k=" << k << " d=" << d << "  zeros="
              << zeros.size() << "/" << expected << "  ranks "
              << (full_rank ? "full" : "DEFICIENT") << " (" << dim_out << ")"
              << "  equivariance=" << fmt(equiv, "%.2e") << "  "
              << (pass ? "pass" : "FAIL") << "  -> " << out_path << "\n";
    return pass ? 0 : 3;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const InvalidParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
}

int cmd_approx(const ExperimentConfig& cfg, const std::string& out_path,
               const std::string& dump_a_path, const std::string& dump_m_path,
               int threads) {
  try {
    const int k = cfg.norm.dim;
    if (k < 1) throw InvalidParameterError("approx: norm needs a positive dim");
    if (cfg.d < 1 || cfg.d % 2 == 0)
      throw InvalidParameterError("approx: set an explicit odd d");
    const auto norm = norms::build_norm(cfg.norm);
    bar::EllipsoidOptions eopts;
    eopts.threads = threads;

    const auto build = [&](int count, bar::CenteredEllipsoid* ell_out) {
      const auto samples = bar::dual_sphere_samples(
          *norm, count, rng::child_seed(cfg.seed, uint64_t(count)), threads);
      const auto cloud = bar::lift_cloud(samples, cfg.d);
      bar::CenteredEllipsoid ell = bar::lowner_ellipsoid(cloud.points, eopts);
      bar::QuadFormA a = bar::quadform_from_ellipsoid(ell, cloud.set);
      if (ell_out) *ell_out = std::move(ell);
      return a;
    };

    int m = cfg.sampling.dual_sphere > 0 ? cfg.sampling.dual_sphere
                                         : bar::default_directions(k, cfg.d);
    bar::CenteredEllipsoid ell;
    bar::QuadFormA a = build(m, &ell);
    bool stabilized = false;
    double delta = std::numeric_limits<double>::infinity();
    int doublings = 0;
    for (; doublings < 10 && !stabilized; ++doublings) {
      bar::QuadFormA next = build(2 * m, &ell);
      delta = (next.entries - a.entries).cwiseAbs().maxCoeff() /
              next.entries.cwiseAbs().maxCoeff();
      a = std::move(next);
      m *= 2;
      stabilized = delta <= 0.005;
    }

    const auto band = bar::sandwich_check(
        a, *norm, cfg.sampling.verify_sphere,
        rng::child_seed(cfg.seed, kSandwichVerifyTag), threads);

    json j;
    j["k"] = k;
    j["d"] = cfg.d;
    j["set_size"] = a.set->size();
    j["directions"] = m;
    j["doublings"] = doublings;
    j["stabilized"] = stabilized;
    j["last_delta"] = delta;
    j["sandwich_lo"] = band.lo;
    j["sandwich_hi"] = band.hi;
    j["theory_eps"] = st::theory_epsilon(k, cfg.d);
    j["max_abs_entry"] = a.entries.cwiseAbs().maxCoeff();
    write_text(out_path, j.dump(2) + "\n");

    if (!dump_a_path.empty()) dump_indexed_csv(dump_a_path, *a.set, a.entries);
    if (!dump_m_path.empty()) dump_indexed_csv(dump_m_path, *a.set, ell.shape);

    std::cout << "approx: k=" << k << " d=" << cfg.d << "  directions=" << m
              << "  delta=" << fmt(delta, "%.2e")
              << (stabilized ? "" : " (NOT stabilized)") << "  sandwich=["
              << fmt(band.lo, "%.4f") << ", " << fmt(band.hi, "%.4f") << "]  -> "
              << out_path << "\n";
    return stabilized ? 0 : 3;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const InvalidParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateCloudError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace uncond::run
