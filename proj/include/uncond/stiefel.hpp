#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uncond/barvinok.hpp"
#include "uncond/frames.hpp"
#include "uncond/multiindex.hpp"
#include "uncond/norms.hpp"

namespace uncond::st {

// (g_1 U_1, ..., g_k U_k) for g in {+-1}^k.
Frame group_action(const Eigen::VectorXi& g, const Frame& u);

// Both capacity conditions for degree d at (n, k): the binomial bound
// (1/2) C(d+k-1, k-1)^2 <= n-k and the parity-pair count |E_d| <= n-k.
bool feasibility(int n, int k, int d);

// Largest odd d accepted by feasibility; throws when none exists.
int choose_degree(int n, int k);

// |M_d|^{1/(2d)} - 1, the approximation quality of the degree-d lift.
double theory_epsilon(int k, int d);

// n^{-1/(3(k-1))}: the decay shape of the dimension-driven bound, without
// its unspecified constant.
double bound_eps_shape(int n, int k);

// sum over parity pairs of A^2, normalized by |A|_F^2.
double parity_objective(const Eigen::MatrixXd& a, const mi::ParityPairSet& pairs);

// ---- shared multistart least-squares machinery ------------------------------

struct LsqOptions {
  int max_iters = 200;
  double tol_f = 1e-8;      // stop when the sum of squared residuals dips below
  double fd_step = 1e-5;    // finite-difference step, scaled by |U|_F
  std::string mode = "lm";  // "lm" or "sd" (descent with backtracking)
};

// Residual evaluator; owns any state carried across evaluations (for example
// warm-started ellipsoid weights). `commit` marks evaluations at accepted
// iterates; probes during gradient or trial steps pass false so incumbent
// state stays untouched.
class ResidualFn {
 public:
  virtual ~ResidualFn() = default;
  virtual int residual_size() const = 0;
  virtual void residuals(const Frame& u, Eigen::VectorXd& r, bool commit) = 0;
};

struct LsqResult {
  Frame frame;
  double objective = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

LsqResult minimize_on_stiefel(ResidualFn& fn, const Frame& start,
                              const LsqOptions& opts);

// ---- frame search ------------------------------------------------------------

struct SolverOptions {
  int restarts = 16;
  int max_iters = 200;
  double tol_g = 1e-8;      // on the normalized parity objective
  double fd_step = 1e-5;
  std::string mode = "lm";
  int directions = 0;       // dual-sphere directions; 0 = 64 |M_d|
  int verify_samples = 4096;
  int threads = 1;
  uint64_t seed = 0;
  bar::EllipsoidOptions ellipsoid;
};

struct SearchResult {
  Frame frame;
  double objective_value = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  double achieved_eps = 0.0;
  double theory_eps = 0.0;
  bool converged = false;
};

// Normalized parity objective of the ambient norm restricted to u.
double objective(const norms::NormPtr& ambient, const Frame& u, int d,
                 const SolverOptions& opts = {});

// Multistart search for a frame with vanishing parity entries. Every restart
// runs; the winner is the converged restart with the smallest achieved eps,
// ties broken by lower objective, then lower restart index, so the result is
// independent of scheduling. Without any converged restart the lowest
// objective wins and the result is flagged unconverged.
SearchResult solve_frame(const norms::NormPtr& ambient, int n, int k, int d,
                         const SolverOptions& opts);

}  // namespace uncond::st
