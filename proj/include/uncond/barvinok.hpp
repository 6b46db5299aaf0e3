#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "uncond/multiindex.hpp"
#include "uncond/norms.hpp"
#include "uncond/parallel.hpp"

namespace uncond::bar {

// Unit directions with columns in antipodal pairs: col j + m/2 is the exact
// bitwise negation of col j. k = 2 ignores the seed and uses equispaced
// angles starting at 0 (m rounded up to a multiple of 4), mirrored so the
// set is closed under coordinate sign flips without roundoff. k >= 3 expands
// seeded low-discrepancy positive-orthant points to full sign orbits while
// 2^k fits m, for the same exact closure.
Eigen::MatrixXd sphere_directions(int k, int m, uint64_t seed);

// Default direction count for building A at degree d: 64 * |M_d|.
int default_directions(int k, int d);

// Boundary samples of the dual unit ball, x = u / |u|_*, antipodally paired
// like sphere_directions.
Eigen::MatrixXd dual_sphere_samples(const norms::Norm& norm_k, int m,
                                    uint64_t seed, int threads = 1);

struct LiftedCloud {
  mi::SetPtr set;
  Eigen::MatrixXd points;  // |M_d| x m, col j = raw monomial lift of sample j
};

// Lifts every sample column; d must be odd (odd lifts preserve antipodal
// pairing exactly), and |M_d| is capped at 200.
LiftedCloud lift_cloud(const Eigen::MatrixXd& samples, int d);

struct EllipsoidOptions {
  double tol = 1e-9;    // duality-gap stop for the design iteration
  int max_iters = 100000;
  bool polish = true;   // Newton refinement of the support weights
  int threads = 1;
};

struct CenteredEllipsoid {
  Eigen::MatrixXd shape;    // M, with E = {a : a^T M a <= 1}
  Eigen::VectorXd weights;  // optimal design weights on the folded cloud
  double gap;
  int iterations;
};

// Minimum-volume origin-centered ellipsoid containing the cloud. The input
// must use the paired layout above; the antipodal half is folded away before
// the D-optimal weight iteration.
CenteredEllipsoid lowner_ellipsoid(const Eigen::MatrixXd& paired_points,
                                   const EllipsoidOptions& opts,
                                   const Eigen::VectorXd* warm = nullptr);
CenteredEllipsoid lowner_ellipsoid(const Eigen::MatrixXd& paired_points,
                                   double tol);

struct QuadFormA {
  mi::SetPtr set;
  Eigen::MatrixXd entries;  // indexed by M_d x M_d
};

// A = W M^{-1} W with W = diag of multinomial weights, so that
// sup_{a^T M a <= 1} (a, b)^2 = b^T A b under the weighted pairing.
QuadFormA quadform_from_ellipsoid(const CenteredEllipsoid& ellipsoid,
                                  const mi::SetPtr& set);

// Full pass: dual samples -> lift -> ellipsoid -> A. Warm pointers carry
// design weights across calls with the same sample count.
QuadFormA quadform_of_samples(const Eigen::MatrixXd& samples, int d,
                              const EllipsoidOptions& opts,
                              const Eigen::VectorXd* warm_in = nullptr,
                              Eigen::VectorXd* warm_out = nullptr);

// Q(x) = sum A_{alpha,beta} x^{alpha+beta}, a 2d-homogeneous polynomial.
double poly_eval(const QuadFormA& a, const Eigen::Ref<const Eigen::VectorXd>& x);

// Empirical min/max of Q(x)/|x|^{2d} over a seeded sphere sample. With the
// circumscribed ellipsoid the certified band is [1, |M_d|] up to the
// discretization slack of the cloud.
par::MinMax sandwich_check(const QuadFormA& a, const norms::Norm& norm_k,
                           int samples, uint64_t seed = 0, int threads = 1);

// delta^alpha for every alpha in the set: the signs through which a
// coordinate sign flip acts on lifted coordinates.
Eigen::VectorXd character_signs(const mi::MultiIndexSet& set,
                                const Eigen::VectorXi& delta);

// Builds A twice: once from dual samples of the norm, once from their exact
// delta-image (the cloud of the flipped norm), and returns
// max |A_flip - D A D| / max |A|, D = diag(delta^alpha).
double equivariance_residual(const norms::Norm& norm_k,
                             const Eigen::VectorXi& delta, int d, int m,
                             uint64_t seed, const EllipsoidOptions& opts = {});

bool equivariance_check(const norms::Norm& norm_k, const Eigen::VectorXi& delta,
                        int d, double tol, int m = 0, uint64_t seed = 0,
                        const EllipsoidOptions& opts = {});

// The frame-search workhorse: fixed direction set, one A per visited frame,
// ellipsoid weights warm-started across evaluations.
class QuadFormPipeline {
 public:
  QuadFormPipeline(norms::NormPtr ambient, int k, int d, int m, uint64_t seed,
                   const EllipsoidOptions& opts);

  int k() const { return static_cast<int>(dirs_.rows()); }
  int d() const { return d_; }
  const mi::SetPtr& set() const { return set_; }
  const Eigen::MatrixXd& directions() const { return dirs_; }

  // A of the ambient norm restricted to frame; commits the warm weights.
  Eigen::MatrixXd quadform(const Eigen::MatrixXd& frame);
  // Stateless probe: reads warm_in (empty = cold), optionally reports out.
  Eigen::MatrixXd quadform(const Eigen::MatrixXd& frame,
                           const Eigen::VectorXd& warm_in,
                           Eigen::VectorXd* warm_out) const;
  // Same pass for an explicit norm on R^k instead of a restriction.
  Eigen::MatrixXd quadform_of(const norms::Norm& norm_k,
                              const Eigen::VectorXd& warm_in,
                              Eigen::VectorXd* warm_out) const;

  const Eigen::VectorXd& warm() const { return warm_; }
  void set_warm(const Eigen::VectorXd& w) { warm_ = w; }

 private:
  norms::NormPtr ambient_;
  int d_;
  mi::SetPtr set_;
  Eigen::MatrixXd dirs_;
  EllipsoidOptions opts_;
  Eigen::VectorXd warm_;
};

}  // namespace uncond::bar
