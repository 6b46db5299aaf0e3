#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <string>

namespace uncond::norms {

class Norm;
using NormPtr = std::shared_ptr<const Norm>;

// Serializable description of a norm on R^dim.
//   lp             p in [1, inf]
//   weighted_lp    p in [1, inf], strictly positive weights
//   polytope_gauge unit ball = conv{+-v : v column of generators}
//   rotated        base spec composed with a seeded random rotation
//   smooth_random  (sum_j <v_j, x>^{2q})^{1/(2q)}, seeded vector family
struct NormSpec {
  std::string kind;
  int dim = 0;
  double p = 2.0;
  Eigen::VectorXd weights;
  Eigen::MatrixXd generators;
  std::shared_ptr<const NormSpec> base;
  uint64_t seed = 0;
  int power_q = 2;
  int num_vectors = 0;  // 0 = 2*dim
};

NormPtr build_norm(const NormSpec& spec);

// Fixed unseeded direction grid used by the dual-norm fallback: antipodally
// symmetric and, while 2^dim fits the budget, closed under all coordinate
// sign flips. Column i + count/2 is the exact negation of column i.
const Eigen::MatrixXd& fallback_grid(int dim);

// Seeded quasi-uniform sphere sample with the same antipodal column layout.
Eigen::MatrixXd sphere_samples(int dim, int count, uint64_t seed);

class Norm : public std::enable_shared_from_this<Norm> {
 public:
  explicit Norm(int dim);
  virtual ~Norm() = default;

  int dim() const { return dim_; }

  virtual double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;

  // sup <z,y>/|z|. Analytic where a closed form exists; otherwise a
  // certified-from-below supremum over fallback_grid plus 20 local ascent
  // steps from the best grid point.
  virtual double dual(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  virtual bool has_analytic_dual() const { return false; }

  // out[i] = dual(dirs.col(i)); the fallback path shares one grid-norm sweep.
  virtual void dual_many(const Eigen::MatrixXd& dirs, Eigen::VectorXd& out,
                         int threads) const;

  // The norm x -> |U x| on R^k. Kinds whose restriction keeps their shape
  // override this to avoid paying the ambient dimension per evaluation.
  virtual NormPtr restricted(const Eigen::MatrixXd& frame) const;

 protected:
  // |z| over fallback_grid(dim), computed once per instance.
  const Eigen::VectorXd& grid_norms() const;

  int dim_;

 private:
  mutable std::once_flag grid_flag_;
  mutable Eigen::VectorXd grid_norms_;
};

// --- concrete kinds ---------------------------------------------------------

class LpNorm final : public Norm {
 public:
  LpNorm(int dim, double p);
  double p() const { return p_; }
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  double dual(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_analytic_dual() const override { return true; }
  NormPtr restricted(const Eigen::MatrixXd& frame) const override;

 private:
  double p_;
};

class WeightedLpNorm final : public Norm {
 public:
  WeightedLpNorm(double p, const Eigen::VectorXd& weights);
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  double dual(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_analytic_dual() const override { return true; }

 private:
  double p_;
  Eigen::VectorXd w_;
};

class PolytopeGaugeNorm final : public Norm {
 public:
  explicit PolytopeGaugeNorm(const Eigen::MatrixXd& generators);
  // gauge of conv{+-v}: evaluated as the bidual, a grid supremum of
  // <z,x>/dual(z) with the analytic dual below.
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  // max_i |<v_i, y>|
  double dual(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_analytic_dual() const override { return true; }

 private:
  const Eigen::VectorXd& grid_duals() const;
  Eigen::MatrixXd v_;
  mutable std::once_flag gd_flag_;
  mutable Eigen::VectorXd grid_duals_;
};

class SmoothRandomNorm final : public Norm {
 public:
  SmoothRandomNorm(int dim, uint64_t seed, int power_q, int num_vectors);
  SmoothRandomNorm(const Eigen::MatrixXd& vectors, int power_q);
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  NormPtr restricted(const Eigen::MatrixXd& frame) const override;

 private:
  Eigen::MatrixXd v_;  // num_vectors x dim
  int q_;
};

// x -> inner(R x); composition of restrictions/rotations folds R products.
class LinearImageNorm final : public Norm {
 public:
  LinearImageNorm(NormPtr inner, const Eigen::MatrixXd& map, bool orthogonal);
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  double dual(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_analytic_dual() const override;
  NormPtr restricted(const Eigen::MatrixXd& frame) const override;

 private:
  NormPtr inner_;
  Eigen::MatrixXd r_;  // inner dim x this dim
  bool orthogonal_;
};

// 2^{-k} sum over all sign flips of the base norm.
class UnconditionalAverageNorm final : public Norm {
 public:
  explicit UnconditionalAverageNorm(NormPtr base);
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const override;

 private:
  NormPtr base_;
};

// x -> parent(x1, -x1, ..., xm, -xm) on R^{m}, parent dim = 2m.
class FoldedNorm final : public Norm {
 public:
  explicit FoldedNorm(NormPtr parent);
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const override;

 private:
  NormPtr parent_;
};

// --- operations --------------------------------------------------------------

// |x|_U = |sum_i x_i U_i|; validates frame orthonormality to 1e-10.
NormPtr restrict_norm(const NormPtr& parent, const Eigen::MatrixXd& frame);

NormPtr unconditionalize(const NormPtr& base);  // guard: dim <= 20
NormPtr fold_to_signed(const NormPtr& parent);  // guard: dim even

// max(rho_max - 1, 1 - rho_min) of rho = base/average over a seeded
// antipodal sphere sample of exactly `samples` points (rounded up to even).
double epsilon_of(const NormPtr& base, int samples, uint64_t seed, int threads = 1);

// epsilon_of with the sample count doubled until the estimate moves < 1%.
double epsilon_converged(const NormPtr& base, int initial_samples, uint64_t seed,
                         int threads = 1, int max_samples = 1 << 17);

constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace uncond::norms
