#include "uncond/norms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "uncond/errors.hpp"
#include "uncond/frames.hpp"
#include "uncond/parallel.hpp"
#include "uncond/rng.hpp"

namespace uncond::norms {

namespace {

constexpr int kGridBudget = 4096;
constexpr int kAscentSteps = 20;
constexpr double kPi = 3.14159265358979323846;

void check_dim(const Eigen::Ref<const Eigen::VectorXd>& x, int dim) {
  if (x.size() != dim) throw InvalidParameterError("norm: dimension mismatch");
}

// |v|_p for a finite p that is none of the special-cased exponents.
double pnorm(const Eigen::Ref<const Eigen::VectorXd>& v, double p) {
  const double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < v.size(); ++i) sum += std::pow(std::abs(v[i]) / m, p);
  return m * std::pow(sum, 1.0 / p);
}

// Orthonormal basis of the hyperplane orthogonal to a unit vector z, via the
// Householder reflector that sends e_1 to -sign(z_1) z.
Eigen::MatrixXd tangent_frame(const Eigen::VectorXd& z) {
  const int dim = static_cast<int>(z.size());
  Eigen::VectorXd v = z;
  v[0] += (z[0] >= 0.0 ? 1.0 : -1.0);
  const double vv = v.squaredNorm();
  Eigen::MatrixXd t(dim, dim - 1);
  for (int j = 1; j < dim; ++j) {
    t.col(j - 1) = -2.0 * (v[j] / vv) * v;
    t(j, j - 1) += 1.0;
  }
  return t;
}

// Compass search on the unit sphere maximizing phi, starting from the best
// grid direction. Moves keep the step; a failed poll halves it. Only ever
// raises the incoming value, so grid certificates stay certificates.
template <class Phi>
double sphere_ascent(Eigen::VectorXd z, double val, double step, Phi&& phi) {
  const int dim = static_cast<int>(z.size());
  if (dim < 2) return val;
  Eigen::MatrixXd t = tangent_frame(z);
  Eigen::VectorXd cand(dim), best_z(dim);
  for (int it = 0; it < kAscentSteps; ++it) {
    double best_v = val;
    bool moved = false;
    for (int j = 0; j < t.cols(); ++j) {
      for (double sgn : {1.0, -1.0}) {
        cand = (z + (sgn * step) * t.col(j)).normalized();
        const double v = phi(cand);
        if (v > best_v) {
          best_v = v;
          best_z = cand;
          moved = true;
        }
      }
    }
    if (moved) {
      z = best_z;
      val = best_v;
      t = tangent_frame(z);
    } else {
      step *= 0.5;
    }
  }
  return val;
}

// Grid resolution scale used as the initial ascent step.
double grid_step(int dim) { return dim == 2 ? 2e-3 : 0.2; }

Eigen::MatrixXd build_grid(int dim) {
  if (dim < 1) throw InvalidParameterError("fallback_grid: dim must be >= 1");
  if (dim == 1) {
    Eigen::MatrixXd g(1, 2);
    g(0, 0) = 1.0;
    g(0, 1) = -1.0;
    return g;
  }
  if (dim == 2) {
    const int half = kGridBudget / 2;
    Eigen::MatrixXd g(2, 2 * half);
    for (int j = 0; j < half; ++j) {
      const double t = kPi * j / half;
      g(0, j) = std::cos(t);
      g(1, j) = std::sin(t);
      g.col(j + half) = -g.col(j);
    }
    return g;
  }
  const int64_t orbit = int64_t{1} << dim;
  const int64_t base_count = kGridBudget / orbit;
  if (base_count >= 1) {
    // Positive-orthant base points expanded to full sign orbits, so the grid
    // is exactly closed under coordinate sign flips: sign-symmetric norms
    // then see a sign-symmetric direction cloud, bit for bit.
    const int64_t half_orbit = orbit / 2;
    const int64_t half = base_count * half_orbit;
    Eigen::MatrixXd g(dim, 2 * half);
    Eigen::VectorXd base(dim);
    for (int64_t t = 0; t < base_count; ++t) {
      const Eigen::VectorXd u = rng::halton_point(t, dim);
      for (int i = 0; i < dim; ++i) {
        const double p = std::min(std::max(u[i], 1e-12), 1.0 - 1e-12);
        base[i] = std::abs(rng::inverse_normal_cdf(p));
      }
      base.normalize();
      for (int64_t s = 0; s < half_orbit; ++s) {
        const int64_t col = t * half_orbit + s;
        g(0, col) = base[0];
        for (int i = 1; i < dim; ++i)
          g(i, col) = ((s >> (i - 1)) & 1) ? -base[i] : base[i];
        g.col(col + half) = -g.col(col);
      }
    }
    return g;
  }
  // Orbits no longer fit the budget; keep antipodal symmetry only.
  const int half = kGridBudget / 2;
  Eigen::MatrixXd g(dim, 2 * half);
  if (dim <= 16) {
    Eigen::VectorXd base(dim);
    for (int j = 0; j < half; ++j) {
      const Eigen::VectorXd u = rng::halton_point(j, dim);
      for (int i = 0; i < dim; ++i) {
        const double p = std::min(std::max(u[i], 1e-12), 1.0 - 1e-12);
        base[i] = rng::inverse_normal_cdf(p);
      }
      base.normalize();
      g.col(j) = base;
      g.col(j + half) = -base;
    }
  } else {
    rng::Stream stream(0x67726964ull);
    Eigen::VectorXd base(dim);
    for (int j = 0; j < half; ++j) {
      for (int i = 0; i < dim; ++i) base[i] = stream.next_gaussian();
      base.normalize();
      g.col(j) = base;
      g.col(j + half) = -base;
    }
  }
  return g;
}

}  // namespace

const Eigen::MatrixXd& fallback_grid(int dim) {
  static std::mutex mutex;
  static std::map<int, Eigen::MatrixXd> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(dim);
  if (it == cache.end()) it = cache.emplace(dim, build_grid(dim)).first;
  return it->second;
}

Eigen::MatrixXd sphere_samples(int dim, int count, uint64_t seed) {
  if (dim < 1) throw InvalidParameterError("sphere_samples: dim must be >= 1");
  if (count < 2) throw InvalidParameterError("sphere_samples: count must be >= 2");
  const int half = (count + 1) / 2;
  Eigen::MatrixXd s(dim, 2 * half);
  rng::Stream stream(seed);
  if (dim == 1) {
    for (int j = 0; j < half; ++j) {
      s(0, j) = 1.0;
      s(0, j + half) = -1.0;
    }
    return s;
  }
  if (dim == 2) {
    const double offset = kPi * stream.next_uniform();
    for (int j = 0; j < half; ++j) {
      const double t = offset + kPi * j / half;
      s(0, j) = std::cos(t);
      s(1, j) = std::sin(t);
      s.col(j + half) = -s.col(j);
    }
    return s;
  }
  Eigen::VectorXd base(dim);
  if (dim <= 16) {
    // Halton points under a seeded Cranley-Patterson shift.
    Eigen::VectorXd shift(dim);
    for (int i = 0; i < dim; ++i) shift[i] = stream.next_uniform();
    for (int j = 0; j < half; ++j) {
      const Eigen::VectorXd u = rng::halton_point(j, dim);
      for (int i = 0; i < dim; ++i) {
        double p = u[i] + shift[i];
        if (p >= 1.0) p -= 1.0;
        p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
        base[i] = rng::inverse_normal_cdf(p);
      }
      base.normalize();
      s.col(j) = base;
      s.col(j + half) = -base;
    }
  } else {
    for (int j = 0; j < half; ++j) {
      for (int i = 0; i < dim; ++i) base[i] = stream.next_gaussian();
      base.normalize();
      s.col(j) = base;
      s.col(j + half) = -base;
    }
  }
  return s;
}

Norm::Norm(int dim) : dim_(dim) {
  if (dim < 1) throw InvalidParameterError("norm: dim must be >= 1");
}

const Eigen::VectorXd& Norm::grid_norms() const {
  std::call_once(grid_flag_, [this] {
    const Eigen::MatrixXd& g = fallback_grid(dim_);
    const int half = static_cast<int>(g.cols()) / 2;
    grid_norms_.resize(half);
    for (int j = 0; j < half; ++j) grid_norms_[j] = eval(g.col(j));
  });
  return grid_norms_;
}

double Norm::dual(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  check_dim(y, dim_);
  const Eigen::MatrixXd& g = fallback_grid(dim_);
  const Eigen::VectorXd& gn = grid_norms();
  const int half = static_cast<int>(gn.size());
  int best = 0;
  double best_val = -1.0;
  for (int j = 0; j < half; ++j) {
    const double v = std::abs(g.col(j).dot(y)) / gn[j];
    if (v > best_val) {
      best_val = v;
      best = j;
    }
  }
  return sphere_ascent(g.col(best), best_val, grid_step(dim_),
                       [&](const Eigen::VectorXd& z) {
                         const double n = eval(z);
                         return n > 0.0 ? std::abs(z.dot(y)) / n : kInfinity;
                       });
}

void Norm::dual_many(const Eigen::MatrixXd& dirs, Eigen::VectorXd& out,
                     int threads) const {
  if (dirs.rows() != dim_) throw InvalidParameterError("dual_many: dimension mismatch");
  out.resize(dirs.cols());
  if (!has_analytic_dual()) grid_norms();
  par::map_indexed(dirs.cols(), threads,
                   [&](int64_t i) { out[i] = dual(dirs.col(i)); });
}

NormPtr Norm::restricted(const Eigen::MatrixXd& frame) const {
  return std::make_shared<LinearImageNorm>(shared_from_this(), frame, true);
}

LpNorm::LpNorm(int dim, double p) : Norm(dim), p_(p) {
  if (!(p >= 1.0)) throw InvalidParameterError("lp: p must be >= 1");
}

double LpNorm::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x, dim_);
  if (p_ == 2.0) return x.norm();
  if (p_ == 1.0) return x.lpNorm<1>();
  if (std::isinf(p_)) return x.lpNorm<Eigen::Infinity>();
  return pnorm(x, p_);
}

double LpNorm::dual(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  check_dim(y, dim_);
  if (p_ == 2.0) return y.norm();
  if (p_ == 1.0) return y.lpNorm<Eigen::Infinity>();
  if (std::isinf(p_)) return y.lpNorm<1>();
  return pnorm(y, p_ / (p_ - 1.0));
}

NormPtr LpNorm::restricted(const Eigen::MatrixXd& frame) const {
  if (p_ == 2.0 && frame.rows() == dim_)
    return std::make_shared<LpNorm>(static_cast<int>(frame.cols()), 2.0);
  return Norm::restricted(frame);
}

WeightedLpNorm::WeightedLpNorm(double p, const Eigen::VectorXd& weights)
    : Norm(static_cast<int>(weights.size())), p_(p), w_(weights) {
  if (!(p >= 1.0)) throw InvalidParameterError("weighted_lp: p must be >= 1");
  if (w_.size() == 0 || (w_.array() <= 0.0).any())
    throw InvalidParameterError("weighted_lp: weights must be positive");
}

double WeightedLpNorm::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x, dim_);
  if (std::isinf(p_)) return (w_.array() * x.array().abs()).maxCoeff();
  if (p_ == 1.0) return w_.dot(x.cwiseAbs());
  return pnorm(w_.array().pow(1.0 / p_).matrix().asDiagonal() * x, p_);
}

double WeightedLpNorm::dual(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  check_dim(y, dim_);
  if (std::isinf(p_)) return (y.array().abs() / w_.array()).sum();
  if (p_ == 1.0) return (y.array().abs() / w_.array()).maxCoeff();
  const double q = p_ / (p_ - 1.0);
  return pnorm(w_.array().pow(-1.0 / p_).matrix().asDiagonal() * y, q);
}

PolytopeGaugeNorm::PolytopeGaugeNorm(const Eigen::MatrixXd& generators)
    : Norm(static_cast<int>(generators.rows())), v_(generators) {
  if (v_.cols() < 1)
    throw InvalidParameterError("polytope_gauge: needs at least one generator");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v_);
  if (qr.rank() < dim_)
    throw InvalidParameterError("polytope_gauge: generators do not span");
}

const Eigen::VectorXd& PolytopeGaugeNorm::grid_duals() const {
  std::call_once(gd_flag_, [this] {
    const Eigen::MatrixXd& g = fallback_grid(dim_);
    const int half = static_cast<int>(g.cols()) / 2;
    grid_duals_.resize(half);
    for (int j = 0; j < half; ++j) grid_duals_[j] = dual(g.col(j));
  });
  return grid_duals_;
}

double PolytopeGaugeNorm::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x, dim_);
  // gauge of K = support of the polar: sup_z <z,x>/h_K(z), h_K = dual here.
  const Eigen::MatrixXd& g = fallback_grid(dim_);
  const Eigen::VectorXd& gd = grid_duals();
  const int half = static_cast<int>(gd.size());
  int best = 0;
  double best_val = -1.0;
  for (int j = 0; j < half; ++j) {
    const double v = std::abs(g.col(j).dot(x)) / gd[j];
    if (v > best_val) {
      best_val = v;
      best = j;
    }
  }
  return sphere_ascent(g.col(best), best_val, grid_step(dim_),
                       [&](const Eigen::VectorXd& z) {
                         return std::abs(z.dot(x)) / dual(z);
                       });
}

double PolytopeGaugeNorm::dual(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  check_dim(y, dim_);
  return (v_.transpose() * y).cwiseAbs().maxCoeff();
}

SmoothRandomNorm::SmoothRandomNorm(int dim, uint64_t seed, int power_q,
                                   int num_vectors)
    : SmoothRandomNorm(
          rng::gaussian_matrix(num_vectors > 0 ? num_vectors : 2 * dim, dim, seed),
          power_q) {}

SmoothRandomNorm::SmoothRandomNorm(const Eigen::MatrixXd& vectors, int power_q)
    : Norm(static_cast<int>(vectors.cols())), v_(vectors), q_(power_q) {
  if (q_ < 1) throw InvalidParameterError("smooth_random: power q must be >= 1");
  if (v_.rows() < v_.cols())
    throw InvalidParameterError("smooth_random: needs at least dim vectors");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v_);
  if (qr.rank() < dim_)
    throw InvalidParameterError("smooth_random: vectors do not span");
}

double SmoothRandomNorm::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x, dim_);
  double sum = 0.0;
  for (int j = 0; j < v_.rows(); ++j) {
    const double s = v_.row(j).dot(x);
    double term = s * s;
    for (int e = 1; e < q_; ++e) term *= s * s;
    sum += term;
  }
  return std::pow(sum, 1.0 / (2.0 * q_));
}

NormPtr SmoothRandomNorm::restricted(const Eigen::MatrixXd& frame) const {
  if (frame.rows() != dim_)
    throw InvalidParameterError("restricted: frame rows must match dim");
  return std::make_shared<SmoothRandomNorm>(v_ * frame, q_);
}

LinearImageNorm::LinearImageNorm(NormPtr inner, const Eigen::MatrixXd& map,
                                 bool orthogonal)
    : Norm(static_cast<int>(map.cols())) {
  if (!inner) throw InvalidParameterError("linear_image: null inner norm");
  if (inner->dim() != map.rows())
    throw InvalidParameterError("linear_image: map rows must match inner dim");
  const bool square = map.rows() == map.cols();
  if (auto li = std::dynamic_pointer_cast<const LinearImageNorm>(inner)) {
    inner_ = li->inner_;
    r_ = li->r_ * map;
    orthogonal_ = li->orthogonal_ && orthogonal && square;
  } else {
    inner_ = std::move(inner);
    r_ = map;
    orthogonal_ = orthogonal && square;
  }
}

double LinearImageNorm::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x, dim_);
  return inner_->eval(r_ * x);
}

bool LinearImageNorm::has_analytic_dual() const {
  return orthogonal_ && inner_->has_analytic_dual();
}

double LinearImageNorm::dual(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (has_analytic_dual()) {
    check_dim(y, dim_);
    return inner_->dual(r_ * y);
  }
  return Norm::dual(y);
}

NormPtr LinearImageNorm::restricted(const Eigen::MatrixXd& frame) const {
  return std::make_shared<LinearImageNorm>(shared_from_this(), frame, true);
}

UnconditionalAverageNorm::UnconditionalAverageNorm(NormPtr base)
    : Norm(base ? base->dim() : 1), base_(std::move(base)) {
  if (!base_) throw InvalidParameterError("unconditionalize: null base norm");
  if (dim_ > 20)
    throw InvalidParameterError(
        "unconditionalize: dim > 20 needs over 2^20 sign evaluations per point");
}

double UnconditionalAverageNorm::eval(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x, dim_);
  const int k = dim_;
  const uint64_t patterns = uint64_t{1} << k;
  Eigen::VectorXd flipped(k);
  std::vector<double> terms(patterns);
  for (uint64_t mask = 0; mask < patterns; ++mask) {
    for (int i = 0; i < k; ++i)
      flipped[i] = ((mask >> i) & 1) ? -x[i] : x[i];
    terms[mask] = base_->eval(flipped);
  }
  // Sign flips permute the terms; summing them sorted makes the average an
  // exact invariant of the orbit, not just up to roundoff.
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return std::ldexp(sum, -k);
}

FoldedNorm::FoldedNorm(NormPtr parent)
    : Norm(parent && parent->dim() % 2 == 0 ? parent->dim() / 2 : 0),
      parent_(std::move(parent)) {}

double FoldedNorm::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x, dim_);
  Eigen::VectorXd y(2 * dim_);
  for (int i = 0; i < dim_; ++i) {
    y[2 * i] = x[i];
    y[2 * i + 1] = -x[i];
  }
  return parent_->eval(y);
}

NormPtr restrict_norm(const NormPtr& parent, const Eigen::MatrixXd& frame) {
  if (!parent) throw InvalidParameterError("restrict_norm: null norm");
  if (frame.rows() != parent->dim() || frame.cols() < 1 ||
      frame.cols() > frame.rows())
    throw InvalidParameterError("restrict_norm: frame shape mismatch");
  const int k = static_cast<int>(frame.cols());
  const double defect = (frame.transpose() * frame -
                         Eigen::MatrixXd::Identity(k, k))
                            .cwiseAbs()
                            .maxCoeff();
  if (defect > 1e-10)
    throw InvalidParameterError("restrict_norm: frame columns are not orthonormal");
  return parent->restricted(frame);
}

NormPtr unconditionalize(const NormPtr& base) {
  return std::make_shared<UnconditionalAverageNorm>(base);
}

NormPtr fold_to_signed(const NormPtr& parent) {
  if (!parent || parent->dim() % 2 != 0)
    throw InvalidParameterError("fold_to_signed: parent dim must be even");
  return std::make_shared<FoldedNorm>(parent);
}

double epsilon_of(const NormPtr& base, int samples, uint64_t seed, int threads) {
  if (!base) throw InvalidParameterError("epsilon_of: null norm");
  if (samples < 100) throw InvalidParameterError("epsilon_of: samples must be >= 100");
  const NormPtr avg = unconditionalize(base);
  const Eigen::MatrixXd dirs = sphere_samples(base->dim(), samples, seed);
  // ratio(-x) = ratio(x), so the antipodal second half adds nothing.
  const int half = static_cast<int>(dirs.cols()) / 2;
  Eigen::VectorXd ratio(half);
  par::map_indexed(half, threads, [&](int64_t j) {
    ratio[j] = base->eval(dirs.col(j)) / avg->eval(dirs.col(j));
  });
  const par::MinMax mm = par::min_max(ratio.data(), half, threads);
  return std::max(mm.hi - 1.0, 1.0 - mm.lo);
}

double epsilon_converged(const NormPtr& base, int initial_samples, uint64_t seed,
                         int threads, int max_samples) {
  int m = std::max(initial_samples, 100);
  double prev = epsilon_of(base, m, seed, threads);
  while (2 * m <= max_samples) {
    m *= 2;
    const double cur = epsilon_of(base, m, seed, threads);
    if (std::abs(cur - prev) <= std::max(0.01 * std::max(cur, prev), 1e-9))
      return cur;
    prev = cur;
  }
  return prev;
}

NormPtr build_norm(const NormSpec& spec) {
  if (spec.kind == "lp") return std::make_shared<LpNorm>(spec.dim, spec.p);
  if (spec.kind == "weighted_lp") {
    if (spec.weights.size() != spec.dim)
      throw InvalidParameterError("weighted_lp: weights length must equal dim");
    return std::make_shared<WeightedLpNorm>(spec.p, spec.weights);
  }
  if (spec.kind == "polytope_gauge") {
    if (spec.generators.rows() != spec.dim)
      throw InvalidParameterError("polytope_gauge: generator rows must equal dim");
    return std::make_shared<PolytopeGaugeNorm>(spec.generators);
  }
  if (spec.kind == "rotated") {
    if (!spec.base) throw InvalidParameterError("rotated: missing base spec");
    if (spec.base->dim != spec.dim)
      throw InvalidParameterError("rotated: base dim must equal dim");
    const NormPtr base = build_norm(*spec.base);
    const Eigen::MatrixXd q = st::haar_orthogonal(spec.dim, spec.seed);
    return std::make_shared<LinearImageNorm>(base, q.transpose(), true);
  }
  if (spec.kind == "smooth_random")
    return std::make_shared<SmoothRandomNorm>(spec.dim, spec.seed, spec.power_q,
                                              spec.num_vectors);
  throw InvalidParameterError("build_norm: unknown kind '" + spec.kind + "'");
}

}  // namespace uncond::norms
