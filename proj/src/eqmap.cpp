#include "uncond/eqmap.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "uncond/errors.hpp"
#include "uncond/parallel.hpp"
#include "uncond/rng.hpp"

namespace uncond::eq {

namespace {

int max_element_of(Subset mask) {
  int top = 0;
  for (int r = 1; mask != 0; ++r, mask >>= 1)
    if (mask & 1u) top = r;
  return top;
}

}  // namespace

int FormalSum::size() const {
  int total = 0;
  for (const auto& [mask, mult] : terms) total += mult;
  return total;
}

FormalSum parity_representation(const mi::ParityPairSet& pairs) {
  if (!pairs.set) throw InvalidParameterError("parity_representation: empty set");
  const int k = pairs.set->k();
  if (k > 31) throw InvalidParameterError("parity_representation: k too large");
  FormalSum tau;
  tau.k = k;
  for (const auto& [i, j] : pairs.pairs) {
    const mi::MultiIndex sum = pairs.set->member(i) + pairs.set->member(j);
    Subset mask = 0;
    for (int r = 0; r < k; ++r)
      if (sum[r] % 2 != 0) mask |= Subset(1) << r;
    if (mask == 0)
      throw NumericalError("parity_representation: pair with even sum");
    ++tau.terms[mask];
  }
  return tau;
}

int MaxSplit::total() const {
  int t = 0;
  for (const auto& part : parts) t += int(part.size());
  return t;
}

MaxSplit split_by_max(const FormalSum& tau, int n, int k) {
  if (k < 1 || n <= k) throw InvalidParameterError("split_by_max: need n > k >= 1");
  if (tau.k != 0 && tau.k > k)
    throw InvalidParameterError("split_by_max: sum uses more than k coordinates");
  MaxSplit split;
  split.k = k;
  split.parts.assign(size_t(k), {});
  for (const auto& [mask, mult] : tau.terms) {
    if (mask == 0 || mask >= (Subset(1) << k))
      throw InvalidParameterError("split_by_max: subset outside {1..k}");
    if (mult < 1) throw InvalidParameterError("split_by_max: multiplicity < 1");
    const int top = max_element_of(mask);
    for (int c = 0; c < mult; ++c) split.parts[size_t(top - 1)].push_back(mask);
  }
  for (int i = 1; i <= k; ++i) {
    const int load = int(split.parts[size_t(i - 1)].size());
    if (load > n - k)
      throw InfeasibleError("split_by_max: part " + std::to_string(i) + " holds " +
                            std::to_string(load) + " subsets but capacity is " +
                            std::to_string(n - k));
  }
  return split;
}

EquivariantMap::EquivariantMap(int n, int k, const MaxSplit& split) : n_(n), k_(k) {
  if (k < 1 || n <= k) throw InvalidParameterError("equivariant map: need n > k >= 1");
  if (split.k != k || int(split.parts.size()) != k)
    throw InvalidParameterError("equivariant map: split size does not match k");
  coords_.reserve(size_t(st::stiefel_dim(n, k)));
  for (int i = 1; i <= k; ++i) {
    const auto& part = split.parts[size_t(i - 1)];
    const int si = int(part.size());
    if (si > n - i)
      throw InfeasibleError("equivariant map: part " + std::to_string(i) +
                            " exceeds its row budget");
    for (int j = 1; j <= n - i; ++j) {
      Coord c;
      c.row = i + j - 1;
      c.col = i - 1;
      if (j <= si) {
        const Subset mask = part[size_t(j - 1)];
        if (max_element_of(mask) != i)
          throw InvalidParameterError("equivariant map: subset in the wrong part");
        c.chi = mask;
        for (int r = 1; r < i; ++r)
          if (mask & (Subset(1) << (r - 1))) c.diag.push_back(r - 1);
      } else {
        c.chi = Subset(1) << (i - 1);
      }
      coords_.push_back(std::move(c));
    }
  }
}

void EquivariantMap::eval(const st::Frame& u, Eigen::VectorXd& out) const {
  if (u.rows() != n_ || u.cols() != k_)
    throw InvalidParameterError("equivariant map: frame shape mismatch");
  out.resize(output_dim());
  for (int c = 0; c < output_dim(); ++c) {
    const Coord& co = coords_[size_t(c)];
    double val = u(co.row, co.col);
    for (const int r : co.diag) val *= u(r, r);
    out[c] = val;
  }
}

Eigen::VectorXd EquivariantMap::eval(const st::Frame& u) const {
  Eigen::VectorXd out;
  eval(u, out);
  return out;
}

double EquivariantMap::character_sign(int c, const Eigen::VectorXi& g) const {
  if (c < 0 || c >= output_dim())
    throw InvalidParameterError("character_sign: coordinate out of range");
  if (g.size() != k_) throw InvalidParameterError("character_sign: sign size mismatch");
  double sign = 1.0;
  for (int r = 0; r < k_; ++r)
    if (coords_[size_t(c)].chi & (Subset(1) << r)) sign *= double(g[r]);
  return sign;
}

EquivariantMap build_f(int n, int k, const MaxSplit& split) {
  return EquivariantMap(n, k, split);
}

namespace {

class MapResidual final : public st::ResidualFn {
 public:
  explicit MapResidual(const EquivariantMap& f) : f_(f) {}
  int residual_size() const override { return f_.output_dim(); }
  void residuals(const st::Frame& u, Eigen::VectorXd& r, bool) override {
    f_.eval(u, r);
  }

 private:
  const EquivariantMap& f_;
};

}  // namespace

std::vector<st::Frame> find_zeros(const EquivariantMap& f, int restarts,
                                  double tol, uint64_t seed, int threads) {
  const int needed = 8 * (1 << f.k());
  if (restarts < needed)
    throw InvalidParameterError("find_zeros: needs at least " +
                                std::to_string(needed) + " restarts for k = " +
                                std::to_string(f.k()));
  if (!(tol > 0.0)) throw InvalidParameterError("find_zeros: tol must be positive");

  st::LsqOptions lsq;
  lsq.max_iters = 150;
  lsq.tol_f = tol * tol;
  lsq.fd_step = 1e-6;
  lsq.mode = "lm";

  std::vector<st::LsqResult> results(static_cast<size_t>(restarts));
  par::map_indexed(restarts, threads, [&](int64_t i) {
    MapResidual fn(f);
    results[size_t(i)] = st::minimize_on_stiefel(
        fn, st::random_frame(f.n(), f.k(), rng::child_seed(seed, uint64_t(i))), lsq);
  });

  const double merge_dist = 10.0 * std::sqrt(tol);
  std::vector<st::Frame> zeros;
  for (const auto& res : results) {
    if (!res.converged) continue;
    bool fresh = true;
    for (const auto& rep : zeros)
      if ((res.frame - rep).norm() < merge_dist) {
        fresh = false;
        break;
      }
    if (fresh) zeros.push_back(res.frame);
  }
  return zeros;
}

int jacobian_rank_at(const EquivariantMap& f, const st::Frame& u) {
  const Eigen::VectorXd at = f.eval(u);
  if (at.norm() > 1e-6)
    throw InvalidParameterError("jacobian_rank_at: |f(u)| = " +
                                std::to_string(at.norm()) + ", not near a zero");
  const auto basis = st::tangent_basis(u);
  const int nt = int(basis.size());
  const double h = 1e-6 * u.norm();
  Eigen::MatrixXd jac(f.output_dim(), nt);
  Eigen::VectorXd fp, fm;
  for (int a = 0; a < nt; ++a) {
    f.eval(st::qr_retract(u + h * basis[size_t(a)]), fp);
    f.eval(st::qr_retract(u - h * basis[size_t(a)]), fm);
    jac.col(a) = (fp - fm) / (2.0 * h);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-6 * sv[0]) ++rank;
  return rank;
}

Eigen::VectorXi standard_signs(const st::Frame& u, double tol) {
  const int n = int(u.rows());
  const int k = int(u.cols());
  Eigen::VectorXi signs(k);
  for (int j = 0; j < k; ++j) {
    for (int r = 0; r < n; ++r) {
      const double want = r == j ? 1.0 : 0.0;
      if (std::abs(std::abs(u(r, j)) - want) > tol)
        throw InvalidParameterError("standard_signs: column " + std::to_string(j) +
                                    " is not a signed basis vector");
    }
    signs[j] = u(j, j) >= 0.0 ? 1 : -1;
  }
  return signs;
}

bool is_signed_standard(const st::Frame& u, double tol) {
  try {
    standard_signs(u, tol);
    return true;
  } catch (const InvalidParameterError&) {
    return false;
  }
}

}  // namespace uncond::eq
