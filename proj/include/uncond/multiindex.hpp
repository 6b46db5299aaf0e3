#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace uncond::mi {

using MultiIndex = Eigen::VectorXi;  // non-negative entries, order = sum

// -1 / 0 / +1 with the first differing coordinate deciding.
int lex_compare(const MultiIndex& a, const MultiIndex& b);

// Exact d! / (alpha_1! ... alpha_k!). Guarded to d <= 20 (fits uint64).
uint64_t multinomial(int d, const MultiIndex& alpha);

// All multi-indices over k variables with |alpha| = d, stored in ascending
// lex order, together with their multinomial weights.
class MultiIndexSet {
 public:
  MultiIndexSet(int k, int d);

  int k() const { return k_; }
  int d() const { return d_; }
  int size() const { return int(members_.size()); }
  const MultiIndex& member(int i) const { return members_[i]; }
  const std::vector<MultiIndex>& members() const { return members_; }
  // multinomial(d, member(i)) as doubles, for the weighted pairing
  const Eigen::VectorXd& weights() const { return weights_; }
  // position of alpha in the set, -1 if absent
  int position(const MultiIndex& alpha) const;

  bool operator==(const MultiIndexSet& o) const { return k_ == o.k_ && d_ == o.d_; }

 private:
  int k_, d_;
  std::vector<MultiIndex> members_;
  Eigen::VectorXd weights_;
};

using SetPtr = std::shared_ptr<const MultiIndexSet>;
SetPtr enumerate_multiindices(int k, int d);

// Positions (i, j), i < j, of member pairs whose sum has an odd coordinate.
struct ParityPairSet {
  SetPtr set;
  std::vector<std::pair<int, int>> pairs;
  int size() const { return int(pairs.size()); }
};
ParityPairSet odd_parity_pairs(const SetPtr& set);

// Coordinates of a vector in the monomial basis indexed by `set`.
struct SymVector {
  SetPtr set;
  Eigen::VectorXd coords;
};

// x^{(x)d}: all monomials x^alpha, |alpha| = d, in the set's order.
Eigen::VectorXd tensor_lift(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const MultiIndexSet& set);
SymVector tensor_lift(const Eigen::Ref<const Eigen::VectorXd>& x, const SetPtr& set);

// (a, b) = sum_alpha multinomial(d, alpha) a_alpha b_alpha; reproduces
// <x, y>^d on lifted vectors.
double weighted_inner(const MultiIndexSet& set,
                      const Eigen::Ref<const Eigen::VectorXd>& a,
                      const Eigen::Ref<const Eigen::VectorXd>& b);
double weighted_inner(const SymVector& a, const SymVector& b);

}  // namespace uncond::mi
