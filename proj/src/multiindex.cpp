#include "uncond/multiindex.hpp"

#include <algorithm>

#include "uncond/errors.hpp"

namespace uncond::mi {

int lex_compare(const MultiIndex& a, const MultiIndex& b) {
  if (a.size() != b.size())
    throw InvalidParameterError("lex_compare: mismatched k");
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

uint64_t multinomial(int d, const MultiIndex& alpha) {
  if (d < 0 || d > 20)
    throw InvalidParameterError("multinomial: d outside [0, 20]");
  int sum = 0;
  for (int i = 0; i < alpha.size(); ++i) {
    if (alpha[i] < 0) throw InvalidParameterError("multinomial: negative entry");
    sum += alpha[i];
  }
  if (sum != d) throw InvalidParameterError("multinomial: |alpha| != d");
  // Product of binomials over prefix sums; every partial product is itself a
  // multinomial coefficient, so nothing overflows before the result would.
  uint64_t result = 1;
  int s = 0;
  for (int i = 0; i < alpha.size(); ++i) {
    s += alpha[i];
    // binom(s, alpha[i]) multiplicatively
    uint64_t c = 1;
    for (int j = 1; j <= alpha[i]; ++j) c = c * uint64_t(s - alpha[i] + j) / j;
    result *= c;
  }
  return result;
}

namespace {
void enumerate_rec(int k, int d, MultiIndex& cur, int pos,
                   std::vector<MultiIndex>& out) {
  if (pos == k - 1) {
    cur[pos] = d;
    out.push_back(cur);
    return;
  }
  for (int v = 0; v <= d; ++v) {  // ascending first coordinate = ascending lex
    cur[pos] = v;
    enumerate_rec(k, d - v, cur, pos + 1, out);
  }
}
}  // namespace

MultiIndexSet::MultiIndexSet(int k, int d) : k_(k), d_(d) {
  if (k < 1) throw InvalidParameterError("MultiIndexSet: k < 1");
  if (d < 0 || d > 20) throw InvalidParameterError("MultiIndexSet: d outside [0, 20]");
  MultiIndex cur(k);
  enumerate_rec(k, d, cur, 0, members_);
  weights_.resize(members_.size());
  for (size_t i = 0; i < members_.size(); ++i)
    weights_[int(i)] = double(multinomial(d, members_[i]));
}

int MultiIndexSet::position(const MultiIndex& alpha) const {
  if (alpha.size() != k_) return -1;
  auto it = std::lower_bound(
      members_.begin(), members_.end(), alpha,
      [](const MultiIndex& a, const MultiIndex& b) { return lex_compare(a, b) < 0; });
  if (it == members_.end() || lex_compare(*it, alpha) != 0) return -1;
  return int(it - members_.begin());
}

SetPtr enumerate_multiindices(int k, int d) {
  return std::make_shared<MultiIndexSet>(k, d);
}

ParityPairSet odd_parity_pairs(const SetPtr& set) {
  ParityPairSet result;
  result.set = set;
  const int m = set->size();
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const MultiIndex sum = set->member(i) + set->member(j);
      bool odd = false;
      for (int c = 0; c < sum.size(); ++c)
        if (sum[c] % 2 != 0) { odd = true; break; }
      if (odd) result.pairs.emplace_back(i, j);
    }
  }
  return result;
}

Eigen::VectorXd tensor_lift(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const MultiIndexSet& set) {
  if (x.size() != set.k()) throw InvalidParameterError("tensor_lift: dimension mismatch");
  Eigen::VectorXd out(set.size());
  for (int i = 0; i < set.size(); ++i) {
    const MultiIndex& a = set.member(i);
    double v = 1.0;
    for (int c = 0; c < a.size(); ++c)
      for (int r = 0; r < a[c]; ++r) v *= x[c];
    out[i] = v;
  }
  return out;
}

SymVector tensor_lift(const Eigen::Ref<const Eigen::VectorXd>& x, const SetPtr& set) {
  return SymVector{set, tensor_lift(x, *set)};
}

double weighted_inner(const MultiIndexSet& set,
                      const Eigen::Ref<const Eigen::VectorXd>& a,
                      const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != set.size() || b.size() != set.size())
    throw InvalidParameterError("weighted_inner: length != |M_d|");
  double s = 0.0;
  for (int i = 0; i < set.size(); ++i) s += set.weights()[i] * a[i] * b[i];
  return s;
}

double weighted_inner(const SymVector& a, const SymVector& b) {
  if (!a.set || !b.set || !(*a.set == *b.set))
    throw InvalidParameterError("weighted_inner: index-set mismatch");
  return weighted_inner(*a.set, a.coords, b.coords);
}

}  // namespace uncond::mi
