#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "uncond/multiindex.hpp"
#include "uncond/stiefel.hpp"

namespace uncond::eq {

// Nonempty subset of {1..k} as a bitmask: bit r-1 set means r is a member.
using Subset = uint32_t;

// Multiset of subsets with multiplicities, the abstract shape of a character
// sum. Keys iterate in increasing mask order, so everything built from one is
// deterministic.
struct FormalSum {
  int k = 0;
  std::map<Subset, int> terms;
  int size() const;  // total multiplicity
};

// One subset per parity pair: the coordinates where the two multi-indices sum
// to something odd.
FormalSum parity_representation(const mi::ParityPairSet& pairs);

// The terms of a FormalSum partitioned by their largest element.
struct MaxSplit {
  int k = 0;
  std::vector<std::vector<Subset>> parts;  // parts[i-1]: subsets with max = i
  int total() const;
};

// Partitions tau; every part must fit its capacity |S_i| <= n - k.
MaxSplit split_by_max(const FormalSum& tau, int n, int k);

// The sign-equivariant map W_{n,k} -> R^N, N = nk - k(k+1)/2, whose
// coordinates are frame entries U_{i,i+j}, the first |S_i| of them multiplied
// by the diagonal entries U_{r,r} for the other members r of their subset.
// Each coordinate picks up the character sign prod_{r in chi} g_r under the
// frame action (g_1 U_1, ..., g_k U_k).
class EquivariantMap {
 public:
  struct Coord {
    int row = 0;               // frame entry (row, col) it reads
    int col = 0;
    Subset chi = 0;            // character subset
    std::vector<int> diag;     // extra diagonal factors U_{r,r}, 0-based
  };

  EquivariantMap(int n, int k, const MaxSplit& split);

  int n() const { return n_; }
  int k() const { return k_; }
  int output_dim() const { return int(coords_.size()); }
  const std::vector<Coord>& coords() const { return coords_; }

  void eval(const st::Frame& u, Eigen::VectorXd& out) const;
  Eigen::VectorXd eval(const st::Frame& u) const;

  // prod_{r in chi_c} g_r, the exact sign of coordinate c under the flip g.
  double character_sign(int c, const Eigen::VectorXi& g) const;

 private:
  int n_, k_;
  std::vector<Coord> coords_;
};

EquivariantMap build_f(int n, int k, const MaxSplit& split);

// Multistart zero search; requires restarts >= 8 * 2^k. A frame counts as a
// zero when |f(U)| <= tol, and frames within Frobenius distance 10 sqrt(tol)
// of an earlier find are merged into it.
std::vector<st::Frame> find_zeros(const EquivariantMap& f, int restarts,
                                  double tol, uint64_t seed, int threads = 1);

// Rank of the finite-difference Jacobian of f over a tangent basis at a
// near-zero u (singular values above 1e-6 of the largest).
int jacobian_rank_at(const EquivariantMap& f, const st::Frame& u);

// Columnwise sign pattern of a frame whose columns are signed standard basis
// vectors +-e_1 .. +-e_k (within tol); throws otherwise.
Eigen::VectorXi standard_signs(const st::Frame& u, double tol);
bool is_signed_standard(const st::Frame& u, double tol);

}  // namespace uncond::eq
