#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <vector>

#include "uncond/eqmap.hpp"
#include "uncond/errors.hpp"
#include "uncond/rng.hpp"

using namespace uncond;

namespace {

eq::MaxSplit split_for(int n, int k, int d) {
  const auto pairs = mi::odd_parity_pairs(mi::enumerate_multiindices(k, d));
  return eq::split_by_max(eq::parity_representation(pairs), n, k);
}

st::Frame signed_standard(int n, const std::vector<int>& signs) {
  st::Frame u = st::Frame::Zero(n, int(signs.size()));
  for (int j = 0; j < int(signs.size()); ++j) u(j, j) = double(signs[j]);
  return u;
}

}  // namespace

TEST_CASE("the cubic planar parity sum is four copies of the full subset") {
  const auto pairs = mi::odd_parity_pairs(mi::enumerate_multiindices(2, 3));
  const eq::FormalSum tau = eq::parity_representation(pairs);
  CHECK(tau.k == 2);
  CHECK(tau.size() == 4);
  REQUIRE(tau.terms.size() == 1);
  CHECK(tau.terms.count(0b11) == 1);
  CHECK(tau.terms.at(0b11) == 4);
}

TEST_CASE("the linear parity sum is a single full subset") {
  const auto pairs = mi::odd_parity_pairs(mi::enumerate_multiindices(2, 1));
  const eq::FormalSum tau = eq::parity_representation(pairs);
  CHECK(tau.size() == 1);
  CHECK(tau.terms.at(0b11) == 1);
}

TEST_CASE("split_by_max groups subsets under their largest member") {
  eq::FormalSum tau;
  tau.k = 3;
  tau.terms[0b001] = 2;  // {1}
  tau.terms[0b011] = 1;  // {1,2}
  tau.terms[0b101] = 1;  // {1,3}
  tau.terms[0b100] = 1;  // {3}
  const eq::MaxSplit split = eq::split_by_max(tau, 9, 3);
  REQUIRE(split.parts.size() == 3);
  CHECK(split.parts[0] == std::vector<eq::Subset>{0b001, 0b001});
  CHECK(split.parts[1] == std::vector<eq::Subset>{0b011});
  CHECK(split.parts[2] == std::vector<eq::Subset>{0b100, 0b101});
  CHECK(split.total() == 5);
}

TEST_CASE("split capacity is n minus k per part") {
  // d=3, k=2 needs |S_2| = 4 slots, so n=4 (capacity 2) must refuse
  CHECK_THROWS_AS(split_for(4, 2, 3), InfeasibleError);
  CHECK_NOTHROW(split_for(8, 2, 3));
}

TEST_CASE("the map has full tangent dimension and kills standard frames") {
  for (auto [n, k] : std::vector<std::pair<int, int>>{{2, 1}, {4, 2}, {5, 2}}) {
    const eq::EquivariantMap f = eq::build_f(n, k, split_for(n, k, 1));
    CHECK(f.output_dim() == st::stiefel_dim(n, k));
    for (int mask = 0; mask < (1 << k); ++mask) {
      std::vector<int> signs(k);
      for (int j = 0; j < k; ++j) signs[j] = (mask >> j) & 1 ? -1 : 1;
      const Eigen::VectorXd val = f.eval(signed_standard(n, signs));
      CHECK(val.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("coordinates transform by their characters, exactly") {
  const eq::EquivariantMap f = eq::build_f(5, 2, split_for(5, 2, 1));
  const st::Frame u = st::random_frame(5, 2, 31);
  const Eigen::VectorXd base = f.eval(u);
  for (int mask = 0; mask < 4; ++mask) {
    Eigen::VectorXi g(2);
    g << (mask & 1 ? -1 : 1), (mask & 2 ? -1 : 1);
    const Eigen::VectorXd flipped = f.eval(st::group_action(g, u));
    for (int c = 0; c < f.output_dim(); ++c)
      CHECK(flipped[c] == f.character_sign(c, g) * base[c]);
  }
}

TEST_CASE("character signs multiply over the subset") {
  const eq::EquivariantMap f = eq::build_f(4, 2, split_for(4, 2, 1));
  Eigen::VectorXi g(2);
  g << -1, 1;
  for (int c = 0; c < f.output_dim(); ++c) {
    const eq::Subset chi = f.coords()[size_t(c)].chi;
    double want = 1.0;
    if (chi & 0b01) want *= -1.0;
    CHECK(f.character_sign(c, g) == want);
  }
}

TEST_CASE("zero search returns exactly the signed standard frames") {
  const eq::EquivariantMap f = eq::build_f(4, 2, split_for(4, 2, 1));
  const auto zeros = eq::find_zeros(f, 48, 1e-10, 7);
  REQUIRE(int(zeros.size()) == 4);
  std::set<std::pair<int, int>> patterns;
  for (const auto& z : zeros) {
    CHECK(eq::is_signed_standard(z, 1e-6));
    const Eigen::VectorXi s = eq::standard_signs(z, 1e-6);
    patterns.insert({s[0], s[1]});
    CHECK(eq::jacobian_rank_at(f, z) == f.output_dim());
  }
  CHECK(int(patterns.size()) == 4);
}

TEST_CASE("zero search enforces the restart floor") {
  const eq::EquivariantMap f = eq::build_f(4, 2, split_for(4, 2, 1));
  CHECK_THROWS_AS(eq::find_zeros(f, 8, 1e-10, 7), InvalidParameterError);
}

TEST_CASE("standard sign extraction and its failure mode") {
  const st::Frame u = signed_standard(5, {-1, 1});
  const Eigen::VectorXi s = eq::standard_signs(u, 1e-8);
  CHECK(s[0] == -1);
  CHECK(s[1] == 1);
  CHECK(eq::is_signed_standard(u, 1e-8));
  CHECK_FALSE(eq::is_signed_standard(st::random_frame(5, 2, 3), 1e-8));
  CHECK_THROWS_AS(eq::standard_signs(st::random_frame(5, 2, 3), 1e-8),
                  InvalidParameterError);
}

TEST_CASE("jacobian rank refuses frames away from the zero set") {
  const eq::EquivariantMap f = eq::build_f(4, 2, split_for(4, 2, 1));
  CHECK_THROWS_AS(eq::jacobian_rank_at(f, st::random_frame(4, 2, 11)),
                  InvalidParameterError);
}

TEST_CASE("oversized subsets are rejected") {
  eq::FormalSum tau;
  tau.k = 2;
  tau.terms[0b11] = 500;
  CHECK_THROWS_AS(eq::split_by_max(tau, 6, 2), InfeasibleError);
}
