#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "uncond/errors.hpp"
#include "uncond/norms.hpp"
#include "uncond/rng.hpp"
#include "uncond/stiefel.hpp"

using namespace uncond;

namespace {

double orthonormality_defect(const st::Frame& u) {
  const int k = int(u.cols());
  return (u.transpose() * u - Eigen::MatrixXd::Identity(k, k))
      .cwiseAbs()
      .maxCoeff();
}

// Residuals of U^T diag(1..n) U - diag(targets): zero exactly when the
// columns of U are the eigenvectors picked out by the targets.
class EigenpairResiduals final : public st::ResidualFn {
 public:
  EigenpairResiduals(int n, Eigen::VectorXd targets)
      : a_(Eigen::VectorXd::LinSpaced(n, 1.0, double(n)).asDiagonal()),
        targets_(std::move(targets)) {}

  int residual_size() const override {
    const int k = int(targets_.size());
    return k * (k + 1) / 2;
  }

  void residuals(const st::Frame& u, Eigen::VectorXd& r, bool) override {
    const Eigen::MatrixXd m =
        u.transpose() * a_ * u - Eigen::MatrixXd(targets_.asDiagonal());
    r.resize(residual_size());
    int at = 0;
    for (int i = 0; i < m.rows(); ++i)
      for (int j = i; j < m.cols(); ++j) r[at++] = m(i, j);
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd targets_;
};

}  // namespace

TEST_CASE("qr_retract orthonormalizes and fixes orthonormal input") {
  const Eigen::MatrixXd z = rng::gaussian_matrix(6, 3, 12);
  const st::Frame u = st::qr_retract(z);
  CHECK(orthonormality_defect(u) <= 1e-13);
  CHECK((st::qr_retract(u) - u).cwiseAbs().maxCoeff() <= 1e-13);
  // columns keep the span and orientation of the input
  CHECK(u.col(0).dot(z.col(0)) > 0.0);

  Eigen::MatrixXd deficient(4, 2);
  deficient.col(0) = Eigen::VectorXd::Ones(4);
  deficient.col(1) = Eigen::VectorXd::Ones(4);
  CHECK_THROWS_AS(st::qr_retract(deficient), NumericalError);
}

TEST_CASE("random frames are orthonormal and seed-determined") {
  const st::Frame a = st::random_frame(7, 3, 42);
  const st::Frame b = st::random_frame(7, 3, 42);
  const st::Frame c = st::random_frame(7, 3, 43);
  CHECK(orthonormality_defect(a) <= 1e-13);
  CHECK((a - b).norm() == 0.0);
  CHECK((a - c).norm() > 1e-3);

  const Eigen::MatrixXd q = st::haar_orthogonal(5, 3);
  CHECK(orthonormality_defect(q) <= 1e-13);
  CHECK(std::abs(std::abs(q.determinant()) - 1.0) <= 1e-12);
}

TEST_CASE("tangent projection is idempotent and kills normal directions") {
  const st::Frame u = st::random_frame(6, 2, 5);
  const Eigen::MatrixXd z = rng::gaussian_matrix(6, 2, 6);
  const Eigen::MatrixXd t = st::tangent_project(u, z);
  CHECK((st::tangent_project(u, t) - t).cwiseAbs().maxCoeff() <= 1e-13);
  // tangency: U^T T skew-symmetric
  const Eigen::MatrixXd s = u.transpose() * t + t.transpose() * u;
  CHECK(s.cwiseAbs().maxCoeff() <= 1e-13);
  // normal space: U S for symmetric S projects to zero
  Eigen::MatrixXd sym(2, 2);
  sym << 1.0, 0.3, 0.3, -2.0;
  CHECK(st::tangent_project(u, u * sym).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("tangent basis is orthonormal with the manifold dimension") {
  const st::Frame u = st::random_frame(5, 2, 9);
  const auto basis = st::tangent_basis(u);
  REQUIRE(int(basis.size()) == st::stiefel_dim(5, 2));
  CHECK(st::stiefel_dim(5, 2) == 7);
  for (size_t a = 0; a < basis.size(); ++a) {
    for (size_t b = a; b < basis.size(); ++b) {
      const double ip = (basis[a].cwiseProduct(basis[b])).sum();
      CHECK(std::abs(ip - (a == b ? 1.0 : 0.0)) <= 1e-12);
    }
    const Eigen::MatrixXd s =
        u.transpose() * basis[a] + basis[a].transpose() * u;
    CHECK(s.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("the sign action flips columns and composes") {
  const st::Frame u = st::random_frame(5, 3, 21);
  Eigen::VectorXi g(3), h(3);
  g << -1, 1, -1;
  h << -1, -1, 1;
  const st::Frame gu = st::group_action(g, u);
  CHECK((gu.col(0) + u.col(0)).norm() == 0.0);
  CHECK((gu.col(1) - u.col(1)).norm() == 0.0);
  CHECK((gu.col(2) + u.col(2)).norm() == 0.0);
  CHECK(orthonormality_defect(gu) <= 1e-13);

  const st::Frame ghu = st::group_action(g, st::group_action(h, u));
  Eigen::VectorXi gh = g.cwiseProduct(h);
  CHECK((ghu - st::group_action(gh, u)).norm() == 0.0);

  Eigen::VectorXi bad(3);
  bad << 1, 0, -1;
  CHECK_THROWS_AS(st::group_action(bad, u), InvalidParameterError);
}

TEST_CASE("feasibility combines the capacity and parity-count gates") {
  CHECK(st::feasibility(8, 2, 1));
  CHECK_FALSE(st::feasibility(8, 2, 3));  // C(4,1)^2 / 2 = 8 > 6
  CHECK(st::feasibility(34, 2, 7));       // C(8,1)^2 / 2 = 32 = 34 - 2
  CHECK_FALSE(st::feasibility(34, 2, 9));
  CHECK_THROWS_AS(st::feasibility(8, 2, 4), InvalidParameterError);
  CHECK_THROWS_AS(st::feasibility(8, 1, 1), InvalidParameterError);
}

TEST_CASE("degree selection takes the largest feasible odd degree") {
  CHECK(st::choose_degree(8, 2) == 1);
  CHECK(st::choose_degree(34, 2) == 7);
  CHECK(st::choose_degree(100, 2) == 13);  // C(14,1)^2 / 2 = 98 = n - k
  CHECK_THROWS_AS(st::choose_degree(2, 2), InfeasibleError);
}

TEST_CASE("epsilon formulas match hand arithmetic") {
  CHECK(st::theory_epsilon(2, 3) ==
        doctest::Approx(std::pow(4.0, 1.0 / 6.0) - 1.0).epsilon(1e-14));
  CHECK(st::theory_epsilon(2, 7) ==
        doctest::Approx(std::pow(8.0, 1.0 / 14.0) - 1.0).epsilon(1e-14));
  CHECK(st::bound_eps_shape(8, 2) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("parity objective is the normalized squared mass on listed pairs") {
  const auto pairs = mi::odd_parity_pairs(mi::enumerate_multiindices(2, 3));
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 4);
  CHECK(st::parity_objective(ones, pairs) == doctest::Approx(4.0 / 16.0));

  Eigen::MatrixXd clean = ones;
  for (const auto& [i, j] : pairs.pairs) {
    clean(i, j) = 0.0;
    clean(j, i) = 0.0;
  }
  CHECK(st::parity_objective(clean, pairs) == 0.0);
  CHECK_THROWS_AS(st::parity_objective(Eigen::MatrixXd::Zero(4, 4), pairs),
                  NumericalError);
}

TEST_CASE("levenberg-marquardt drives the toy residuals to zero") {
  Eigen::VectorXd targets(2);
  targets << 2.0, 5.0;
  EigenpairResiduals fn(6, targets);
  st::LsqOptions opts;
  opts.tol_f = 1e-16;
  const st::LsqResult res =
      st::minimize_on_stiefel(fn, st::random_frame(6, 2, 3), opts);
  CHECK(res.converged);
  CHECK(res.objective <= 1e-16);
  CHECK(res.iterations > 0);
  CHECK(orthonormality_defect(res.frame) <= 1e-12);
  Eigen::VectorXd r(fn.residual_size());
  fn.residuals(res.frame, r, false);
  CHECK(r.squaredNorm() <= 1e-15);
}

TEST_CASE("steepest descent also makes progress on the toy problem") {
  Eigen::VectorXd targets(2);
  targets << 1.0, 6.0;
  EigenpairResiduals fn(6, targets);
  st::LsqOptions opts;
  opts.mode = "sd";
  opts.max_iters = 500;
  opts.tol_f = 1e-10;
  const st::LsqResult res =
      st::minimize_on_stiefel(fn, st::random_frame(6, 2, 8), opts);
  Eigen::VectorXd r0(fn.residual_size());
  fn.residuals(st::random_frame(6, 2, 8), r0, false);
  CHECK(res.objective < r0.squaredNorm());
  CHECK(orthonormality_defect(res.frame) <= 1e-12);

  opts.mode = "newton";
  CHECK_THROWS_AS(st::minimize_on_stiefel(fn, st::random_frame(6, 2, 8), opts),
                  InvalidParameterError);
}

TEST_CASE("the restricted euclidean norm has vanishing parity entries") {
  auto l2 = std::make_shared<norms::LpNorm>(6, 2.0);
  st::SolverOptions opts;
  opts.directions = 128;
  CHECK(st::objective(l2, st::random_frame(6, 2, 14), 3, opts) <= 1e-8);
}

TEST_CASE("solve_frame validates its inputs") {
  auto l1 = std::make_shared<norms::LpNorm>(8, 1.0);
  st::SolverOptions opts;
  opts.restarts = 1;
  CHECK_THROWS_AS(st::solve_frame(l1, 6, 2, 3, opts), InvalidParameterError);
  CHECK_THROWS_AS(st::solve_frame(l1, 8, 8, 3, opts), InvalidParameterError);
  CHECK_THROWS_AS(st::solve_frame(l1, 8, 2, 4, opts), InvalidParameterError);
  // parity pairs exceed n - k: |E_3| = 4 > 1
  auto small = std::make_shared<norms::LpNorm>(3, 1.0);
  CHECK_THROWS_AS(st::solve_frame(small, 3, 2, 3, opts), InfeasibleError);
}

TEST_CASE("solve_frame finds a near-unconditional plane in a weighted cross-polytope") {
  // weighted l1 is unconditional along the standard axes, so the parity
  // objective has honest zeros; any converged frame is certified within the
  // lift's approximation band.
  Eigen::VectorXd w(6);
  w << 1.0, 1.7, 0.6, 1.2, 2.3, 0.9;
  auto ambient = std::make_shared<norms::WeightedLpNorm>(1.0, w);
  st::SolverOptions opts;
  opts.restarts = 4;
  opts.seed = 2;
  opts.directions = 160;
  opts.max_iters = 60;
  const st::SearchResult res = st::solve_frame(ambient, 6, 2, 3, opts);
  CHECK(res.converged);
  CHECK(res.objective_value <= 1e-8);
  CHECK(res.achieved_eps <= res.theory_eps + 0.05);
  CHECK(res.restarts_used == 4);
  CHECK(res.theory_eps ==
        doctest::Approx(std::pow(4.0, 1.0 / 6.0) - 1.0).epsilon(1e-12));
}
