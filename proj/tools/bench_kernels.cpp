#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "uncond/barvinok.hpp"
#include "uncond/norms.hpp"
#include "uncond/parallel.hpp"
#include "uncond/rng.hpp"

namespace {

using namespace uncond;

norms::NormPtr octagon_norm() {
  const int sides = 8;
  Eigen::MatrixXd gens(2, sides);
  for (int i = 0; i < sides; ++i) {
    const double t = M_PI * double(i) / double(sides);
    gens(0, i) = std::cos(t);
    gens(1, i) = std::sin(t);
  }
  return std::make_shared<norms::PolytopeGaugeNorm>(gens);
}

void bm_dual_many(benchmark::State& state) {
  const int threads = int(state.range(0));
  const auto norm = octagon_norm();
  const Eigen::MatrixXd dirs = norms::sphere_samples(2, 512, 7);
  Eigen::VectorXd out;
  for (auto _ : state) {
    norm->dual_many(dirs, out, threads);
    benchmark::DoNotOptimize(out.data());
  }
}

void bm_epsilon(benchmark::State& state) {
  const int threads = int(state.range(0));
  const auto norm = std::make_shared<norms::SmoothRandomNorm>(4, 11, 2, 0);
  for (auto _ : state) {
    const double eps = norms::epsilon_of(norm, 2048, 3, threads);
    benchmark::DoNotOptimize(eps);
  }
}

void bm_sandwich(benchmark::State& state) {
  const int threads = int(state.range(0));
  const auto norm = std::make_shared<norms::LpNorm>(2, 4.0);
  bar::EllipsoidOptions opts;
  opts.threads = threads;
  const auto samples = bar::dual_sphere_samples(*norm, 640, 5, threads);
  const auto a = bar::quadform_of_samples(samples, 3, opts);
  for (auto _ : state) {
    const par::MinMax band = bar::sandwich_check(a, *norm, 4096, 9, threads);
    benchmark::DoNotOptimize(band.lo);
  }
}

void bm_min_max_serial(benchmark::State& state) {
  std::vector<double> v(size_t(state.range(0)));
  rng::Stream stream(17);
  for (auto& x : v) x = stream.next_gaussian();
  for (auto _ : state) {
    const par::MinMax r = par::min_max_serial(v.data(), int64_t(v.size()));
    benchmark::DoNotOptimize(r.lo);
  }
}

void bm_min_max_parallel(benchmark::State& state) {
  std::vector<double> v(size_t(state.range(0)));
  rng::Stream stream(17);
  for (auto& x : v) x = stream.next_gaussian();
  for (auto _ : state) {
    const par::MinMax r = par::min_max(v.data(), int64_t(v.size()), 4);
    benchmark::DoNotOptimize(r.lo);
  }
}

BENCHMARK(bm_dual_many)->Arg(1)->Arg(2)->Arg(4);
BENCHMARK(bm_epsilon)->Arg(1)->Arg(2)->Arg(4);
BENCHMARK(bm_sandwich)->Arg(1)->Arg(2)->Arg(4);
BENCHMARK(bm_min_max_serial)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(bm_min_max_parallel)->Arg(1 << 16)->Arg(1 << 20);

}  // namespace

BENCHMARK_MAIN();
