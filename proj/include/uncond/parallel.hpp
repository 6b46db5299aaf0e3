#pragma once

#include <cstdint>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uncond::par {

// Every kernel here writes each output slot exactly once and reduces in a
// fixed order, so results are bitwise identical for any thread count. The
// _serial twins exist as references for the equality tests and the benchmark.

template <class F>
inline void map_indexed_serial(int64_t count, F&& fn) {
  for (int64_t i = 0; i < count; ++i) fn(i);
}

// An exception escaping an OpenMP region aborts the process, so the first
// one thrown is captured and rethrown after the join.
template <class F>
inline void map_indexed(int64_t count, int threads, F&& fn) {
  if (threads <= 1 || count < 2) {
    map_indexed_serial(count, fn);
    return;
  }
#ifdef _OPENMP
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int64_t i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
#else
  map_indexed_serial(count, fn);
#endif
}

struct MinMax {
  double lo;
  double hi;
};

inline MinMax min_max_serial(const double* v, int64_t count) {
  MinMax r{v[0], v[0]};
  for (int64_t i = 1; i < count; ++i) {
    if (v[i] < r.lo) r.lo = v[i];
    if (v[i] > r.hi) r.hi = v[i];
  }
  return r;
}

// min/max are exact order-independent reductions, safe to parallelize.
inline MinMax min_max(const double* v, int64_t count, int threads) {
  if (threads <= 1 || count < 2) return min_max_serial(v, count);
#ifdef _OPENMP
  double lo = v[0], hi = v[0];
#pragma omp parallel for schedule(static) num_threads(threads) \
    reduction(min : lo) reduction(max : hi)
  for (int64_t i = 0; i < count; ++i) {
    if (v[i] < lo) lo = v[i];
    if (v[i] > hi) hi = v[i];
  }
  return {lo, hi};
#else
  return min_max_serial(v, count);
#endif
}

// First index attaining the maximum; serial scan by contract so that ties
// resolve identically no matter how the values were produced.
inline int64_t argmax(const double* v, int64_t count) {
  int64_t best = 0;
  for (int64_t i = 1; i < count; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace uncond::par
