#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tofgeo {

/// Precondition or input-contract failure (CLI exit code 1).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File or stream failure (CLI exit code 2).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerically undefined result, e.g. a loss over an empty pixel set (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

namespace detail {
inline std::atomic<int>& thread_count_storage() {
  static std::atomic<int> count{0};  // 0 = hardware concurrency
  return count;
}
}  // namespace detail

/// Worker count for internally parallel loops. 0 restores the hardware default.
inline void set_thread_count(int threads) { detail::thread_count_storage() = threads; }

inline int thread_count() {
  int n = detail::thread_count_storage();
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return n > 0 ? n : 1;
}

/// Runs fn(i) for i in [begin, end). Results must only depend on i, never on
/// scheduling, so the output is identical for any worker count.
template <typename Fn>
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end, Fn&& fn) {
  const std::ptrdiff_t n = end - begin;
  if (n <= 0) return;
  const int workers = std::min<std::ptrdiff_t>(thread_count(), n);
  if (workers <= 1 || n < 256) {
    for (std::ptrdiff_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::ptrdiff_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::ptrdiff_t lo = begin + w * chunk;
    const std::ptrdiff_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::ptrdiff_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// Accumulates in fixed index order, so totals are reproducible for any
/// thread count (terms are materialized first, reduced here sequentially).
inline double ordered_sum(std::span<const double> terms) {
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

}  // namespace tofgeo
