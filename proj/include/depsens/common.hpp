#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace depsens {

// Error taxonomy; the CLI maps these to exit codes (config 2, degenerate 3, eval 4).
class config_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class degenerate_variance_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class model_eval_error : public std::runtime_error {
public:
  model_eval_error(const std::string& msg, std::size_t row)
      : std::runtime_error(msg + " (row " + std::to_string(row) + ")"), row(row) {}
  std::size_t row;
};

class infeasible_constraint_error : public std::runtime_error {
public:
  infeasible_constraint_error(const std::string& msg, double rate)
      : std::runtime_error(msg), acceptance_rate(rate) {}
  double acceptance_rate;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64-bit word -> double strictly inside (0,1), 53-bit resolution.
inline double bits_to_unit(std::uint64_t b) {
  return static_cast<double>(b >> 11) * 0x1p-53 + 0x1p-64;
}

// Deterministic pairwise (tree) reduction of leaf(lo..hi-1); the summation tree
// depends only on [lo, hi), never on the worker count.
template <class Leaf>
auto pairwise_sum(std::size_t lo, std::size_t hi, Leaf&& leaf)
    -> decltype(leaf(lo)) {
  if (hi - lo <= 64) {
    auto acc = leaf(lo);
    for (std::size_t i = lo + 1; i < hi; ++i) acc += leaf(i);
    return acc;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  auto left = pairwise_sum(lo, mid, leaf);
  left += pairwise_sum(mid, hi, leaf);
  return left;
}

// Row-parallel map: f(i) for i in [0, n). Writes must go to disjoint
// preallocated slots; reductions happen afterwards via pairwise_sum.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
  if (n == 0) return;
  if (threads < 1) threads = 1;
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (nt == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mx;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const std::size_t chunk = (n + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t b = t * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e] {
      try {
        for (std::size_t i = b; i < e; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(error_mx);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

}  // namespace depsens
