#pragma once
// Shared helpers for the test suite: KS statistics, rank correlations, and
// simple moment summaries over deterministic counter-RNG draws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace testutil {

// Two-sided KS distance between a sample and a reference CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  return d;
}

// Asymptotic critical value; alpha01 picks 1% (else 5%).
inline double ks_critical(std::size_t n, bool alpha01) {
  const double c = alpha01 ? 1.6276 : 1.3581;
  return c / std::sqrt(static_cast<double>(n));
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double ks_two_sample_critical(std::size_t n, std::size_t m, bool alpha01) {
  const double c = alpha01 ? 1.6276 : 1.3581;
  return c * std::sqrt((static_cast<double>(n) + static_cast<double>(m)) /
                       (static_cast<double>(n) * static_cast<double>(m)));
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j - 1)) + 1.0;
    for (std::size_t k = i; k < j; ++k) r[idx[k]] = avg;
    i = j;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

// O(n log n) Kendall tau-a via merge-sort inversion counting (no ties assumed).
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> yy(n);
  for (std::size_t i = 0; i < n; ++i) yy[i] = y[idx[i]];
  std::vector<double> tmp(n);
  std::size_t inversions = 0;
  const std::function<void(std::size_t, std::size_t)> sort_count = [&](std::size_t lo,
                                                                       std::size_t hi) {
    if (hi - lo < 2) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    sort_count(lo, mid);
    sort_count(mid, hi);
    std::size_t a = lo, b = mid, o = lo;
    while (a < mid && b < hi) {
      if (yy[a] <= yy[b])
        tmp[o++] = yy[a++];
      else {
        inversions += mid - a;
        tmp[o++] = yy[b++];
      }
    }
    while (a < mid) tmp[o++] = yy[a++];
    while (b < hi) tmp[o++] = yy[b++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(o),
              yy.begin() + static_cast<std::ptrdiff_t>(lo));
  };
  sort_count(0, n);
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return 1.0 - 2.0 * static_cast<double>(inversions) / pairs;
}

}  // namespace testutil
