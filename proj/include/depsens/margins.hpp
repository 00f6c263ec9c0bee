#pragma once

// Univariate margins: CDF, generalized inverse, and the distributional
// transform tau_F(x, lambda) = P(X < x) + lambda * P(X = x) that maps
// arbitrary (possibly discrete) variables to U(0,1).

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "special.hpp"

namespace depsens {

class margin {
 public:
  enum class family { uniform, normal, student_t, beta, bernoulli, discrete_finite, empirical };

  static margin uniform(double a, double b) {
    if (!(b > a)) throw std::invalid_argument("uniform margin: requires b > a");
    margin m(family::uniform);
    m.p1_ = a;
    m.p2_ = b;
    return m;
  }

  static margin normal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("normal margin: sigma must be > 0");
    margin m(family::normal);
    m.p1_ = mu;
    m.p2_ = sigma;
    return m;
  }

  static margin student_t(double nu, double location = 0.0, double scale = 1.0) {
    if (!(nu > 0.0)) throw std::invalid_argument("student margin: nu must be > 0");
    if (!(scale > 0.0)) throw std::invalid_argument("student margin: scale must be > 0");
    margin m(family::student_t);
    m.p1_ = location;
    m.p2_ = scale;
    m.nu_ = nu;
    return m;
  }

  static margin beta(double alpha, double bet) {
    if (!(alpha > 0.0 && bet > 0.0))
      throw std::invalid_argument("beta margin: alpha, beta must be > 0");
    margin m(family::beta);
    m.p1_ = alpha;
    m.p2_ = bet;
    return m;
  }

  static margin bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("bernoulli margin: p must lie in [0,1]");
    margin m(family::bernoulli);
    m.p1_ = p;
    m.values_ = {0.0, 1.0};
    m.cum_ = {1.0 - p, 1.0};
    return m;
  }

  static margin discrete_finite(std::vector<double> values, std::vector<double> probs) {
    if (values.empty() || values.size() != probs.size())
      throw std::invalid_argument("discrete margin: values/probs size mismatch");
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    margin m(family::discrete_finite);
    double total = 0.0;
    for (std::size_t i : order) {
      if (!(probs[i] >= 0.0)) throw std::invalid_argument("discrete margin: negative probability");
      if (!m.values_.empty() && values[i] == m.values_.back())
        throw std::invalid_argument("discrete margin: duplicate support value");
      total += probs[i];
      m.values_.push_back(values[i]);
      m.cum_.push_back(total);
    }
    if (std::fabs(total - 1.0) > 1e-12)
      throw std::invalid_argument("discrete margin: probabilities must sum to 1 (1e-12)");
    m.cum_.back() = 1.0;
    return m;
  }

  // Right-continuous ECDF; atoms of mass multiplicity/n at each sample value.
  static margin empirical(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("empirical margin: empty sample");
    std::sort(sample.begin(), sample.end());
    margin m(family::empirical);
    const double n = static_cast<double>(sample.size());
    std::size_t i = 0;
    double seen = 0.0;
    while (i < sample.size()) {
      std::size_t j = i;
      while (j < sample.size() && sample[j] == sample[i]) ++j;
      seen += static_cast<double>(j - i);
      m.values_.push_back(sample[i]);
      m.cum_.push_back(seen / n);
      i = j;
    }
    m.cum_.back() = 1.0;
    return m;
  }

  family fam() const { return f_; }

  bool continuous() const {
    switch (f_) {
      case family::uniform:
      case family::normal:
      case family::student_t:
      case family::beta:
        return true;
      default:
        return false;
    }
  }

  // P(X <= x)
  double cdf(double x) const {
    switch (f_) {
      case family::uniform:
        return std::clamp((x - p1_) / (p2_ - p1_), 0.0, 1.0);
      case family::normal:
        return norm_cdf((x - p1_) / p2_);
      case family::student_t:
        return t_cdf((x - p1_) / p2_, nu_);
      case family::beta:
        return beta_cdf(x, p1_, p2_);
      default: {
        auto it = std::upper_bound(values_.begin(), values_.end(), x);
        if (it == values_.begin()) return 0.0;
        return cum_[static_cast<std::size_t>(it - values_.begin()) - 1];
      }
    }
  }

  // P(X < x)
  double cdf_left(double x) const {
    if (continuous()) return cdf(x);
    auto it = std::lower_bound(values_.begin(), values_.end(), x);
    if (it == values_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - values_.begin()) - 1];
  }

  // P(X = x); zero everywhere for continuous families.
  double pmf(double x) const {
    if (continuous()) return 0.0;
    auto it = std::lower_bound(values_.begin(), values_.end(), x);
    if (it == values_.end() || *it != x) return 0.0;
    const std::size_t k = static_cast<std::size_t>(it - values_.begin());
    return cum_[k] - (k ? cum_[k - 1] : 0.0);
  }

  // Generalized inverse F^-(p) = inf{x : F(x) >= p}. p in {0,1} maps to the
  // support bound when finite, otherwise a domain error.
  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("quantile: p outside [0,1]");
    if (p == 0.0 || p == 1.0) {
      const double bound = (p == 0.0) ? support_lo() : support_hi();
      if (!std::isfinite(bound))
        throw std::domain_error("quantile: unbounded support at p=" + std::to_string(p));
      return bound;
    }
    switch (f_) {
      case family::uniform:
        return p1_ + (p2_ - p1_) * p;
      case family::normal:
        return p1_ + p2_ * norm_quantile(p);
      case family::student_t:
        return p1_ + p2_ * t_quantile(p, nu_);
      case family::beta:
        return beta_quantile(p, p1_, p2_);
      default: {
        auto it = std::lower_bound(cum_.begin(), cum_.end(), p);
        if (it == cum_.end()) return values_.back();
        return values_[static_cast<std::size_t>(it - cum_.begin())];
      }
    }
  }

  // Distributional transform: continuous margins collapse to F(x).
  double transform(double x, double lambda) const {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::domain_error("distributional transform: lambda outside [0,1]");
    if (continuous()) return cdf(x);
    return cdf_left(x) + lambda * pmf(x);
  }

  double support_lo() const {
    switch (f_) {
      case family::uniform:
        return p1_;
      case family::beta:
        return 0.0;
      case family::normal:
      case family::student_t:
        return -std::numeric_limits<double>::infinity();
      default:
        return values_.front();
    }
  }

  double support_hi() const {
    switch (f_) {
      case family::uniform:
        return p2_;
      case family::beta:
        return 1.0;
      case family::normal:
      case family::student_t:
        return std::numeric_limits<double>::infinity();
      default:
        return values_.back();
    }
  }

  // Parameter accessors used by config echo / serialization.
  double param1() const { return p1_; }
  double param2() const { return p2_; }
  double dof() const { return nu_; }
  const std::vector<double>& support_values() const { return values_; }
  const std::vector<double>& cumulative() const { return cum_; }

 private:
  explicit margin(family f) : f_(f) {}

  family f_;
  double p1_ = 0.0, p2_ = 1.0, nu_ = 0.0;
  std::vector<double> values_, cum_;
};

}  // namespace depsens
