#pragma once
// Dependency models learned from data: rejection sampling under constraints
// and quantile-regression (pinball-loss) conditional models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "depsens/common.hpp"
#include "depsens/depmodel.hpp"
#include "depsens/margins.hpp"
#include "depsens/sampling.hpp"

namespace depsens {

// ----------------------------------------------------------------------------
// Constrained (rejection) sampling
// ----------------------------------------------------------------------------

// Acceptance region for the constraint image c(x): either an axis-aligned box
// or an arbitrary predicate.
class acceptance_region {
 public:
  static acceptance_region box(std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size() || lo.empty())
      throw std::invalid_argument("acceptance_region::box: bounds size mismatch");
    acceptance_region r;
    r.lo_ = std::move(lo);
    r.hi_ = std::move(hi);
    return r;
  }
  static acceptance_region predicate(std::function<bool(std::span<const double>)> p) {
    if (!p) throw std::invalid_argument("acceptance_region::predicate: empty function");
    acceptance_region r;
    r.pred_ = std::move(p);
    return r;
  }

  bool contains(std::span<const double> v) const {
    if (pred_) return pred_(v);
    if (v.size() != lo_.size())
      throw std::invalid_argument("acceptance_region: constraint dimension mismatch");
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(v[i] >= lo_[i] && v[i] <= hi_[i])) return false;
    return true;
  }

 private:
  acceptance_region() = default;
  std::vector<double> lo_, hi_;
  std::function<bool(std::span<const double>)> pred_;
};

// Base sampler X ~ F driven by d uniforms per candidate, a constraint map
// c : R^d -> R^n and an acceptance region D.  Every emitted sample satisfies
// c(x) in D exactly; acceptance-rate telemetry is kept on the object.
struct constrained_sampler {
  int dim = 0;            // candidate dimension d
  int constraint_dim = 0; // n, dimension of c(x)
  // Maps one row of `dim` uniforms in (0,1) to a candidate x.
  std::function<void(std::span<const double>, std::span<double>)> base;
  // Constraint map; if empty, the identity on x is used (constraint_dim = dim).
  std::function<void(std::span<const double>, std::span<double>)> constraint;
  acceptance_region region = acceptance_region::predicate([](std::span<const double>) { return true; });

  mutable std::uint64_t attempts = 0;
  mutable std::uint64_t accepted = 0;
  double acceptance_rate() const {
    return attempts == 0 ? 1.0 : double(accepted) / double(attempts);
  }
};

// Draws m rows satisfying the constraint, deterministically in (seed).  The
// candidate stream is indexed by attempt count, so accepted rows are a
// measurable function of the seed alone.  If after any multiple of 10^6
// attempts the acceptance rate is below 1e-4, the constraint is declared
// infeasible.
inline Eigen::MatrixXd rejection_sample(const constrained_sampler& s, std::size_t m,
                                        std::uint64_t seed) {
  if (s.dim <= 0 || !s.base) throw std::invalid_argument("rejection_sample: sampler incomplete");
  const int cd = s.constraint ? s.constraint_dim : s.dim;
  if (cd <= 0) throw std::invalid_argument("rejection_sample: bad constraint dimension");
  Eigen::MatrixXd out(m, s.dim);
  counter_rng rng(seed, 0);
  std::vector<double> u(s.dim), x(s.dim), c(cd);
  s.attempts = 0;
  s.accepted = 0;
  std::uint64_t k = 0;
  std::size_t rows = 0;
  while (rows < m) {
    for (int j = 0; j < s.dim; ++j) u[j] = rng.u01(k * std::uint64_t(s.dim) + j);
    ++k;
    ++s.attempts;
    s.base(u, x);
    std::span<const double> cv;
    if (s.constraint) {
      s.constraint(x, c);
      cv = std::span<const double>(c.data(), c.size());
    } else {
      cv = std::span<const double>(x.data(), x.size());
    }
    if (s.region.contains(cv)) {
      for (int j = 0; j < s.dim; ++j) out(rows, j) = x[j];
      ++rows;
      ++s.accepted;
    }
    if (s.attempts % 1000000 == 0 && s.acceptance_rate() < 1e-4)
      throw infeasible_constraint_error(
          "rejection sampling appears infeasible: acceptance rate " +
              std::to_string(s.acceptance_rate()) + " after " + std::to_string(s.attempts) +
              " attempts",
          s.acceptance_rate());
  }
  return out;
}

// ----------------------------------------------------------------------------
// Pinball loss and quantile-regression dependency models
// ----------------------------------------------------------------------------

// Koenker-Bassett check function L(x,u) = x (u - 1{x<0}); nonnegative, convex
// in x, and zero at x = 0.
inline double pinball_loss(double x, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("pinball_loss: level outside [0,1]");
  return x * (u - (x < 0.0 ? 1.0 : 0.0));
}

enum class qfeature { one, lin, quad, abs_lin };

inline const char* qfeature_name(qfeature f) {
  switch (f) {
    case qfeature::one: return "1";
    case qfeature::lin: return "x";
    case qfeature::quad: return "x^2";
    case qfeature::abs_lin: return "|x|";
  }
  return "?";
}

inline qfeature qfeature_from_name(const std::string& s) {
  if (s == "1") return qfeature::one;
  if (s == "x") return qfeature::lin;
  if (s == "x^2") return qfeature::quad;
  if (s == "|x|") return qfeature::abs_lin;
  throw std::invalid_argument("unknown quantile feature: " + s);
}

inline double qfeature_eval(qfeature f, double x) {
  switch (f) {
    case qfeature::one: return 1.0;
    case qfeature::lin: return x;
    case qfeature::quad: return x * x;
    case qfeature::abs_lin: return std::abs(x);
  }
  return 0.0;
}

struct quantile_fit_options {
  std::vector<double> levels;                            // default: 99 centiles
  std::vector<qfeature> features = {qfeature::one, qfeature::lin, qfeature::quad};
  double ridge = 1e-3;   // weight on (1/2)||theta||^2
  int max_iters = 5000;
  double tol = 1e-6;     // relative objective decrease per checkpoint window
  int window = 30;       // iterations between convergence checkpoints
  int threads = 1;       // levels are independent optimizations

  static std::vector<double> default_levels() {
    std::vector<double> z(99);
    for (int k = 1; k <= 99; ++k) z[k - 1] = k / 100.0;
    return z;
  }
};

// Raised when subgradient descent fails to reach the objective tolerance.
class fitting_error : public std::runtime_error {
 public:
  fitting_error(double level, int iters, double rel)
      : std::runtime_error("quantile fit did not converge at level " + std::to_string(level) +
                           " after " + std::to_string(iters) +
                           " iterations (last relative decrease " + std::to_string(rel) + ")"),
        level(level), iterations(iters), last_relative_decrease(rel) {}
  double level;
  int iterations;
  double last_relative_decrease;
};

// Conditional model of a pair (X_cond, X_other) known only through a sample:
// a table of linear-in-features quantile curves on a level grid.  Usable as a
// d=2 dependency model by feeding one U(0,1) latent per draw.  Monotonicity
// across levels is enforced at evaluation time by rearrangement (the grid
// values at the conditioning point are sorted before interpolation).
class quantile_dm final : public dependency_model {
 public:
  quantile_dm(int cond, std::vector<qfeature> features, std::vector<double> levels,
              std::vector<Eigen::VectorXd> coef, std::vector<double> coverage = {})
      : dependency_model(2, cond, {1 - cond}),
        features_(std::move(features)),
        levels_(std::move(levels)),
        coef_(std::move(coef)),
        coverage_(std::move(coverage)) {
    if (levels_.empty() || coef_.size() != levels_.size())
      throw std::invalid_argument("quantile_dm: coefficient table shape mismatch");
    for (double z : levels_)
      if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("quantile_dm: level outside (0,1)");
    if (!std::is_sorted(levels_.begin(), levels_.end()))
      throw std::invalid_argument("quantile_dm: levels must be increasing");
    for (const auto& th : coef_)
      if (th.size() != static_cast<Eigen::Index>(features_.size()))
        throw std::invalid_argument("quantile_dm: coefficient length mismatch");
  }

  latent_law latent(int) const override { return {latent_law::kind::uniform01, 0.0}; }
  int aux_count() const override { return 0; }
  bool cond_continuous() const override { return true; }

  // Conditional quantile at level z of the non-conditioning component given x.
  double quantile_at(double x, double z) const {
    const std::size_t L = levels_.size();
    std::vector<double> q(L);
    for (std::size_t l = 0; l < L; ++l) {
      double v = 0.0;
      for (std::size_t j = 0; j < features_.size(); ++j)
        v += coef_[l][static_cast<Eigen::Index>(j)] * qfeature_eval(features_[j], x);
      q[l] = v;
    }
    std::sort(q.begin(), q.end());
    if (z <= levels_.front()) return q.front();
    if (z >= levels_.back()) return q.back();
    auto it = std::upper_bound(levels_.begin(), levels_.end(), z);
    std::size_t hi = static_cast<std::size_t>(it - levels_.begin());
    std::size_t lo = hi - 1;
    double t = (z - levels_[lo]) / (levels_[hi] - levels_[lo]);
    return q[lo] + t * (q[hi] - q[lo]);
  }

  const std::vector<double>& levels() const { return levels_; }
  const std::vector<Eigen::VectorXd>& coefficients() const { return coef_; }
  const std::vector<qfeature>& features() const { return features_; }
  const std::vector<double>& coverage() const { return coverage_; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["type"] = "quantile-dm";
    j["dim"] = 2;
    j["cond"] = cond_position();
    nlohmann::ordered_json feats = nlohmann::ordered_json::array();
    for (auto f : features_) feats.push_back(qfeature_name(f));
    j["features"] = std::move(feats);
    j["levels"] = levels_;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& th : coef_) {
      std::vector<double> r(th.data(), th.data() + th.size());
      rows.push_back(r);
    }
    j["coefficients"] = std::move(rows);
    if (!coverage_.empty()) j["coverage"] = coverage_;
    return j;
  }

  static quantile_dm from_json(const nlohmann::json& j) {
    if (j.at("type").get<std::string>() != "quantile-dm")
      throw std::invalid_argument("quantile_dm::from_json: wrong type tag");
    std::vector<qfeature> feats;
    for (const auto& f : j.at("features")) feats.push_back(qfeature_from_name(f.get<std::string>()));
    std::vector<double> levels = j.at("levels").get<std::vector<double>>();
    std::vector<Eigen::VectorXd> coef;
    for (const auto& row : j.at("coefficients")) {
      auto v = row.get<std::vector<double>>();
      coef.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    std::vector<double> cov;
    if (j.contains("coverage")) cov = j.at("coverage").get<std::vector<double>>();
    return quantile_dm(j.at("cond").get<int>(), std::move(feats), std::move(levels),
                       std::move(coef), std::move(cov));
  }

  void eval_prefix(int n, double x, std::span<const double> z, std::span<const double>,
                   std::span<double> out) const override {
    if (n < 1) return;
    out[0] = quantile_at(x, z[0]);
  }

 private:
  std::vector<qfeature> features_;
  std::vector<double> levels_;
  std::vector<Eigen::VectorXd> coef_;
  std::vector<double> coverage_; // empirical P(y <= fitted) per level, from the fit
};

namespace detail {

// Objective J(theta) = sum_i L(y_i - phi_i' theta, z) + (ridge/2) ||theta||^2.
inline double pinball_objective(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& theta, double z, double ridge) {
  Eigen::VectorXd r = y - Phi * theta;
  double J = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) J += pinball_loss(r[i], z);
  return J + 0.5 * ridge * theta.squaredNorm();
}

struct level_fit_result {
  Eigen::VectorXd theta;
  double coverage = 0.0;
  bool converged = false;
  int iterations = 0;
  double last_rel = 0.0;
};

// Subgradient descent with a diagonal preconditioner (inverse feature second
// moments) and decaying normalized steps; the best iterate is retained.
inline level_fit_result fit_one_level(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                                      double z, double ridge, Eigen::VectorXd theta0,
                                      const quantile_fit_options& opt) {
  const Eigen::Index m = Phi.rows(), p = Phi.cols();
  Eigen::VectorXd precond(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double ms = Phi.col(j).squaredNorm() / double(m);
    precond[j] = 1.0 / std::max(ms, 1e-12);
  }
  Eigen::VectorXd theta = theta0;
  Eigen::VectorXd best = theta;
  double J_best = pinball_objective(Phi, y, theta, z, ridge);
  double step0 = 0.1 * (std::sqrt(y.squaredNorm() / double(m)) + 1e-12);

  level_fit_result res;
  double J_checkpoint = J_best;
  double last_rel = std::numeric_limits<double>::infinity();
  int t = 0;
  for (; t < opt.max_iters; ++t) {
    Eigen::VectorXd r = y - Phi * theta;
    Eigen::VectorXd s(m);
    for (Eigen::Index i = 0; i < m; ++i) s[i] = z - (r[i] < 0.0 ? 1.0 : 0.0);
    Eigen::VectorXd g = -(Phi.transpose() * s) + ridge * theta;
    Eigen::VectorXd dir = precond.asDiagonal() * g;
    double nn = dir.norm();
    if (nn < 1e-300) break; // exact stationary point
    theta -= (step0 / std::sqrt(double(t + 1))) * dir / nn;
    double J = pinball_objective(Phi, y, theta, z, ridge);
    if (J < J_best) {
      J_best = J;
      best = theta;
    }
    if ((t + 1) % opt.window == 0) {
      last_rel = (J_checkpoint - J_best) / std::max(std::abs(J_best), 1e-300);
      if (last_rel < opt.tol) {
        res.converged = true;
        ++t;
        break;
      }
      J_checkpoint = J_best;
    }
  }
  res.theta = best;
  res.iterations = t;
  res.last_rel = last_rel;
  if (!res.converged && t >= opt.max_iters) res.converged = false;
  Eigen::VectorXd fitted = Phi * res.theta;
  Eigen::Index below = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (y[i] <= fitted[i]) ++below;
  res.coverage = double(below) / double(m);
  return res;
}

} // namespace detail

// Fits quantile curves x_other | x_cond on a level grid from an m x 2 sample.
// Initialization is ridge least squares with the intercept shifted to the
// residual quantile; refinement is subgradient descent on the regularized
// pinball objective.  Coverage per level is recorded on the returned model.
inline quantile_dm fit_quantile_dm(const Eigen::MatrixXd& sample, int cond_col = 0,
                                   quantile_fit_options opt = {}) {
  if (sample.cols() != 2) throw std::invalid_argument("fit_quantile_dm: sample must be m x 2");
  if (sample.rows() < 50) throw std::invalid_argument("fit_quantile_dm: need at least 50 rows");
  if (cond_col != 0 && cond_col != 1) throw std::invalid_argument("fit_quantile_dm: cond_col must be 0 or 1");
  if (opt.levels.empty()) opt.levels = quantile_fit_options::default_levels();
  for (double z : opt.levels)
    if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("fit_quantile_dm: levels must lie in (0,1)");
  if (!std::is_sorted(opt.levels.begin(), opt.levels.end()))
    throw std::invalid_argument("fit_quantile_dm: levels must be increasing");
  if (opt.features.empty()) throw std::invalid_argument("fit_quantile_dm: empty feature set");

  const Eigen::Index m = sample.rows();
  const Eigen::Index p = static_cast<Eigen::Index>(opt.features.size());
  Eigen::VectorXd x = sample.col(cond_col), y = sample.col(1 - cond_col);
  Eigen::MatrixXd Phi(m, p);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      Phi(i, j) = qfeature_eval(opt.features[static_cast<std::size_t>(j)], x[i]);

  // Ridge least-squares initialization (conditional-mean surrogate).
  Eigen::MatrixXd G = Phi.transpose() * Phi;
  G.diagonal().array() += std::max(opt.ridge, 1e-10);
  Eigen::VectorXd theta_ls = G.ldlt().solve(Phi.transpose() * y);
  Eigen::VectorXd resid = y - Phi * theta_ls;
  std::vector<double> rs(resid.data(), resid.data() + resid.size());
  std::sort(rs.begin(), rs.end());
  int intercept = -1;
  for (std::size_t j = 0; j < opt.features.size(); ++j)
    if (opt.features[j] == qfeature::one) intercept = static_cast<int>(j);

  const std::size_t L = opt.levels.size();
  std::vector<detail::level_fit_result> fits(L);
  parallel_for(L, opt.threads, [&](std::size_t l) {
    double z = opt.levels[l];
    Eigen::VectorXd th0 = theta_ls;
    if (intercept >= 0) {
      // shift to the empirical z-quantile of the LS residuals
      double pos = z * double(m - 1);
      auto k = static_cast<std::size_t>(pos);
      double frac = pos - double(k);
      double qz = rs[k] + (k + 1 < rs.size() ? frac * (rs[k + 1] - rs[k]) : 0.0);
      th0[intercept] += qz;
    }
    fits[l] = detail::fit_one_level(Phi, y, z, opt.ridge, std::move(th0), opt);
  });

  std::vector<Eigen::VectorXd> coef(L);
  std::vector<double> coverage(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (!fits[l].converged)
      throw fitting_error(opt.levels[l], fits[l].iterations, fits[l].last_rel);
    coef[l] = std::move(fits[l].theta);
    coverage[l] = fits[l].coverage;
  }
  return quantile_dm(cond_col, opt.features, opt.levels, std::move(coef), std::move(coverage));
}

} // namespace depsens
