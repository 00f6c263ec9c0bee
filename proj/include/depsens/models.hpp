#pragma once
// Built-in test models with their input block structures and closed-form
// reference indices, plus expression-defined models.

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "depsens/common.hpp"
#include "depsens/expression.hpp"
#include "depsens/margins.hpp"
#include "depsens/representations.hpp"

namespace depsens {

enum class model_kind { linear_gaussian, portfolio, gsobol, expression };

class model {
 public:
  static model linear_gaussian(std::array<double, 3> sigma, double rho12, double rho13,
                               double rho23) {
    for (double s : sigma)
      if (!(s > 0.0)) throw std::invalid_argument("linear_gaussian: sigma must be positive");
    Eigen::MatrixXd R(3, 3);
    R << 1, rho12, rho13, rho12, 1, rho23, rho13, rho23, 1;
    std::vector<margin> ms = {margin::normal(0, sigma[0]), margin::normal(0, sigma[1]),
                              margin::normal(0, sigma[2])};
    dependent_block b;
    b.family = block_family::gaussian_copula;
    b.indices = {0, 1, 2};
    b.margins = ms;
    b.correlation = R;
    model m(model_kind::linear_gaussian, 3, 1,
            block_structure(3, {}, {}, {std::move(b)}));
    m.sigma_ = {sigma[0], sigma[1], sigma[2]};
    m.rho_ = {rho12, rho13, rho23};
    return m;
  }

  static model portfolio(std::array<double, 4> sigma, double rho12, double rho34, double nu) {
    for (double s : sigma)
      if (!(s > 0.0)) throw std::invalid_argument("portfolio: sigma must be positive");
    if (!(nu > 4.0)) throw std::invalid_argument("portfolio: nu must exceed 4 (finite fourth moments)");
    Eigen::MatrixXd R1(2, 2), R2(2, 2);
    R1 << 1, rho12, rho12, 1;
    R2 << 1, rho34, rho34, 1;
    dependent_block b1;
    b1.family = block_family::gaussian_copula;
    b1.indices = {0, 1};
    b1.margins = {margin::normal(0, sigma[0]), margin::normal(0, sigma[1])};
    b1.correlation = R1;
    dependent_block b2;
    b2.family = block_family::student_copula;
    b2.indices = {2, 3};
    b2.margins = {margin::student_t(nu, 0, sigma[2]), margin::student_t(nu, 0, sigma[3])};
    b2.correlation = R2;
    b2.nu = nu;
    model m(model_kind::portfolio, 4, 1,
            block_structure(4, {}, {}, {std::move(b1), std::move(b2)}));
    m.sigma_ = {sigma[0], sigma[1], sigma[2], sigma[3]};
    m.rho_ = {rho12, rho34};
    m.nu_ = nu;
    return m;
  }

  // d=10, four outputs: products of (|4x_j - 2| + a_i)/(1 + a_i) with
  // constant rows a = (10, 20, 50, 60); uniform margins; one Gaussian-copula
  // block {1,2,3}, independents {4..8}, simplex pair {9,10}.
  static model gsobol() {
    Eigen::MatrixXd R(3, 3);
    R << 1, 0.0, 0.01, 0.0, 1, 0.85, 0.01, 0.85, 1;
    dependent_block b1;
    b1.family = block_family::gaussian_copula;
    b1.indices = {0, 1, 2};
    b1.margins = {margin::uniform(0, 1), margin::uniform(0, 1), margin::uniform(0, 1)};
    b1.correlation = R;
    dependent_block b2;
    b2.family = block_family::simplex;
    b2.indices = {8, 9};
    std::vector<int> indep = {3, 4, 5, 6, 7};
    std::vector<margin> indep_m(5, margin::uniform(0, 1));
    model m(model_kind::gsobol, 10, 4,
            block_structure(10, std::move(indep), std::move(indep_m),
                            {std::move(b1), std::move(b2)}));
    return m;
  }

  static model expression_model(int d, std::vector<expr> outputs, block_structure structure) {
    if (outputs.empty()) throw std::invalid_argument("expression model: no outputs");
    if (structure.dim() != d) throw std::invalid_argument("expression model: dimension mismatch");
    for (const auto& e : outputs)
      if (e.max_variable() >= d)
        throw std::invalid_argument("expression model: variable index exceeds dimension");
    model m(model_kind::expression, d, static_cast<int>(outputs.size()), std::move(structure));
    m.outputs_ = std::move(outputs);
    return m;
  }

  model_kind kind() const { return kind_; }
  int dim() const { return d_; }
  int out_dim() const { return n_; }
  const block_structure& structure() const { return *structure_; }
  double nu() const { return nu_; }
  const std::vector<double>& sigma() const { return sigma_; }
  const std::vector<double>& rho() const { return rho_; }
  const std::vector<expr>& outputs() const { return outputs_; }

  void evaluate(std::span<const double> x, std::span<double> y) const {
    switch (kind_) {
      case model_kind::linear_gaussian:
        y[0] = x[0] + x[1] + x[2];
        return;
      case model_kind::portfolio:
        y[0] = x[0] * x[1] + x[2] * x[3];
        return;
      case model_kind::gsobol: {
        static constexpr double a[4] = {10.0, 20.0, 50.0, 60.0};
        double logp[4] = {0, 0, 0, 0};
        for (int j = 0; j < 10; ++j) {
          const double b = std::abs(4.0 * x[static_cast<std::size_t>(j)] - 2.0);
          for (int i = 0; i < 4; ++i) logp[i] += std::log((b + a[i]) / (1.0 + a[i]));
        }
        for (int i = 0; i < 4; ++i) y[static_cast<std::size_t>(i)] = std::exp(logp[i]);
        return;
      }
      case model_kind::expression:
        for (std::size_t i = 0; i < outputs_.size(); ++i) y[i] = outputs_[i].evaluate(x);
        return;
    }
    throw std::logic_error("model::evaluate: unknown kind");
  }

 private:
  model(model_kind k, int d, int n, block_structure s)
      : kind_(k), d_(d), n_(n), structure_(std::make_shared<block_structure>(std::move(s))) {}

  model_kind kind_;
  int d_, n_;
  std::shared_ptr<block_structure> structure_;
  std::vector<double> sigma_, rho_;
  double nu_ = 0.0;
  std::vector<expr> outputs_;
};

// ----------------------------------------------------------------------------
// Closed-form reference indices
// ----------------------------------------------------------------------------

struct analytic_entry {
  std::vector<int> subset;  // global 0-based, sorted
  double first = 0.0;
  double total = 0.0;
};

struct analytic_reference {
  bool available = false;
  double variance = 0.0;
  std::vector<analytic_entry> entries;  // all nonempty subsets

  const analytic_entry* find(std::span<const int> u) const {
    std::vector<int> key(u.begin(), u.end());
    std::sort(key.begin(), key.end());
    for (const auto& e : entries)
      if (e.subset == key) return &e;
    return nullptr;
  }
};

namespace detail {

// Sum-of-entries linear functional of a centered Gaussian vector: conditional
// variances from the Cholesky factor taken in (subset-first) order.
inline analytic_reference linear_gaussian_reference(const std::vector<double>& sigma,
                                                    const std::vector<double>& rho) {
  Eigen::MatrixXd cov(3, 3);
  cov << sigma[0] * sigma[0], rho[0] * sigma[0] * sigma[1], rho[1] * sigma[0] * sigma[2],
      rho[0] * sigma[0] * sigma[1], sigma[1] * sigma[1], rho[2] * sigma[1] * sigma[2],
      rho[1] * sigma[0] * sigma[2], rho[2] * sigma[1] * sigma[2], sigma[2] * sigma[2];
  analytic_reference ref;
  ref.available = true;
  ref.variance = cov.sum();
  for (int mask = 1; mask < 8; ++mask) {
    analytic_entry e;
    std::vector<int> order;
    for (int j = 0; j < 3; ++j)
      if (mask & (1 << j)) {
        e.subset.push_back(j);
        order.push_back(j);
      }
    for (int j = 0; j < 3; ++j)
      if (!(mask & (1 << j))) order.push_back(j);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(3, 3);
    for (int r = 0; r < 3; ++r) P(r, order[static_cast<std::size_t>(r)]) = 1.0;
    Eigen::MatrixXd permuted = P * cov * P.transpose();
    Eigen::MatrixXd L = permuted.llt().matrixL();
    // y = sum_j x_j is linear in the independent coordinates; conditioning on
    // the lead + prefix latents keeps exactly the first |u| columns.
    double du = 0.0;
    for (std::size_t c = 0; c < e.subset.size(); ++c)
      du += L.col(static_cast<Eigen::Index>(c)).sum() * L.col(static_cast<Eigen::Index>(c)).sum();
    e.first = du / ref.variance;
    e.total = e.first;  // no interactions between independent coordinates
    ref.entries.push_back(std::move(e));
  }
  return ref;
}

// Product-of-pairs portfolio: one Gaussian pair, one Student pair.  Per-block
// first-order contributions add; totals lose only the untouched blocks'
// variances (the non-lead latents carry no first-order effect here).
inline analytic_reference portfolio_reference(const std::vector<double>& sigma, double rho12,
                                              double rho34, double nu) {
  const double s12 = sigma[0] * sigma[0] * sigma[1] * sigma[1];
  const double s34 = sigma[2] * sigma[2] * sigma[3] * sigma[3];
  const double var1 = s12 * (1.0 + rho12 * rho12);
  const double var2 =
      s34 * nu * nu * ((nu - 2.0) + rho34 * rho34 * nu) / ((nu - 2.0) * (nu - 2.0) * (nu - 4.0));
  const double d1 = 2.0 * rho12 * rho12 * s12;
  const double d2 = 2.0 * rho34 * rho34 * s34 * nu * nu * (nu - 1.0) /
                    ((nu - 2.0) * (nu - 2.0) * (nu - 4.0));
  analytic_reference ref;
  ref.available = true;
  ref.variance = var1 + var2;
  const double blk_first[2][3] = {{0.0, d1, var1}, {0.0, d2, var2}};
  const double blk_var[2] = {var1, var2};
  for (int mask = 1; mask < 16; ++mask) {
    analytic_entry e;
    int touched[2] = {0, 0};
    for (int j = 0; j < 4; ++j)
      if (mask & (1 << j)) {
        e.subset.push_back(j);
        ++touched[j / 2];
      }
    double du = blk_first[0][touched[0]] + blk_first[1][touched[1]];
    double dtot = ref.variance;
    for (int k = 0; k < 2; ++k)
      if (touched[k] == 0) dtot -= blk_var[k];
    e.first = du / ref.variance;
    e.total = dtot / ref.variance;
    ref.entries.push_back(std::move(e));
  }
  return ref;
}

}  // namespace detail

inline analytic_reference analytic_indices(const model& m) {
  switch (m.kind()) {
    case model_kind::linear_gaussian:
      return detail::linear_gaussian_reference(m.sigma(), m.rho());
    case model_kind::portfolio:
      return detail::portfolio_reference(m.sigma(), m.rho()[0], m.rho()[1], m.nu());
    default:
      return {};  // not available
  }
}

}  // namespace depsens
