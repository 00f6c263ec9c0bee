#pragma once

// Dependency models (DMs): triangular maps r_j expressing the remaining
// components of a random vector as functions of one conditioning component
// plus independent latents, preserving the joint law. Constructors cover the
// Gaussian and Student copulas, transformed / abs-symmetric wrappers, and the
// two-dimensional simplex pair. Prefix conditioning splits a DM into a prefix
// law and a suffix DM sharing the exact evaluation path (bit-exact
// composition).

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "common.hpp"
#include "margins.hpp"
#include "special.hpp"

namespace depsens {

// Law of one latent column, exposed so sample layouts can map uniforms.
struct latent_law {
  enum class kind { normal01, student_t, uniform01 };
  kind k = kind::normal01;
  double dof = 0.0;  // student_t only

  double quantile(double u) const {
    switch (k) {
      case kind::normal01:
        return norm_quantile(u);
      case kind::student_t:
        return t_quantile(u, dof);
      default:
        return u;
    }
  }
};

namespace detail {
// Probabilities fed to quantile chains are kept strictly inside (0,1) so that
// unbounded margins never see the endpoints (roundoff guard only).
inline double clamp_unit(double p) {
  constexpr double lo = 0x1p-64, hi = 1.0 - 0x1p-53;
  return p < lo ? lo : (p > hi ? hi : p);
}
}  // namespace detail

class dependency_model {
 public:
  virtual ~dependency_model() = default;

  // Block size d; the DM produces d-1 output components.
  int dim() const { return d_; }
  int output_count() const { return d_ - 1; }

  // Block-local position of the conditioning component.
  int cond_position() const { return cond_; }

  // Block-local positions of outputs in evaluation order (w_1, ..., w_{d-1}).
  const std::vector<int>& output_order() const { return order_; }

  // Latent law for evaluation step i (0-based).
  virtual latent_law latent(int i) const = 0;

  // Auxiliary U(0,1) inputs beyond the latents (lambda for a discrete
  // conditioning margin, Rademacher uniforms, ...).
  virtual int aux_count() const = 0;

  // True when the conditioning margin is continuous (lambda input unused).
  virtual bool cond_continuous() const = 0;

  // Margin of the conditioning component when known (used for probe grids).
  virtual const margin* cond_margin() const { return nullptr; }

  // Auxiliary-input indices that are tied to the conditioning value and the
  // first n output components (and so must be frozen together with them when
  // conditioning on that prefix).  Default: the lambda uniform of a discrete
  // conditioning margin.
  virtual std::vector<int> prefix_aux(int n) const {
    (void)n;
    std::vector<int> v;
    if (!cond_continuous()) v.push_back(0);
    return v;
  }

  // Evaluate the first n output components given the conditioning value x,
  // latents z (only z[0..n) are read; triangular structure), and auxiliary
  // uniforms. out receives components w_1..w_n.
  virtual void eval_prefix(int n, double x, std::span<const double> z,
                           std::span<const double> aux, std::span<double> out) const = 0;

  void eval(double x, std::span<const double> z, std::span<const double> aux,
            std::span<double> out) const {
    eval_prefix(d_ - 1, x, z, aux, out);
  }

 protected:
  dependency_model(int d, int cond, std::vector<int> order)
      : d_(d), cond_(cond), order_(std::move(order)) {
    if (d_ < 2) throw std::invalid_argument("dependency model: block size must be >= 2");
    if (cond_ < 0 || cond_ >= d_)
      throw std::invalid_argument("dependency model: conditioning index out of range");
    if (static_cast<int>(order_.size()) != d_ - 1)
      throw std::invalid_argument("dependency model: permutation must list the d-1 remaining positions");
    std::vector<char> seen(static_cast<std::size_t>(d_), 0);
    seen[static_cast<std::size_t>(cond_)] = 1;
    for (int w : order_) {
      if (w < 0 || w >= d_ || seen[static_cast<std::size_t>(w)])
        throw std::invalid_argument("dependency model: permutation is not a permutation of the remaining positions");
      seen[static_cast<std::size_t>(w)] = 1;
    }
  }

  int d_, cond_;
  std::vector<int> order_;
};

namespace detail {

// Cholesky factor of R in the order (cond, w_1, ..., w_{d-1}); construction
// fails for asymmetric, non-unit-diagonal, or near-singular matrices
// (smallest eigenvalue < 1e-10) -- no pivoting, no regularization.
inline Eigen::MatrixXd ordered_cholesky(const Eigen::MatrixXd& R, int cond,
                                        const std::vector<int>& order) {
  const int d = static_cast<int>(R.rows());
  if (R.cols() != d) throw std::invalid_argument("copula: correlation matrix must be square");
  for (int i = 0; i < d; ++i) {
    if (std::fabs(R(i, i) - 1.0) > 1e-12)
      throw std::invalid_argument("copula: correlation matrix must have unit diagonal");
    for (int j = 0; j < i; ++j)
      if (std::fabs(R(i, j) - R(j, i)) > 1e-12)
        throw std::invalid_argument("copula: correlation matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < 1e-10)
    throw std::invalid_argument("copula: correlation matrix is not positive definite (min eigenvalue < 1e-10)");
  std::vector<int> perm;
  perm.reserve(static_cast<std::size_t>(d));
  perm.push_back(cond);
  perm.insert(perm.end(), order.begin(), order.end());
  Eigen::MatrixXd Rp(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      Rp(i, j) = R(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  Eigen::LLT<Eigen::MatrixXd> llt(Rp);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("copula: Cholesky factorization failed");
  return llt.matrixL();
}

inline void check_margins(const std::vector<margin>& margins, int d) {
  if (static_cast<int>(margins.size()) != d)
    throw std::invalid_argument("dependency model: margin count must equal the block size");
}

}  // namespace detail

// Gaussian-copula DM: Y = L [Phi^-1(tau_Fj(x, lambda)), z]^T in the order
// (j, w_1, ..., w_{d-1}); X_{w_i} = F_{w_i}^-(Phi(Y_{w_i})).
class gaussian_copula_dm final : public dependency_model {
 public:
  gaussian_copula_dm(Eigen::MatrixXd R, std::vector<margin> margins, int cond,
                     std::vector<int> order)
      : dependency_model(static_cast<int>(R.rows()), cond, std::move(order)),
        margins_(std::move(margins)),
        L_(detail::ordered_cholesky(R, cond_, order_)) {
    detail::check_margins(margins_, d_);
  }

  latent_law latent(int) const override { return {latent_law::kind::normal01, 0.0}; }
  int aux_count() const override { return cond_continuous() ? 0 : 1; }
  bool cond_continuous() const override {
    return margins_[static_cast<std::size_t>(cond_)].continuous();
  }
  const margin* cond_margin() const override {
    return &margins_[static_cast<std::size_t>(cond_)];
  }
  const std::vector<margin>& margins() const { return margins_; }
  const Eigen::MatrixXd& chol() const { return L_; }

  void eval_prefix(int n, double x, std::span<const double> z,
                   std::span<const double> aux, std::span<double> out) const override {
    const margin& mj = margins_[static_cast<std::size_t>(cond_)];
    const double u0 = mj.continuous() ? mj.cdf(x) : mj.transform(x, aux[0]);
    const double y0 = norm_quantile(detail::clamp_unit(u0));
    for (int i = 1; i <= n; ++i) {
      double y = L_(i, 0) * y0;
      for (int c = 1; c <= i; ++c) y += L_(i, c) * z[static_cast<std::size_t>(c - 1)];
      const margin& mw = margins_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i - 1)])];
      out[static_cast<std::size_t>(i - 1)] = mw.quantile(detail::clamp_unit(norm_cdf(y)));
    }
  }

 private:
  std::vector<margin> margins_;
  Eigen::MatrixXd L_;
};

// Student-copula DM: latent step i uses Z ~ t(nu+i); the radial factors
// sqrt((nu + y0^2) prod_{k<i}(nu+k+z_k^2) / prod_{k<=i}(nu+k)) rebuild the
// elliptical t dependence; X_{w_i} = F^-(T_nu(Y_{w_i})).
class student_copula_dm final : public dependency_model {
 public:
  student_copula_dm(double nu, Eigen::MatrixXd R, std::vector<margin> margins, int cond,
                    std::vector<int> order)
      : dependency_model(static_cast<int>(R.rows()), cond, std::move(order)),
        nu_(nu),
        margins_(std::move(margins)),
        L_(detail::ordered_cholesky(R, cond_, order_)) {
    if (!(nu_ > 0.0)) throw std::invalid_argument("student copula: nu must be > 0");
    detail::check_margins(margins_, d_);
  }

  latent_law latent(int i) const override {
    return {latent_law::kind::student_t, nu_ + static_cast<double>(i + 1)};
  }
  int aux_count() const override { return cond_continuous() ? 0 : 1; }
  bool cond_continuous() const override {
    return margins_[static_cast<std::size_t>(cond_)].continuous();
  }
  const margin* cond_margin() const override {
    return &margins_[static_cast<std::size_t>(cond_)];
  }
  double dof() const { return nu_; }
  const Eigen::MatrixXd& chol() const { return L_; }

  void eval_prefix(int n, double x, std::span<const double> z,
                   std::span<const double> aux, std::span<double> out) const override {
    const margin& mj = margins_[static_cast<std::size_t>(cond_)];
    const double u0 = mj.continuous() ? mj.cdf(x) : mj.transform(x, aux[0]);
    const double y0 = t_quantile(detail::clamp_unit(u0), nu_);
    // v_i = sqrt(s_i) z_i with s_1 = (nu+y0^2)/(nu+1),
    // s_{i+1} = s_i (nu+i+z_i^2)/(nu+i+1).
    double s = (nu_ + y0 * y0) / (nu_ + 1.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1);
    v[0] = y0;
    for (int i = 1; i <= n; ++i) {
      const double zi = z[static_cast<std::size_t>(i - 1)];
      v[static_cast<std::size_t>(i)] = std::sqrt(s) * zi;
      s *= (nu_ + static_cast<double>(i) + zi * zi) / (nu_ + static_cast<double>(i) + 1.0);
    }
    for (int i = 1; i <= n; ++i) {
      double y = 0.0;
      for (int c = 0; c <= i; ++c) y += L_(i, c) * v[static_cast<std::size_t>(c)];
      const margin& mw = margins_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i - 1)])];
      out[static_cast<std::size_t>(i - 1)] =
          mw.quantile(detail::clamp_unit(t_cdf(y, nu_)));
    }
  }

 private:
  double nu_;
  std::vector<margin> margins_;
  Eigen::MatrixXd L_;
};

using scalar_map = std::function<double(double)>;

// Transformed DM (componentwise form): Y_{w_i} = T_{w_i}(r_{w_i}(T_j^-(y), z)).
// T_j must invert exactly on the support; verified on a probe grid at
// construction. The componentwise form keeps the triangular structure, so
// prefix conditioning remains available.
class transform_dm final : public dependency_model {
 public:
  transform_dm(std::shared_ptr<const dependency_model> base, scalar_map tj, scalar_map tj_inv,
               std::vector<scalar_map> t_out, std::vector<double> probe_grid = {})
      : dependency_model(base->dim(), base->cond_position(), base->output_order()),
        base_(std::move(base)),
        tj_(std::move(tj)),
        tj_inv_(std::move(tj_inv)),
        t_out_(std::move(t_out)) {
    if (static_cast<int>(t_out_.size()) != d_ - 1)
      throw std::invalid_argument("transform dm: need one output map per component");
    if (probe_grid.empty()) {
      if (const margin* mj = base_->cond_margin()) {
        for (int c = 1; c <= 99; ++c) probe_grid.push_back(mj->quantile(c / 100.0));
      } else {
        for (int c = -40; c <= 40; ++c) probe_grid.push_back(0.1 * c);
      }
    }
    for (double x : probe_grid) {
      const double back = tj_inv_(tj_(x));
      if (!(std::fabs(back - x) < 1e-9))
        throw std::invalid_argument("transform dm: T_j inverse fails the probe grid (|T^-(T(x))-x| >= 1e-9)");
    }
  }

  latent_law latent(int i) const override { return base_->latent(i); }
  int aux_count() const override { return base_->aux_count(); }
  bool cond_continuous() const override { return base_->cond_continuous(); }

  void eval_prefix(int n, double y, std::span<const double> z,
                   std::span<const double> aux, std::span<double> out) const override {
    base_->eval_prefix(n, tj_inv_(y), z, aux, out);
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] = t_out_[static_cast<std::size_t>(i)](out[static_cast<std::size_t>(i)]);
  }

 private:
  std::shared_ptr<const dependency_model> base_;
  scalar_map tj_, tj_inv_;
  std::vector<scalar_map> t_out_;
};

// Transformed DM with a coupled vector map T_notj acting on the whole output
// vector at once. The coupling destroys the triangular structure, so prefix
// conditioning is unavailable (eval_prefix only at full length).
class vector_transform_dm final : public dependency_model {
 public:
  using vector_map = std::function<void(std::span<const double>, std::span<double>)>;

  vector_transform_dm(std::shared_ptr<const dependency_model> base, scalar_map tj,
                      scalar_map tj_inv, vector_map t_notj, std::vector<double> probe_grid = {})
      : dependency_model(base->dim(), base->cond_position(), base->output_order()),
        base_(std::move(base)),
        tj_(std::move(tj)),
        tj_inv_(std::move(tj_inv)),
        t_notj_(std::move(t_notj)) {
    if (probe_grid.empty()) {
      if (const margin* mj = base_->cond_margin()) {
        for (int c = 1; c <= 99; ++c) probe_grid.push_back(mj->quantile(c / 100.0));
      } else {
        for (int c = -40; c <= 40; ++c) probe_grid.push_back(0.1 * c);
      }
    }
    for (double x : probe_grid)
      if (!(std::fabs(tj_inv_(tj_(x)) - x) < 1e-9))
        throw std::invalid_argument("transform dm: T_j inverse fails the probe grid (|T^-(T(x))-x| >= 1e-9)");
  }

  latent_law latent(int i) const override { return base_->latent(i); }
  int aux_count() const override { return base_->aux_count(); }
  bool cond_continuous() const override { return base_->cond_continuous(); }

  void eval_prefix(int n, double y, std::span<const double> z,
                   std::span<const double> aux, std::span<double> out) const override {
    if (n != d_ - 1)
      throw std::logic_error("transform dm with a coupled vector map cannot split prefixes");
    std::vector<double> tmp(static_cast<std::size_t>(n));
    base_->eval_prefix(n, tj_inv_(y), z, aux, tmp);
    t_notj_(tmp, out);
  }

 private:
  std::shared_ptr<const dependency_model> base_;
  scalar_map tj_, tj_inv_;
  vector_map t_notj_;
};

// DM for symmetric-about-zero targets: conditioning through |y|, outputs
// multiplied by Rademacher signs drawn from auxiliary uniforms.
class abs_symmetric_dm final : public dependency_model {
 public:
  abs_symmetric_dm(std::shared_ptr<const dependency_model> base, scalar_map tj, scalar_map tj_inv,
                   std::vector<scalar_map> t_out, std::vector<double> probe_grid = {})
      : dependency_model(base->dim(), base->cond_position(), base->output_order()),
        inner_(std::make_shared<transform_dm>(base, std::move(tj), std::move(tj_inv),
                                              std::move(t_out), std::move(probe_grid))),
        base_aux_(base->aux_count()) {}

  latent_law latent(int i) const override { return inner_->latent(i); }
  // base aux + one Rademacher uniform per output component
  int aux_count() const override { return base_aux_ + (d_ - 1); }
  bool cond_continuous() const override { return inner_->cond_continuous(); }
  std::vector<int> prefix_aux(int n) const override {
    std::vector<int> v = inner_->prefix_aux(n);
    for (int i = 0; i < n; ++i) v.push_back(base_aux_ + i);  // prefix signs
    return v;
  }

  void eval_prefix(int n, double y, std::span<const double> z,
                   std::span<const double> aux, std::span<double> out) const override {
    inner_->eval_prefix(n, std::fabs(y), z, aux, out);
    for (int i = 0; i < n; ++i) {
      const double u = aux[static_cast<std::size_t>(base_aux_ + i)];
      if (2.0 * u - 1.0 < 0.0) out[static_cast<std::size_t>(i)] = -out[static_cast<std::size_t>(i)];
    }
  }

 private:
  std::shared_ptr<const transform_dm> inner_;
  int base_aux_;
};

// Constrained pair uniform on the simplex {x_a + x_b <= 1} with Beta(1,2)
// margins: the free component is u * (1 - conditioning value).
class simplex_pair_dm final : public dependency_model {
 public:
  explicit simplex_pair_dm(int cond) : dependency_model(2, cond, {1 - cond}) {}

  latent_law latent(int) const override { return {latent_law::kind::uniform01, 0.0}; }
  int aux_count() const override { return 0; }
  bool cond_continuous() const override { return true; }
  const margin* cond_margin() const override {
    static const margin beta12 = margin::beta(1.0, 2.0);
    return &beta12;
  }

  void eval_prefix(int n, double x, std::span<const double> z, std::span<const double>,
                   std::span<double> out) const override {
    if (n >= 1) out[0] = z[0] * (1.0 - x);
  }
};

// Both conditioning choices of the simplex pair, in block-local order.
inline std::pair<std::shared_ptr<dependency_model>, std::shared_ptr<dependency_model>>
simplex_dm() {
  return {std::make_shared<simplex_pair_dm>(0), std::make_shared<simplex_pair_dm>(1)};
}

// Prefix conditioning: the prefix law covers components w_1..w_p; the suffix
// DM consumes (x, z_1..z_p) as its conditioning tuple and the remaining
// latents. Both reuse the base evaluation path, so composing them reproduces
// the full DM bit-exactly.
struct dm_prefix_law {
  std::shared_ptr<const dependency_model> base;
  int p = 0;

  void eval(double x, std::span<const double> z, std::span<const double> aux,
            std::span<double> out) const {
    base->eval_prefix(p, x, z, aux, out);
  }
};

struct dm_suffix {
  std::shared_ptr<const dependency_model> base;
  int p = 0;

  int output_count() const { return base->output_count() - p; }

  void eval(double x, std::span<const double> z_prefix, std::span<const double> z_rest,
            std::span<const double> aux, std::span<double> out) const {
    const int total = base->output_count();
    std::vector<double> z(static_cast<std::size_t>(total));
    for (int i = 0; i < p; ++i) z[static_cast<std::size_t>(i)] = z_prefix[static_cast<std::size_t>(i)];
    for (int i = p; i < total; ++i) z[static_cast<std::size_t>(i)] = z_rest[static_cast<std::size_t>(i - p)];
    std::vector<double> full(static_cast<std::size_t>(total));
    base->eval_prefix(total, x, z, aux, full);
    for (int i = p; i < total; ++i) out[static_cast<std::size_t>(i - p)] = full[static_cast<std::size_t>(i)];
  }
};

struct conditioned_dm {
  dm_prefix_law prefix;
  dm_suffix suffix;
};

inline conditioned_dm dm_condition_prefix(std::shared_ptr<const dependency_model> dm, int p) {
  if (p < 0 || p > dm->output_count())
    throw std::domain_error("dm_condition_prefix: p must lie in [0, d-1]");
  return {dm_prefix_law{dm, p}, dm_suffix{dm, p}};
}

}  // namespace depsens
