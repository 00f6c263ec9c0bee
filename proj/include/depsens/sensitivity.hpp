#pragma once
// Pick-freeze estimation of sensitivity-functional covariances and the
// derived generalized indices: per-row product-moment kernels, their
// deterministic accumulation, asymptotic standard errors, and the Loewner
// comparison of total-effect covariances.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "depsens/common.hpp"
#include "depsens/representations.hpp"
#include "depsens/sampling.hpp"

namespace depsens {

using model_fn = std::function<void(std::span<const double>, std::span<double>)>;

// Four output arrays of one subset under one representation: plain panels A
// and B, and the two mixed evaluations (C freezes the subset-tied columns of
// panel 1 into panel 2; D is the mirror).
struct pick_freeze_batch {
  Eigen::MatrixXd A, B, C, D;  // m x N each

  std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
  int out_dim() const { return static_cast<int>(A.cols()); }
  void check() const {
    if (A.rows() != B.rows() || A.rows() != C.rows() || A.rows() != D.rows() ||
        A.cols() != B.cols() || A.cols() != C.cols() || A.cols() != D.cols())
      throw std::invalid_argument("pick_freeze_batch: shape mismatch");
  }
};

// K = (A-D)(C-B)' + (C-B)(A-D)'; exactly symmetric by assembly.
inline Eigen::MatrixXd kernel_first_order(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                                          const Eigen::RowVectorXd& c, const Eigen::RowVectorXd& d) {
  Eigen::VectorXd ad = (a - d).transpose(), cb = (c - b).transpose();
  Eigen::MatrixXd P = ad * cb.transpose();
  return P + P.transpose();
}

// K^tot = (A-D)(A-D)' + (C-B)(C-B)'; positive semi-definite by construction.
inline Eigen::MatrixXd kernel_total(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                                    const Eigen::RowVectorXd& c, const Eigen::RowVectorXd& d) {
  Eigen::VectorXd ad = (a - d).transpose(), cb = (c - b).transpose();
  return ad * ad.transpose() + cb * cb.transpose();
}

// Output covariance (1/2M) sum (A_i - B_i)(A_i - B_i)'.  Throws when the
// trace is degenerate relative to the output scale (indices undefined).
inline Eigen::MatrixXd estimate_sigma(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() < 2)
    throw std::invalid_argument("estimate_sigma: need matching panels with M >= 2");
  const std::size_t M = static_cast<std::size_t>(A.rows());
  Eigen::MatrixXd S = pairwise_sum(std::size_t{0}, M, [&](std::size_t i) -> Eigen::MatrixXd {
    Eigen::VectorXd diff = (A.row(static_cast<Eigen::Index>(i)) - B.row(static_cast<Eigen::Index>(i))).transpose();
    return diff * diff.transpose();
  });
  S /= 2.0 * static_cast<double>(M);
  const double scale = std::max(A.cwiseAbs().maxCoeff(), B.cwiseAbs().maxCoeff());
  if (scale == 0.0 || S.trace() < 1e-14 * scale * scale)
    throw degenerate_variance_error("output variance is degenerate (trace " +
                                    std::to_string(S.trace()) + ")");
  return S;
}

// Total-effect covariance from A/D alone: (1/2m) sum (A_i - D_i)(A_i - D_i)'.
inline Eigen::MatrixXd total_only_estimator(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D) {
  if (A.rows() != D.rows() || A.cols() != D.cols() || A.rows() < 1)
    throw std::invalid_argument("total_only_estimator: shape mismatch");
  const std::size_t m = static_cast<std::size_t>(A.rows());
  Eigen::MatrixXd S = pairwise_sum(std::size_t{0}, m, [&](std::size_t i) -> Eigen::MatrixXd {
    Eigen::VectorXd diff = (A.row(static_cast<Eigen::Index>(i)) - D.row(static_cast<Eigen::Index>(i))).transpose();
    return diff * diff.transpose();
  });
  return S / (2.0 * static_cast<double>(m));
}

// Covariance estimates of one subset plus the per-row statistics needed for
// the asymptotic variances: row traces of K/4 and the sample covariance of
// vec(K/4) for both kernels.
struct pick_freeze_stats {
  Eigen::MatrixXd d_u, d_u_tot;        // N x N
  Eigen::VectorXd trace_first, trace_total;  // per-row trace(K)/4
  Eigen::MatrixXd cov_vec_first, cov_vec_total;  // N^2 x N^2
  std::size_t m = 0;
};

// Accumulates the kernels of a batch with a fixed pairwise tree (64-row
// leaves evaluated in parallel, then combined in index order), so results do
// not depend on the thread count.
inline pick_freeze_stats accumulate_kernels(const pick_freeze_batch& batch, int threads = 1) {
  batch.check();
  const std::size_t m = batch.rows();
  if (m < 2) throw std::invalid_argument("accumulate_kernels: need m >= 2");
  const int N = batch.out_dim();
  const Eigen::Index nn = static_cast<Eigen::Index>(N) * N;

  struct leaf_sum {
    Eigen::VectorXd s1f, s1t;
    Eigen::MatrixXd s2f, s2t;
    leaf_sum& operator+=(const leaf_sum& o) {
      s1f += o.s1f;
      s1t += o.s1t;
      s2f += o.s2f;
      s2t += o.s2t;
      return *this;
    }
  };
  const std::size_t leaf = 64;
  const std::size_t nleaf = (m + leaf - 1) / leaf;
  std::vector<leaf_sum> sums(nleaf);
  pick_freeze_stats st;
  st.m = m;
  st.trace_first.resize(static_cast<Eigen::Index>(m));
  st.trace_total.resize(static_cast<Eigen::Index>(m));

  parallel_for(nleaf, threads, [&](std::size_t li) {
    leaf_sum s;
    s.s1f = Eigen::VectorXd::Zero(nn);
    s.s1t = Eigen::VectorXd::Zero(nn);
    s.s2f = Eigen::MatrixXd::Zero(nn, nn);
    s.s2t = Eigen::MatrixXd::Zero(nn, nn);
    const std::size_t lo = li * leaf, hi = std::min(m, lo + leaf);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      Eigen::MatrixXd K = kernel_first_order(batch.A.row(r), batch.B.row(r), batch.C.row(r),
                                             batch.D.row(r)) / 4.0;
      Eigen::MatrixXd Kt = kernel_total(batch.A.row(r), batch.B.row(r), batch.C.row(r),
                                        batch.D.row(r)) / 4.0;
      Eigen::Map<const Eigen::VectorXd> vf(K.data(), nn), vt(Kt.data(), nn);
      st.trace_first[r] = K.trace();
      st.trace_total[r] = Kt.trace();
      s.s1f += vf;
      s.s1t += vt;
      s.s2f += vf * vf.transpose();
      s.s2t += vt * vt.transpose();
    }
    sums[li] = std::move(s);
  });

  leaf_sum tot = pairwise_sum(std::size_t{0}, nleaf, [&](std::size_t i) { return sums[i]; });
  const double md = static_cast<double>(m);
  st.d_u = Eigen::Map<const Eigen::MatrixXd>(tot.s1f.data(), N, N) / md;
  st.d_u_tot = Eigen::Map<const Eigen::MatrixXd>(tot.s1t.data(), N, N) / md;
  st.cov_vec_first = (tot.s2f - tot.s1f * tot.s1f.transpose() / md) / (md - 1.0);
  st.cov_vec_total = (tot.s2t - tot.s1t * tot.s1t.transpose() / md) / (md - 1.0);
  return st;
}

// ----------------------------------------------------------------------------
// Index computation
// ----------------------------------------------------------------------------

struct index_value {
  double estimate = 0.0;  // raw; finite-sample values may leave [0,1]
  double se = 0.0;        // asymptotic SE of sqrt(m)(est - truth)
  double ci_lo = 0.0, ci_hi = 0.0;
  bool ci_valid = true;
  double display = 0.0;   // clamped to [0,1], presentation only
};

struct index_entry {
  index_value first_t1, total_t1, first_t2, total_t2;
  bool scalar = false;    // N = 1: both types coincide (the scalar index)
  std::size_t m = 0, M = 0;
  std::vector<std::string> flags;
};

inline index_entry compute_indices(const pick_freeze_stats& st, const Eigen::MatrixXd& sigma,
                                   std::size_t M, bool m_equals_M) {
  index_entry e;
  e.m = st.m;
  e.M = M;
  e.scalar = sigma.rows() == 1;
  const double sm = std::sqrt(static_cast<double>(st.m));
  const double tr_sigma = sigma.trace();
  const double fro_sigma = sigma.norm();

  auto sd = [](const Eigen::VectorXd& v) {
    const double mean = v.mean();
    const double ss = (v.array() - mean).square().sum();
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  auto fill_t1 = [&](index_value& iv, const Eigen::MatrixXd& d, const Eigen::VectorXd& traces) {
    iv.estimate = d.trace() / tr_sigma;
    iv.se = sd(traces) / tr_sigma;
    iv.ci_lo = iv.estimate - 1.96 * iv.se / sm;
    iv.ci_hi = iv.estimate + 1.96 * iv.se / sm;
    iv.display = std::clamp(iv.estimate, 0.0, 1.0);
  };
  auto fill_t2 = [&](index_value& iv, const Eigen::MatrixXd& d, const Eigen::MatrixXd& cov,
                     const char* which) {
    const double fro_d = d.norm();
    iv.estimate = fro_d / fro_sigma;
    iv.display = std::clamp(iv.estimate, 0.0, 1.0);
    if (fro_d < 1e-10 * fro_sigma) {
      iv.ci_valid = false;
      iv.se = 0.0;
      iv.ci_lo = iv.ci_hi = iv.estimate;
      e.flags.push_back(std::string("type-2 CI skipped (") + which + " covariance near zero)");
      return;
    }
    Eigen::Map<const Eigen::VectorXd> vd(d.data(), d.size());
    const double var = vd.transpose() * cov * vd;
    iv.se = std::sqrt(std::max(0.0, var)) / (fro_d * fro_sigma);
    iv.ci_lo = iv.estimate - 1.96 * iv.se / sm;
    iv.ci_hi = iv.estimate + 1.96 * iv.se / sm;
  };

  fill_t1(e.first_t1, st.d_u, st.trace_first);
  fill_t1(e.total_t1, st.d_u_tot, st.trace_total);
  fill_t2(e.first_t2, st.d_u, st.cov_vec_first, "first-order");
  fill_t2(e.total_t2, st.d_u_tot, st.cov_vec_total, "total-effect");
  if (m_equals_M) e.flags.push_back("m=M heuristic");
  return e;
}

enum class loewner_order { equal, u_dominated, omega_dominated, incomparable };

// Sign of D_omega - D_u in the Loewner order, with a relative eigenvalue
// tolerance; "u_dominated" means D_u is below D_omega.
inline loewner_order loewner_rank_check(const Eigen::MatrixXd& d_u, const Eigen::MatrixXd& d_omega,
                                        double tol = 1e-10) {
  if (d_u.rows() != d_omega.rows() || d_u.cols() != d_omega.cols())
    throw std::invalid_argument("loewner_rank_check: shape mismatch");
  Eigen::MatrixXd diff = d_omega - d_u;
  diff = 0.5 * (diff + diff.transpose().eval());
  const double scale = diff.norm();
  if (scale == 0.0) return loewner_order::equal;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  const bool above = lmin >= -tol * scale;  // diff >= 0
  const bool below = lmax <= tol * scale;   // diff <= 0
  if (above && below) return loewner_order::equal;
  if (above) return loewner_order::u_dominated;
  if (below) return loewner_order::omega_dominated;
  return loewner_order::incomparable;
}

// Scalar-output shortcuts (N = 1); these agree with the matrix path exactly.
inline double scalar_first_order(const pick_freeze_batch& b) {
  const std::size_t m = b.rows();
  double s = pairwise_sum(std::size_t{0}, m, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    return (b.A(r, 0) - b.D(r, 0)) * (b.C(r, 0) - b.B(r, 0));
  });
  return s / (2.0 * static_cast<double>(m));
}

inline double scalar_total(const pick_freeze_batch& b) {
  const std::size_t m = b.rows();
  double s = pairwise_sum(std::size_t{0}, m, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double ad = b.A(r, 0) - b.D(r, 0), cb = b.C(r, 0) - b.B(r, 0);
    return ad * ad + cb * cb;
  });
  return s / (4.0 * static_cast<double>(m));
}

inline double scalar_sigma(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const std::size_t M = static_cast<std::size_t>(A.rows());
  double s = pairwise_sum(std::size_t{0}, M, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double d = A(r, 0) - B(r, 0);
    return d * d;
  });
  return s / (2.0 * static_cast<double>(M));
}

// ----------------------------------------------------------------------------
// Panel evaluation and pick-freeze assembly
// ----------------------------------------------------------------------------

// Plain panel outputs of one representation: A (panel 1) and B (panel 2),
// shared across every subset routed to that representation.
struct representation_cache {
  Eigen::MatrixXd A, B;  // M x N
};

namespace detail {

inline void eval_one_row(const representation& rep, const model_fn& f, std::size_t row,
                         std::span<const double> uniforms, std::span<double> xbuf,
                         std::span<double> ybuf) {
  rep.assemble(uniforms, xbuf);
  try {
    f(xbuf, ybuf);
  } catch (const std::exception& ex) {
    throw model_eval_error(ex.what(), row);
  }
  for (double v : ybuf)
    if (!std::isfinite(v)) throw model_eval_error("non-finite model output", row);
}

}  // namespace detail

inline representation_cache evaluate_panels(const representation& rep, const model_fn& f, int N,
                                            const uniform_source& src, std::size_t M,
                                            int threads = 1) {
  if (src.width() != rep.input_width())
    throw config_error("uniform source width does not match the representation layout");
  representation_cache cache;
  cache.A.resize(static_cast<Eigen::Index>(M), N);
  cache.B.resize(static_cast<Eigen::Index>(M), N);
  const int w = rep.input_width();
  const int d = rep.structure().dim();
  parallel_for(M, threads, [&](std::size_t i) {
    std::vector<double> u(static_cast<std::size_t>(w)), x(static_cast<std::size_t>(d)),
        y(static_cast<std::size_t>(N));
    for (int panel = 0; panel < 2; ++panel) {
      for (int c = 0; c < w; ++c) u[static_cast<std::size_t>(c)] = src.value(panel, i, c);
      detail::eval_one_row(rep, f, i, u, x, y);
      auto& Mx = panel == 0 ? cache.A : cache.B;
      for (int k = 0; k < N; ++k) Mx(static_cast<Eigen::Index>(i), k) = y[static_cast<std::size_t>(k)];
    }
  });
  return cache;
}

// Builds the four arrays for one routed subset: A/B sliced from the shared
// cache, C/D evaluated with the subset-tied columns exchanged between panels.
inline pick_freeze_batch pick_freeze_evaluate(const representation& rep, const model_fn& f, int N,
                                              const uniform_source& src, std::size_t m,
                                              const std::vector<int>& frozen_cols,
                                              const representation_cache& cache,
                                              int threads = 1) {
  if (static_cast<std::size_t>(cache.A.rows()) < m)
    throw std::invalid_argument("pick_freeze_evaluate: cache smaller than m");
  pick_freeze_batch b;
  b.A = cache.A.topRows(static_cast<Eigen::Index>(m));
  b.B = cache.B.topRows(static_cast<Eigen::Index>(m));
  b.C.resize(static_cast<Eigen::Index>(m), N);
  b.D.resize(static_cast<Eigen::Index>(m), N);
  const int w = rep.input_width();
  const int d = rep.structure().dim();
  parallel_for(m, threads, [&](std::size_t i) {
    std::vector<double> u1(static_cast<std::size_t>(w)), u2(static_cast<std::size_t>(w)),
        mix(static_cast<std::size_t>(w)), x(static_cast<std::size_t>(d)),
        y(static_cast<std::size_t>(N));
    for (int c = 0; c < w; ++c) {
      u1[static_cast<std::size_t>(c)] = src.value(0, i, c);
      u2[static_cast<std::size_t>(c)] = src.value(1, i, c);
    }
    // C: panel-2 base, subset columns from panel 1
    mix = u2;
    for (int c : frozen_cols) mix[static_cast<std::size_t>(c)] = u1[static_cast<std::size_t>(c)];
    detail::eval_one_row(rep, f, i, mix, x, y);
    for (int k = 0; k < N; ++k) b.C(static_cast<Eigen::Index>(i), k) = y[static_cast<std::size_t>(k)];
    // D: panel-1 base, subset columns from panel 2
    mix = u1;
    for (int c : frozen_cols) mix[static_cast<std::size_t>(c)] = u2[static_cast<std::size_t>(c)];
    detail::eval_one_row(rep, f, i, mix, x, y);
    for (int k = 0; k < N; ++k) b.D(static_cast<Eigen::Index>(i), k) = y[static_cast<std::size_t>(k)];
  });
  return b;
}

}  // namespace depsens
