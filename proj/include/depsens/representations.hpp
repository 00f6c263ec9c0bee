#pragma once
// Equivalent representations of a model with block-dependent inputs:
// selection of the covering permutation family per dependent block, routing of
// input subsets to representations, and assembly of the composed evaluators
// that consume only independent uniforms.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "depsens/common.hpp"
#include "depsens/depmodel.hpp"
#include "depsens/empirical.hpp"
#include "depsens/margins.hpp"

namespace depsens {

// Central prefix length: d/2 for even d, (d+1)/2 for odd d.
inline int j0(int dk) {
  if (dk < 2) throw std::domain_error("j0: block size must be >= 2");
  return (dk % 2 == 0) ? dk / 2 : (dk + 1) / 2;
}

// Selected permutations of one dependent block together with the realized
// prefix/suffix set families (as bitmasks over block-local positions).
struct block_plan {
  int dk = 0;
  int j0k = 0;
  std::vector<std::vector<int>> perms;        // block-local, 0-based
  std::vector<std::uint32_t> prefix_family;   // all prefixes of all perms, deduped
  std::vector<std::uint32_t> suffix_family;   // all proper suffixes, deduped
};

namespace detail {

struct perm_search {
  int dk;
  std::uint32_t full;
  const std::unordered_set<std::uint32_t>* A;
  const std::unordered_set<std::uint32_t>* B;
  const std::unordered_set<std::uint32_t>* E;
  int e0, j0k;
  std::vector<int>* w;
  std::uint32_t used = 0;

  bool dfs(int placed, std::uint32_t prefix) {
    if (placed == dk) return true;
    for (int v = 0; v < dk; ++v) {
      const std::uint32_t bit = 1u << v;
      if (used & bit) continue;
      const std::uint32_t pm = prefix | bit;
      const int l = placed + 1;
      if (l >= e0 && l <= j0k && B->count(pm)) continue;
      if (l == j0k && !A->count(pm)) continue;
      const std::uint32_t rem = full ^ pm;
      const int rs = dk - l;
      if (rs >= e0 && rs <= j0k && E->count(rem)) continue;
      (*w)[static_cast<std::size_t>(placed)] = v;
      used |= bit;
      if (dfs(l, pm)) return true;
      used &= ~bit;
    }
    return false;
  }
};

}  // namespace detail

// Builds the minimal covering permutation family of a block: repeatedly finds
// the lexicographically first permutation whose prefixes of the active sizes
// are new, whose suffixes of those sizes are new, and whose central prefix is
// still uncovered; set updates and the escalation of the active size follow
// the published counting schedule.  The result is deterministic in dk.
inline block_plan select_permutations(int dk) {
  if (dk < 2) throw std::domain_error("select_permutations: block size must be >= 2");
  if (dk > 25) throw std::domain_error("select_permutations: block size too large");
  block_plan plan;
  plan.dk = dk;
  plan.j0k = j0(dk);
  const std::uint32_t full = (dk == 32) ? ~0u : ((1u << dk) - 1u);

  std::unordered_set<std::uint32_t> A, B, E;
  // all subsets of size j0k
  for (std::uint32_t mask = 0; mask <= full; ++mask)
    if (std::popcount(mask) == plan.j0k) A.insert(mask);

  int e0 = 1;
  std::uint64_t i = 1;
  std::vector<int> w(static_cast<std::size_t>(dk));
  while (!A.empty()) {
    detail::perm_search search{dk, full, &A, &B, &E, e0, plan.j0k, &w};
    if (!search.dfs(0, 0))
      throw std::logic_error("select_permutations: search exhausted (covering invariant violated)");

    std::uint32_t pm = 0;
    std::vector<std::uint32_t> prefixes(static_cast<std::size_t>(dk));
    for (int l = 0; l < dk; ++l) {
      pm |= 1u << w[static_cast<std::size_t>(l)];
      prefixes[static_cast<std::size_t>(l)] = pm;
    }
    A.erase(prefixes[static_cast<std::size_t>(plan.j0k - 1)]);
    for (int jj = e0; jj <= dk - e0 + 1; ++jj)
      B.insert(prefixes[static_cast<std::size_t>(jj - 1)]);
    for (int jj = plan.j0k + 1; jj <= dk - e0 + 1; ++jj)
      E.insert(full ^ prefixes[static_cast<std::size_t>(jj - 2)]);  // {w_jj..w_dk}
    plan.perms.push_back(w);
    ++i;
    if (binomial(dk, e0) < i && i <= binomial(dk, e0 + 1)) ++e0;
  }

  std::unordered_set<std::uint32_t> pf, sf;
  for (const auto& p : plan.perms) {
    std::uint32_t m = 0;
    for (int l = 0; l < dk; ++l) {
      m |= 1u << p[static_cast<std::size_t>(l)];
      if (l + 1 < dk) sf.insert(full ^ m);
      pf.insert(m);
    }
  }
  plan.prefix_family.assign(pf.begin(), pf.end());
  plan.suffix_family.assign(sf.begin(), sf.end());
  std::sort(plan.prefix_family.begin(), plan.prefix_family.end());
  std::sort(plan.suffix_family.begin(), plan.suffix_family.end());
  return plan;
}

// Minimal number of representations covering every subset: product over the
// dependent blocks of C(d_k, j0_k).
inline std::uint64_t r_min(std::span<const int> dims) {
  std::uint64_t r = 1;
  for (int dk : dims) {
    if (dk < 2) throw std::domain_error("r_min: block size must be >= 2");
    r *= binomial(dk, j0(dk));
  }
  return r;
}

// Representations needed when per-block prefix lengths are capped at p_k:
// max over blocks of C(d_k, p_k); all caps zero needs a single representation.
inline std::uint64_t r_p(std::span<const int> dims, std::span<const int> caps) {
  if (dims.size() != caps.size()) throw std::invalid_argument("r_p: dims/caps size mismatch");
  std::uint64_t r = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (caps[k] < 0 || caps[k] > j0(dims[k]))
      throw std::domain_error("r_p: cap outside [0, j0]");
    r = std::max(r, binomial(dims[k], caps[k]));
  }
  return r;
}

// ----------------------------------------------------------------------------
// Block structure
// ----------------------------------------------------------------------------

enum class block_family { gaussian_copula, student_copula, simplex, quantile_pair };

inline const char* block_family_name(block_family f) {
  switch (f) {
    case block_family::gaussian_copula: return "gaussian-copula";
    case block_family::student_copula: return "student-copula";
    case block_family::simplex: return "simplex";
    case block_family::quantile_pair: return "quantile-pair";
  }
  return "?";
}

struct dependent_block {
  block_family family = block_family::gaussian_copula;
  std::vector<int> indices;           // global 0-based positions, size >= 2
  std::vector<margin> margins;        // block-local order; simplex may omit (Beta(1,2) implied)
  Eigen::MatrixXd correlation;        // copula families
  double nu = 0.0;                    // student copula
  std::vector<std::shared_ptr<const quantile_dm>> fitted;  // quantile_pair: one per cond position
};

// Partition of {0..d-1} into one independent block and mutually independent
// dependent blocks of size >= 2; validated on construction.
class block_structure {
 public:
  block_structure(int d, std::vector<int> independent, std::vector<margin> independent_margins,
                  std::vector<dependent_block> dependent)
      : d_(d),
        independent_(std::move(independent)),
        indep_margins_(std::move(independent_margins)),
        dependent_(std::move(dependent)) {
    if (d_ < 1) throw std::invalid_argument("block_structure: d must be >= 1");
    if (independent_.size() != indep_margins_.size())
      throw std::invalid_argument("block_structure: independent margins count mismatch");
    locate_.assign(static_cast<std::size_t>(d_), {-2, -1});
    auto claim = [&](int g, int block, int pos) {
      if (g < 0 || g >= d_)
        throw std::invalid_argument("block_structure: index out of range");
      auto& slot = locate_[static_cast<std::size_t>(g)];
      if (slot.first != -2) throw std::invalid_argument("block_structure: index appears twice");
      slot = {block, pos};
    };
    for (std::size_t i = 0; i < independent_.size(); ++i)
      claim(independent_[i], -1, static_cast<int>(i));
    for (std::size_t k = 0; k < dependent_.size(); ++k) {
      auto& b = dependent_[k];
      if (b.indices.size() < 2)
        throw std::invalid_argument("block_structure: dependent block smaller than 2");
      for (std::size_t p = 0; p < b.indices.size(); ++p)
        claim(b.indices[p], static_cast<int>(k), static_cast<int>(p));
      const int dk = static_cast<int>(b.indices.size());
      switch (b.family) {
        case block_family::gaussian_copula:
        case block_family::student_copula:
          if (b.correlation.rows() != dk || b.correlation.cols() != dk)
            throw std::invalid_argument("block_structure: correlation shape mismatch");
          if (static_cast<int>(b.margins.size()) != dk)
            throw std::invalid_argument("block_structure: margin count mismatch");
          if (b.family == block_family::student_copula && !(b.nu > 0.0))
            throw std::invalid_argument("block_structure: student copula needs nu > 0");
          break;
        case block_family::simplex:
          if (dk != 2) throw std::invalid_argument("block_structure: simplex block must be a pair");
          if (b.margins.empty()) b.margins = {margin::beta(1.0, 2.0), margin::beta(1.0, 2.0)};
          if (b.margins.size() != 2)
            throw std::invalid_argument("block_structure: simplex margin count mismatch");
          break;
        case block_family::quantile_pair:
          if (dk != 2) throw std::invalid_argument("block_structure: quantile-pair block must be a pair");
          if (b.fitted.size() != 2 || !b.fitted[0] || !b.fitted[1])
            throw std::invalid_argument("block_structure: quantile-pair needs both fitted models");
          if (b.fitted[0]->cond_position() != 0 || b.fitted[1]->cond_position() != 1)
            throw std::invalid_argument("block_structure: fitted models must condition on 0 and 1");
          if (static_cast<int>(b.margins.size()) != dk)
            throw std::invalid_argument("block_structure: quantile-pair margin count mismatch");
          break;
      }
    }
    for (int g = 0; g < d_; ++g)
      if (locate_[static_cast<std::size_t>(g)].first == -2)
        throw std::invalid_argument("block_structure: blocks do not partition the index set");
  }

  int dim() const { return d_; }
  const std::vector<int>& independent() const { return independent_; }
  const std::vector<margin>& independent_margins() const { return indep_margins_; }
  const std::vector<dependent_block>& dependent() const { return dependent_; }
  // (block, position): block = -1 for the independent block.
  std::pair<int, int> locate(int g) const { return locate_[static_cast<std::size_t>(g)]; }

  std::vector<int> dependent_dims() const {
    std::vector<int> dims;
    dims.reserve(dependent_.size());
    for (const auto& b : dependent_) dims.push_back(static_cast<int>(b.indices.size()));
    return dims;
  }

 private:
  int d_;
  std::vector<int> independent_;
  std::vector<margin> indep_margins_;
  std::vector<dependent_block> dependent_;
  std::vector<std::pair<int, int>> locate_;
};

struct permutation_plan {
  std::vector<block_plan> blocks;  // aligned with structure.dependent()
};

inline permutation_plan make_permutation_plan(const block_structure& s) {
  permutation_plan plan;
  plan.blocks.reserve(s.dependent().size());
  for (const auto& b : s.dependent())
    plan.blocks.push_back(select_permutations(static_cast<int>(b.indices.size())));
  return plan;
}

// JSON audit export: permutations listed with 1-based global variable indices.
inline nlohmann::ordered_json plan_to_json(const permutation_plan& plan, const block_structure& s) {
  nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < plan.blocks.size(); ++k) {
    const auto& bp = plan.blocks[k];
    const auto& idx = s.dependent()[k].indices;
    nlohmann::ordered_json jb;
    std::vector<int> globals;
    for (int g : idx) globals.push_back(g + 1);
    jb["family"] = block_family_name(s.dependent()[k].family);
    jb["indices"] = globals;
    jb["j0"] = bp.j0k;
    nlohmann::ordered_json perms = nlohmann::ordered_json::array();
    for (const auto& p : bp.perms) {
      std::vector<int> gp;
      for (int v : p) gp.push_back(idx[static_cast<std::size_t>(v)] + 1);
      perms.push_back(gp);
    }
    jb["permutations"] = std::move(perms);
    blocks.push_back(std::move(jb));
  }
  nlohmann::ordered_json j;
  j["blocks"] = std::move(blocks);
  return j;
}

// ----------------------------------------------------------------------------
// Subset routing and label assignment
// ----------------------------------------------------------------------------

struct subset_routing {
  std::vector<int> subset;            // sorted global 0-based
  std::vector<int> independent_part;  // subset ∩ independent block
  std::vector<int> pinned;            // per dependent block: perm index, or -1 if untouched
  std::vector<int> prefix_len;        // |subset ∩ block k|
  std::vector<std::string> conditioning;  // lead inputs, prefix latents, lambdas
};

// Finds, per touched dependent block, the first selected permutation whose
// leading positions equal the subset's intersection with the block; records
// what conditioning on the subset amounts to under that choice.
inline subset_routing route_subset(const permutation_plan& plan, const block_structure& s,
                                   std::span<const int> u) {
  if (u.empty()) throw std::invalid_argument("route_subset: empty subset");
  subset_routing r;
  r.subset.assign(u.begin(), u.end());
  std::sort(r.subset.begin(), r.subset.end());
  if (std::adjacent_find(r.subset.begin(), r.subset.end()) != r.subset.end())
    throw std::invalid_argument("route_subset: duplicate index in subset");
  const std::size_t K = plan.blocks.size();
  r.pinned.assign(K, -1);
  r.prefix_len.assign(K, 0);
  std::vector<std::uint32_t> hit(K, 0);
  for (int g : r.subset) {
    if (g < 0 || g >= s.dim()) throw std::invalid_argument("route_subset: index out of range");
    auto [blk, pos] = s.locate(g);
    if (blk < 0) {
      r.independent_part.push_back(g);
      r.conditioning.push_back("X" + std::to_string(g + 1));
    } else {
      hit[static_cast<std::size_t>(blk)] |= 1u << pos;
      ++r.prefix_len[static_cast<std::size_t>(blk)];
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (hit[k] == 0) continue;
    const auto& bp = plan.blocks[k];
    const auto& blk = s.dependent()[k];
    const int p = r.prefix_len[k];
    int found = -1;
    for (std::size_t pi = 0; pi < bp.perms.size(); ++pi) {
      std::uint32_t pref = 0;
      for (int l = 0; l < p; ++l) pref |= 1u << bp.perms[pi][static_cast<std::size_t>(l)];
      if (pref == hit[k]) {
        found = static_cast<int>(pi);
        break;
      }
    }
    if (found < 0)
      throw std::logic_error("route_subset: no permutation serves the subset (covering violated)");
    r.pinned[k] = found;
    const auto& perm = bp.perms[static_cast<std::size_t>(found)];
    const int lead = blk.indices[static_cast<std::size_t>(perm[0])];
    r.conditioning.push_back("X" + std::to_string(lead + 1));
    if (!blk.margins.empty() && !blk.margins[static_cast<std::size_t>(perm[0])].continuous())
      r.conditioning.push_back("lambda(X" + std::to_string(lead + 1) + ")");
    for (int l = 1; l < p; ++l) {
      const int g = blk.indices[static_cast<std::size_t>(perm[static_cast<std::size_t>(l)])];
      r.conditioning.push_back("Z" + std::to_string(g + 1));
    }
  }
  return r;
}

struct label_assignment {
  std::vector<std::vector<int>> labels;   // complete: perm index per dependent block
  std::vector<std::size_t> subset_label;  // per routing (input order)
};

// Merges the pinned block choices of the routed subsets into as few complete
// labels as the pins allow: subsets with more pinned blocks are placed first,
// each into the first compatible label (absorbing its pins); unpinned blocks
// are finally filled with the first selected permutation.
inline label_assignment assign_labels(const permutation_plan& plan,
                                      const std::vector<subset_routing>& routings) {
  const std::size_t K = plan.blocks.size();
  std::vector<std::size_t> order(routings.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    int pa = 0, pb = 0;
    for (int v : routings[a].pinned) pa += (v >= 0);
    for (int v : routings[b].pinned) pb += (v >= 0);
    if (pa != pb) return pa > pb;
    return routings[a].subset < routings[b].subset;
  });

  label_assignment out;
  out.subset_label.assign(routings.size(), 0);
  std::vector<std::vector<int>> protos;
  for (std::size_t oi : order) {
    const auto& pin = routings[oi].pinned;
    std::size_t chosen = protos.size();
    for (std::size_t pi = 0; pi < protos.size(); ++pi) {
      bool ok = true;
      for (std::size_t k = 0; k < K; ++k)
        if (protos[pi][k] >= 0 && pin[k] >= 0 && protos[pi][k] != pin[k]) {
          ok = false;
          break;
        }
      if (ok) {
        chosen = pi;
        break;
      }
    }
    if (chosen == protos.size()) {
      protos.push_back(pin);
    } else {
      for (std::size_t k = 0; k < K; ++k)
        if (pin[k] >= 0) protos[chosen][k] = pin[k];
    }
    out.subset_label[oi] = chosen;
  }
  if (protos.empty()) protos.push_back(std::vector<int>(K, -1));
  for (auto& p : protos)
    for (std::size_t k = 0; k < K; ++k)
      if (p[k] < 0) p[k] = 0;
  out.labels = std::move(protos);
  return out;
}

// Canonical 1-based label number: mixed radix over per-block permutation
// indices, first dependent block fastest.
inline std::uint64_t canonical_label_id(const permutation_plan& plan, std::span<const int> label) {
  if (label.size() != plan.blocks.size())
    throw std::invalid_argument("canonical_label_id: label length mismatch");
  std::uint64_t id = 0, stride = 1;
  for (std::size_t k = 0; k < label.size(); ++k) {
    const auto nk = static_cast<std::uint64_t>(plan.blocks[k].perms.size());
    if (label[k] < 0 || static_cast<std::uint64_t>(label[k]) >= nk)
      throw std::invalid_argument("canonical_label_id: permutation index out of range");
    id += static_cast<std::uint64_t>(label[k]) * stride;
    stride *= nk;
  }
  return id + 1;
}

// ----------------------------------------------------------------------------
// Representations (composed evaluators over independent uniforms)
// ----------------------------------------------------------------------------

struct panel_layout {
  struct block_cols {
    int lead = -1;
    int z_begin = -1;
    int aux_begin = -1;
    int aux_n = 0;
  };
  int width = 0;
  std::vector<int> indep_col;       // aligned with structure.independent()
  std::vector<block_cols> blocks;   // aligned with structure.dependent()
  std::vector<std::string> names;   // documented column order
};

// One equivalent representation: the dependent blocks realized by concrete
// DMs in the label's permutation order, consuming a fixed-layout row of
// uniforms and producing the full model input vector.
class representation {
 public:
  representation(const block_structure& s, const permutation_plan& plan, std::vector<int> label)
      : s_(&s), plan_(&plan), label_(std::move(label)) {
    const auto& blocks = s.dependent();
    if (label_.size() != blocks.size() || plan.blocks.size() != blocks.size())
      throw std::invalid_argument("representation: label/plan size mismatch");
    layout_.indep_col.resize(s.independent().size());
    for (std::size_t i = 0; i < s.independent().size(); ++i) {
      layout_.indep_col[i] = layout_.width++;
      layout_.names.push_back("X" + std::to_string(s.independent()[i] + 1));
    }
    dms_.reserve(blocks.size());
    out_global_.resize(blocks.size());
    layout_.blocks.resize(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const auto& bp = plan.blocks[k];
      if (label_[k] < 0 || label_[k] >= static_cast<int>(bp.perms.size()))
        throw std::invalid_argument("representation: permutation index out of range");
      const auto& perm = bp.perms[static_cast<std::size_t>(label_[k])];
      auto dm = make_block_dm(blocks[k], perm);
      const int dk = dm->dim();
      if (dk > kMaxBlock) throw std::invalid_argument("representation: block too large");
      auto& bc = layout_.blocks[k];
      const int lead_global = blocks[k].indices[static_cast<std::size_t>(perm[0])];
      bc.lead = layout_.width++;
      layout_.names.push_back("X" + std::to_string(lead_global + 1));
      bc.z_begin = layout_.width;
      out_global_[k].resize(static_cast<std::size_t>(dk - 1));
      for (int i = 0; i + 1 < dk; ++i) {
        const int pos = dm->output_order()[static_cast<std::size_t>(i)];
        const int g = blocks[k].indices[static_cast<std::size_t>(pos)];
        out_global_[k][static_cast<std::size_t>(i)] = g;
        layout_.names.push_back("Z" + std::to_string(g + 1));
        ++layout_.width;
      }
      bc.aux_n = dm->aux_count();
      bc.aux_begin = layout_.width;
      for (int a = 0; a < bc.aux_n; ++a) {
        const bool is_lambda = a == 0 && !dm->cond_continuous();
        layout_.names.push_back((is_lambda ? "lambda(X" : "aux(X") +
                                std::to_string(lead_global + 1) + ")" +
                                (is_lambda ? "" : "." + std::to_string(a)));
        ++layout_.width;
      }
      dms_.push_back(std::move(dm));
    }
  }

  static std::shared_ptr<const dependency_model> make_block_dm(const dependent_block& b,
                                                               const std::vector<int>& perm) {
    const int cond = perm[0];
    std::vector<int> order(perm.begin() + 1, perm.end());
    switch (b.family) {
      case block_family::gaussian_copula:
        return std::make_shared<gaussian_copula_dm>(b.correlation, b.margins, cond, order);
      case block_family::student_copula:
        return std::make_shared<student_copula_dm>(b.nu, b.correlation, b.margins, cond, order);
      case block_family::simplex:
        return std::make_shared<simplex_pair_dm>(cond);
      case block_family::quantile_pair:
        return b.fitted[static_cast<std::size_t>(cond)];
    }
    throw std::logic_error("make_block_dm: unknown family");
  }

  const std::vector<int>& label() const { return label_; }
  std::uint64_t label_id() const { return canonical_label_id(*plan_, label_); }
  const panel_layout& layout() const { return layout_; }
  int input_width() const { return layout_.width; }
  const block_structure& structure() const { return *s_; }
  const dependency_model& block_dm(std::size_t k) const { return *dms_[k]; }

  // Maps one row of uniforms (layout width) to the model input vector x
  // (dimension d): margins' generalized inverses for the lead/independent
  // columns, latent-law quantiles for the Z columns, auxiliaries passed raw.
  void assemble(std::span<const double> u, std::span<double> x) const {
    const auto& s = *s_;
    for (std::size_t i = 0; i < s.independent().size(); ++i)
      x[static_cast<std::size_t>(s.independent()[i])] =
          s.independent_margins()[i].quantile(u[static_cast<std::size_t>(layout_.indep_col[i])]);
    std::array<double, kMaxBlock> z{}, out{};
    for (std::size_t k = 0; k < dms_.size(); ++k) {
      const auto& dm = *dms_[k];
      const auto& bc = layout_.blocks[k];
      const auto& blk = s.dependent()[k];
      const int cond = dm.cond_position();
      const double xl =
          blk.margins[static_cast<std::size_t>(cond)].quantile(u[static_cast<std::size_t>(bc.lead)]);
      x[static_cast<std::size_t>(blk.indices[static_cast<std::size_t>(cond)])] = xl;
      const int nz = dm.output_count();
      for (int i = 0; i < nz; ++i)
        z[static_cast<std::size_t>(i)] =
            dm.latent(i).quantile(u[static_cast<std::size_t>(bc.z_begin + i)]);
      dm.eval(xl, std::span<const double>(z.data(), static_cast<std::size_t>(nz)),
              std::span<const double>(u.data() + bc.aux_begin, static_cast<std::size_t>(bc.aux_n)),
              std::span<double>(out.data(), static_cast<std::size_t>(nz)));
      for (int i = 0; i < nz; ++i)
        x[static_cast<std::size_t>(out_global_[k][static_cast<std::size_t>(i)])] =
            out[static_cast<std::size_t>(i)];
    }
  }

  // Column indices that must be copied between panels to freeze the subset:
  // its independent inputs, and per touched block the lead column, the first
  // p-1 latent columns, and the prefix-tied auxiliaries.
  std::vector<int> frozen_columns(const subset_routing& r) const {
    std::vector<int> cols;
    for (int g : r.independent_part) {
      auto [blk, pos] = s_->locate(g);
      (void)blk;
      cols.push_back(layout_.indep_col[static_cast<std::size_t>(pos)]);
    }
    for (std::size_t k = 0; k < dms_.size(); ++k) {
      const int p = r.prefix_len[k];
      if (p == 0) continue;
      if (r.pinned[k] != label_[k])
        throw std::invalid_argument("frozen_columns: representation does not serve the subset");
      const auto& bc = layout_.blocks[k];
      cols.push_back(bc.lead);
      for (int i = 0; i + 1 < p; ++i) cols.push_back(bc.z_begin + i);
      for (int a : dms_[k]->prefix_aux(p - 1)) cols.push_back(bc.aux_begin + a);
    }
    std::sort(cols.begin(), cols.end());
    return cols;
  }

 private:
  static constexpr int kMaxBlock = 64;
  const block_structure* s_;
  const permutation_plan* plan_;
  std::vector<int> label_;
  std::vector<std::shared_ptr<const dependency_model>> dms_;
  panel_layout layout_;
  std::vector<std::vector<int>> out_global_;  // per block: global index per output slot
};

inline representation build_representation(const block_structure& s, const permutation_plan& plan,
                                           std::vector<int> label) {
  return representation(s, plan, std::move(label));
}

}  // namespace depsens
