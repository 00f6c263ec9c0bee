#pragma once
// Run orchestration: subset enumeration -> routing -> label merge -> panel
// caches -> pick-freeze estimation, plus CSV / JSON / audit emission.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "depsens/config.hpp"
#include "depsens/representations.hpp"
#include "depsens/sensitivity.hpp"

namespace depsens {

struct subset_result {
  std::vector<int> subset;  // 0-based, sorted
  subset_routing routing;
  std::size_t label_index = 0;
  std::uint64_t label_id = 0;
  std::vector<int> frozen_cols;
  std::vector<std::string> frozen_names;
  index_entry indices;
};

struct run_result {
  std::string model_name;
  int d = 0, N = 0;
  std::size_t m = 0, M = 0;
  generator_kind generator = generator_kind::sobol;
  std::uint64_t seed = 0;
  int threads = 1;
  std::uint64_t r_min_value = 1;
  nlohmann::ordered_json plan_json;
  std::vector<std::vector<int>> labels;             // per-block permutation indices
  std::vector<std::uint64_t> label_ids;             // canonical numbering
  std::vector<std::vector<std::string>> label_cols; // input column names
  std::vector<subset_result> subsets;
  Eigen::MatrixXd sigma;
  double wall_seconds = 0.0;
};

inline const char* model_kind_name(model_kind k) {
  switch (k) {
    case model_kind::linear_gaussian: return "linear-gaussian";
    case model_kind::portfolio: return "portfolio";
    case model_kind::gsobol: return "gsobol";
    case model_kind::expression: return "expression";
  }
  return "?";
}

inline run_result run_analysis(const run_config& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!cfg.mdl) throw config_error("run: configuration has no model");
  const model& mdl = *cfg.mdl;
  const block_structure& s = mdl.structure();

  run_result res;
  res.model_name = model_kind_name(mdl.kind());
  res.d = mdl.dim();
  res.N = mdl.out_dim();
  res.m = cfg.m;
  res.M = cfg.M;
  res.generator = cfg.generator;
  res.seed = cfg.seed;
  res.threads = cfg.threads > 0
                    ? cfg.threads
                    : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));

  const auto subsets = expand_subsets(cfg.subsets, res.d);
  if (subsets.empty()) throw config_error("run: no subsets requested");

  const auto plan = make_permutation_plan(s);
  res.plan_json = plan_to_json(plan, s);
  {
    std::vector<int> dims;
    for (const auto& b : s.dependent()) dims.push_back(static_cast<int>(b.indices.size()));
    res.r_min_value = dims.empty() ? 1 : r_min(dims);
  }

  std::vector<subset_routing> routings;
  routings.reserve(subsets.size());
  for (const auto& u : subsets) routings.push_back(route_subset(plan, s, u));
  const auto assignment = assign_labels(plan, routings);
  res.labels = assignment.labels;

  // Only the merged labels are materialized (economy over the full plan).
  std::vector<representation> reps;
  reps.reserve(assignment.labels.size());
  for (const auto& label : assignment.labels) reps.push_back(build_representation(s, plan, label));

  const model_fn f = [&mdl](std::span<const double> x, std::span<double> y) {
    mdl.evaluate(x, y);
  };
  sample_plan splan;
  splan.generator = cfg.generator;
  splan.seed = cfg.seed;
  splan.m = cfg.m;
  splan.M = cfg.M;
  splan.threads = res.threads;

  std::vector<std::unique_ptr<uniform_source>> sources;
  std::vector<representation_cache> caches;
  for (const auto& rep : reps) {
    sources.push_back(make_uniform_source(rep.input_width(), splan));
    caches.push_back(evaluate_panels(rep, f, res.N, *sources.back(), cfg.M, res.threads));
    res.label_ids.push_back(rep.label_id());
    res.label_cols.push_back(rep.layout().names);
  }

  res.sigma = estimate_sigma(caches[0].A, caches[0].B);

  res.subsets.resize(subsets.size());
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    auto& sr = res.subsets[i];
    sr.subset = subsets[i];
    sr.routing = routings[i];
    sr.label_index = assignment.subset_label[i];
    const auto& rep = reps[sr.label_index];
    sr.label_id = res.label_ids[sr.label_index];
    sr.frozen_cols = rep.frozen_columns(routings[i]);
    for (int c : sr.frozen_cols) sr.frozen_names.push_back(rep.layout().names[static_cast<std::size_t>(c)]);
    const auto batch = pick_freeze_evaluate(rep, f, res.N, *sources[sr.label_index], cfg.m,
                                            sr.frozen_cols, caches[sr.label_index], res.threads);
    const auto stats = accumulate_kernels(batch, res.threads);
    sr.indices = compute_indices(stats, res.sigma, cfg.M, cfg.m == cfg.M);
  }

  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

namespace detail {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string subset_name(const std::vector<int>& u) {
  std::string s;
  for (int g : u) {
    if (!s.empty()) s += ':';
    s += std::to_string(g + 1);
  }
  return s;
}

inline nlohmann::ordered_json value_json(const index_value& v) {
  nlohmann::ordered_json j;
  j["estimate"] = v.estimate;
  j["se"] = v.se;
  j["ci"] = {v.ci_lo, v.ci_hi};
  j["ci_valid"] = v.ci_valid;
  j["display"] = v.display;
  return j;
}

}  // namespace detail

// Deterministic CSV: fixed row order, 17 significant digits.
inline std::string format_csv(const run_result& res) {
  std::string out = "subset,index_family,order,estimate,stderr,ci_lo,ci_hi\n";
  const auto row = [&](const std::string& name, const char* fam, const char* ord,
                       const index_value& v) {
    out += name;
    out += ',';
    out += fam;
    out += ',';
    out += ord;
    out += ',';
    out += detail::g17(v.estimate) + ',' + detail::g17(v.se) + ',' + detail::g17(v.ci_lo) + ',' +
           detail::g17(v.ci_hi) + '\n';
  };
  for (const auto& sr : res.subsets) {
    const std::string name = detail::subset_name(sr.subset);
    row(name, "dgsi1", "first", sr.indices.first_t1);
    row(name, "dgsi1", "total", sr.indices.total_t1);
    row(name, "dgsi2", "first", sr.indices.first_t2);
    row(name, "dgsi2", "total", sr.indices.total_t2);
    if (sr.indices.scalar) {
      row(name, "dsi", "first", sr.indices.first_t1);
      row(name, "dsi", "total", sr.indices.total_t1);
    }
  }
  return out;
}

inline nlohmann::ordered_json report_json(const run_result& res) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["model"] = res.model_name;
  j["dim"] = res.d;
  j["out_dim"] = res.N;
  j["m"] = res.m;
  j["M"] = res.M;
  j["generator"] = res.generator == generator_kind::sobol ? "sobol" : "prng";
  j["seed"] = res.seed;
  j["variance_trace"] = res.sigma.trace();
  j["subsets"] = nlohmann::ordered_json::array();
  for (const auto& sr : res.subsets) {
    nlohmann::ordered_json e;
    nlohmann::ordered_json u = nlohmann::ordered_json::array();
    for (int g : sr.subset) u.push_back(g + 1);
    e["subset"] = u;
    e["representation"] = sr.label_id;
    nlohmann::ordered_json d1, d2;
    d1["first"] = detail::value_json(sr.indices.first_t1);
    d1["total"] = detail::value_json(sr.indices.total_t1);
    d2["first"] = detail::value_json(sr.indices.first_t2);
    d2["total"] = detail::value_json(sr.indices.total_t2);
    e["dgsi1"] = d1;
    e["dgsi2"] = d2;
    if (sr.indices.scalar) e["dsi"] = d1;
    e["flags"] = sr.indices.flags;
    j["subsets"].push_back(e);
  }
  return j;
}

inline nlohmann::ordered_json audit_json(const run_result& res) {
  nlohmann::ordered_json j;
  j["r_min"] = res.r_min_value;
  j["representations_built"] = res.labels.size();
  j["representations"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < res.labels.size(); ++i) {
    nlohmann::ordered_json r;
    r["id"] = res.label_ids[i];
    nlohmann::ordered_json lab = nlohmann::ordered_json::array();
    for (int v : res.labels[i]) lab.push_back(v + 1);  // 1-based per-block permutation number
    r["label"] = lab;
    r["columns"] = res.label_cols[i];
    j["representations"].push_back(r);
  }
  j["plan"] = res.plan_json;
  j["subsets"] = nlohmann::ordered_json::array();
  for (const auto& sr : res.subsets) {
    nlohmann::ordered_json e;
    nlohmann::ordered_json u = nlohmann::ordered_json::array();
    for (int g : sr.subset) u.push_back(g + 1);
    e["subset"] = u;
    e["representation"] = sr.label_id;
    nlohmann::ordered_json pins = nlohmann::ordered_json::array();
    for (int p : sr.routing.pinned)
      pins.push_back(p < 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(p + 1));
    e["pinned"] = pins;
    e["prefix_len"] = sr.routing.prefix_len;
    e["conditioning"] = sr.routing.conditioning;
    e["frozen_columns"] = sr.frozen_names;
    j["subsets"].push_back(e);
  }
  j["m"] = res.m;
  j["M"] = res.M;
  j["generator"] = res.generator == generator_kind::sobol ? "sobol" : "prng";
  j["seed"] = res.seed;
  j["threads"] = res.threads;
  j["wall_seconds"] = res.wall_seconds;
  return j;
}

// Writes indices.csv / report.json / audit.json under cfg.out_dir.
inline void write_outputs(const run_result& res, const run_config& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const auto dump = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(cfg.out_dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + name + " under " + cfg.out_dir);
    out << text;
  };
  if (cfg.write_csv) dump("indices.csv", format_csv(res));
  if (cfg.write_json) dump("report.json", report_json(res).dump(2) + "\n");
  dump("audit.json", audit_json(res).dump(2) + "\n");
}

}  // namespace depsens
