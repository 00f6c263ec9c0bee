#pragma once
// Run configuration: versioned JSON schema, full-pass validation (every error
// collected, not first-failure), and construction of the model + subset list.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "depsens/common.hpp"
#include "depsens/models.hpp"
#include "depsens/sampling.hpp"

namespace depsens {

struct subset_request {
  enum class mode { list, singletons, pairs, up_to, all };
  mode kind = mode::singletons;
  std::vector<std::vector<int>> list;  // 0-based, used when kind == list
  int max_order = 1;                   // used when kind == up_to
};

struct run_config {
  int schema = 1;
  std::optional<model> mdl;
  subset_request subsets;
  std::size_t m = 10000, M = 10000;
  generator_kind generator = generator_kind::sobol;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  std::string out_dir = "out";
  bool write_csv = true, write_json = true;
};

struct validate_result {
  std::optional<run_config> config;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty() && config.has_value(); }
  std::string joined() const {
    std::string s;
    for (const auto& e : errors) {
      if (!s.empty()) s += "; ";
      s += e;
    }
    return s;
  }
};

// Materializes the requested subsets (0-based, each sorted, request order).
inline std::vector<std::vector<int>> expand_subsets(const subset_request& req, int d) {
  std::vector<std::vector<int>> out;
  switch (req.kind) {
    case subset_request::mode::list:
      out = req.list;
      break;
    case subset_request::mode::singletons:
      for (int i = 0; i < d; ++i) out.push_back({i});
      break;
    case subset_request::mode::pairs:
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) out.push_back({i, j});
      break;
    case subset_request::mode::up_to:
    case subset_request::mode::all: {
      const int cap = req.kind == subset_request::mode::all ? d : req.max_order;
      if (d > 20) throw config_error("subset enumeration: d too large for exhaustive modes");
      std::vector<std::vector<int>> by_card(static_cast<std::size_t>(cap) + 1);
      for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
        const int c = std::popcount(mask);
        if (c > cap) continue;
        std::vector<int> u;
        for (int i = 0; i < d; ++i)
          if (mask & (1u << i)) u.push_back(i);
        out.push_back(std::move(u));
      }
      std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
      });
      break;
    }
  }
  return out;
}

namespace detail {

class config_reader {
 public:
  explicit config_reader(std::vector<std::string>& errors) : errors_(&errors) {}

  void fail(const std::string& msg) { errors_->push_back(msg); }

  margin read_margin(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
      fail(where + ": margin must be an object with a \"family\" string");
      return margin::uniform(0.0, 1.0);
    }
    const std::string fam = j["family"].get<std::string>();
    try {
      if (fam == "uniform")
        return margin::uniform(num(j, "a", 0.0), num(j, "b", 1.0));
      if (fam == "normal")
        return margin::normal(num(j, "mu", 0.0), num(j, "sigma", 1.0));
      if (fam == "student-t")
        return margin::student_t(num(j, "nu", 1.0), num(j, "location", 0.0),
                                 num(j, "scale", 1.0));
      if (fam == "beta") return margin::beta(num(j, "alpha", 1.0), num(j, "beta", 1.0));
      if (fam == "bernoulli") return margin::bernoulli(num(j, "p", 0.5));
      fail(where + ": unknown margin family \"" + fam + "\"");
    } catch (const std::exception& ex) {
      fail(where + ": " + ex.what());
    }
    return margin::uniform(0.0, 1.0);
  }

  Eigen::MatrixXd read_correlation(const nlohmann::json& j, int dk, const std::string& where) {
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(dk, dk);
    if (!j.is_array() || static_cast<int>(j.size()) != dk) {
      fail(where + ": correlation must be a " + std::to_string(dk) + "x" + std::to_string(dk) +
           " array of rows");
      return R;
    }
    for (int r = 0; r < dk; ++r) {
      const auto& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<int>(row.size()) != dk) {
        fail(where + ": correlation row " + std::to_string(r + 1) + " has wrong length");
        return R;
      }
      for (int c = 0; c < dk; ++c) {
        if (!row[static_cast<std::size_t>(c)].is_number()) {
          fail(where + ": correlation entries must be numbers");
          return R;
        }
        R(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    bool shape_ok = true;
    for (int r = 0; r < dk && shape_ok; ++r) {
      if (std::abs(R(r, r) - 1.0) > 1e-12) {
        fail(where + ": correlation diagonal must be 1");
        shape_ok = false;
      }
      for (int c = 0; c < r && shape_ok; ++c)
        if (std::abs(R(r, c) - R(c, r)) > 1e-12) {
          fail(where + ": correlation must be symmetric");
          shape_ok = false;
        }
    }
    if (shape_ok) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-10) fail(where + ": copula not positive definite");
    }
    return R;
  }

  double num(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) {
      fail(std::string("\"") + key + "\" must be a number");
      return fallback;
    }
    return j[key].get<double>();
  }

 private:
  std::vector<std::string>* errors_;
};

inline std::optional<model> read_model(const nlohmann::json& j, std::vector<std::string>& errors) {
  config_reader rd(errors);
  if (!j.is_object()) {
    errors.push_back("\"model\" must be an object");
    return std::nullopt;
  }
  if (j.contains("preset")) {
    const std::string preset = j["preset"].is_string() ? j["preset"].get<std::string>() : "";
    try {
      if (preset == "gsobol") return model::gsobol();
      if (preset == "linear-gaussian") {
        std::array<double, 3> sig{1.0, 1.0, 1.0};
        std::array<double, 3> rho{0.0, 0.0, 0.0};
        if (j.contains("sigma") && j["sigma"].is_array() && j["sigma"].size() == 3)
          for (int i = 0; i < 3; ++i) sig[static_cast<std::size_t>(i)] = j["sigma"][static_cast<std::size_t>(i)].get<double>();
        else if (j.contains("sigma"))
          errors.push_back("linear-gaussian: \"sigma\" must be an array of 3 numbers");
        if (j.contains("rho") && j["rho"].is_array() && j["rho"].size() == 3)
          for (int i = 0; i < 3; ++i) rho[static_cast<std::size_t>(i)] = j["rho"][static_cast<std::size_t>(i)].get<double>();
        else if (j.contains("rho"))
          errors.push_back("linear-gaussian: \"rho\" must be an array of 3 numbers (rho12, rho13, rho23)");
        return model::linear_gaussian(sig, rho[0], rho[1], rho[2]);
      }
      if (preset == "portfolio") {
        std::array<double, 4> sig{1.0, 1.0, 1.0, 1.0};
        if (j.contains("sigma") && j["sigma"].is_array() && j["sigma"].size() == 4)
          for (int i = 0; i < 4; ++i) sig[static_cast<std::size_t>(i)] = j["sigma"][static_cast<std::size_t>(i)].get<double>();
        else if (j.contains("sigma"))
          errors.push_back("portfolio: \"sigma\" must be an array of 4 numbers");
        return model::portfolio(sig, rd.num(j, "rho12", 0.0), rd.num(j, "rho34", 0.0),
                                rd.num(j, "nu", 5.0));
      }
      errors.push_back("unknown model preset \"" + preset + "\"");
    } catch (const std::exception& ex) {
      errors.push_back(std::string("model: ") + ex.what());
    }
    return std::nullopt;
  }

  // Expression model: dim + outputs + blocks.
  if (!j.contains("dim") || !j["dim"].is_number_integer()) {
    errors.push_back("expression model: integer \"dim\" is required");
    return std::nullopt;
  }
  const int d = j["dim"].get<int>();
  if (d < 1) {
    errors.push_back("expression model: dim must be >= 1");
    return std::nullopt;
  }
  std::vector<expr> outputs;
  if (!j.contains("outputs") || !j["outputs"].is_array() || j["outputs"].empty()) {
    errors.push_back("expression model: nonempty \"outputs\" array of strings is required");
  } else {
    for (std::size_t i = 0; i < j["outputs"].size(); ++i) {
      const auto& o = j["outputs"][i];
      if (!o.is_string()) {
        errors.push_back("outputs[" + std::to_string(i + 1) + "]: must be a string");
        continue;
      }
      try {
        outputs.push_back(parse_expression(o.get<std::string>()));
      } catch (const std::exception& ex) {
        errors.push_back("outputs[" + std::to_string(i + 1) + "]: " + ex.what());
      }
    }
  }

  std::vector<int> indep;
  std::vector<margin> indep_margins;
  std::vector<dependent_block> dep;
  const auto read_indices = [&](const nlohmann::json& arr, const std::string& where) {
    std::vector<int> idx;
    if (!arr.is_array()) {
      errors.push_back(where + ": \"indices\" must be an array");
      return idx;
    }
    for (const auto& v : arr) {
      if (!v.is_number_integer()) {
        errors.push_back(where + ": indices must be integers");
        return std::vector<int>{};
      }
      const int g = v.get<int>();
      if (g < 1 || g > d) {
        errors.push_back(where + ": index " + std::to_string(g) + " outside {1.." +
                         std::to_string(d) + "}");
        return std::vector<int>{};
      }
      idx.push_back(g - 1);  // user-facing indices are 1-based
    }
    return idx;
  };

  if (!j.contains("blocks") || !j["blocks"].is_object()) {
    errors.push_back("expression model: \"blocks\" object is required");
    return std::nullopt;
  }
  const auto& jb = j["blocks"];
  if (jb.contains("independent")) {
    const auto& ji = jb["independent"];
    indep = read_indices(ji.contains("indices") ? ji["indices"] : nlohmann::json(), "independent block");
    if (ji.contains("margins") && ji["margins"].is_array()) {
      for (std::size_t i = 0; i < ji["margins"].size(); ++i)
        indep_margins.push_back(
            rd.read_margin(ji["margins"][i], "independent margin " + std::to_string(i + 1)));
    }
    if (indep.size() != indep_margins.size())
      errors.push_back("independent block: one margin per index is required (" +
                       std::to_string(indep.size()) + " indices, " +
                       std::to_string(indep_margins.size()) + " margins)");
  }
  if (jb.contains("dependent")) {
    if (!jb["dependent"].is_array()) {
      errors.push_back("\"dependent\" must be an array of blocks");
    } else {
      for (std::size_t k = 0; k < jb["dependent"].size(); ++k) {
        const auto& jd = jb["dependent"][k];
        const std::string where = "dependent block " + std::to_string(k + 1);
        dependent_block b;
        const std::string fam =
            jd.contains("family") && jd["family"].is_string() ? jd["family"].get<std::string>() : "";
        if (fam == "gaussian-copula")
          b.family = block_family::gaussian_copula;
        else if (fam == "student-copula")
          b.family = block_family::student_copula;
        else if (fam == "simplex")
          b.family = block_family::simplex;
        else {
          errors.push_back(where + ": unknown family \"" + fam + "\"");
          continue;
        }
        b.indices = read_indices(jd.contains("indices") ? jd["indices"] : nlohmann::json(), where);
        if (b.indices.size() < 2) {
          errors.push_back(where + ": needs at least 2 indices");
          continue;
        }
        const int dk = static_cast<int>(b.indices.size());
        if (b.family != block_family::simplex) {
          b.correlation = rd.read_correlation(
              jd.contains("correlation") ? jd["correlation"] : nlohmann::json(), dk, where);
          if (jd.contains("margins") && jd["margins"].is_array() &&
              static_cast<int>(jd["margins"].size()) == dk) {
            for (int i = 0; i < dk; ++i)
              b.margins.push_back(rd.read_margin(jd["margins"][static_cast<std::size_t>(i)],
                                                 where + " margin " + std::to_string(i + 1)));
          } else {
            errors.push_back(where + ": one margin per index is required");
            continue;
          }
          if (b.family == block_family::student_copula) {
            b.nu = rd.num(jd, "nu", 0.0);
            if (!(b.nu > 0.0)) errors.push_back(where + ": student copula needs nu > 0");
          }
        }
        dep.push_back(std::move(b));
      }
    }
  }
  if (!errors.empty()) return std::nullopt;
  try {
    block_structure s(d, std::move(indep), std::move(indep_margins), std::move(dep));
    return model::expression_model(d, std::move(outputs), std::move(s));
  } catch (const std::exception& ex) {
    errors.push_back(std::string("blocks: ") + ex.what());
    return std::nullopt;
  }
}

}  // namespace detail

inline validate_result validate_config(const std::string& text) {
  validate_result res;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    res.errors.push_back(std::string("JSON parse failure: ") + ex.what());
    return res;
  }
  if (!j.is_object()) {
    res.errors.push_back("top level must be a JSON object");
    return res;
  }
  run_config cfg;
  auto& errors = res.errors;

  if (!j.contains("schema") || !j["schema"].is_number_integer() || j["schema"].get<int>() != 1)
    errors.push_back("\"schema\" must be the integer 1");

  if (j.contains("model"))
    cfg.mdl = detail::read_model(j["model"], errors);
  else
    errors.push_back("\"model\" is required");

  // Subset request; range checks happen once the dimension is known.
  if (j.contains("subsets")) {
    const auto& js = j["subsets"];
    const std::string mode =
        js.is_object() && js.contains("mode") && js["mode"].is_string() ? js["mode"].get<std::string>() : "";
    if (mode == "list") {
      cfg.subsets.kind = subset_request::mode::list;
      if (!js.contains("list") || !js["list"].is_array() || js["list"].empty()) {
        errors.push_back("subsets: mode \"list\" needs a nonempty \"list\" array");
      } else {
        for (std::size_t i = 0; i < js["list"].size(); ++i) {
          const auto& ju = js["list"][i];
          std::vector<int> u;
          bool ok = ju.is_array() && !ju.empty();
          if (ok)
            for (const auto& v : ju) {
              if (!v.is_number_integer()) {
                ok = false;
                break;
              }
              u.push_back(v.get<int>() - 1);
            }
          if (!ok) {
            errors.push_back("subsets.list[" + std::to_string(i + 1) +
                             "]: must be a nonempty array of integers");
            continue;
          }
          std::sort(u.begin(), u.end());
          if (std::adjacent_find(u.begin(), u.end()) != u.end()) {
            errors.push_back("subsets.list[" + std::to_string(i + 1) + "]: repeated index");
            continue;
          }
          cfg.subsets.list.push_back(std::move(u));
        }
      }
    } else if (mode == "singletons") {
      cfg.subsets.kind = subset_request::mode::singletons;
    } else if (mode == "pairs") {
      cfg.subsets.kind = subset_request::mode::pairs;
    } else if (mode == "all") {
      cfg.subsets.kind = subset_request::mode::all;
    } else if (mode == "up_to") {
      cfg.subsets.kind = subset_request::mode::up_to;
      if (!js.contains("max_order") || !js["max_order"].is_number_integer() ||
          js["max_order"].get<int>() < 1)
        errors.push_back("subsets: mode \"up_to\" needs integer \"max_order\" >= 1");
      else
        cfg.subsets.max_order = js["max_order"].get<int>();
    } else {
      errors.push_back(
          "subsets.mode must be one of \"list\", \"singletons\", \"pairs\", \"up_to\", \"all\"");
    }
  } else {
    errors.push_back("\"subsets\" is required");
  }

  if (cfg.mdl) {
    const int d = cfg.mdl->dim();
    for (std::size_t i = 0; i < cfg.subsets.list.size(); ++i)
      for (int g : cfg.subsets.list[i])
        if (g < 0 || g >= d)
          errors.push_back("subsets.list[" + std::to_string(i + 1) + "]: index " +
                           std::to_string(g + 1) + " outside {1.." + std::to_string(d) + "}");
    if (cfg.subsets.kind == subset_request::mode::up_to && cfg.subsets.max_order > d)
      errors.push_back("subsets.max_order exceeds the model dimension");
  }

  const auto read_size = [&](const char* key, std::size_t fallback) -> std::size_t {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer() || j[key].get<long long>() < 0) {
      errors.push_back(std::string("\"") + key + "\" must be a nonnegative integer");
      return fallback;
    }
    return static_cast<std::size_t>(j[key].get<long long>());
  };
  cfg.m = read_size("m", cfg.m);
  cfg.M = read_size("M", cfg.M);
  if (cfg.m < 100) errors.push_back("m must be >= 100 (CI validity)");
  if (cfg.M < cfg.m) errors.push_back("M must be >= m (panels are shared)");

  if (j.contains("generator")) {
    const std::string g = j["generator"].is_string() ? j["generator"].get<std::string>() : "";
    if (g == "sobol")
      cfg.generator = generator_kind::sobol;
    else if (g == "prng")
      cfg.generator = generator_kind::prng;
    else
      errors.push_back("\"generator\" must be \"sobol\" or \"prng\"");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0)
      errors.push_back("\"seed\" must be a nonnegative integer");
    else
      cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    if (!j["threads"].is_number_integer() || j["threads"].get<int>() < 0)
      errors.push_back("\"threads\" must be a nonnegative integer (0 = auto)");
    else
      cfg.threads = j["threads"].get<int>();
  }
  if (j.contains("output")) {
    const auto& jo = j["output"];
    if (!jo.is_object()) {
      errors.push_back("\"output\" must be an object");
    } else {
      if (jo.contains("dir")) {
        if (!jo["dir"].is_string())
          errors.push_back("output.dir must be a string");
        else
          cfg.out_dir = jo["dir"].get<std::string>();
      }
      if (jo.contains("formats")) {
        if (!jo["formats"].is_array()) {
          errors.push_back("output.formats must be an array");
        } else {
          cfg.write_csv = cfg.write_json = false;
          for (const auto& f : jo["formats"]) {
            const std::string s = f.is_string() ? f.get<std::string>() : "";
            if (s == "csv")
              cfg.write_csv = true;
            else if (s == "json")
              cfg.write_json = true;
            else
              errors.push_back("output.formats entries must be \"csv\" or \"json\"");
          }
        }
      }
    }
  }

  if (!errors.empty()) return res;
  res.config = std::move(cfg);
  return res;
}

// Throwing variant for the CLI path (exit code 2).
inline run_config load_config(const std::string& text) {
  auto res = validate_config(text);
  if (!res.ok()) throw config_error(res.joined());
  return std::move(*res.config);
}

}  // namespace depsens
