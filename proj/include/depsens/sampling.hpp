#pragma once

// Input panels: Gray-code Sobol sequences over Joe-Kuo direction numbers
// (optional digital-shift scrambling) and a counter-based splitmix64 PRNG.
// Panel 2 always uses the disjoint dimension range [width, 2*width) of the
// same plan, realizing the two-independent-copies contract.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "detail/sobol_data.hpp"

namespace depsens {

struct direction_row {
  int d = 0, s = 0;
  std::uint64_t a = 0;
  std::vector<std::uint64_t> m;
};

// Text table, one row per dimension >= 2: "d s a m_1..m_s".
class direction_table {
 public:
  static direction_table parse(std::istream& in) {
    direction_table t;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      direction_row r;
      if (!(row >> r.d)) continue;  // header / non-numeric line
      if (!(row >> r.s >> r.a)) throw config_error("direction table: malformed row: " + line);
      r.m.resize(static_cast<std::size_t>(r.s));
      for (auto& mi : r.m)
        if (!(row >> mi)) throw config_error("direction table: missing m values: " + line);
      const int expect = static_cast<int>(t.rows_.size()) + 2;
      if (r.d != expect)
        throw config_error("direction table: expected dimension " + std::to_string(expect) +
                           ", got " + std::to_string(r.d));
      for (int i = 0; i < r.s; ++i)
        if (r.m[static_cast<std::size_t>(i)] % 2 == 0 ||
            r.m[static_cast<std::size_t>(i)] >= (1ULL << (i + 1)))
          throw config_error("direction table: invalid m value in row: " + line);
      t.rows_.push_back(std::move(r));
    }
    return t;
  }

  static const direction_table& bundled() {
    static const direction_table t = [] {
      std::istringstream in{std::string(detail::joe_kuo_directions)};
      return parse(in);
    }();
    return t;
  }

  int max_dimensions() const { return static_cast<int>(rows_.size()) + 1; }
  const direction_row& row(int dim_minus_2) const {
    return rows_[static_cast<std::size_t>(dim_minus_2)];
  }

 private:
  std::vector<direction_row> rows_;
};

// Gray-code Sobol point set with O(popcount) random access per point.
// Raw index 0 is the all-zeros point; callers are expected to skip it.
class sobol_sequence {
 public:
  explicit sobol_sequence(int dims, std::uint64_t scramble_key = 0,
                          const direction_table& table = direction_table::bundled())
      : dims_(dims) {
    if (dims < 1) throw config_error("sobol: dimension must be >= 1");
    if (dims > table.max_dimensions())
      throw config_error("sobol: requested " + std::to_string(dims) +
                         " dimensions, table supports " +
                         std::to_string(table.max_dimensions()));
    v_.resize(static_cast<std::size_t>(dims));
    for (int c = 0; c < 64; ++c) v_[0][static_cast<std::size_t>(c)] = 1ULL << (63 - c);
    for (int j = 1; j < dims; ++j) {
      const direction_row& r = table.row(j - 1);
      auto& v = v_[static_cast<std::size_t>(j)];
      const int s = r.s;
      for (int c = 0; c < std::min(s, 64); ++c)
        v[static_cast<std::size_t>(c)] = r.m[static_cast<std::size_t>(c)] << (63 - c);
      for (int c = s; c < 64; ++c) {
        std::uint64_t val = v[static_cast<std::size_t>(c - s)] ^
                            (v[static_cast<std::size_t>(c - s)] >> s);
        for (int k = 1; k < s; ++k)
          if ((r.a >> (s - 1 - k)) & 1ULL) val ^= v[static_cast<std::size_t>(c - k)];
        v[static_cast<std::size_t>(c)] = val;
      }
    }
    shift_.assign(static_cast<std::size_t>(dims), 0);
    if (scramble_key != 0) {
      for (int j = 0; j < dims; ++j)
        shift_[static_cast<std::size_t>(j)] =
            splitmix64(splitmix64(scramble_key) + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(j));
    }
  }

  int dims() const { return dims_; }

  double coord(std::uint64_t index, int dim) const {
    std::uint64_t g = index ^ (index >> 1);
    std::uint64_t state = shift_[static_cast<std::size_t>(dim)];
    const auto& v = v_[static_cast<std::size_t>(dim)];
    while (g) {
      state ^= v[static_cast<std::size_t>(std::countr_zero(g))];
      g &= g - 1;
    }
    return bits_to_unit(state);
  }

  void point(std::uint64_t index, std::span<double> out) const {
    for (int j = 0; j < dims_ && j < static_cast<int>(out.size()); ++j)
      out[static_cast<std::size_t>(j)] = coord(index, j);
  }

 private:
  int dims_;
  std::vector<std::array<std::uint64_t, 64>> v_;
  std::vector<std::uint64_t> shift_;
};

// Stateless counter PRNG: value is a pure function of (seed, stream, index).
class counter_rng {
 public:
  counter_rng(std::uint64_t seed, std::uint64_t stream)
      : base_(splitmix64(splitmix64(seed) + 0x9e3779b97f4a7c15ULL * (stream + 1))) {}

  double u01(std::uint64_t i) const {
    return bits_to_unit(splitmix64(base_ + 0xbf58476d1ce4e5b9ULL * i));
  }

 private:
  std::uint64_t base_;
};

enum class generator_kind { sobol, prng };

struct sample_plan {
  generator_kind generator = generator_kind::sobol;
  std::uint64_t seed = 0;
  std::size_t m = 0;       // pick-freeze rows
  std::size_t M = 0;       // panel rows for A/B and sigma-hat
  int threads = 1;
  std::uint64_t skip = 1;  // raw Sobol indices skipped (index 0 is all zeros)
};

// Uniform value source for two panels of `width` columns each; values strictly
// inside (0,1). Pure function of (plan, panel, row, col).
class uniform_source {
 public:
  virtual ~uniform_source() = default;
  virtual double value(int panel, std::size_t row, int col) const = 0;
  int width() const { return width_; }

 protected:
  explicit uniform_source(int width) : width_(width) {}
  int width_;
};

namespace detail {

class sobol_source final : public uniform_source {
 public:
  sobol_source(int width, const sample_plan& plan,
               const direction_table& table = direction_table::bundled())
      : uniform_source(width), seq_(2 * width, plan.seed, table), skip_(plan.skip) {}
  double value(int panel, std::size_t row, int col) const override {
    return seq_.coord(skip_ + row, panel * width_ + col);
  }

 private:
  sobol_sequence seq_;
  std::uint64_t skip_;
};

class prng_source final : public uniform_source {
 public:
  prng_source(int width, const sample_plan& plan) : uniform_source(width) {
    streams_.reserve(static_cast<std::size_t>(2 * width));
    for (int s = 0; s < 2 * width; ++s)
      streams_.emplace_back(plan.seed, static_cast<std::uint64_t>(s));
  }
  double value(int panel, std::size_t row, int col) const override {
    return streams_[static_cast<std::size_t>(panel * width_ + col)].u01(row);
  }

 private:
  std::vector<counter_rng> streams_;
};

}  // namespace detail

inline std::unique_ptr<uniform_source> make_uniform_source(
    int width, const sample_plan& plan,
    const direction_table& table = direction_table::bundled()) {
  if (width < 1) throw config_error("sample plan: empty column layout");
  if (plan.generator == generator_kind::sobol) {
    if (2 * width > table.max_dimensions())
      throw config_error("sample plan: 2*" + std::to_string(width) +
                         " Sobol dimensions exceed the direction table (" +
                         std::to_string(table.max_dimensions()) + ")");
    return std::make_unique<detail::sobol_source>(width, plan, table);
  }
  return std::make_unique<detail::prng_source>(width, plan);
}

}  // namespace depsens
