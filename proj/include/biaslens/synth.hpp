#pragma once

// Deterministic synthetic profiles, tables and sample sets. The generator is
// SplitMix64 so fixtures are reproducible from the seed alone.

#include <biaslens/core.hpp>
#include <biaslens/ingest.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace biaslens {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1].
  double uniform() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

 private:
  std::uint64_t state_;
};

enum class TableMode { Joint, Independence };

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t groups = 2;
  std::size_t classes = 2;
  double concentration = 1.0;  // 0: even; larger: dominated by one cell/group
  double sparsity = 0.0;       // probability of zeroing a cell/group
  Count total = 1000;
  TableMode mode = TableMode::Joint;
};

namespace detail {

inline void check_spec(const SynthSpec& s) {
  if (s.groups < 1 || s.classes < 1) throw Error("synth: group and class counts must be >= 1");
  if (s.total < 1) throw Error("synth: total must be >= 1");
  if (s.concentration < 0.0 || !std::isfinite(s.concentration)) throw Error("synth: concentration must be >= 0");
  if (s.sparsity < 0.0 || s.sparsity >= 1.0) throw Error("synth: sparsity must be in [0, 1)");
  if (s.sparsity == 0.0 && s.total < static_cast<Count>(s.groups)) throw Error("synth: total smaller than group count");
}

// weight_i = u_i^concentration, then each entry is zeroed with probability
// `sparsity`; the largest draw always survives.
inline std::vector<double> draw_weights(SplitMix64& rng, std::size_t k, double concentration, double sparsity) {
  std::vector<double> u(k);
  for (auto& x : u) x = rng.uniform();
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = concentration == 0.0 ? 1.0 : std::pow(u[i], concentration);
  const auto keep = static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
  if (sparsity > 0.0) {
    for (std::size_t i = 0; i < k; ++i) {
      if (i != keep && rng.uniform() <= sparsity) w[i] = 0.0;
    }
  }
  return w;
}

// Largest-remainder apportionment of `total` over `weights`; ties go to the
// lower index.
inline std::vector<Count> apportion(const std::vector<double>& weights, Count total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0)) throw Error("synth: all weights are zero");
  std::vector<Count> out(weights.size(), 0);
  std::vector<double> frac(weights.size(), 0.0);
  Count assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(total) * weights[i] / sum;
    out[i] = static_cast<Count>(std::floor(quota));
    frac[i] = quota - std::floor(quota);
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
    if (weights[order[i]] > 0.0) {
      ++out[order[i]];
      ++assigned;
    }
  }
  return out;
}

inline std::vector<std::string> names(std::string_view prefix, std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}

}  // namespace detail

/// Profile over `groups` groups whose counts sum to `total`.
inline PopulationProfile random_profile(const SynthSpec& spec) {
  detail::check_spec(spec);
  SplitMix64 rng(spec.seed);
  const auto w = detail::draw_weights(rng, spec.groups, spec.concentration, spec.sparsity);
  return {"synthetic", detail::names("g", spec.groups), detail::apportion(w, spec.total)};
}

/// Joint mode apportions `total` over independently weighted cells.
/// Independence mode is an exact outer product of two apportioned marginals,
/// so its total is A*B with A*B close to `total`.
inline ContingencyTable random_table(const SynthSpec& spec) {
  detail::check_spec(spec);
  SplitMix64 rng(spec.seed);
  std::vector<Count> cells;
  if (spec.mode == TableMode::Joint) {
    const auto w = detail::draw_weights(rng, spec.groups * spec.classes, spec.concentration, spec.sparsity);
    cells = detail::apportion(w, spec.total);
  } else {
    const auto wr = detail::draw_weights(rng, spec.groups, spec.concentration, spec.sparsity);
    const auto wc = detail::draw_weights(rng, spec.classes, spec.concentration, spec.sparsity);
    const auto g = static_cast<Count>(spec.groups);
    const auto y = static_cast<Count>(spec.classes);
    const Count a = std::max(g, static_cast<Count>(std::llround(std::sqrt(static_cast<double>(spec.total)))));
    const Count b = std::max(y, spec.total / a);
    const auto rows = detail::apportion(wr, a);
    const auto cols = detail::apportion(wc, b);
    for (Count r : rows) {
      for (Count c : cols) cells.push_back(r * c);
    }
  }
  return {"synthetic", detail::names("g", spec.groups), detail::names("y", spec.classes), std::move(cells)};
}

/// Per-sample records over `schema`. Each component's group distribution
/// mixes a global profile with a per-label one; `stereotype` in [0, 1] sets the
/// weight of the per-label part. `missing` is the chance a value is absent.
struct SampleSynthSpec {
  std::uint64_t seed = 0;
  Count samples = 1000;
  double concentration = 1.0;
  double stereotype = 0.3;
  double missing = 0.0;
  // Components restricted to a single group (all samples share it).
  std::vector<std::string> single_group;
};

inline std::vector<SampleRecord> random_samples(const SampleSynthSpec& spec, const DemographicSchema& schema) {
  if (spec.samples < 1) throw Error("synth: samples must be >= 1");
  SplitMix64 rng(spec.seed);
  auto pick = [&](const std::vector<double>& w) {
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    double x = (1.0 - rng.uniform()) * sum;  // [0, sum)
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (x < w[i]) return i;
      x -= w[i];
    }
    return w.size() - 1;
  };
  const auto label_w = detail::draw_weights(rng, schema.labels().size(), spec.concentration * 0.5, 0.0);
  // group_w[k][y] is the group distribution of component k given label y.
  std::vector<std::vector<std::vector<double>>> group_w;
  for (const auto& comp : schema.components()) {
    const auto base = detail::draw_weights(rng, comp.groups.size(), spec.concentration, 0.0);
    const double base_sum = std::accumulate(base.begin(), base.end(), 0.0);
    const bool single = std::find(spec.single_group.begin(), spec.single_group.end(), comp.name) !=
                        spec.single_group.end();
    const auto only = static_cast<std::size_t>(std::max_element(base.begin(), base.end()) - base.begin());
    std::vector<std::vector<double>> per_label;
    for (std::size_t y = 0; y < schema.labels().size(); ++y) {
      const auto skew = detail::draw_weights(rng, comp.groups.size(), 2.0, 0.0);
      const double skew_sum = std::accumulate(skew.begin(), skew.end(), 0.0);
      std::vector<double> w(comp.groups.size());
      for (std::size_t g = 0; g < w.size(); ++g) {
        w[g] = single ? (g == only ? 1.0 : 0.0)
                      : (1.0 - spec.stereotype) * base[g] / base_sum + spec.stereotype * skew[g] / skew_sum;
      }
      per_label.push_back(std::move(w));
    }
    group_w.push_back(std::move(per_label));
  }
  std::vector<SampleRecord> out;
  out.reserve(static_cast<std::size_t>(spec.samples));
  for (Count i = 0; i < spec.samples; ++i) {
    SampleRecord r;
    r.sample_id = "s" + std::to_string(i);
    r.label = pick(label_w);
    for (const auto& per_label : group_w) {
      const auto g = pick(per_label[r.label]);
      if (spec.missing > 0.0 && rng.uniform() <= spec.missing) r.groups.emplace_back(std::nullopt);
      else r.groups.emplace_back(g);
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Per-sample CSV with columns file,label,<components...>; missing values are empty.
inline std::string samples_to_csv(const std::vector<SampleRecord>& records, const DemographicSchema& schema) {
  csv::Row header{"file", "label"};
  for (const auto& c : schema.components()) header.push_back(c.name);
  std::string out = csv::join(header) + "\n";
  for (const auto& r : records) {
    csv::Row row{r.sample_id, schema.labels()[r.label]};
    for (std::size_t k = 0; k < r.groups.size(); ++k) {
      row.push_back(r.groups[k] ? schema.components()[k].groups[*r.groups[k]] : std::string());
    }
    out += csv::join(row) + "\n";
  }
  return out;
}

}  // namespace biaslens
