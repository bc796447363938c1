#pragma once

// Representational bias metrics over a single population profile. Every
// metric works on the represented groups (n_g > 0) only; zero-count groups
// in the vocabulary never change a result.

#include <biaslens/core.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace biaslens {

namespace detail {

struct Represented {
  std::vector<Count> counts;
  std::vector<double> shares;
  Count total = 0;
  std::size_t vocabulary = 0;

  explicit Represented(const PopulationProfile& p)
      : counts(p.represented_counts()), total(p.total()), vocabulary(p.size()) {
    // Canonical order so sums, and therefore ties, do not depend on group order.
    std::sort(counts.begin(), counts.end());
    shares.reserve(counts.size());
    for (Count c : counts) shares.push_back(static_cast<double>(c) / static_cast<double>(total));
  }

  [[nodiscard]] std::size_t richness() const { return counts.size(); }
  [[nodiscard]] double r() const { return static_cast<double>(counts.size()); }
};

inline double entropy_of(const std::vector<double>& shares) {
  double h = 0.0;
  for (double p : shares) h -= xlogx(p);
  return h;
}

}  // namespace detail

/// Number of groups with at least one sample.
inline MetricValue richness(const PopulationProfile& profile) {
  detail::Represented x(profile);
  return MetricValue::defined(MetricId::Richness, x.r(), {1.0, static_cast<double>(x.vocabulary)});
}

/// Shannon entropy, natural log.
inline MetricValue shannon_entropy(const PopulationProfile& profile) {
  detail::Represented x(profile);
  return MetricValue::defined(MetricId::ShannonEntropy, detail::entropy_of(x.shares), {0.0, std::log(x.r())});
}

/// Entropy divided by its maximum ln R; undefined for a single represented group.
inline MetricValue shannon_evenness(const PopulationProfile& profile) {
  detail::Represented x(profile);
  const Bounds b{0.0, 1.0};
  if (x.richness() < 2) return MetricValue::undefined(MetricId::ShannonEvenness, UndefinedReason::SingleGroupDegenerate, b);
  return MetricValue::defined(MetricId::ShannonEvenness, detail::entropy_of(x.shares) / std::log(x.r()), b);
}

/// Normalized standard deviation of the represented shares, scaled to [0, 1].
inline MetricValue normalized_std(const PopulationProfile& profile) {
  detail::Represented x(profile);
  const Bounds b{0.0, 1.0};
  if (x.richness() < 2) return MetricValue::undefined(MetricId::NormalizedStd, UndefinedReason::SingleGroupDegenerate, b);
  const double k = x.r();
  const double mean = 1.0 / k;
  double ss = 0.0;
  for (double p : x.shares) ss += (p - mean) * (p - mean);
  return MetricValue::defined(MetricId::NormalizedStd, k / std::sqrt(k - 1.0) * std::sqrt(ss / k), b);
}

/// Least over most represented group count. A single group gives 1.
inline MetricValue inverse_imbalance_ratio(const PopulationProfile& profile) {
  detail::Represented x(profile);
  auto [lo, hi] = std::minmax_element(x.counts.begin(), x.counts.end());
  return MetricValue::defined(MetricId::InverseImbalanceRatio,
                              static_cast<double>(*lo) / static_cast<double>(*hi), {0.0, 1.0, true, false});
}

/// Share of the dominant group.
inline MetricValue berger_parker(const PopulationProfile& profile) {
  detail::Represented x(profile);
  const Count top = *std::max_element(x.counts.begin(), x.counts.end());
  return MetricValue::defined(MetricId::BergerParker, static_cast<double>(top) / static_cast<double>(x.total),
                              {1.0 / x.r(), 1.0});
}

/// exp(H): the equivalent number of equally represented groups.
inline MetricValue effective_number_of_species(const PopulationProfile& profile) {
  const MetricValue h = shannon_entropy(profile);
  detail::Represented x(profile);
  return MetricValue::defined(MetricId::EffectiveNumberOfSpecies, std::exp(*h.value), {1.0, x.r()});
}

struct SimpsonFamily {
  MetricValue index;       // D
  MetricValue diversity;   // 1 - D
  MetricValue reciprocal;  // 1 / D
};

inline SimpsonFamily simpson_family(const PopulationProfile& profile) {
  detail::Represented x(profile);
  double d = 0.0;
  for (double p : x.shares) d += p * p;
  const double r = x.r();
  return {MetricValue::defined(MetricId::SimpsonIndex, d, {1.0 / r, 1.0}),
          MetricValue::defined(MetricId::SimpsonDiversity, 1.0 - d, {0.0, 1.0 - 1.0 / r}),
          MetricValue::defined(MetricId::SimpsonReciprocal, 1.0 / d, {1.0, r})};
}

/// Every representational metric in taxonomy order.
inline std::vector<MetricValue> all_representational(const PopulationProfile& profile) {
  auto simpson = simpson_family(profile);
  return {richness(profile),
          shannon_entropy(profile),
          shannon_evenness(profile),
          normalized_std(profile),
          inverse_imbalance_ratio(profile),
          berger_parker(profile),
          effective_number_of_species(profile),
          std::move(simpson.index),
          std::move(simpson.diversity),
          std::move(simpson.reciprocal)};
}

}  // namespace biaslens
