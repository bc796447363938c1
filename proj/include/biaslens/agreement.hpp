#pragma once

// Rank agreement between metrics: Spearman's rho per component, averaged
// across components, plus agreement between two local bias matrices.

#include <biaslens/core.hpp>
#include <biaslens/local.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace biaslens {

/// Fractional (average) ranks starting at 1.
inline std::vector<double> rank_with_ties(std::span<const double> values) {
  if (values.empty()) throw Error("rank_with_ties: empty input");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("rank_with_ties: non-finite value");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation of the fractional ranks. nullopt when either side has
/// no rank variance.
inline std::optional<double> spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("spearman_rho: length mismatch");
  if (xs.size() < 3) throw Error("spearman_rho: need at least 3 paired values");
  const auto rx = rank_with_ties(xs);
  const auto ry = rank_with_ties(ys);
  const double mean = (static_cast<double>(xs.size()) + 1.0) / 2.0;  // mean of any fractional ranking
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Values of several metrics over the same datasets for one component.
/// Every series is aligned with `datasets`; nullopt marks an undefined value.
struct ComponentSeries {
  std::string component;
  std::vector<std::string> datasets;
  std::map<std::string, std::vector<std::optional<double>>> metrics;
};

struct AgreementMatrix {
  std::vector<std::string> metrics;
  std::vector<std::optional<double>> cells;  // row-major, symmetric
  std::vector<std::string> components;
  // per_component[k] is the rho matrix for components[k].
  std::vector<std::vector<std::optional<double>>> per_component;
  // (dataset, component) entries dropped per pair because a value was undefined.
  std::vector<int> excluded;

  [[nodiscard]] std::size_t size() const { return metrics.size(); }
  [[nodiscard]] const std::optional<double>& at(std::size_t i, std::size_t j) const {
    return cells[i * metrics.size() + j];
  }
  [[nodiscard]] std::optional<double> lookup(std::string_view a, std::string_view b) const {
    auto ia = detail::index_of(metrics, a);
    auto ib = detail::index_of(metrics, b);
    if (!ia || !ib) return std::nullopt;
    return at(*ia, *ib);
  }
};

/// Spearman rho for every metric pair inside each component, then the
/// unweighted mean over components with a defined rho. Undefined values drop
/// the affected dataset from that pair only.
inline AgreementMatrix metric_agreement(const std::vector<ComponentSeries>& series,
                                        std::vector<std::string> metrics = {}) {
  if (metrics.empty()) {
    std::set<std::string> all;
    for (const auto& s : series) {
      for (const auto& [k, _] : s.metrics) all.insert(k);
    }
    metrics.assign(all.begin(), all.end());
  }
  if (metrics.size() < 2) throw Error("metric_agreement: need at least 2 metrics");
  std::set<std::string> datasets;
  for (const auto& s : series) datasets.insert(s.datasets.begin(), s.datasets.end());
  if (datasets.size() < 3) throw Error("metric_agreement: need at least 3 datasets");

  const std::size_t m = metrics.size();
  AgreementMatrix out;
  out.metrics = metrics;
  out.cells.assign(m * m, std::nullopt);
  out.excluded.assign(m * m, 0);

  std::vector<double> sum(m * m, 0.0);
  std::vector<int> used(m * m, 0);
  for (const auto& s : series) {
    out.components.push_back(s.component);
    std::vector<std::optional<double>> local(m * m, std::nullopt);
    for (std::size_t i = 0; i < m; ++i) {
      local[i * m + i] = 1.0;
      auto a = s.metrics.find(metrics[i]);
      for (std::size_t j = i + 1; j < m; ++j) {
        auto b = s.metrics.find(metrics[j]);
        if (a == s.metrics.end() || b == s.metrics.end()) continue;
        std::vector<double> xs, ys;
        for (std::size_t d = 0; d < s.datasets.size(); ++d) {
          const auto& x = a->second.at(d);
          const auto& y = b->second.at(d);
          if (x && y) {
            xs.push_back(*x);
            ys.push_back(*y);
          } else {
            ++out.excluded[i * m + j];
          }
        }
        if (xs.size() < 3) continue;
        auto rho = spearman_rho(xs, ys);
        if (!rho) continue;
        local[i * m + j] = local[j * m + i] = rho;
        sum[i * m + j] += *rho;
        ++used[i * m + j];
      }
    }
    out.per_component.push_back(std::move(local));
  }
  for (std::size_t i = 0; i < m; ++i) {
    out.cells[i * m + i] = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      out.excluded[j * m + i] = out.excluded[i * m + j];
      if (used[i * m + j] > 0) {
        const double mean = sum[i * m + j] / used[i * m + j];
        out.cells[i * m + j] = out.cells[j * m + i] = mean;
      }
    }
  }
  return out;
}

/// Spearman rho over the cells defined in both matrices.
inline std::optional<double> local_agreement(const LocalBiasMatrix& a, const LocalBiasMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("local_agreement: dimension mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (a.cells[i].value && b.cells[i].value) {
      xs.push_back(*a.cells[i].value);
      ys.push_back(*b.cells[i].value);
    }
  }
  if (xs.size() < 3) return std::nullopt;
  return spearman_rho(xs, ys);
}

}  // namespace biaslens
