#pragma once

// Global stereotypical bias: association between a demographic component
// and the target label over a contingency table.

#include <biaslens/core.hpp>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace biaslens {

enum class Axis { Groups, Classes };

/// Which side of the table the Theil's U normalization conditions on.
/// Default: P1 = groups, P2 = classes. Reverse swaps them.
enum class UDirection { Default, Reverse };

namespace detail {

// n * n_gy - n_g * n_y, exact.
inline __int128 cell_excess(const ContingencyTable& t, std::size_t r, std::size_t c) {
  return static_cast<__int128>(t.total()) * t.cell(r, c) -
         static_cast<__int128>(t.row_total(r)) * t.col_total(c);
}

inline MetricValue with_provenance(MetricValue m, const ContingencyTable& t) {
  m.dropped_groups = t.unrepresented_groups();
  m.dropped_classes = t.unrepresented_classes();
  return m;
}

inline bool is_degenerate(const ContingencyTable& t) { return t.nonempty_rows() < 2 || t.nonempty_cols() < 2; }

// I(G;Y) = sum p_gy ln(p_gy / (p_g p_y)); the ratio is formed from the exact
// integer excess so independent cells contribute exactly zero.
inline double mutual_information(const ContingencyTable& t) {
  long double mi = 0.0L;
  const auto n = static_cast<long double>(t.total());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (t.cell(r, c) == 0) continue;
      const long double expected = static_cast<long double>(t.row_total(r)) * t.col_total(c);
      mi += (t.cell(r, c) / n) * std::log1p(static_cast<long double>(cell_excess(t, r, c)) / expected);
    }
  }
  return static_cast<double>(mi);
}

inline double joint_entropy(const ContingencyTable& t) {
  double h = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) h -= xlogx(t.joint(r, c));
  }
  return h;
}

inline std::size_t nonzero_cells(const ContingencyTable& t) {
  std::size_t k = 0;
  for (Count v : t.cells()) k += v > 0 ? 1 : 0;
  return k;
}

}  // namespace detail

/// Pearson's chi-squared statistic over the table without zero-marginal rows/columns.
inline MetricValue chi_squared(const ContingencyTable& table) {
  const Bounds b{0.0, std::numeric_limits<double>::infinity()};
  if (detail::is_degenerate(table)) {
    return detail::with_provenance(
        MetricValue::undefined(MetricId::ChiSquared, UndefinedReason::SingleGroupDegenerate, b), table);
  }
  long double chi2 = 0.0L;
  const auto n = static_cast<long double>(table.total());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (table.row_total(r) == 0) continue;
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (table.col_total(c) == 0) continue;
      const auto excess = static_cast<long double>(detail::cell_excess(table, r, c));
      chi2 += excess * excess / (n * table.row_total(r) * table.col_total(c));
    }
  }
  return detail::with_provenance(MetricValue::defined(MetricId::ChiSquared, static_cast<double>(chi2), b), table);
}

/// Degrees of freedom min(|G|-1, |Y|-1) over nonempty rows and columns.
inline int degrees_of_freedom(const ContingencyTable& table) {
  const auto r = static_cast<int>(table.nonempty_rows());
  const auto c = static_cast<int>(table.nonempty_cols());
  return std::min(r, c) - 1;
}

namespace detail {

template <typename F>
MetricValue chi2_based(const ContingencyTable& table, MetricId id, Bounds b, F&& finish) {
  const MetricValue chi2 = chi_squared(table);
  if (!chi2.is_defined()) {
    return with_provenance(MetricValue::undefined(id, *chi2.reason, b), table);
  }
  const double phi2 = *chi2.value / static_cast<double>(table.total());
  const auto r = static_cast<double>(table.nonempty_rows());
  const auto c = static_cast<double>(table.nonempty_cols());
  return with_provenance(MetricValue::defined(id, finish(phi2, r, c), b), table);
}

}  // namespace detail

/// Cramer's V.
inline MetricValue cramers_v(const ContingencyTable& table) {
  return detail::chi2_based(table, MetricId::CramersV, {0.0, 1.0}, [](double phi2, double r, double c) {
    return std::sqrt(phi2 / std::min(r - 1.0, c - 1.0));
  });
}

/// Tschuprow's T.
inline MetricValue tschuprow_t(const ContingencyTable& table) {
  return detail::chi2_based(table, MetricId::TschuprowT, {0.0, 1.0}, [](double phi2, double r, double c) {
    return std::sqrt(phi2 / std::sqrt((r - 1.0) * (c - 1.0)));
  });
}

/// Pearson's contingency coefficient sqrt(phi^2 / (1 + phi^2)).
inline MetricValue pearson_c(const ContingencyTable& table) {
  return detail::chi2_based(table, MetricId::PearsonC, {0.0, 1.0, false, true},
                            [](double phi2, double, double) { return std::sqrt(phi2 / (1.0 + phi2)); });
}

/// Entropy of the row (groups) or column (classes) marginal distribution.
inline double marginal_entropy(const ContingencyTable& table, Axis side) {
  double h = 0.0;
  if (side == Axis::Groups) {
    for (std::size_t r = 0; r < table.rows(); ++r) h -= detail::xlogx(table.row_share(r));
  } else {
    for (std::size_t c = 0; c < table.cols(); ++c) h -= detail::xlogx(table.col_share(c));
  }
  return h;
}

/// H(P1 | P2) where P2 is `given`: -sum p_ij ln(p_ij / p_j).
inline double conditional_entropy(const ContingencyTable& table, Axis given) {
  double h = 0.0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (table.cell(r, c) == 0) continue;
      const double p = table.joint(r, c);
      const double cond = given == Axis::Classes ? table.col_share(c) : table.row_share(r);
      h -= p * std::log(p / cond);
    }
  }
  return h;
}

/// Theil's U: (H(P1) - H(P1|P2)) / H(P2). The numerator is I(G;Y) in both
/// directions; only the normalizing entropy changes.
inline MetricValue theils_u(const ContingencyTable& table, UDirection dir = UDirection::Default) {
  const MetricId id = dir == UDirection::Default ? MetricId::TheilsU : MetricId::TheilsUReverse;
  const Bounds b{0.0, 1.0};
  const Axis normalizer = dir == UDirection::Default ? Axis::Classes : Axis::Groups;
  const std::size_t support = normalizer == Axis::Classes ? table.nonempty_cols() : table.nonempty_rows();
  if (support < 2) {
    return detail::with_provenance(MetricValue::undefined(id, UndefinedReason::ZeroDenominator, b), table);
  }
  const double value = detail::mutual_information(table) / marginal_entropy(table, normalizer);
  return detail::with_provenance(MetricValue::defined(id, value, b), table);
}

/// Mutual information normalized by the joint entropy.
inline MetricValue nmi(const ContingencyTable& table) {
  const Bounds b{0.0, 1.0};
  if (detail::nonzero_cells(table) < 2) {
    return detail::with_provenance(
        MetricValue::undefined(MetricId::NormalizedMutualInformation, UndefinedReason::ZeroDenominator, b), table);
  }
  return detail::with_provenance(
      MetricValue::defined(MetricId::NormalizedMutualInformation,
                           detail::mutual_information(table) / detail::joint_entropy(table), b),
      table);
}

/// Every global stereotypical metric in taxonomy order.
inline std::vector<MetricValue> all_stereotypical(const ContingencyTable& table) {
  return {chi_squared(table), cramers_v(table),
          tschuprow_t(table), pearson_c(table),
          theils_u(table, UDirection::Default), theils_u(table, UDirection::Reverse),
          nmi(table)};
}

// --- Cramer's V strength bands ------------------------------------------------

/// cohen:   negligible < t1 <= weak < t2 <= medium < t3 <= strong
/// literal: weak < t1 <= medium < t2 <= strong (no negligible band; values
///          from t2 upwards are strong)
enum class ThresholdMode { Cohen, Literal };

enum class StrengthBand { Negligible, Weak, Medium, Strong };

inline std::string_view to_string(StrengthBand b) {
  switch (b) {
    case StrengthBand::Negligible: return "negligible";
    case StrengthBand::Weak: return "weak";
    case StrengthBand::Medium: return "medium";
    case StrengthBand::Strong: return "strong";
  }
  return "unknown";
}

inline std::string_view to_string(ThresholdMode m) { return m == ThresholdMode::Cohen ? "cohen" : "literal"; }

inline ThresholdMode parse_threshold_mode(std::string_view s) {
  if (s == "cohen") return ThresholdMode::Cohen;
  if (s == "literal") return ThresholdMode::Literal;
  throw Error("unknown threshold mode '" + std::string(s) + "' (expected cohen|literal)");
}

/// BIASLENS_THRESHOLD_MODE, defaulting to cohen when unset.
inline ThresholdMode threshold_mode_from_env() {
  const char* v = std::getenv("BIASLENS_THRESHOLD_MODE");
  return (v != nullptr && *v != '\0') ? parse_threshold_mode(v) : ThresholdMode::Cohen;
}

struct BiasStrength {
  StrengthBand band = StrengthBand::Negligible;
  int dof = 1;
  double t1 = 0.1;
  double t2 = 0.3;
  double t3 = 0.5;
};

inline BiasStrength classify_cramers_v(double v, int dof, ThresholdMode mode = ThresholdMode::Cohen) {
  if (dof < 1) throw Error("classify_cramers_v: dof must be >= 1");
  const double s = 1.0 / std::sqrt(static_cast<double>(dof));
  BiasStrength out{StrengthBand::Negligible, dof, 0.1 * s, 0.3 * s, 0.5 * s};
  if (mode == ThresholdMode::Cohen) {
    if (v >= out.t3) out.band = StrengthBand::Strong;
    else if (v >= out.t2) out.band = StrengthBand::Medium;
    else if (v >= out.t1) out.band = StrengthBand::Weak;
  } else {
    if (v >= out.t2) out.band = StrengthBand::Strong;
    else if (v >= out.t1) out.band = StrengthBand::Medium;
    else out.band = StrengthBand::Weak;
  }
  return out;
}

}  // namespace biaslens
