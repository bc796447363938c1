#pragma once

// Domain types shared by every metric family: schemas, population profiles,
// contingency tables and metric outcomes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace biaslens {

/// Raised when raw input cannot be turned into a valid domain object.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Count = std::int64_t;

enum class UndefinedReason { SingleGroupDegenerate, ZeroDenominator, EmptyInput };

inline std::string_view to_string(UndefinedReason reason) {
  switch (reason) {
    case UndefinedReason::SingleGroupDegenerate: return "single-group-degenerate";
    case UndefinedReason::ZeroDenominator: return "zero-denominator";
    case UndefinedReason::EmptyInput: return "empty-input";
  }
  return "unknown";
}

enum class Direction { Diversity, Bias, Association };

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Diversity: return "diversity";
    case Direction::Bias: return "bias";
    case Direction::Association: return "association";
  }
  return "unknown";
}

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
  bool lower_open = false;
  bool upper_open = false;

  /// Closed-interval membership with slack; open ends are reported but not
  /// enforced since floating point cannot distinguish them reliably.
  [[nodiscard]] bool contains(double v, double tol = 1e-9) const {
    return v >= lower - tol && v <= upper + tol;
  }
};

enum class MetricId {
  Richness,
  ShannonEntropy,
  ShannonEvenness,
  NormalizedStd,
  InverseImbalanceRatio,
  BergerParker,
  EffectiveNumberOfSpecies,
  SimpsonIndex,
  SimpsonDiversity,
  SimpsonReciprocal,
  ChiSquared,
  CramersV,
  TschuprowT,
  PearsonC,
  TheilsU,
  TheilsUReverse,
  NormalizedMutualInformation,
  Npmi,
  DuchersZ,
};

inline constexpr MetricId kAllMetrics[] = {
    MetricId::Richness,         MetricId::ShannonEntropy,
    MetricId::ShannonEvenness,  MetricId::NormalizedStd,
    MetricId::InverseImbalanceRatio, MetricId::BergerParker,
    MetricId::EffectiveNumberOfSpecies, MetricId::SimpsonIndex,
    MetricId::SimpsonDiversity, MetricId::SimpsonReciprocal,
    MetricId::ChiSquared,       MetricId::CramersV,
    MetricId::TschuprowT,       MetricId::PearsonC,
    MetricId::TheilsU,          MetricId::TheilsUReverse,
    MetricId::NormalizedMutualInformation, MetricId::Npmi,
    MetricId::DuchersZ,
};

/// Short identifier used in reports and on the command line.
inline std::string_view metric_key(MetricId id) {
  switch (id) {
    case MetricId::Richness: return "R";
    case MetricId::ShannonEntropy: return "H";
    case MetricId::ShannonEvenness: return "SEI";
    case MetricId::NormalizedStd: return "NSD";
    case MetricId::InverseImbalanceRatio: return "IR_inv";
    case MetricId::BergerParker: return "BP";
    case MetricId::EffectiveNumberOfSpecies: return "ENS";
    case MetricId::SimpsonIndex: return "D";
    case MetricId::SimpsonDiversity: return "1-D";
    case MetricId::SimpsonReciprocal: return "1/D";
    case MetricId::ChiSquared: return "chi2";
    case MetricId::CramersV: return "phi_C";
    case MetricId::TschuprowT: return "T";
    case MetricId::PearsonC: return "C";
    case MetricId::TheilsU: return "U";
    case MetricId::TheilsUReverse: return "U_R";
    case MetricId::NormalizedMutualInformation: return "NMI";
    case MetricId::Npmi: return "NPMI";
    case MetricId::DuchersZ: return "Z";
  }
  return "?";
}

inline std::optional<MetricId> parse_metric_key(std::string_view key) {
  for (MetricId id : kAllMetrics) {
    if (metric_key(id) == key) return id;
  }
  return std::nullopt;
}

inline Direction metric_direction(MetricId id) {
  switch (id) {
    case MetricId::Richness:
    case MetricId::ShannonEntropy:
    case MetricId::ShannonEvenness:
    case MetricId::InverseImbalanceRatio:
    case MetricId::EffectiveNumberOfSpecies:
    case MetricId::SimpsonDiversity:
    case MetricId::SimpsonReciprocal:
      return Direction::Diversity;
    case MetricId::NormalizedStd:
    case MetricId::BergerParker:
    case MetricId::SimpsonIndex:
      return Direction::Bias;
    default:
      return Direction::Association;
  }
}

inline bool is_representational(MetricId id) {
  return static_cast<int>(id) <= static_cast<int>(MetricId::SimpsonReciprocal);
}

/// A computed metric: either a number or an explicit undefined marker.
struct MetricValue {
  MetricId id{};
  std::optional<double> value;
  std::optional<UndefinedReason> reason;
  Direction direction = Direction::Association;
  Bounds bounds;
  // Rows/columns removed before evaluation (zero marginals).
  std::vector<std::string> dropped_groups;
  std::vector<std::string> dropped_classes;

  static MetricValue defined(MetricId id, double v, Bounds b) {
    MetricValue m;
    m.id = id;
    m.value = v;
    m.direction = metric_direction(id);
    m.bounds = b;
    return m;
  }

  static MetricValue undefined(MetricId id, UndefinedReason why, Bounds b) {
    MetricValue m;
    m.id = id;
    m.reason = why;
    m.direction = metric_direction(id);
    m.bounds = b;
    return m;
  }

  [[nodiscard]] bool is_defined() const { return value.has_value(); }

  [[nodiscard]] bool within_bounds(double tol = 1e-9) const {
    return !value || bounds.contains(*value, tol);
  }
};

/// A single grid or matrix entry: a number or an undefined marker.
struct CellValue {
  std::optional<double> value;
  std::optional<UndefinedReason> reason;

  static CellValue of(double v) { return {v, std::nullopt}; }
  static CellValue none(UndefinedReason r) { return {std::nullopt, r}; }
  static CellValue from(const MetricValue& m) { return {m.value, m.reason}; }
};

struct Component {
  std::string name;
  std::vector<std::string> groups;
};

namespace detail {

inline void require_unique_nonempty(const std::vector<std::string>& names, std::string_view what) {
  std::set<std::string_view> seen;
  for (const auto& n : names) {
    if (n.empty()) throw Error(std::string(what) + ": empty name");
    if (!seen.insert(n).second) throw Error(std::string(what) + ": duplicate name '" + n + "'");
  }
}

inline std::optional<std::size_t> index_of(const std::vector<std::string>& names, std::string_view v) {
  auto it = std::find(names.begin(), names.end(), v);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

// x ln x with the 0 ln 0 = 0 limit.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace detail

/// Declared demographic components and the target label vocabulary.
class DemographicSchema {
 public:
  DemographicSchema() = default;

  DemographicSchema(std::vector<Component> components, std::vector<std::string> labels)
      : components_(std::move(components)), labels_(std::move(labels)) {
    std::vector<std::string> names;
    for (const auto& c : components_) {
      names.push_back(c.name);
      if (c.groups.empty()) throw Error("component '" + c.name + "' has no groups");
      detail::require_unique_nonempty(c.groups, "component '" + c.name + "'");
    }
    detail::require_unique_nonempty(names, "schema components");
    if (labels_.empty()) throw Error("label vocabulary is empty");
    detail::require_unique_nonempty(labels_, "label vocabulary");
  }

  [[nodiscard]] const std::vector<Component>& components() const { return components_; }
  [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }

  [[nodiscard]] const Component* find(std::string_view name) const {
    for (const auto& c : components_) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  [[nodiscard]] const Component& component(std::string_view name) const {
    if (const auto* c = find(name)) return *c;
    throw Error("unknown component '" + std::string(name) + "'");
  }

 private:
  std::vector<Component> components_;
  std::vector<std::string> labels_;
};

/// Group counts for one demographic component of one dataset.
class PopulationProfile {
 public:
  PopulationProfile(std::string component, std::vector<std::string> groups, std::vector<Count> counts,
                    Count excluded = 0)
      : component_(std::move(component)), groups_(std::move(groups)), counts_(std::move(counts)),
        excluded_(excluded) {
    if (groups_.empty()) throw Error("profile: empty counts mapping");
    if (groups_.size() != counts_.size()) throw Error("profile: group/count size mismatch");
    detail::require_unique_nonempty(groups_, "profile groups");
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (counts_[i] < 0) throw Error("profile: negative count for group '" + groups_[i] + "'");
    }
    total_ = std::accumulate(counts_.begin(), counts_.end(), Count{0});
    if (total_ == 0) throw Error("profile: total zero");
  }

  [[nodiscard]] const std::string& component() const { return component_; }
  [[nodiscard]] const std::vector<std::string>& groups() const { return groups_; }
  [[nodiscard]] const std::vector<Count>& counts() const { return counts_; }
  [[nodiscard]] Count total() const { return total_; }
  [[nodiscard]] Count excluded() const { return excluded_; }
  [[nodiscard]] std::size_t size() const { return groups_.size(); }

  [[nodiscard]] double proportion(std::size_t i) const {
    return static_cast<double>(counts_[i]) / static_cast<double>(total_);
  }

  [[nodiscard]] std::optional<Count> count_of(std::string_view group) const {
    if (auto i = detail::index_of(groups_, group)) return counts_[*i];
    return std::nullopt;
  }

  /// Counts of groups with n_g > 0, in vocabulary order.
  [[nodiscard]] std::vector<Count> represented_counts() const {
    std::vector<Count> out;
    std::copy_if(counts_.begin(), counts_.end(), std::back_inserter(out), [](Count c) { return c > 0; });
    return out;
  }

  /// Groups retained in the vocabulary but without samples.
  [[nodiscard]] std::vector<std::string> zero_groups() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (counts_[i] == 0) out.push_back(groups_[i]);
    }
    return out;
  }

 private:
  std::string component_;
  std::vector<std::string> groups_;
  std::vector<Count> counts_;
  Count total_ = 0;
  Count excluded_ = 0;
};

/// Group x class counts for one component of one dataset, stored row-major.
class ContingencyTable {
 public:
  ContingencyTable(std::string component, std::vector<std::string> groups, std::vector<std::string> classes,
                   std::vector<Count> cells, Count excluded = 0)
      : component_(std::move(component)), groups_(std::move(groups)), classes_(std::move(classes)),
        cells_(std::move(cells)), excluded_(excluded) {
    if (groups_.empty() || classes_.empty()) throw Error("table: empty matrix");
    if (cells_.size() != groups_.size() * classes_.size()) throw Error("table: cell count does not match shape");
    detail::require_unique_nonempty(groups_, "table groups");
    detail::require_unique_nonempty(classes_, "table classes");
    row_totals_.assign(groups_.size(), 0);
    col_totals_.assign(classes_.size(), 0);
    for (std::size_t r = 0; r < rows(); ++r) {
      for (std::size_t c = 0; c < cols(); ++c) {
        Count v = cell(r, c);
        if (v < 0) throw Error("table: negative cell at (" + groups_[r] + ", " + classes_[c] + ")");
        row_totals_[r] += v;
        col_totals_[c] += v;
      }
    }
    total_ = std::accumulate(row_totals_.begin(), row_totals_.end(), Count{0});
    if (total_ == 0) throw Error("table: total zero");
  }

  [[nodiscard]] const std::string& component() const { return component_; }
  [[nodiscard]] const std::vector<std::string>& groups() const { return groups_; }
  [[nodiscard]] const std::vector<std::string>& classes() const { return classes_; }
  [[nodiscard]] const std::vector<Count>& cells() const { return cells_; }
  [[nodiscard]] std::size_t rows() const { return groups_.size(); }
  [[nodiscard]] std::size_t cols() const { return classes_.size(); }
  [[nodiscard]] Count cell(std::size_t r, std::size_t c) const { return cells_[r * classes_.size() + c]; }
  [[nodiscard]] Count row_total(std::size_t r) const { return row_totals_[r]; }
  [[nodiscard]] Count col_total(std::size_t c) const { return col_totals_[c]; }
  [[nodiscard]] const std::vector<Count>& row_totals() const { return row_totals_; }
  [[nodiscard]] const std::vector<Count>& col_totals() const { return col_totals_; }
  [[nodiscard]] Count total() const { return total_; }
  [[nodiscard]] Count excluded() const { return excluded_; }

  [[nodiscard]] double joint(std::size_t r, std::size_t c) const {
    return static_cast<double>(cell(r, c)) / static_cast<double>(total_);
  }
  [[nodiscard]] double row_share(std::size_t r) const {
    return static_cast<double>(row_totals_[r]) / static_cast<double>(total_);
  }
  [[nodiscard]] double col_share(std::size_t c) const {
    return static_cast<double>(col_totals_[c]) / static_cast<double>(total_);
  }

  [[nodiscard]] std::vector<std::string> unrepresented_groups() const {
    std::vector<std::string> out;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (row_totals_[r] == 0) out.push_back(groups_[r]);
    }
    return out;
  }

  [[nodiscard]] std::vector<std::string> unrepresented_classes() const {
    std::vector<std::string> out;
    for (std::size_t c = 0; c < cols(); ++c) {
      if (col_totals_[c] == 0) out.push_back(classes_[c]);
    }
    return out;
  }

  [[nodiscard]] std::size_t nonempty_rows() const { return rows() - unrepresented_groups().size(); }
  [[nodiscard]] std::size_t nonempty_cols() const { return cols() - unrepresented_classes().size(); }

  /// Copy without zero-marginal rows and columns.
  [[nodiscard]] ContingencyTable reduced() const {
    std::vector<std::size_t> keep_r, keep_c;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (row_totals_[r] > 0) keep_r.push_back(r);
    }
    for (std::size_t c = 0; c < cols(); ++c) {
      if (col_totals_[c] > 0) keep_c.push_back(c);
    }
    std::vector<std::string> g, y;
    std::vector<Count> cells;
    cells.reserve(keep_r.size() * keep_c.size());
    for (auto r : keep_r) g.push_back(groups_[r]);
    for (auto c : keep_c) y.push_back(classes_[c]);
    for (auto r : keep_r) {
      for (auto c : keep_c) cells.push_back(cell(r, c));
    }
    return {component_, std::move(g), std::move(y), std::move(cells), excluded_};
  }

  /// Row marginals as a profile over the table's groups.
  [[nodiscard]] PopulationProfile group_profile() const {
    return {component_, groups_, row_totals_, excluded_};
  }

  /// Column marginals as a profile over the table's classes.
  [[nodiscard]] PopulationProfile class_profile(std::string name = "label") const {
    return {std::move(name), classes_, col_totals_, excluded_};
  }

 private:
  std::string component_;
  std::vector<std::string> groups_;
  std::vector<std::string> classes_;
  std::vector<Count> cells_;
  std::vector<Count> row_totals_;
  std::vector<Count> col_totals_;
  Count total_ = 0;
  Count excluded_ = 0;
};

/// Builds a profile from (group, count) pairs, keeping zero-count groups.
inline PopulationProfile validate_profile(const std::vector<std::pair<std::string, Count>>& raw,
                                          std::string component = "component") {
  if (raw.empty()) throw Error("profile: empty counts mapping");
  std::vector<std::string> groups;
  std::vector<Count> counts;
  groups.reserve(raw.size());
  counts.reserve(raw.size());
  for (const auto& [g, n] : raw) {
    groups.push_back(g);
    counts.push_back(n);
  }
  return {std::move(component), std::move(groups), std::move(counts)};
}

/// Builds a table from a rectangular matrix. Missing names default to g0.., y0...
inline ContingencyTable validate_table(const std::vector<std::vector<Count>>& raw,
                                       std::vector<std::string> groups = {},
                                       std::vector<std::string> classes = {},
                                       std::string component = "component") {
  if (raw.empty() || raw.front().empty()) throw Error("table: empty matrix");
  const std::size_t width = raw.front().size();
  for (std::size_t r = 0; r < raw.size(); ++r) {
    if (raw[r].size() != width) throw Error("table: ragged matrix at row " + std::to_string(r));
  }
  if (groups.empty()) {
    for (std::size_t r = 0; r < raw.size(); ++r) groups.push_back("g" + std::to_string(r));
  }
  if (classes.empty()) {
    for (std::size_t c = 0; c < width; ++c) classes.push_back("y" + std::to_string(c));
  }
  if (groups.size() != raw.size() || classes.size() != width) throw Error("table: label count does not match shape");
  std::vector<Count> cells;
  cells.reserve(raw.size() * width);
  for (const auto& row : raw) cells.insert(cells.end(), row.begin(), row.end());
  return {std::move(component), std::move(groups), std::move(classes), std::move(cells)};
}

/// Groups with at least one sample, in vocabulary order.
inline std::vector<std::string> represented_groups(const PopulationProfile& profile) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile.counts()[i] > 0) out.push_back(profile.groups()[i]);
  }
  return out;
}

}  // namespace biaslens
