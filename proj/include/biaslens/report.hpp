#pragma once

// Report grids (metric x component rows, dataset columns), bias-form
// conversions, row normalization, dataset ranking and serialization.

#include <biaslens/agreement.hpp>
#include <biaslens/core.hpp>
#include <biaslens/csv.hpp>
#include <biaslens/local.hpp>
#include <biaslens/stereotypical.hpp>

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace biaslens {

enum class Format { Json, Csv, Md, Svg };

inline Format parse_format(std::string_view s) {
  if (s == "json") return Format::Json;
  if (s == "csv") return Format::Csv;
  if (s == "md") return Format::Md;
  if (s == "svg") return Format::Svg;
  throw Error("unknown format '" + std::string(s) + "' (expected json|csv|md|svg)");
}

inline std::string_view extension(Format f) {
  switch (f) {
    case Format::Json: return "json";
    case Format::Csv: return "csv";
    case Format::Md: return "md";
    case Format::Svg: return "svg";
  }
  return "txt";
}

// --- bias-form conversion ---------------------------------------------------------

struct BiasFormContext {
  std::size_t group_count = 0;  // schema vocabulary size |G| of the component
};

/// Complementary form of a metric: D, 1-D, NSD, BP and SEI map to 1 - v,
/// IR^-1 to IR, ENS to |G| - ENS. Every mapping is its own inverse; metrics
/// without a complement (R, H, 1/D, association metrics) are returned as is.
inline double to_bias_form(MetricId id, double value, BiasFormContext ctx = {}) {
  switch (id) {
    case MetricId::SimpsonIndex:
    case MetricId::SimpsonDiversity:
    case MetricId::NormalizedStd:
    case MetricId::BergerParker:
    case MetricId::ShannonEvenness:
      return 1.0 - value;
    case MetricId::InverseImbalanceRatio:
      return 1.0 / value;
    case MetricId::EffectiveNumberOfSpecies:
      if (ctx.group_count == 0) throw Error("to_bias_form: ENS needs the component group count");
      return static_cast<double>(ctx.group_count) - value;
    default:
      return value;
  }
}

/// Key shown for a metric after to_bias_form.
inline std::string complement_key(MetricId id) {
  switch (id) {
    case MetricId::SimpsonIndex: return "1-D";
    case MetricId::SimpsonDiversity: return "D";
    case MetricId::NormalizedStd: return "1-NSD";
    case MetricId::BergerParker: return "1-BP";
    case MetricId::ShannonEvenness: return "1-SEI";
    case MetricId::InverseImbalanceRatio: return "IR";
    case MetricId::EffectiveNumberOfSpecies: return "|G|-ENS";
    default: return std::string(metric_key(id));
  }
}

// --- grids ------------------------------------------------------------------------

enum class SortOrder { Descending, Ascending };

struct GridRow {
  std::string metric;  // displayed form, e.g. "1-NSD"
  MetricId source = MetricId::Richness;
  std::string component;
  std::vector<CellValue> values;  // aligned with ReportGrid::datasets
  std::vector<std::optional<double>> normalized;
  bool normalization_undefined = false;
  std::vector<int> dof;            // Cramer's V rows only
  std::vector<std::string> marks;  // Cramer's V rows only, after annotate_strength
};

struct RankedEntity {
  std::string name;
  std::optional<double> mean;  // nullopt: every cell undefined
};

struct ReportGrid {
  std::string kind;
  SortOrder order = SortOrder::Descending;
  std::vector<std::string> datasets;
  std::vector<GridRow> rows;
  std::vector<RankedEntity> ranking;

  [[nodiscard]] std::vector<std::string> ordered_datasets() const {
    if (ranking.empty()) return datasets;
    std::vector<std::string> out;
    for (const auto& r : ranking) out.push_back(r.name);
    return out;
  }
};

/// Divides each row by its maximum defined value. Rows without a positive
/// maximum are flagged and left unnormalized.
inline ReportGrid normalize_rows(ReportGrid grid) {
  for (auto& row : grid.rows) {
    row.normalized.assign(row.values.size(), std::nullopt);
    std::optional<double> top;
    for (const auto& v : row.values) {
      if (v.value && (!top || *v.value > *top)) top = v.value;
    }
    row.normalization_undefined = !top || *top <= 0.0;
    if (row.normalization_undefined) continue;
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      if (row.values[i].value) row.normalized[i] = *row.values[i].value / *top;
    }
  }
  return grid;
}

/// Orders datasets by the mean of their defined normalized cells. Descending
/// grids put the largest mean first; ties fall back to the name and datasets
/// with no defined cell go last.
inline std::vector<RankedEntity> rank_entities(const ReportGrid& grid) {
  std::vector<RankedEntity> out;
  for (std::size_t d = 0; d < grid.datasets.size(); ++d) {
    double sum = 0.0;
    int k = 0;
    for (const auto& row : grid.rows) {
      if (d < row.normalized.size() && row.normalized[d]) {
        sum += *row.normalized[d];
        ++k;
      }
    }
    out.push_back({grid.datasets[d], k > 0 ? std::optional<double>(sum / k) : std::nullopt});
  }
  const bool desc = grid.order == SortOrder::Descending;
  std::sort(out.begin(), out.end(), [desc](const RankedEntity& a, const RankedEntity& b) {
    if (a.mean.has_value() != b.mean.has_value()) return a.mean.has_value();
    if (a.mean && *a.mean != *b.mean) return desc ? *a.mean > *b.mean : *a.mean < *b.mean;
    return a.name < b.name;
  });
  return out;
}

inline std::string_view strength_mark(StrengthBand band) {
  switch (band) {
    case StrengthBand::Weak: return "°";
    case StrengthBand::Medium: return "△";
    case StrengthBand::Strong: return "▲";
    default: return "";
  }
}

/// Marks every Cramer's V cell with its strength band using the row's DoF.
inline ReportGrid annotate_strength(ReportGrid grid, ThresholdMode mode = ThresholdMode::Cohen) {
  for (auto& row : grid.rows) {
    if (row.source != MetricId::CramersV) continue;
    row.marks.assign(row.values.size(), "");
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      if (!row.values[i].value || i >= row.dof.size() || row.dof[i] < 1) continue;
      row.marks[i] = std::string(strength_mark(classify_cramers_v(*row.values[i].value, row.dof[i], mode).band));
    }
  }
  return grid;
}

/// Copy restricted to the named datasets, in the given order.
inline ReportGrid select_datasets(const ReportGrid& grid, const std::vector<std::string>& names) {
  ReportGrid out{grid.kind, grid.order, names, {}, {}};
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    auto i = detail::index_of(grid.datasets, n);
    if (!i) throw Error("select_datasets: unknown dataset '" + n + "'");
    idx.push_back(*i);
  }
  for (const auto& row : grid.rows) {
    GridRow r{row.metric, row.source, row.component, {}, {}, row.normalization_undefined, {}, {}};
    for (auto i : idx) {
      r.values.push_back(row.values[i]);
      if (i < row.normalized.size()) r.normalized.push_back(row.normalized[i]);
      if (i < row.dof.size()) r.dof.push_back(row.dof[i]);
      if (i < row.marks.size()) r.marks.push_back(row.marks[i]);
    }
    out.rows.push_back(std::move(r));
  }
  return out;
}

// --- number formatting ---------------------------------------------------------------

inline std::string fixed(double v, int decimals = 6) {
  std::string s = fmt::format("{:.{}f}", v, decimals);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

/// Machine outputs carry 6 decimals; JSON numbers are rounded to that grid.
inline double round6(double v) {
  if (!std::isfinite(v)) return v;
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

inline std::string na(UndefinedReason r) { return "NA(" + std::string(to_string(r)) + ")"; }

inline std::string text_cell(const CellValue& c, int decimals = 6) {
  if (c.value) return fixed(*c.value, decimals);
  return na(c.reason.value_or(UndefinedReason::EmptyInput));
}

inline nlohmann::json json_cell(const CellValue& c) {
  if (c.value) return {{"value", round6(*c.value)}};
  return {{"value", nullptr}, {"reason", to_string(c.reason.value_or(UndefinedReason::EmptyInput))}};
}

inline nlohmann::json json_optional(const std::optional<double>& v) {
  return v ? nlohmann::json(round6(*v)) : nlohmann::json(nullptr);
}

// --- JSON -------------------------------------------------------------------------

inline nlohmann::json to_json(const ReportGrid& grid) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : grid.rows) {
    nlohmann::json values = nlohmann::json::object();
    nlohmann::json normalized = nlohmann::json::object();
    for (std::size_t i = 0; i < grid.datasets.size(); ++i) {
      values[grid.datasets[i]] = json_cell(row.values[i]);
      normalized[grid.datasets[i]] = i < row.normalized.size() ? json_optional(row.normalized[i]) : nullptr;
    }
    nlohmann::json r{{"metric", row.metric},
                     {"component", row.component},
                     {"values", values},
                     {"normalized", normalized},
                     {"normalization_undefined", row.normalization_undefined}};
    if (!row.marks.empty()) {
      nlohmann::json marks = nlohmann::json::object();
      for (std::size_t i = 0; i < grid.datasets.size(); ++i) {
        marks[grid.datasets[i]] = row.marks[i];
        if (i < row.dof.size()) r["dof"][grid.datasets[i]] = row.dof[i];
      }
      r["marks"] = marks;
    }
    rows.push_back(std::move(r));
  }
  nlohmann::json ranking = nlohmann::json::array();
  for (const auto& e : grid.ranking) ranking.push_back({{"dataset", e.name}, {"mean", json_optional(e.mean)}});
  return {{"kind", grid.kind},
          {"order", grid.order == SortOrder::Descending ? "descending" : "ascending"},
          {"datasets", grid.datasets},
          {"ranking", ranking},
          {"rows", rows}};
}

inline nlohmann::json to_json(const LocalBiasMatrix& m) {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(json_cell(m.at(r, c)));
    cells.push_back(std::move(row));
  }
  return {{"metric", metric_key(m.metric)},
          {"component", m.component},
          {"groups", m.groups},
          {"classes", m.classes},
          {"cells", cells}};
}

inline nlohmann::json to_json(const AgreementMatrix& a) {
  const auto m = a.size();
  auto matrix = [&](const std::vector<std::optional<double>>& cells) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < m; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < m; ++j) row.push_back(json_optional(cells[i * m + j]));
      out.push_back(std::move(row));
    }
    return out;
  };
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t k = 0; k < a.components.size(); ++k) per[a.components[k]] = matrix(a.per_component[k]);
  nlohmann::json excluded = nlohmann::json::array();
  for (std::size_t i = 0; i < m; ++i) {
    excluded.push_back(std::vector<int>(a.excluded.begin() + static_cast<long>(i * m),
                                        a.excluded.begin() + static_cast<long>((i + 1) * m)));
  }
  return {{"metrics", a.metrics}, {"rho", matrix(a.cells)}, {"per_component", per}, {"excluded", excluded}};
}

inline nlohmann::json to_json(const ContingencyTable& t) {
  std::vector<std::vector<Count>> cells;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    cells.emplace_back(t.cells().begin() + static_cast<long>(r * t.cols()),
                       t.cells().begin() + static_cast<long>((r + 1) * t.cols()));
  }
  return {{"component", t.component()}, {"groups", t.groups()}, {"classes", t.classes()},
          {"cells", cells},             {"n", t.total()},         {"excluded", t.excluded()}};
}

inline nlohmann::json to_json(const MetricValue& m) {
  nlohmann::json j = json_cell(CellValue::from(m));
  j["direction"] = to_string(m.direction);
  j["bounds"] = {round6(m.bounds.lower), std::isfinite(m.bounds.upper) ? nlohmann::json(round6(m.bounds.upper))
                                                                        : nlohmann::json("inf")};
  if (!m.dropped_groups.empty()) j["dropped_groups"] = m.dropped_groups;
  if (!m.dropped_classes.empty()) j["dropped_classes"] = m.dropped_classes;
  return j;
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// --- CSV / Markdown -----------------------------------------------------------------

/// Inverse of load_table_csv.
inline std::string table_to_csv(const ContingencyTable& t) {
  csv::Row header{t.component()};
  header.insert(header.end(), t.classes().begin(), t.classes().end());
  std::string out = csv::join(header) + "\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    csv::Row row{t.groups()[r]};
    for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(std::to_string(t.cell(r, c)));
    out += csv::join(row) + "\n";
  }
  return out;
}

namespace detail {

inline std::string md_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) out += " " + c + " |";
  return out + "\n";
}

inline std::string md_rule(std::size_t k) {
  std::string out = "|";
  for (std::size_t i = 0; i < k; ++i) out += " --- |";
  return out + "\n";
}

}  // namespace detail

inline std::string emit(const ReportGrid& grid, Format format) {
  if (format == Format::Json) return dump(to_json(grid));
  const auto order = grid.ordered_datasets();
  std::vector<std::size_t> idx;
  for (const auto& n : order) idx.push_back(*detail::index_of(grid.datasets, n));
  auto cell_text = [&](const GridRow& row, std::size_t i) {
    std::string s = text_cell(row.values[i]);
    if (format == Format::Md && i < row.marks.size()) s += row.marks[i];
    return s;
  };
  if (format == Format::Csv) {
    csv::Row header{"metric", "component"};
    header.insert(header.end(), order.begin(), order.end());
    std::string out = csv::join(header) + "\n";
    for (const auto& row : grid.rows) {
      csv::Row r{row.metric, row.component};
      for (auto i : idx) r.push_back(cell_text(row, i));
      out += csv::join(r) + "\n";
    }
    return out;
  }
  if (format == Format::Md) {
    std::vector<std::string> header{"metric", "component"};
    header.insert(header.end(), order.begin(), order.end());
    std::string out = "## " + grid.kind + "\n\n" + detail::md_row(header) + detail::md_rule(header.size());
    for (const auto& row : grid.rows) {
      std::vector<std::string> r{row.metric, row.component};
      for (auto i : idx) r.push_back(cell_text(row, i));
      out += detail::md_row(r);
    }
    return out;
  }
  throw Error("emit: unsupported format for grid");
}

inline std::string emit(const LocalBiasMatrix& m, Format format) {
  if (format == Format::Json) return dump(to_json(m));
  if (format == Format::Csv || format == Format::Md) {
    std::vector<std::string> header{m.component};
    header.insert(header.end(), m.classes.begin(), m.classes.end());
    std::string out = format == Format::Csv ? csv::join(header) + "\n"
                                            : "## " + std::string(metric_key(m.metric)) + " (" + m.component + ")\n\n" +
                                                  detail::md_row(header) + detail::md_rule(header.size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      std::vector<std::string> row{m.groups[r]};
      for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(text_cell(m.at(r, c)));
      out += format == Format::Csv ? csv::join(row) + "\n" : detail::md_row(row);
    }
    return out;
  }
  throw Error("emit: unsupported format for local matrix");
}

inline std::string emit(const AgreementMatrix& a, Format format) {
  if (format == Format::Json) return dump(to_json(a));
  if (format == Format::Csv || format == Format::Md) {
    std::vector<std::string> header{"metric"};
    header.insert(header.end(), a.metrics.begin(), a.metrics.end());
    std::string out = format == Format::Csv ? csv::join(header) + "\n"
                                            : "## agreement\n\n" + detail::md_row(header) + detail::md_rule(header.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::vector<std::string> row{a.metrics[i]};
      for (std::size_t j = 0; j < a.size(); ++j) {
        row.push_back(a.at(i, j) ? fixed(*a.at(i, j)) : "NA");
      }
      out += format == Format::Csv ? csv::join(row) + "\n" : detail::md_row(row);
    }
    return out;
  }
  throw Error("emit: unsupported format for agreement matrix");
}

inline std::string emit(const ContingencyTable& t, Format format) {
  if (format == Format::Json) return dump(to_json(t));
  if (format == Format::Csv) return table_to_csv(t);
  throw Error("emit: unsupported format for contingency table");
}

// --- SVG heatmaps --------------------------------------------------------------------

namespace detail {

struct Rgb {
  double r, g, b;
};

inline Rgb lerp(Rgb a, Rgb b, double t) { return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t}; }

inline std::string hex(Rgb c) {
  auto ch = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0))); };
  return fmt::format("#{:02x}{:02x}{:02x}", ch(c.r), ch(c.g), ch(c.b));
}

// -1 blue, 0 white, +1 red.
inline std::string diverging(double v) {
  const Rgb lo{33, 102, 172}, mid{247, 247, 247}, hi{178, 24, 43};
  v = std::clamp(v, -1.0, 1.0);
  return hex(v < 0 ? lerp(mid, lo, -v) : lerp(mid, hi, v));
}

// 0 white, 1 dark green.
inline std::string sequential(double v) { return hex(lerp({247, 252, 245}, {0, 109, 44}, std::clamp(v, 0.0, 1.0))); }

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

struct HeatCell {
  std::optional<double> shade;  // color input; nullopt renders hatched
  std::string label;
};

inline std::string heatmap(const std::string& title, const std::vector<std::string>& row_names,
                           const std::vector<std::string>& col_names, const std::vector<HeatCell>& cells,
                           bool diverging_scale) {
  constexpr int cw = 64, ch = 28, left = 150, top = 110;
  const int width = left + cw * static_cast<int>(col_names.size()) + 20;
  const int height = top + ch * static_cast<int>(row_names.size()) + 20;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n"
      "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
      "patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
      "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#999999\" stroke-width=\"2\"/></pattern></defs>\n"
      "<text x=\"{}\" y=\"18\" font-size=\"14\">{}</text>\n",
      width, height, left, xml_escape(title));
  for (std::size_t c = 0; c < col_names.size(); ++c) {
    const int x = left + cw * static_cast<int>(c) + cw / 2;
    out += fmt::format("<text x=\"{}\" y=\"{}\" transform=\"rotate(-45 {} {})\">{}</text>\n", x, top - 6, x, top - 6,
                       xml_escape(col_names[c]));
  }
  for (std::size_t r = 0; r < row_names.size(); ++r) {
    const int y = top + ch * static_cast<int>(r);
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 6, y + ch / 2 + 4,
                       xml_escape(row_names[r]));
    for (std::size_t c = 0; c < col_names.size(); ++c) {
      const auto& cell = cells[r * col_names.size() + c];
      const int x = left + cw * static_cast<int>(c);
      const std::string fill =
          cell.shade ? (diverging_scale ? diverging(*cell.shade) : sequential(*cell.shade)) : "url(#hatch)";
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"/>\n", x, y,
                         cw, ch, fill);
      out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x + cw / 2, y + ch / 2 + 4,
                         xml_escape(cell.label));
    }
  }
  return out + "</svg>\n";
}

}  // namespace detail

/// Diverging -1/0/+1 heatmap of a local bias matrix.
inline std::string emit_heatmap_svg(const LocalBiasMatrix& m) {
  std::vector<detail::HeatCell> cells;
  for (const auto& c : m.cells) cells.push_back({c.value, c.value ? fixed(*c.value, 2) : "NA"});
  return detail::heatmap(std::string(metric_key(m.metric)) + " - " + m.component, m.groups, m.classes, cells, true);
}

/// Sequential heatmap of a grid's normalized values; labels show raw values.
inline std::string emit_heatmap_svg(const ReportGrid& grid) {
  const auto order = grid.ordered_datasets();
  std::vector<std::string> row_names;
  std::vector<detail::HeatCell> cells;
  for (const auto& row : grid.rows) {
    row_names.push_back(row.metric + " / " + row.component);
    for (const auto& name : order) {
      const auto i = *detail::index_of(grid.datasets, name);
      const auto shade = i < row.normalized.size() ? row.normalized[i] : std::nullopt;
      std::string label = row.values[i].value ? fixed(*row.values[i].value, 2) : "NA";
      if (i < row.marks.size()) label += row.marks[i];
      cells.push_back({row.values[i].value ? shade : std::nullopt, label});
    }
  }
  return detail::heatmap(grid.kind, row_names, order, cells, false);
}

/// Support counts, shaded relative to the largest cell.
inline std::string emit_heatmap_svg(const ContingencyTable& t) {
  const Count top = *std::max_element(t.cells().begin(), t.cells().end());
  std::vector<detail::HeatCell> cells;
  for (Count v : t.cells()) {
    cells.push_back({static_cast<double>(v) / static_cast<double>(top), std::to_string(v)});
  }
  return detail::heatmap("support - " + t.component(), t.groups(), t.classes(), cells, false);
}

}  // namespace biaslens
