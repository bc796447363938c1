#pragma once

// Loading annotations: per-sample CSVs, precomputed contingency CSVs and the
// JSON manifest that ties datasets to a demographic schema.

#include <biaslens/core.hpp>
#include <biaslens/csv.hpp>

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace biaslens {

/// Pseudo-component naming the target label distribution.
inline constexpr std::string_view kLabelComponent = "label";

enum class SourceKind { Lab, ItwI, ItwM, Other };

inline std::string_view to_string(SourceKind k) {
  switch (k) {
    case SourceKind::Lab: return "LAB";
    case SourceKind::ItwI: return "ITW-I";
    case SourceKind::ItwM: return "ITW-M";
    case SourceKind::Other: return "OTHER";
  }
  return "OTHER";
}

inline SourceKind parse_source_kind(std::string_view s) {
  if (s == "LAB") return SourceKind::Lab;
  if (s == "ITW-I") return SourceKind::ItwI;
  if (s == "ITW-M") return SourceKind::ItwM;
  if (s == "OTHER") return SourceKind::Other;
  throw Error("unknown source kind '" + std::string(s) + "' (expected LAB|ITW-I|ITW-M|OTHER)");
}

enum class InputKind { Samples, Table };

struct DatasetEntry {
  std::string name;
  SourceKind kind = SourceKind::Other;
  std::filesystem::path path;
  InputKind input = InputKind::Samples;
  // Logical column ("label", "id", or a component name) -> CSV header name.
  std::map<std::string, std::string> columns;
};

struct DatasetManifest {
  std::vector<DatasetEntry> datasets;
  DemographicSchema schema;

  [[nodiscard]] const DatasetEntry* find(std::string_view name) const {
    for (const auto& d : datasets) {
      if (d.name == name) return &d;
    }
    return nullptr;
  }
};

/// One annotated sample. Group values are indices into the component
/// vocabulary, aligned with the schema's component order.
struct SampleRecord {
  std::string sample_id;
  std::size_t label = 0;
  std::vector<std::optional<std::size_t>> groups;
};

// --- schema ---------------------------------------------------------------------

/// FairFace vocabularies: 9 age bins, binary gender, 7 races; the six basic
/// emotions plus neutral as labels.
inline DemographicSchema default_schema() {
  return {{{"age", {"0-2", "3-9", "10-19", "20-29", "30-39", "40-49", "50-59", "60-69", "70+"}},
           {"gender", {"Male", "Female"}},
           {"race", {"White", "Black", "Latino", "East Asian", "Southeast Asian", "Indian", "Middle Eastern"}}},
          {"angry", "disgust", "fear", "happy", "sad", "surprise", "neutral"}};
}

/// {"labels": [...], "components": {"age": [...], ...}} with component order preserved.
inline DemographicSchema schema_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("labels") || !j.contains("components")) {
    throw Error("schema: expected object with 'labels' and 'components'");
  }
  std::vector<Component> components;
  const auto& comps = j.at("components");
  if (!comps.is_object()) throw Error("schema: 'components' must be an object");
  for (const auto& [name, groups] : comps.items()) {
    components.push_back({name, groups.get<std::vector<std::string>>()});
  }
  for (const auto& c : components) {
    if (c.name == kLabelComponent) throw Error("schema: component name 'label' is reserved");
  }
  return {std::move(components), j.at("labels").get<std::vector<std::string>>()};
}

inline nlohmann::ordered_json schema_to_json(const DemographicSchema& schema) {
  nlohmann::ordered_json comps = nlohmann::ordered_json::object();
  for (const auto& c : schema.components()) comps[c.name] = c.groups;
  return {{"labels", schema.labels()}, {"components", comps}};
}

namespace detail {

inline nlohmann::ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace detail

// --- manifest -------------------------------------------------------------------

/// Parses the dataset manifest. Relative paths resolve against the manifest's
/// directory. A missing "schema" selects default_schema(); a string value
/// names a schema file.
inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("manifest not found: '" + path.string() + "'");
  const auto j = detail::read_json_file(path);
  const auto base = path.parent_path();
  DatasetManifest m;
  try {
    if (!j.contains("schema")) {
      m.schema = default_schema();
    } else if (j.at("schema").is_string()) {
      m.schema = schema_from_json(detail::read_json_file(base / j.at("schema").get<std::string>()));
    } else {
      m.schema = schema_from_json(j.at("schema"));
    }
    if (!j.contains("datasets") || !j.at("datasets").is_array()) throw Error("manifest: missing 'datasets' array");
    std::set<std::string> names;
    for (const auto& d : j.at("datasets")) {
      DatasetEntry e;
      e.name = d.at("name").get<std::string>();
      if (e.name.empty()) throw Error("manifest: empty dataset name");
      if (!names.insert(e.name).second) throw Error("manifest: duplicate dataset name '" + e.name + "'");
      e.kind = parse_source_kind(d.value("kind", std::string("OTHER")));
      e.path = base / d.at("path").get<std::string>();
      const auto input = d.value("input", std::string("samples"));
      if (input == "samples") e.input = InputKind::Samples;
      else if (input == "table") e.input = InputKind::Table;
      else throw Error("manifest: dataset '" + e.name + "' has unknown input '" + input + "'");
      if (d.contains("columns")) {
        for (const auto& [k, v] : d.at("columns").items()) {
          auto col = v.get<std::string>();
          if (col.empty()) throw Error("manifest: dataset '" + e.name + "' maps '" + k + "' to an empty column");
          e.columns[k] = std::move(col);
        }
      }
      m.datasets.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest '" + path.string() + "': " + e.what());
  }
  return m;
}

// --- per-sample CSV -------------------------------------------------------------

/// Reads a per-sample CSV. Unmapped logical columns fall back to a header of
/// the same name; a component with no column at all is missing everywhere.
inline std::vector<SampleRecord> load_sample_records(const std::filesystem::path& path,
                                                     const std::map<std::string, std::string>& columns,
                                                     const DemographicSchema& schema) {
  const auto rows = csv::read_file(path.string());
  if (rows.empty()) throw Error("'" + path.string() + "': missing header row");
  const auto& header = rows.front();
  auto column_for = [&](const std::string& logical, bool required) -> std::optional<std::size_t> {
    auto it = columns.find(logical);
    const std::string& name = it != columns.end() ? it->second : logical;
    auto idx = detail::index_of(header, name);
    if (!idx && (required || it != columns.end())) {
      throw Error("'" + path.string() + "': missing column '" + name + "'");
    }
    return idx;
  };
  const auto label_col = *column_for("label", true);
  std::optional<std::size_t> id_col = columns.count("id") ? column_for("id", true) : detail::index_of(header, "file");
  std::vector<std::optional<std::size_t>> comp_cols;
  for (const auto& c : schema.components()) comp_cols.push_back(column_for(c.name, false));

  std::vector<SampleRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "'" + path.string() + "' row " + std::to_string(r);
    if (row.size() != header.size()) throw Error(where + ": expected " + std::to_string(header.size()) + " fields");
    SampleRecord rec;
    rec.sample_id = id_col ? row[*id_col] : std::to_string(r);
    auto label = detail::index_of(schema.labels(), row[label_col]);
    if (!label) throw Error(where + ": label '" + row[label_col] + "' not in vocabulary");
    rec.label = *label;
    for (std::size_t k = 0; k < comp_cols.size(); ++k) {
      const auto& comp = schema.components()[k];
      if (!comp_cols[k] || row[*comp_cols[k]].empty()) {
        rec.groups.emplace_back(std::nullopt);
        continue;
      }
      const auto& v = row[*comp_cols[k]];
      auto g = detail::index_of(comp.groups, v);
      if (!g) throw Error(where + ": " + comp.name + " value '" + v + "' not in vocabulary");
      rec.groups.emplace_back(g);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

namespace detail {

inline std::size_t component_index(const DemographicSchema& schema, std::string_view component) {
  for (std::size_t k = 0; k < schema.components().size(); ++k) {
    if (schema.components()[k].name == component) return k;
  }
  throw Error("unknown component '" + std::string(component) + "'");
}

}  // namespace detail

/// Group counts over the full vocabulary. Records missing the component are
/// excluded and counted in `excluded()`.
inline PopulationProfile build_profile(const std::vector<SampleRecord>& records, std::string_view component,
                                       const DemographicSchema& schema) {
  const auto k = detail::component_index(schema, component);
  const auto& vocab = schema.components()[k].groups;
  std::vector<Count> counts(vocab.size(), 0);
  Count excluded = 0;
  for (const auto& r : records) {
    if (r.groups.at(k)) ++counts[*r.groups[k]];
    else ++excluded;
  }
  if (excluded == static_cast<Count>(records.size())) {
    throw Error("component '" + std::string(component) + "': no record has a value");
  }
  return {std::string(component), vocab, std::move(counts), excluded};
}

/// Label distribution over the full label vocabulary.
inline PopulationProfile build_label_profile(const std::vector<SampleRecord>& records,
                                             const DemographicSchema& schema) {
  if (records.empty()) throw Error("label profile: no records");
  std::vector<Count> counts(schema.labels().size(), 0);
  for (const auto& r : records) ++counts[r.label];
  return {std::string(kLabelComponent), schema.labels(), std::move(counts)};
}

/// Joint (group, label) counts over the full vocabularies.
inline ContingencyTable build_contingency(const std::vector<SampleRecord>& records, std::string_view component,
                                          const DemographicSchema& schema) {
  const auto k = detail::component_index(schema, component);
  const auto& vocab = schema.components()[k].groups;
  const auto width = schema.labels().size();
  std::vector<Count> cells(vocab.size() * width, 0);
  Count excluded = 0;
  for (const auto& r : records) {
    if (r.groups.at(k)) ++cells[*r.groups[k] * width + r.label];
    else ++excluded;
  }
  if (excluded == static_cast<Count>(records.size())) {
    throw Error("component '" + std::string(component) + "': no record has a value");
  }
  return {std::string(component), vocab, schema.labels(), std::move(cells), excluded};
}

// --- table CSV ------------------------------------------------------------------

namespace detail {

inline Count parse_count(const std::string& s, const std::string& where) {
  Count v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) throw Error(where + ": '" + s + "' is not an integer count");
  if (v < 0) throw Error(where + ": negative count " + s);
  return v;
}

}  // namespace detail

/// Header "<component>,<class>..." followed by "<group>,<count>..." rows.
inline ContingencyTable load_table_csv(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path.string());
  if (rows.size() < 2) throw Error("'" + path.string() + "': need a header and at least one row");
  const auto& header = rows.front();
  if (header.size() < 2) throw Error("'" + path.string() + "': header lists no classes");
  std::vector<std::string> classes(header.begin() + 1, header.end());
  std::vector<std::string> groups;
  std::vector<Count> cells;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "'" + path.string() + "' row " + std::to_string(r);
    if (row.size() != header.size()) throw Error(where + ": ragged row");
    groups.push_back(row.front());
    for (std::size_t c = 1; c < row.size(); ++c) cells.push_back(detail::parse_count(row[c], where));
  }
  std::string component = header.front().empty() ? "component" : header.front();
  return {std::move(component), std::move(groups), std::move(classes), std::move(cells)};
}

/// Reorders a loaded table onto the schema vocabularies, zero-filling absent
/// groups and classes. Names outside the vocabulary are rejected.
inline ContingencyTable align_table(const ContingencyTable& table, std::string_view component,
                                    const DemographicSchema& schema) {
  const auto& vocab = schema.component(component).groups;
  const auto& labels = schema.labels();
  std::vector<Count> cells(vocab.size() * labels.size(), 0);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    auto g = detail::index_of(vocab, table.groups()[r]);
    if (!g) throw Error(std::string(component) + " group '" + table.groups()[r] + "' not in vocabulary");
    for (std::size_t c = 0; c < table.cols(); ++c) {
      auto y = detail::index_of(labels, table.classes()[c]);
      if (!y) throw Error("label '" + table.classes()[c] + "' not in vocabulary");
      cells[*g * labels.size() + *y] = table.cell(r, c);
    }
  }
  return {std::string(component), vocab, labels, std::move(cells), table.excluded()};
}

}  // namespace biaslens
