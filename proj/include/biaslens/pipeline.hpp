#pragma once

// Command orchestration: loads a manifest, evaluates every dataset, builds
// the report grids and writes output files. The command-line front end in
// tools/ only parses arguments into a RunConfig.

#include <biaslens/agreement.hpp>
#include <biaslens/ingest.hpp>
#include <biaslens/local.hpp>
#include <biaslens/report.hpp>
#include <biaslens/representational.hpp>
#include <biaslens/stereotypical.hpp>
#include <biaslens/synth.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace biaslens {

namespace fs = std::filesystem;

enum class Family { Representational, Stereotypical, Both };

inline Family parse_family(std::string_view s) {
  if (s == "representational") return Family::Representational;
  if (s == "stereotypical") return Family::Stereotypical;
  if (s == "both") return Family::Both;
  throw Error("unknown family '" + std::string(s) + "' (expected representational|stereotypical)");
}

struct RunConfig {
  fs::path manifest;
  // Empty: every schema component, plus "label" for representational metrics.
  std::vector<std::string> components;
  // Empty: the default grid metrics. Keys as printed by metric_key().
  std::vector<std::string> metrics;
  fs::path out = "biaslens-out";
  std::vector<Format> formats{Format::Json, Format::Csv};
  ThresholdMode threshold_mode = ThresholdMode::Cohen;
  unsigned jobs = 1;
  Family family = Family::Both;
  std::string dataset;    // local
  std::string component;  // local
  bool svg = false;       // local
};

inline constexpr MetricId kDefaultRepresentational[] = {
    MetricId::Richness,         MetricId::ShannonEntropy,       MetricId::ShannonEvenness,
    MetricId::NormalizedStd,    MetricId::InverseImbalanceRatio, MetricId::BergerParker,
    MetricId::EffectiveNumberOfSpecies, MetricId::SimpsonDiversity, MetricId::SimpsonReciprocal,
};

inline constexpr MetricId kDefaultStereotypical[] = {
    MetricId::CramersV, MetricId::TschuprowT, MetricId::PearsonC,
    MetricId::TheilsU,  MetricId::TheilsUReverse, MetricId::NormalizedMutualInformation,
};

// --- per-dataset evaluation -----------------------------------------------------------

struct DatasetResult {
  std::string name;
  SourceKind kind = SourceKind::Other;
  InputKind input = InputKind::Samples;
  std::optional<std::string> error;
  std::map<std::string, PopulationProfile> profiles;
  std::map<std::string, ContingencyTable> tables;
  std::map<std::string, std::string> missing;  // component -> reason
  std::map<std::string, std::vector<MetricValue>> representational;
  std::map<std::string, std::vector<MetricValue>> stereotypical;
};

namespace detail {

inline bool wants(const std::vector<std::string>& components, std::string_view name) {
  return std::find(components.begin(), components.end(), name) != components.end();
}

inline std::vector<std::string> resolve_components(const RunConfig& cfg, const DemographicSchema& schema) {
  if (cfg.components.empty()) {
    std::vector<std::string> out;
    for (const auto& c : schema.components()) out.push_back(c.name);
    out.emplace_back(kLabelComponent);
    return out;
  }
  for (const auto& c : cfg.components) {
    if (c != kLabelComponent && schema.find(c) == nullptr) throw Error("unknown component '" + c + "'");
  }
  return cfg.components;
}

inline void load_inputs(DatasetResult& res, const DatasetEntry& entry, const DemographicSchema& schema,
                        const std::vector<std::string>& components) {
  if (entry.input == InputKind::Samples) {
    const auto records = load_sample_records(entry.path, entry.columns, schema);
    if (records.empty()) throw Error("'" + entry.path.string() + "' has no data rows");
    for (const auto& c : components) {
      if (c == kLabelComponent) {
        res.profiles.emplace(c, build_label_profile(records, schema));
        continue;
      }
      try {
        res.tables.emplace(c, build_contingency(records, c, schema));
        res.profiles.emplace(c, build_profile(records, c, schema));
      } catch (const Error& e) {
        res.missing[c] = e.what();
      }
    }
    return;
  }
  // Table input: the path is a directory holding <component>.csv files.
  if (!fs::is_directory(entry.path)) throw Error("table directory not found: '" + entry.path.string() + "'");
  std::optional<PopulationProfile> labels;
  for (const auto& comp : schema.components()) {
    const auto file = entry.path / (comp.name + ".csv");
    if (!fs::exists(file)) {
      if (wants(components, comp.name)) res.missing[comp.name] = "no table file " + file.filename().string();
      continue;
    }
    auto table = align_table(load_table_csv(file), comp.name, schema);
    if (!labels) labels = table.class_profile(std::string(kLabelComponent));
    if (wants(components, comp.name)) {
      res.profiles.emplace(comp.name, table.group_profile());
      res.tables.emplace(comp.name, std::move(table));
    }
  }
  if (!labels) throw Error("no component tables in '" + entry.path.string() + "'");
  if (wants(components, kLabelComponent)) res.profiles.emplace(std::string(kLabelComponent), std::move(*labels));
}

}  // namespace detail

/// Loads and evaluates one dataset. Failures are captured in `error`.
inline DatasetResult evaluate_dataset(const DatasetEntry& entry, const DemographicSchema& schema,
                                      const std::vector<std::string>& components) {
  DatasetResult res;
  res.name = entry.name;
  res.kind = entry.kind;
  res.input = entry.input;
  try {
    detail::load_inputs(res, entry, schema, components);
  } catch (const std::exception& e) {
    res.error = e.what();
    res.profiles.clear();
    res.tables.clear();
    return res;
  }
  for (const auto& [c, p] : res.profiles) res.representational[c] = all_representational(p);
  for (const auto& [c, t] : res.tables) res.stereotypical[c] = all_stereotypical(t);
  return res;
}

/// Evaluates every dataset, `jobs` at a time. Output order follows the manifest.
inline std::vector<DatasetResult> evaluate_all(const DatasetManifest& manifest,
                                               const std::vector<std::string>& components, unsigned jobs) {
  std::vector<DatasetResult> results(manifest.datasets.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      results[i] = evaluate_dataset(manifest.datasets[i], manifest.schema, components);
    }
  };
  const unsigned n = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(results.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

// --- grids --------------------------------------------------------------------------------

namespace detail {

inline const MetricValue* find_metric(const std::vector<MetricValue>& values, MetricId id) {
  for (const auto& v : values) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

inline std::size_t group_count(const DemographicSchema& schema, std::string_view component) {
  return component == kLabelComponent ? schema.labels().size() : schema.component(component).groups.size();
}

inline std::vector<MetricId> select_metrics(const std::vector<std::string>& keys, bool representational,
                                            std::span<const MetricId> defaults) {
  if (keys.empty()) return {defaults.begin(), defaults.end()};
  std::vector<MetricId> out;
  for (const auto& k : keys) {
    auto id = parse_metric_key(k);
    if (!id) throw Error("unknown metric '" + k + "'");
    if (*id == MetricId::Npmi || *id == MetricId::DuchersZ) continue;
    if (is_representational(*id) == representational) out.push_back(*id);
  }
  return out;
}

inline void validate_metric_keys(const std::vector<std::string>& keys) {
  for (const auto& k : keys) {
    if (!parse_metric_key(k)) throw Error("unknown metric '" + k + "'");
  }
}

// One row per (component, metric). `display` maps a raw value to the shown one.
template <typename Display>
ReportGrid build_grid(std::string kind, SortOrder order, const std::vector<DatasetResult>& results,
                      const std::vector<std::string>& components, const std::vector<MetricId>& metrics,
                      bool representational, Display&& display) {
  ReportGrid grid;
  grid.kind = std::move(kind);
  grid.order = order;
  std::vector<const DatasetResult*> ok;
  for (const auto& r : results) {
    if (!r.error) {
      grid.datasets.push_back(r.name);
      ok.push_back(&r);
    }
  }
  for (const auto& comp : components) {
    for (MetricId id : metrics) {
      GridRow row;
      row.source = id;
      row.component = comp;
      row.metric = display(id, std::nullopt, comp).first;
      for (const auto* r : ok) {
        const auto& family = representational ? r->representational : r->stereotypical;
        auto it = family.find(comp);
        const MetricValue* m = it == family.end() ? nullptr : find_metric(it->second, id);
        if (m == nullptr) {
          row.values.push_back(CellValue::none(UndefinedReason::EmptyInput));
        } else if (!m->value) {
          row.values.push_back(CellValue::from(*m));
        } else {
          row.values.push_back(CellValue::of(display(id, m->value, comp).second));
        }
        if (id == MetricId::CramersV) {
          auto t = r->tables.find(comp);
          row.dof.push_back(t == r->tables.end() ? 0 : std::max(0, degrees_of_freedom(t->second)));
        }
      }
      grid.rows.push_back(std::move(row));
    }
  }
  return grid;
}

inline ReportGrid finish_grid(ReportGrid grid) {
  grid = normalize_rows(std::move(grid));
  grid.ranking = rank_entities(grid);
  return grid;
}

}  // namespace detail

struct GridSet {
  ReportGrid representational;
  ReportGrid stereotypical;
  ReportGrid summary;
  std::map<std::string, std::vector<std::string>> summary_by_kind;
};

/// Representational grid in diversity direction (bias metrics complemented),
/// stereotypical grid in bias direction, and the ENS/SEI/Cramer's V summary in
/// bias direction ranked within each source kind.
inline GridSet build_grids(const std::vector<DatasetResult>& results, const DemographicSchema& schema,
                           const std::vector<std::string>& components, const std::vector<std::string>& metric_keys,
                           ThresholdMode mode) {
  std::vector<std::string> demographic;
  for (const auto& c : components) {
    if (c != kLabelComponent) demographic.push_back(c);
  }
  GridSet out;
  const auto rep_metrics = detail::select_metrics(metric_keys, true, kDefaultRepresentational);
  out.representational = detail::finish_grid(detail::build_grid(
      "representational", SortOrder::Descending, results, components, rep_metrics, true,
      [&](MetricId id, std::optional<double> v, const std::string& comp) -> std::pair<std::string, double> {
        const bool flip = metric_direction(id) == Direction::Bias;
        const std::string key = flip ? complement_key(id) : std::string(metric_key(id));
        if (!v) return {key, 0.0};
        return {key, flip ? to_bias_form(id, *v, {detail::group_count(schema, comp)}) : *v};
      }));

  const auto st_metrics = detail::select_metrics(metric_keys, false, kDefaultStereotypical);
  auto identity = [](MetricId id, std::optional<double> v, const std::string&) -> std::pair<std::string, double> {
    return {std::string(metric_key(id)), v.value_or(0.0)};
  };
  out.stereotypical = detail::finish_grid(
      detail::build_grid("stereotypical", SortOrder::Ascending, results, demographic, st_metrics, false, identity));
  out.stereotypical = annotate_strength(std::move(out.stereotypical), mode);

  // Summary: |G|-ENS and 1-SEI per component, then Cramer's V per component.
  auto to_bias = [&](MetricId id, std::optional<double> v, const std::string& comp) -> std::pair<std::string, double> {
    if (!v) return {complement_key(id), 0.0};
    return {complement_key(id), to_bias_form(id, *v, {detail::group_count(schema, comp)})};
  };
  auto rep_part = detail::build_grid("summary", SortOrder::Ascending, results, demographic,
                                     {MetricId::EffectiveNumberOfSpecies, MetricId::ShannonEvenness}, true, to_bias);
  auto st_part = detail::build_grid("summary", SortOrder::Ascending, results, demographic, {MetricId::CramersV}, false,
                                    identity);
  for (auto& row : st_part.rows) rep_part.rows.push_back(std::move(row));
  out.summary = annotate_strength(detail::finish_grid(std::move(rep_part)), mode);

  // Within-kind ordering, kinds in LAB, ITW-I, ITW-M, OTHER order.
  std::vector<RankedEntity> ranking;
  for (SourceKind kind : {SourceKind::Lab, SourceKind::ItwI, SourceKind::ItwM, SourceKind::Other}) {
    std::vector<std::string> names;
    for (const auto& r : results) {
      if (!r.error && r.kind == kind) names.push_back(r.name);
    }
    if (names.empty()) continue;
    const auto sub = detail::finish_grid(select_datasets(out.summary, names));
    auto& bucket = out.summary_by_kind[std::string(to_string(kind))];
    for (const auto& e : sub.ranking) {
      bucket.push_back(e.name);
      ranking.push_back(e);
    }
  }
  out.summary.ranking = std::move(ranking);
  return out;
}

/// Per-component metric series for agreement analysis, taken from a grid.
inline std::vector<ComponentSeries> series_from_grid(const ReportGrid& grid) {
  std::vector<ComponentSeries> out;
  for (const auto& row : grid.rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.component == row.component; });
    if (it == out.end()) {
      out.push_back({row.component, grid.datasets, {}});
      it = std::prev(out.end());
    }
    auto& series = it->metrics[row.metric];
    for (const auto& v : row.values) series.push_back(v.value);
  }
  return out;
}

inline std::vector<std::string> grid_metric_order(const ReportGrid& grid) {
  std::vector<std::string> out;
  for (const auto& row : grid.rows) {
    if (std::find(out.begin(), out.end(), row.metric) == out.end()) out.push_back(row.metric);
  }
  return out;
}

// --- output --------------------------------------------------------------------------------

namespace detail {

/// Writes via a temporary sibling and rename so readers never see partial files.
inline void write_file(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << bytes;
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

inline std::string path_segment(std::string_view name) {
  std::string out;
  for (char ch : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.' || ch == '+';
    out.push_back(ok ? ch : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

inline bool has(const std::vector<Format>& formats, Format f) {
  return std::find(formats.begin(), formats.end(), f) != formats.end();
}

inline nlohmann::json dataset_json(const DatasetResult& r) {
  nlohmann::json j{{"name", r.name},
                   {"kind", to_string(r.kind)},
                   {"input", r.input == InputKind::Samples ? "samples" : "table"}};
  if (r.error) {
    j["error"] = *r.error;
    return j;
  }
  nlohmann::json comps = nlohmann::json::object();
  for (const auto& [c, p] : r.profiles) {
    comps[c] = {{"n", p.total()},
                {"excluded", p.excluded()},
                {"schema_size", p.size()},
                {"unrepresented", p.zero_groups()}};
  }
  j["components"] = comps;
  if (!r.missing.empty()) j["missing_components"] = r.missing;
  return j;
}

inline nlohmann::json metrics_json(const std::vector<MetricValue>& values) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& v : values) j[std::string(metric_key(v.id))] = to_json(v);
  return j;
}

inline nlohmann::json local_json(const ContingencyTable& t) {
  const auto npmi = npmi_matrix(t);
  const auto z = duchers_z_matrix(t);
  return {{"npmi", to_json(npmi)}, {"z", to_json(z)}, {"rho", json_optional(local_agreement(npmi, z))}};
}

inline std::vector<DatasetResult> load_or_throw(const RunConfig& cfg, DatasetManifest& manifest,
                                                std::vector<std::string>& components) {
  manifest = load_manifest(cfg.manifest);
  components = resolve_components(cfg, manifest.schema);
  validate_metric_keys(cfg.metrics);
  return evaluate_all(manifest, components, cfg.jobs);
}

inline std::optional<AgreementMatrix> try_agreement(const ReportGrid& grid, std::ostream& err) {
  try {
    return metric_agreement(series_from_grid(grid), grid_metric_order(grid));
  } catch (const Error& e) {
    err << "note: " << grid.kind << " agreement skipped: " << e.what() << "\n";
    return std::nullopt;
  }
}

}  // namespace detail

/// `analyze`: 0 on success, 1 when any dataset failed (the rest are still
/// reported), 2 when the manifest or configuration is unusable.
inline int run_analyze(const RunConfig& cfg, std::ostream& err) {
  DatasetManifest manifest;
  std::vector<std::string> components;
  std::vector<DatasetResult> results;
  try {
    results = detail::load_or_throw(cfg, manifest, components);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  int status = 0;
  for (const auto& r : results) {
    if (r.error) {
      err << "dataset '" << r.name << "' failed: " << *r.error << "\n";
      status = 1;
    }
  }
  try {
    const auto grids = build_grids(results, manifest.schema, components, cfg.metrics, cfg.threshold_mode);

    nlohmann::json datasets = nlohmann::json::array();
    nlohmann::json local = nlohmann::json::object();
    for (const auto& r : results) {
      datasets.push_back(detail::dataset_json(r));
      if (r.error) continue;
      for (const auto& [c, t] : r.tables) local[r.name][c] = detail::local_json(t);
      // Per-dataset artifacts: <dataset>/<component>/<artifact>.<ext>
      const fs::path dir = cfg.out / detail::path_segment(r.name);
      for (const auto& [c, values] : r.representational) {
        nlohmann::json j{{"component", c}, {"representational", detail::metrics_json(values)}};
        if (auto st = r.stereotypical.find(c); st != r.stereotypical.end()) {
          j["stereotypical"] = detail::metrics_json(st->second);
          j["dof"] = degrees_of_freedom(r.tables.at(c));
        }
        detail::write_file(dir / detail::path_segment(c) / "metrics.json", dump(j));
      }
      for (const auto& [c, t] : r.tables) {
        detail::write_file(dir / detail::path_segment(c) / "table.csv", table_to_csv(t));
      }
    }

    nlohmann::json agreement = nlohmann::json::object();
    if (auto a = detail::try_agreement(grids.representational, err)) agreement["representational"] = to_json(*a);
    if (auto a = detail::try_agreement(grids.stereotypical, err)) agreement["stereotypical"] = to_json(*a);

    nlohmann::json summary = to_json(grids.summary);
    summary["by_kind"] = grids.summary_by_kind;
    nlohmann::json report{{"schema", schema_to_json(manifest.schema)},
                          {"components", components},
                          {"threshold_mode", to_string(cfg.threshold_mode)},
                          {"datasets", datasets},
                          {"grids",
                           {{"representational", to_json(grids.representational)},
                            {"stereotypical", to_json(grids.stereotypical)},
                            {"summary", summary}}},
                          {"agreement", agreement},
                          {"local", local}};
    // ordered_json keeps schema order inside; the outer document sorts keys.
    if (detail::has(cfg.formats, Format::Json)) detail::write_file(cfg.out / "report.json", dump(report));
    for (const auto* g : {&grids.representational, &grids.stereotypical, &grids.summary}) {
      if (detail::has(cfg.formats, Format::Csv)) detail::write_file(cfg.out / (g->kind + ".csv"), emit(*g, Format::Csv));
      if (detail::has(cfg.formats, Format::Svg)) detail::write_file(cfg.out / (g->kind + ".svg"), emit_heatmap_svg(*g));
    }
    if (detail::has(cfg.formats, Format::Md)) {
      std::string md = "# Dataset bias report\n\n";
      for (const auto* g : {&grids.representational, &grids.stereotypical, &grids.summary}) {
        md += emit(*g, Format::Md) + "\n";
      }
      detail::write_file(cfg.out / "report.md", md);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return status;
}

/// `agreement`: needs at least three successfully loaded datasets.
inline int run_agreement(const RunConfig& cfg, std::ostream& err) {
  DatasetManifest manifest;
  std::vector<std::string> components;
  std::vector<DatasetResult> results;
  try {
    results = detail::load_or_throw(cfg, manifest, components);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  int status = 0;
  std::size_t ok = 0;
  for (const auto& r : results) {
    if (r.error) {
      err << "dataset '" << r.name << "' failed: " << *r.error << "\n";
      status = 1;
    } else {
      ++ok;
    }
  }
  if (ok < 3) {
    err << "error: agreement needs at least 3 datasets, manifest provides " << ok << "\n";
    return 1;
  }
  try {
    const auto grids = build_grids(results, manifest.schema, components, cfg.metrics, cfg.threshold_mode);
    std::vector<const ReportGrid*> wanted;
    if (cfg.family != Family::Stereotypical) wanted.push_back(&grids.representational);
    if (cfg.family != Family::Representational) wanted.push_back(&grids.stereotypical);
    for (const auto* g : wanted) {
      const auto a = metric_agreement(series_from_grid(*g), grid_metric_order(*g));
      for (Format f : cfg.formats) {
        if (f == Format::Svg) continue;
        detail::write_file(cfg.out / ("agreement_" + g->kind + "." + std::string(extension(f))), emit(a, f));
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}

/// `local`: support counts, NPMI and Z for one dataset and component.
inline int run_local(const RunConfig& cfg, std::ostream& err) {
  DatasetManifest manifest;
  try {
    manifest = load_manifest(cfg.manifest);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  const auto* entry = manifest.find(cfg.dataset);
  if (entry == nullptr) {
    err << "error: unknown dataset '" << cfg.dataset << "'\n";
    return 1;
  }
  if (manifest.schema.find(cfg.component) == nullptr) {
    err << "error: unknown component '" << cfg.component << "'\n";
    return 1;
  }
  const auto res = evaluate_dataset(*entry, manifest.schema, {cfg.component});
  if (res.error) {
    err << "dataset '" << res.name << "' failed: " << *res.error << "\n";
    return 1;
  }
  auto t = res.tables.find(cfg.component);
  if (t == res.tables.end()) {
    err << "error: dataset '" << res.name << "' has no data for component '" << cfg.component << "'\n";
    return 1;
  }
  try {
    const auto& table = t->second;
    const auto npmi = npmi_matrix(table);
    const auto z = duchers_z_matrix(table);
    const fs::path dir = cfg.out / detail::path_segment(res.name) / detail::path_segment(cfg.component);
    for (Format f : cfg.formats) {
      if (f == Format::Json) {
        detail::write_file(dir / "local.json",
                           dump({{"support", to_json(table)},
                                 {"npmi", to_json(npmi)},
                                 {"z", to_json(z)},
                                 {"rho", json_optional(local_agreement(npmi, z))}}));
      } else if (f == Format::Csv || f == Format::Md) {
        const auto ext = "." + std::string(extension(f));
        if (f == Format::Csv) detail::write_file(dir / ("support" + ext), table_to_csv(table));
        detail::write_file(dir / ("npmi" + ext), emit(npmi, f));
        detail::write_file(dir / ("z" + ext), emit(z, f));
      }
    }
    if (cfg.svg || detail::has(cfg.formats, Format::Svg)) {
      detail::write_file(dir / "support.svg", emit_heatmap_svg(table));
      detail::write_file(dir / "npmi.svg", emit_heatmap_svg(npmi));
      detail::write_file(dir / "z.svg", emit_heatmap_svg(z));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace biaslens
