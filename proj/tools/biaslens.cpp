// biaslens: demographic bias metrics over annotated datasets.

#include <biaslens/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    for (std::string part; std::getline(ss, part, ',');) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

int synth(const biaslens::SynthSpec& spec, bool samples, const biaslens::SampleSynthSpec& sample_spec,
          const std::string& schema_path, const std::string& out) {
  using namespace biaslens;
  std::string bytes;
  if (samples) {
    DemographicSchema schema = default_schema();
    if (!schema_path.empty()) {
      std::ifstream in(schema_path);
      if (!in) throw Error("cannot open schema '" + schema_path + "'");
      schema = schema_from_json(nlohmann::ordered_json::parse(in));
    }
    bytes = samples_to_csv(random_samples(sample_spec, schema), schema);
  } else {
    bytes = table_to_csv(random_table(spec));
  }
  if (out.empty() || out == "-") {
    std::cout << bytes;
  } else {
    detail::write_file(out, bytes);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace biaslens;
  CLI::App app{"Demographic bias metrics for labeled datasets"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string manifest;
  std::string out = "biaslens-out";
  std::vector<std::string> components;
  std::vector<std::string> metrics;
  std::vector<std::string> formats;
  std::string threshold;
  std::string family = "both";
  unsigned jobs = 1;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--manifest", manifest, "dataset manifest (JSON)")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threshold-mode", threshold, "Cramer's V bands: cohen|literal");
    sub->add_option("--jobs,-j", jobs, "datasets evaluated in parallel")->check(CLI::Range(1U, 256U));
  };

  auto* analyze = app.add_subcommand("analyze", "compute every metric for every dataset");
  common(analyze);
  analyze->add_option("--components", components, "components to analyze (comma separated)");
  analyze->add_option("--metrics", metrics, "metric keys to include (comma separated)");
  analyze->add_option("--format", formats, "json,csv,md,svg");

  auto* agreement = app.add_subcommand("agreement", "Spearman agreement between metrics");
  common(agreement);
  agreement->add_option("--family", family, "representational|stereotypical");
  agreement->add_option("--components", components, "components to include (comma separated)");
  agreement->add_option("--format", formats, "json,csv,md");

  auto* local = app.add_subcommand("local", "NPMI and Ducher's Z for one dataset and component");
  common(local);
  local->add_option("--dataset", cfg.dataset, "dataset name")->required();
  local->add_option("--component", cfg.component, "demographic component")->required();
  local->add_option("--format", formats, "json,csv,md");
  local->add_flag("--svg", cfg.svg, "also write SVG heatmaps");

  SynthSpec spec;
  SampleSynthSpec sample_spec;
  bool independent = false;
  bool samples = false;
  std::string schema_path;
  std::string synth_out;
  auto* syn = app.add_subcommand("synth", "write a seeded synthetic table or sample CSV");
  syn->add_option("--seed", spec.seed, "random seed")->required();
  syn->add_option("--groups", spec.groups, "number of groups");
  syn->add_option("--classes", spec.classes, "number of classes");
  syn->add_option("--total", spec.total, "total count");
  syn->add_option("--concentration", spec.concentration, "0 gives even weights; larger is more skewed");
  syn->add_option("--sparsity", spec.sparsity, "chance of zeroing a cell");
  syn->add_flag("--independent", independent, "exact outer product of two marginals");
  syn->add_flag("--samples", samples, "per-sample CSV over a schema instead of a table");
  syn->add_option("--schema", schema_path, "schema JSON for --samples (default FairFace)");
  syn->add_option("--stereotype", sample_spec.stereotype, "label dependence of groups for --samples");
  syn->add_option("--missing", sample_spec.missing, "chance of a missing group value for --samples");
  syn->add_option("--single-group", sample_spec.single_group, "components held to one group for --samples");
  syn->add_option("--out", synth_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (syn->parsed()) {
      spec.mode = independent ? TableMode::Independence : TableMode::Joint;
      sample_spec.seed = spec.seed;
      sample_spec.samples = spec.total;
      sample_spec.concentration = spec.concentration;
      sample_spec.single_group = split_list(sample_spec.single_group);
      return synth(spec, samples, sample_spec, schema_path, synth_out);
    }
    cfg.manifest = manifest;
    cfg.out = out;
    cfg.jobs = jobs;
    cfg.components = split_list(components);
    cfg.metrics = split_list(metrics);
    if (!formats.empty()) {
      cfg.formats.clear();
      for (const auto& f : split_list(formats)) cfg.formats.push_back(parse_format(f));
    }
    if (!threshold.empty()) {
      cfg.threshold_mode = parse_threshold_mode(threshold);
    } else {
      cfg.threshold_mode = threshold_mode_from_env();
    }
    if (analyze->parsed()) return run_analyze(cfg, std::cerr);
    if (agreement->parsed()) {
      cfg.family = parse_family(family);
      return run_agreement(cfg, std::cerr);
    }
    return run_local(cfg, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
