// stcho command-line harness.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stcho/stcho.hpp"

namespace fs = std::filesystem;
using namespace stcho;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string dataset;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (!c.dataset.empty()) cfg.dataset = c.dataset;
  return cfg;
}

nlohmann::json generator_json(const ExperimentConfig& cfg) {
  const GeneratorConfig& g = cfg.generator;
  return {{"width", g.geometry.width},
          {"height", g.geometry.height},
          {"n_slices", g.geometry.n_slices},
          {"bit_depth", g.geometry.bit_depth},
          {"slice_sep_mm", g.geometry.slice_sep_mm},
          {"texture", to_string(g.texture.kind)},
          {"beta", g.texture.beta},
          {"lesion", to_string(g.lesion.kind)},
          {"lesion_diameter", g.lesion.diameter_px},
          {"lesion_amplitude", g.lesion.amplitude},
          {"lesion_sigma_z", g.lesion.sigma_z},
          {"n_pairs", g.n_pairs},
          {"seed", g.seed}};
}

Dataset obtain_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset.empty()) return read_dataset(cfg.dataset);
  std::cerr << "stcho: no dataset given, generating " << cfg.generator.n_pairs << " pairs in memory\n";
  return generate_dataset(cfg.generator, cfg.pipeline.threads);
}

fs::path out_dir(const Common& c) {
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> v;
  for (const std::string& item : detail::split_list(s)) v.push_back(detail::parse_number<double>("--values", item));
  return v;
}

void cmd_gen_dataset(const Common& c) {
  ExperimentConfig cfg = load(c);
  if (c.seed) cfg.generator.seed = *c.seed;
  const fs::path dir = out_dir(c);
  const Dataset ds = generate_dataset(cfg.generator, cfg.pipeline.threads);
  const fs::path manifest = write_dataset(ds, dir, generator_json(cfg));
  std::cout << manifest.string() << "\n";
}

void cmd_run_trial(const Common& c) {
  ExperimentConfig cfg = load(c);
  if (c.seed) cfg.trial_seed = *c.seed;
  const Dataset ds = obtain_dataset(cfg);
  const TrialPlan plan = split_dataset(ds, cfg.n_readers, cfg.trial_seed, cfg.pipeline.observer.n_channels + 1);
  const TrialResult r = run_trial(ds, plan, cfg.pipeline);
  cfg.sweep.axis = SweepAxis::slice_rate;
  cfg.sweep.values = {cfg.pipeline.slice_rate};
  const ResultRow row = make_row(cfg.pipeline.slice_rate, r, plan.n_readers, plan.seed, config_hash(cfg));

  const fs::path dir = out_dir(c);
  emit_csv({row}, (dir / "trial.csv").string());
  nlohmann::json j = {{"mean_auc", r.mean_auc},
                      {"variance", r.variance},
                      {"per_reader_auc", r.per_reader_auc},
                      {"test_ids", r.test_ids},
                      {"slice_range", r.slice_range},
                      {"plan_seed", r.plan_seed},
                      {"config_hash", row.config_hash}};
  nlohmann::json scores = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.scores.rows(); ++i) {
    std::vector<double> rowv(r.scores.cols());
    for (Eigen::Index k = 0; k < r.scores.cols(); ++k) rowv[static_cast<std::size_t>(k)] = r.scores(i, k);
    scores.push_back(rowv);
  }
  j["scores"] = scores;
  detail::write_text((dir / "trial.json").string(), j.dump(2) + "\n");
  std::cout << format_csv({row});
}

void cmd_sweep(const Common& c, const std::string& axis, const std::string& values, const std::string& overlay,
               bool parallel) {
  ExperimentConfig cfg = load(c);
  if (c.seed) cfg.trial_seed = *c.seed;
  if (!axis.empty()) cfg.sweep.axis = parse_sweep_axis(axis);
  if (!values.empty()) cfg.sweep.values = parse_values(values);
  if (parallel) cfg.sweep.parallel = true;
  cfg.sweep.validate();
  const Dataset ds = obtain_dataset(cfg);
  const TrialPlan plan = split_dataset(ds, cfg.n_readers, cfg.trial_seed, cfg.pipeline.observer.n_channels + 1);
  const std::vector<ResultRow> rows = run_sweep(ds, plan, cfg);

  const fs::path dir = out_dir(c);
  emit_csv(rows, (dir / "sweep.csv").string());
  std::vector<Series> overlays;
  if (!overlay.empty()) {
    Series s{fs::path(overlay).stem().string(), overlay_rescale(read_series_csv(overlay), rows)};
    overlays.push_back(s);
  }
  emit_svg_plot(rows, overlays, (dir / "sweep.svg").string(), to_string(cfg.sweep.axis));
  std::cout << format_csv(rows);
}

void cmd_csf_table(const Common& c, double luminance, double x0, const std::string& u_values,
                   const std::string& w_values) {
  const ExperimentConfig cfg = load(c);
  ViewingConditions vc;
  vc.luminance_l = luminance;
  vc.x0 = x0;
  vc.ssr = cfg.pipeline.ssr;
  vc.slice_rate = cfg.pipeline.slice_rate;
  const CsfEvaluator csf(vc, cfg.pipeline.csf, cfg.pipeline.percept.temporal);
  std::string text = "u,w,S\n";
  for (double u : parse_values(u_values)) {
    for (double w : parse_values(w_values)) {
      text += detail::fmt_double(u) + "," + detail::fmt_double(w) + "," + detail::fmt_double(csf(u, w)) + "\n";
    }
  }
  if (c.out.empty()) {
    std::cout << text;
  } else {
    detail::write_text(c.out, text);
  }
}

void cmd_plot(const std::string& results, const std::string& overlay, const std::string& out,
              const std::string& x_label) {
  const std::vector<ResultRow> rows = read_csv(results);
  std::vector<Series> overlays;
  if (!overlay.empty()) overlays.push_back({fs::path(overlay).stem().string(), overlay_rescale(read_series_csv(overlay), rows)});
  emit_svg_plot(rows, overlays, out, x_label);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stcho: spatio-temporal CSF virtual reader trials for browsed image stacks"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool with_dataset) {
    sub->add_option("--config", common.config, "configuration file (dotted key = value)")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", common.seed, "override the seed (generator for gen-dataset, plan otherwise)");
    if (with_dataset) sub->add_option("--dataset", common.dataset, "dataset manifest (overrides trial.dataset)");
  };

  auto* gen = app.add_subcommand("gen-dataset", "generate a synthetic healthy/lesion dataset");
  add_common(gen, false);

  auto* trial = app.add_subcommand("run-trial", "run one virtual reader trial");
  add_common(trial, true);

  std::string axis, values, overlay;
  bool parallel = false;
  auto* sweep = app.add_subcommand("sweep", "run trials over a sweep axis with a fixed plan");
  add_common(sweep, true);
  sweep->add_option("--axis", axis, "slice_rate | ssr | l_max | contrast_ratio");
  sweep->add_option("--values", values, "comma-separated, strictly increasing");
  sweep->add_option("--overlay", overlay, "external series CSV (axis,value,tolerance)")->check(CLI::ExistingFile);
  sweep->add_flag("--parallel", parallel, "run sweep points concurrently");

  double luminance = 20.0, x0 = 2.5;
  std::string u_values = "0.1,0.5,1,2,4,8,16,32", w_values = "0,1,2,4,8,16,32";
  auto* table = app.add_subcommand("csf-table", "print S(u, w) on a grid as CSV");
  table->add_option("--config", common.config, "configuration file")->check(CLI::ExistingFile);
  table->add_option("--out", common.out, "output file (default stdout)");
  table->add_option("--luminance", luminance, "mean luminance, cd/m^2")->capture_default_str();
  table->add_option("--x0", x0, "image size, deg")->capture_default_str();
  table->add_option("--u", u_values, "spatial frequencies, cyc/deg")->capture_default_str();
  table->add_option("--w", w_values, "temporal frequencies, Hz")->capture_default_str();

  std::string results, plot_out = "plot.svg", x_label = "axis";
  auto* plot = app.add_subcommand("plot", "render a results CSV as SVG");
  plot->add_option("--results", results, "results CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--overlay", overlay, "external series CSV (axis,value,tolerance)")->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "output SVG")->capture_default_str();
  plot->add_option("--x-label", x_label, "x axis label")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) cmd_gen_dataset(common);
    if (trial->parsed()) cmd_run_trial(common);
    if (sweep->parsed()) cmd_sweep(common, axis, values, overlay, parallel);
    if (table->parsed()) cmd_csf_table(common, luminance, x0, u_values, w_values);
    if (plot->parsed()) cmd_plot(results, overlay, plot_out, x_label);
  } catch (const std::exception& e) {
    std::cerr << "stcho: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
