#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "stcho/config.hpp"
#include "stcho/experiment.hpp"

using namespace stcho;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

ExperimentConfig small_experiment() {
  return parse_config(R"(
generator.width = 32
generator.height = 32
generator.n_slices = 16
generator.n_pairs = 30
generator.seed = 4
observer.n_channels = 6
observer.spread = 6
trial.n_readers = 2
sweep.values = 10, 25
)");
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndLists) {
  const ExperimentConfig c = parse_config(R"(
# comment line
generator.preset = a
generator.lesion = mass   # trailing comment
display.l_max = 500
display.mapping = log
percept.foveal = hard
observer.combiner = max
observer.slice_range = 3, 4, 5
trial.n_readers = 6
sweep.axis = ssr
sweep.values = 1, 7, 25
)");
  EXPECT_EQ(c.generator.geometry, StackGeometry::dataset_a());
  EXPECT_EQ(c.generator.lesion.kind, LesionKind::mass);
  EXPECT_EQ(c.generator.lesion.amplitude, LesionSpec::mass().amplitude);
  EXPECT_EQ(c.pipeline.display.l_max, 500.0);
  EXPECT_EQ(c.pipeline.display.mapping, LuminanceMapping::log_luminance);
  EXPECT_EQ(c.pipeline.percept.foveal, FovealMode::hard);
  EXPECT_EQ(c.pipeline.observer.combiner, Combiner::max);
  EXPECT_EQ(c.pipeline.observer.slice_range, (std::vector<int>{3, 4, 5}));
  EXPECT_EQ(c.n_readers, 6u);
  EXPECT_EQ(c.sweep.axis, SweepAxis::ssr);
  EXPECT_EQ(c.sweep.values, (std::vector<double>{1, 7, 25}));
}

TEST(Config, PresetAppliesBeforeFieldsWhateverTheOrder) {
  const ExperimentConfig c = parse_config("generator.lesion_amplitude = 5\ngenerator.lesion = mass\n");
  EXPECT_EQ(c.generator.lesion.amplitude, 5.0);
  EXPECT_EQ(c.generator.lesion.diameter_px, LesionSpec::mass().diameter_px);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("nonsense.key = 1\n"), InputError);
  EXPECT_THROW(parse_config("trial.seed = 1\ntrial.seed = 2\n"), InputError);
  EXPECT_THROW(parse_config("trial.seed 1\n"), InputError);
  EXPECT_THROW(parse_config("trial.seed = x\n"), InputError);
  EXPECT_THROW(parse_config("display.mapping = gamma\n"), InputError);
  EXPECT_THROW(parse_config("sweep.axis = speed\n"), InputError);
  EXPECT_THROW(load_config("/nonexistent/dir/cfg.conf"), IoError);
  try {
    parse_config("trial.seed = 1\nbogus = 2\n");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
}

TEST(Config, CanonicalTextRoundTrips) {
  ExperimentConfig c = small_experiment();
  c.pipeline.csf.phi0 = 3.1e-8;
  c.pipeline.display.l_min = 0.1 + 0.2;
  c.pipeline.percept.temporal = TemporalResponse::unity;
  const std::string text = canonical_text(c);
  const ExperimentConfig back = parse_config(text);
  EXPECT_EQ(canonical_text(back), text);
  EXPECT_EQ(back.pipeline.display.l_min, c.pipeline.display.l_min);
  EXPECT_EQ(back.pipeline.csf, c.pipeline.csf);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, HashIgnoresThreadingButNotModel) {
  ExperimentConfig a = small_experiment();
  ExperimentConfig b = a;
  b.pipeline.threads = 3;
  b.sweep.parallel = true;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.pipeline.slice_rate = 26;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Sweep, AxisMapping) {
  PipelineConfig p;
  p.display.l_min = 1.0;
  p.display.l_max = 400.0;
  EXPECT_EQ(at_axis_value(p, SweepAxis::slice_rate, 5).slice_rate, 5.0);
  EXPECT_EQ(at_axis_value(p, SweepAxis::ssr, 14).ssr, 14.0);
  const PipelineConfig lm = at_axis_value(p, SweepAxis::l_max, 200);
  EXPECT_EQ(lm.display.l_max, 200.0);
  EXPECT_DOUBLE_EQ(lm.display.l_min, 0.5);
  const PipelineConfig cr = at_axis_value(p, SweepAxis::contrast_ratio, 100);
  EXPECT_EQ(cr.display.l_max, 400.0);
  EXPECT_DOUBLE_EQ(cr.display.l_min, 4.0);
}

TEST(Sweep, RejectsNonIncreasingValues) {
  SweepSpec s;
  s.values = {5, 5};
  EXPECT_THROW(s.validate(), InputError);
  s.values = {};
  EXPECT_THROW(s.validate(), InputError);
}

TEST(Sweep, SinglePointMatchesRunTrial) {
  ExperimentConfig c = small_experiment();
  c.sweep.values = {15};
  const Dataset ds = generate_dataset(c.generator);
  const TrialPlan plan = split_dataset(ds, c.n_readers, c.trial_seed);
  const auto rows = run_sweep(ds, plan, c);
  ASSERT_EQ(rows.size(), 1u);
  PipelineConfig p = c.pipeline;
  p.slice_rate = 15;
  const TrialResult r = run_trial(ds, plan, p);
  EXPECT_EQ(rows[0].mean_auc, r.mean_auc);
  EXPECT_EQ(rows[0].auc_stddev, std::sqrt(std::max(r.variance, 0.0)));
  EXPECT_EQ(rows[0].n_readers, 2u);
  EXPECT_EQ(rows[0].seed, c.trial_seed);
}

TEST(Sweep, ParallelEqualsSequential) {
  ExperimentConfig c = small_experiment();
  const Dataset ds = generate_dataset(c.generator);
  const TrialPlan plan = split_dataset(ds, c.n_readers, c.trial_seed);
  const auto seq = run_sweep(ds, plan, c);
  c.sweep.parallel = true;
  const auto par = run_sweep(ds, plan, c);
  EXPECT_EQ(format_csv(seq), format_csv(par));
}

TEST(Csv, FormatAndRoundTrip) {
  const std::vector<ResultRow> rows = {{10, 0.75, 0.01, 4, 1, "00000000deadbeef"},
                                       {25, 0.8125, 1.0 / 3.0, 4, 1, "0123456789abcdef"}};
  const std::string text = format_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), kCsvHeader);
  EXPECT_EQ(count_of(text, "\n"), 3u);
  EXPECT_EQ(parse_csv(text), rows);
  const std::string path = (std::filesystem::temp_directory_path() / "stcho_csv_test.csv").string();
  emit_csv(rows, path);
  EXPECT_EQ(read_csv(path), rows);
  std::filesystem::remove(path);
  EXPECT_THROW(format_csv({}), InputError);
  EXPECT_THROW(parse_csv("wrong,header\n1,2\n"), InputError);
}

TEST(Overlay, IdentityWhenSeriesMatchesAnchor) {
  const std::vector<ResultRow> anchor = {{1, 0.6, 0, 2, 1, ""}, {5, 0.7, 0, 2, 1, ""}, {9, 0.65, 0, 2, 1, ""}};
  const std::vector<SeriesPoint> ext = {{1, 0.6, 0.01}, {5, 0.7, 0.02}, {9, 0.65, 0.0}};
  const AffineMap m = overlay_map(ext, anchor);
  EXPECT_NEAR(m.scale, 1.0, 1e-12);
  EXPECT_NEAR(m.offset, 0.0, 1e-12);
}

TEST(Overlay, AffineMapAndToleranceScaling) {
  const std::vector<ResultRow> anchor = {{1, 10, 0, 2, 1, ""}, {2, 20, 0, 2, 1, ""}};
  const std::vector<SeriesPoint> ext = {{1, 0, 0.5}, {2, 1, 0.25}, {3, 2, 0.1}};
  const AffineMap m = overlay_map(ext, anchor);
  EXPECT_NEAR(m.scale, 10.0, 1e-12);
  EXPECT_NEAR(m.offset, 10.0, 1e-12);
  const auto out = overlay_rescale(ext, anchor);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_NEAR(out[2].value, 30.0, 1e-12);
  EXPECT_NEAR(out[0].tolerance, 5.0, 1e-12);
  EXPECT_NEAR(out[1].tolerance, 2.5, 1e-12);
}

TEST(Overlay, Errors) {
  const std::vector<ResultRow> anchor = {{1, 10, 0, 2, 1, ""}, {2, 20, 0, 2, 1, ""}};
  EXPECT_THROW(overlay_map({{1, 3, 0}, {2, 3, 0}}, anchor), InputError);
  EXPECT_THROW(overlay_map({{1, 3, 0}, {7, 4, 0}}, anchor), InputError);
  EXPECT_THROW(overlay_map({{1, 3, -1}, {2, 4, 0}}, anchor), InputError);
  const std::vector<ResultRow> flat = {{1, 10, 0, 2, 1, ""}, {2, 10, 0, 2, 1, ""}};
  const AffineMap m = overlay_map({{1, 3, 0}, {2, 3, 0}}, flat);
  EXPECT_EQ(m.scale, 1.0);
  EXPECT_EQ(m.offset, 7.0);
  EXPECT_EQ(parse_series_csv("axis,value,tolerance\n1,2,0.5\n"), (std::vector<SeriesPoint>{{1, 2, 0.5}}));
}

TEST(Plot, OnePolylinePerSeries) {
  const std::vector<ResultRow> rows = {{1, 0.6, 0.02, 2, 1, ""}, {5, 0.7, 0.01, 2, 1, ""}};
  const std::vector<Series> overlays = {{"ext a", {{1, 0.5, 0.1}, {5, 0.9, 0.0}}}, {"ext b", {{1, 0.55, 0}, {5, 0.6, 0}}}};
  const std::string svg = format_svg_plot(rows, overlays, "slice rate");
  EXPECT_EQ(count_of(svg, "<polyline"), 3u);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("slice rate"), std::string::npos);
  EXPECT_NE(svg.find("ext b"), std::string::npos);
  EXPECT_THROW(format_svg_plot({}, {}), InputError);
}
