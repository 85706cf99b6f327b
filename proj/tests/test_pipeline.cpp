#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "garnet/checkpoint.hpp"
#include "garnet/errors.hpp"
#include "garnet/map_export.hpp"
#include "garnet/pipeline.hpp"
#include "garnet/report.hpp"

using namespace garnet;
namespace fs = std::filesystem;

namespace {

SynthSpec small_spec() {
  SynthSpec spec;
  spec.videos_per_instance = 3;
  spec.frames_per_video = 20;
  spec.dimension = 16;
  return spec;
}

RunConfig quick_config(Task task) {
  RunConfig cfg;
  cfg.train.task = task;
  cfg.train.iterations = 300;
  cfg.train.hidden_widths = {16, 8};
  cfg.train.seed = 9;
  return cfg;
}

const Dataset& small_dataset() {
  static const Dataset ds = synth_generate(small_spec(), derive_seed(1, kSynthStream));
  return ds;
}

const ModelCheckpoint& small_model() {
  static const ModelCheckpoint ck = [] {
    const auto folds = loocv_splits(small_dataset());
    return fit_model(small_dataset(), folds[0].train, quick_config(Task::shape));
  }();
  return ck;
}

double dp_average(const Dataset& ds, const RunConfig& cfg) {
  const LoocvModels models = train_loocv(ds, cfg);
  const auto folds = evaluate_loocv(models, VoteMode::decision_point, cfg.decision);
  ReportContext ctx;
  ctx.task = cfg.train.task;
  return summarize(ctx, ds.categories(cfg.train.task), folds).average;
}

}  // namespace

TEST_CASE("derived seeds are stable and distinct") {
  CHECK(derive_seed(1, kTrainStream, 0) == derive_seed(1, kTrainStream, 0));
  CHECK(derive_seed(1, kTrainStream, 0) != derive_seed(1, kTrainStream, 1));
  CHECK(derive_seed(1, kTrainStream, 0) != derive_seed(1, kSynthStream, 0));
  CHECK(derive_seed(1, kTrainStream, 0) != derive_seed(2, kTrainStream, 0));
}

TEST_CASE("a fitted model carries a map over the task's categories") {
  const ModelCheckpoint& ck = small_model();
  CHECK(ck.task == Task::shape);
  CHECK(ck.map.size() == 5);
  CHECK(ck.map.fitted());
  CHECK(ck.optimizer_step == 300);
  std::size_t points = 0;
  for (const auto& c : ck.map.clusters()) {
    points += c.points().size();
    CHECK(c.coverage() == 0.95);
  }
  CHECK(points == 5 * 3 * 3 * 20);  // three training garments per shape
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const ModelCheckpoint& ck = small_model();
  const std::string bytes = serialize(ck);
  const ModelCheckpoint back = deserialize(bytes);
  CHECK(serialize(back) == bytes);
  CHECK(back.net == ck.net);
  const auto test = loocv_splits(small_dataset())[0].test;
  for (auto i : test) {
    for (const auto& f : small_dataset().sequences[i].frames) {
      const GSPoint a = forward(ck.net, f);
      const GSPoint b = forward(back.net, f);
      CHECK(a == b);
      CHECK(classify_point(ck.map, a) == classify_point(back.map, b));
    }
  }

  const fs::path path = fs::temp_directory_path() / "garnet_test_ck" / "m.ckpt";
  save_checkpoint(path, ck);
  CHECK(serialize(load_checkpoint(path)) == bytes);
}

TEST_CASE("corrupt checkpoints are parse errors") {
  const std::string bytes = serialize(small_model());
  CHECK_THROWS_AS(deserialize(bytes + "x"), ParseError);
  CHECK_THROWS_AS(deserialize(bytes.substr(0, bytes.size() - 5)), ParseError);
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad), ParseError);
}

TEST_CASE("training is reproducible end to end") {
  const auto folds = loocv_splits(small_dataset());
  const ModelCheckpoint again = fit_model(small_dataset(), folds[0].train, quick_config(Task::shape));
  CHECK(serialize(again) == serialize(small_model()));
}

TEST_CASE("report arithmetic pools videos over folds") {
  // Category 0: 3 of 4 correct over two folds; category 1: 1 of 2.
  FoldOutcome f1{1, {{0, 0, 0, 5, 5}, {1, 0, 0, 6, 6}, {2, 1, std::nullopt, std::nullopt, 60}}};
  FoldOutcome f2{2, {{3, 0, 1, 7, 7}, {4, 0, 0, std::nullopt, 60}, {5, 1, 1, 5, 5}}};
  ReportContext ctx;
  const EvalReport r = summarize(ctx, {"a", "b"}, {f1, f2});
  CHECK(r.categories[0].correct == 3);
  CHECK(r.categories[0].total == 4);
  CHECK(r.categories[1].correct == 1);
  CHECK(r.categories[1].total == 2);
  CHECK(r.average == doctest::Approx((0.75 + 0.5) / 2));
  CHECK(r.folds[0].average == doctest::Approx((1.0 + 0.0) / 2));
  CHECK(r.folds[1].average == doctest::Approx((0.5 + 1.0) / 2));
  CHECK(r.mean_stop_frame == doctest::Approx((5 + 6 + 60 + 7 + 60 + 5) / 6.0));
  CHECK(r.early_stop_rate == doctest::Approx(4.0 / 6.0));
  CHECK(r.unknown_rate == doctest::Approx(1.0 / 6.0));
  CHECK(format_percent(0.92) == "92.00%");

  const std::string table = render_table(r, r);
  CHECK(table.find("depth, DP") != std::string::npos);
  CHECK(table.find("depth, GSP") != std::string::npos);
  CHECK(table.find("62.50%") != std::string::npos);
  CHECK(render_reference_rows().find("92.0%") != std::string::npos);
  CHECK(to_json(r)["categories"][0]["accuracy"] == 0.75);
}

TEST_CASE("contours of a circle lie on the circle") {
  const auto segs =
      trace_contour([](GSPoint p) { return p.x * p.x + p.y * p.y; }, 1.0, {-2, -2}, {2, 2}, 128);
  REQUIRE(segs.size() > 100);
  for (const auto& s : segs) {
    CHECK(std::abs(std::hypot(s.a.x, s.a.y) - 1.0) < 0.01);
    CHECK(std::abs(std::hypot(s.b.x, s.b.y) - 1.0) < 0.01);
  }
}

TEST_CASE("map exports") {
  const ModelCheckpoint& ck = small_model();
  std::ostringstream csv;
  write_points_csv(csv, ck.map);
  CHECK(csv.str().rfind("label,x,y\n", 0) == 0);
  std::ostringstream svg;
  write_map_svg(svg, ck.map, 64);
  CHECK(svg.str().find("<svg") != std::string::npos);
  CHECK(svg.str().find("pants") != std::string::npos);
}

TEST_CASE("training unknown rate tracks coverage") {
  SimilarityMap map = small_model().map;
  map.fit_regions(1.0);
  CHECK(training_unknown_rate(map) == 0.0);
  map.fit_regions(0.8);
  CHECK(training_unknown_rate(map) <= 0.2 + 1e-12);
}

TEST_CASE("wider class gaps are easier to separate") {
  SynthSpec narrow = small_spec();
  narrow.class_gap = 0.05;
  SynthSpec wide = small_spec();
  wide.class_gap = 1.0;
  const RunConfig cfg = quick_config(Task::shape);
  const double a = dp_average(synth_generate(narrow, 5), cfg);
  const double b = dp_average(synth_generate(wide, 5), cfg);
  CHECK(b > a);
}

TEST_CASE("run config validation") {
  RunConfig cfg;
  cfg.coverage = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.decision.threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
