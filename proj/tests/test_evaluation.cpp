#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mmda/data.hpp"
#include "mmda/evaluation.hpp"

using namespace mmda;
using namespace mmda::eval;
namespace fs = std::filesystem;

namespace {

// Direct per-point counting, no confusion matrix: the independent mIoU route.
IouResult brute_force_miou(const std::vector<int>& gt, const std::vector<int>& pred, int c) {
  IouResult out;
  out.per_class.assign(static_cast<std::size_t>(c), 0.0);
  out.valid.assign(static_cast<std::size_t>(c), false);
  double sum = 0.0;
  int n_valid = 0;
  for (int cls = 0; cls < c; ++cls) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i] == kIgnoreLabel) continue;
      const bool is_gt = gt[i] == cls;
      const bool is_pred = pred[i] == cls;
      if (is_gt && is_pred) ++tp;
      if (!is_gt && is_pred) ++fp;
      if (is_gt && !is_pred) ++fn;
    }
    if (tp + fp + fn == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    out.per_class[static_cast<std::size_t>(cls)] = iou;
    out.valid[static_cast<std::size_t>(cls)] = true;
    sum += iou;
    ++n_valid;
  }
  out.mean = n_valid > 0 ? sum / n_valid : 0.0;
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("confusion worked examples") {
  SUBCASE("perfect prediction is diagonal") {
    ConfusionMatrix cm = confusion({0, 1, 2, 1}, {0, 1, 2, 1}, 3);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(1, 1) == 2);
    CHECK(cm.at(2, 2) == 1);
    CHECK(cm.total() == 4);
  }

  SUBCASE("all points ignored gives the zero matrix") {
    ConfusionMatrix cm = confusion({kIgnoreLabel, kIgnoreLabel}, {0, 1}, 2);
    CHECK(cm.total() == 0);
  }

  SUBCASE("hand-counted case") {
    ConfusionMatrix cm = confusion({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 0) == 0);
    CHECK(cm.at(1, 1) == 2);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(confusion({0, 1}, {0}, 2), ShapeError);
    CHECK_THROWS_AS(confusion({0}, {5}, 2), ArgumentError);
    CHECK_THROWS_AS(confusion({5}, {0}, 2), ArgumentError);
  }
}

TEST_CASE("miou worked examples") {
  SUBCASE("diagonal matrix scores 1 everywhere") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 5;
    cm.at(1, 1) = 2;
    cm.at(2, 2) = 9;
    IouResult r = miou(cm);
    CHECK(r.mean == 1.0);
    for (double v : r.per_class) CHECK(v == 1.0);
  }

  SUBCASE("hand-evaluated 7/12 case") {
    ConfusionMatrix cm = confusion({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
    IouResult r = miou(cm);
    CHECK(r.per_class[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.per_class[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(r.mean == doctest::Approx(7.0 / 12.0).epsilon(1e-15));
  }

  SUBCASE("zero-union classes are excluded from the mean") {
    ConfusionMatrix cm(4);
    cm.at(0, 0) = 3;
    cm.at(1, 1) = 3;
    IouResult r = miou(cm);
    CHECK(r.mean == 1.0);
    CHECK(!r.valid[2]);
    CHECK(!r.valid[3]);
  }

  SUBCASE("all classes empty is an undefined-metric error") {
    ConfusionMatrix cm(3);
    CHECK_THROWS_AS(miou(cm), UndefinedMetricError);
  }
}

TEST_CASE("miou equals the brute-force per-point oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 2 + static_cast<int>(rng.uniform_int(4));  // up to 5 classes
    const std::size_t n = 1 + rng.uniform_int(200);
    std::vector<int> gt(n), pred(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool ignored = rng.uniform() < 0.15;
      gt[i] = ignored ? kIgnoreLabel : static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
      pred[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
      any = any || !ignored;
    }
    if (!any) {
      gt[0] = 0;
    }
    IouResult got = miou(confusion(gt, pred, c));
    IouResult want = brute_force_miou(gt, pred, c);
    CHECK(got.mean == want.mean);  // identical counting, identical division order
    for (int cls = 0; cls < c; ++cls) {
      CHECK(got.valid[static_cast<std::size_t>(cls)] == want.valid[static_cast<std::size_t>(cls)]);
      CHECK(got.per_class[static_cast<std::size_t>(cls)] ==
            want.per_class[static_cast<std::size_t>(cls)]);
    }
  }
}

TEST_CASE("evaluate_model on a single-class frame with biased heads") {
  data::DomainSpec spec = data::default_spec();
  spec.image_h = 32;
  spec.image_w = 32;
  spec.calib.cx = 16.0;
  spec.calib.cy = 16.0;
  spec.calib.fx = 26.0;
  spec.calib.fy = 26.0;
  spec.min_points = 64;
  spec.max_points = 96;
  // Only the ground plane is active, so every point is class 0.
  spec.class_weights = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  Frame f = data::generate_frame(spec, 5);
  f.id = 0;

  ModelConfig mc;
  mc.features = 4;
  mc.classes = 6;
  mc.disc_hidden = 8;
  ModelParams params = ModelParams::init(mc, 3);
  // Saturate both heads toward class 0: predictions become perfect.
  params.head2d.w.init_constant(0.0);
  params.head3d.w.init_constant(0.0);
  params.head2d.b.init_constant(0.0);
  params.head3d.b.init_constant(0.0);
  params.head2d.b.value[0] = 50.0;
  params.head3d.b.value[0] = 50.0;

  EvalFragment frag = evaluate_model(params, {&f});
  CHECK(frag.iou_2d.mean == 1.0);
  CHECK(frag.iou_3d.mean == 1.0);
  CHECK(frag.iou_fused.mean == 1.0);
  CHECK(frag.cm_2d.total() == frag.points);

  // Deterministic across reruns.
  EvalFragment again = evaluate_model(params, {&f});
  CHECK(again.iou_fused.mean == frag.iou_fused.mean);
  CHECK(again.cm_fused.counts == frag.cm_fused.counts);

  CHECK_THROWS_AS(evaluate_model(params, {}), ArgumentError);
}

TEST_CASE("emit_report writes stable files") {
  EvaluationReport report;
  report.config_hash = "deadbeefdeadbeef";
  report.config_echo_json = "{\"version\":1}";
  report.seed = 7;
  report.task = "UDA";
  report.frame_counts = {{"source_train", 4}, {"target_test", 2}};
  sampling::SelectionResult sel;
  sel.ids = {3, 1};
  sel.scores = {0.9, 0.8};
  sel.budget = 2;
  sel.strategy = "cross_modal";
  report.selections.push_back({"source", sel});
  report.result.cm_2d = confusion({0, 1}, {0, 1}, 2);
  report.result.cm_3d = report.result.cm_2d;
  report.result.cm_fused = report.result.cm_2d;
  report.result.iou_2d = miou(report.result.cm_2d);
  report.result.iou_3d = report.result.iou_2d;
  report.result.iou_fused = report.result.iou_2d;
  report.result.frames = 1;
  report.result.points = 2;
  report.timings = {{"train_source", 1.25}};

  fs::path dir = fs::temp_directory_path() / "mmda_test" / "report";
  fs::remove_all(dir);
  emit_report(report, dir.string());

  const std::string report_json = read_file(dir / "report.json");
  const std::string results_csv = read_file(dir / "results.csv");
  const std::string selections_csv = read_file(dir / "selections.csv");
  CHECK(report_json.find("deadbeefdeadbeef") != std::string::npos);
  CHECK(results_csv.find("head,miou") == 0);
  // Header plus one row per head.
  CHECK(std::count(results_csv.begin(), results_csv.end(), '\n') == 4);
  CHECK(selections_csv.find("frame_id,score,rank,strategy,budget") == 0);

  // Re-emitting yields byte-identical outputs (timings file aside).
  report.timings = {{"train_source", 9.75}};
  emit_report(report, dir.string());
  CHECK(read_file(dir / "report.json") == report_json);
  CHECK(read_file(dir / "results.csv") == results_csv);
  CHECK(read_file(dir / "selections.csv") == selections_csv);
}
