#include "mmda/evaluation.hpp"

#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "mmda/textio.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace mmda::eval {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (std::int64_t c : counts) t += c;
  return t;
}

void ConfusionMatrix::add(const ConfusionMatrix& other) {
  if (other.num_classes != num_classes) throw ShapeError("confusion add: class count mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion(const std::vector<int>& gt, const std::vector<int>& pred,
                          int num_classes) {
  if (gt.size() != pred.size()) throw ShapeError("confusion: length mismatch");
  if (num_classes < 1) throw ArgumentError("confusion: need at least one class");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int g = gt[i];
    if (g == kIgnoreLabel) continue;
    const int p = pred[i];
    if (g < 0 || g >= num_classes) throw ArgumentError("confusion: ground-truth label out of range");
    if (p < 0 || p >= num_classes) throw ArgumentError("confusion: prediction out of range");
    ++cm.at(g, p);
  }
  return cm;
}

IouResult miou(const ConfusionMatrix& cm) {
  IouResult out;
  out.per_class.assign(static_cast<std::size_t>(cm.num_classes), 0.0);
  out.valid.assign(static_cast<std::size_t>(cm.num_classes), false);
  double sum = 0.0;
  int n_valid = 0;
  for (int c = 0; c < cm.num_classes; ++c) {
    const std::int64_t tp = cm.at(c, c);
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    for (int o = 0; o < cm.num_classes; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const std::int64_t uni = tp + fp + fn;
    if (uni == 0) continue;  // class absent from both gt and prediction
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    out.per_class[static_cast<std::size_t>(c)] = iou;
    out.valid[static_cast<std::size_t>(c)] = true;
    sum += iou;
    ++n_valid;
  }
  if (n_valid == 0) throw UndefinedMetricError("miou: every class has zero union");
  out.mean = sum / static_cast<double>(n_valid);
  return out;
}

namespace {

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (idx r = 0; r < m.rows(); ++r) {
    int best = 0;
    for (idx c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

}  // namespace

EvalFragment evaluate_model(ModelParams& params, const std::vector<const Frame*>& test_frames) {
  if (test_frames.empty()) throw ArgumentError("evaluate_model: empty test split");
  std::vector<const Frame*> ordered = test_frames;
  std::sort(ordered.begin(), ordered.end(),
            [](const Frame* a, const Frame* b) { return a->id < b->id; });
  EvalFragment frag;
  frag.cm_2d = ConfusionMatrix(params.cfg.classes);
  frag.cm_3d = ConfusionMatrix(params.cfg.classes);
  frag.cm_fused = ConfusionMatrix(params.cfg.classes);
  for (const Frame* fp : ordered) {
    numerics::Tape tape;
    EncodedFrame enc = encode_frame(tape, *fp, params);
    const Matrix& l2 = tape.val(encoders::segment(tape, enc.f2d, params.head2d));
    const Matrix& l3 = tape.val(encoders::segment(tape, enc.f3d, params.head3d));
    const Matrix fused = adaptation::fuse_predictions(l2, l3);
    frag.cm_2d.add(confusion(enc.labels, argmax_rows(l2), params.cfg.classes));
    frag.cm_3d.add(confusion(enc.labels, argmax_rows(l3), params.cfg.classes));
    frag.cm_fused.add(confusion(enc.labels, argmax_rows(fused), params.cfg.classes));
    frag.frames += 1;
    frag.points += static_cast<std::int64_t>(enc.labels.size());
  }
  frag.iou_2d = miou(frag.cm_2d);
  frag.iou_3d = miou(frag.cm_3d);
  frag.iou_fused = miou(frag.cm_fused);
  return frag;
}

namespace {

ordered_json iou_json(const IouResult& iou) {
  ordered_json j;
  ordered_json per = ordered_json::array();
  for (std::size_t c = 0; c < iou.per_class.size(); ++c) {
    if (iou.valid[c])
      per.push_back(iou.per_class[c]);
    else
      per.push_back(nullptr);
  }
  j["per_class"] = per;
  j["miou"] = iou.mean;
  return j;
}

void iou_csv_row(std::string& out, const char* head, const IouResult& iou) {
  out += head;
  out += ',';
  out += format_double(iou.mean);
  for (std::size_t c = 0; c < iou.per_class.size(); ++c) {
    out += ',';
    if (iou.valid[c]) out += format_double(iou.per_class[c]);
  }
  out += '\n';
}

}  // namespace

void emit_report(const EvaluationReport& report, const std::string& directory) {
  fs::create_directories(directory);

  ordered_json j;
  j["version"] = 1;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  j["task"] = report.task;
  if (!report.config_echo_json.empty()) {
    j["config"] = ordered_json::parse(report.config_echo_json);
  } else {
    j["config"] = nullptr;
  }
  ordered_json counts;
  for (const auto& [stage, n] : report.frame_counts) counts[stage] = n;
  j["frame_counts"] = counts;
  ordered_json sels = ordered_json::array();
  for (const NamedSelection& ns : report.selections) {
    ordered_json js;
    js["name"] = ns.name;
    js["strategy"] = ns.selection.strategy;
    js["budget"] = ns.selection.budget;
    js["ids"] = ns.selection.ids;
    js["scores"] = ns.selection.scores;
    sels.push_back(js);
  }
  j["selections"] = sels;
  j["iou_2d"] = iou_json(report.result.iou_2d);
  j["iou_3d"] = iou_json(report.result.iou_3d);
  j["iou_fused"] = iou_json(report.result.iou_fused);
  j["evaluated_frames"] = report.result.frames;
  j["evaluated_points"] = report.result.points;
  write_text_file((fs::path(directory) / "report.json").string(), j.dump(2) + "\n");

  const std::size_t c = report.result.iou_2d.per_class.size();
  std::string csv = "head,miou";
  for (std::size_t i = 0; i < c; ++i) csv += ",iou_" + std::to_string(i);
  csv += '\n';
  iou_csv_row(csv, "2d", report.result.iou_2d);
  iou_csv_row(csv, "3d", report.result.iou_3d);
  iou_csv_row(csv, "fused", report.result.iou_fused);
  write_text_file((fs::path(directory) / "results.csv").string(), csv);

  std::vector<const sampling::SelectionResult*> sel_ptrs;
  sel_ptrs.reserve(report.selections.size());
  for (const NamedSelection& ns : report.selections) sel_ptrs.push_back(&ns.selection);
  write_text_file((fs::path(directory) / "selections.csv").string(),
                  sampling::selection_csv(sel_ptrs));

  ordered_json jt;
  jt["version"] = 1;
  ordered_json stages;
  for (const auto& [stage, sec] : report.timings) stages[stage] = sec;
  jt["seconds"] = stages;
  write_text_file((fs::path(directory) / "timings.json").string(), jt.dump(2) + "\n");
}

}  // namespace mmda::eval
