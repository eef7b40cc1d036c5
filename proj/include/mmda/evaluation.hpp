#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmda/adaptation.hpp"
#include "mmda/frame.hpp"
#include "mmda/model.hpp"
#include "mmda/sampling.hpp"

namespace mmda::eval {

using numerics::idx;
using numerics::Matrix;

struct UndefinedMetricError : Error {
  using Error::Error;
};

/// C x C counts, rows = ground truth, cols = prediction; ignored points are
/// excluded.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int c)
      : num_classes(c), counts(static_cast<std::size_t>(c) * static_cast<std::size_t>(c), 0) {}
  std::int64_t& at(int gt, int pred) {
    return counts[static_cast<std::size_t>(gt) * num_classes + pred];
  }
  std::int64_t at(int gt, int pred) const {
    return counts[static_cast<std::size_t>(gt) * num_classes + pred];
  }
  std::int64_t total() const;
  void add(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(const std::vector<int>& gt, const std::vector<int>& pred,
                          int num_classes);

/// Per-class IoU = TP / (TP + FP + FN). Classes with zero union are excluded
/// from the mean (valid[c] == false).
struct IouResult {
  std::vector<double> per_class;
  std::vector<bool> valid;
  double mean = 0.0;
};

IouResult miou(const ConfusionMatrix& cm);

struct EvalFragment {
  ConfusionMatrix cm_2d, cm_3d, cm_fused;
  IouResult iou_2d, iou_3d, iou_fused;
  std::int64_t frames = 0;
  std::int64_t points = 0;
};

/// Accumulates one confusion matrix per head (2D, 3D, fused) over the test
/// frames (processed in ascending id order), then mIoU per head.
EvalFragment evaluate_model(ModelParams& params, const std::vector<const Frame*>& test_frames);

struct NamedSelection {
  std::string name;  // e.g. "source", "target_oracle"
  sampling::SelectionResult selection;
};

struct EvaluationReport {
  std::string config_hash;
  std::string config_echo_json;  // canonical dump of the run config
  std::uint64_t seed = 0;
  std::string task;
  std::vector<std::pair<std::string, std::int64_t>> frame_counts;
  std::vector<NamedSelection> selections;
  EvalFragment result;
  // Wall-clock per stage; emitted to timings.json so report.json stays
  // byte-reproducible across runs.
  std::vector<std::pair<std::string, double>> timings;
};

/// Writes report.json, results.csv (head,miou,iou_0..iou_{C-1}), and
/// selections.csv with stable field ordering; timings go to timings.json.
void emit_report(const EvaluationReport& report, const std::string& directory);

}  // namespace mmda::eval
