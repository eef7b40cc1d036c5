#pragma once

#include <cstdint>
#include <vector>

#include "mmda/frame.hpp"
#include "mmda/model.hpp"
#include "mmda/sampling.hpp"

namespace mmda::adaptation {

using numerics::Matrix;
using numerics::Tape;
using numerics::Var;

struct TrainConfig {
  int batch = 8;
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double poly_power = 0.9;
  int max_iters = 2000;
  double loss_weight_2d = 1.0;
  double loss_weight_3d = 1.0;
};

/// Mean over non-ignored points of -ln softmax(logits)[label].
Var seg_loss(Tape& tape, Var logits, const std::vector<int>& labels);

/// Per-point (softmax(l2d) + softmax(l3d)) / 2; rows sum to 1.
Matrix fuse_predictions(const Matrix& logits2d, const Matrix& logits3d);

struct TrainHistory {
  std::vector<double> loss;
};

/// Joint 2D+3D cross-entropy over source mini-batches, Adam + poly schedule.
/// 2D labels are the 3D labels carried to the projected points.
TrainHistory train_source(const std::vector<const Frame*>& frames, ModelParams& params,
                          const TrainConfig& cfg, std::uint64_t seed);

/// Pseudo-labels for one frame, aligned with Frame.points (ignored points
/// carry kIgnoreLabel and zero confidence).
struct PseudoLabeledFrame {
  std::uint64_t id = 0;
  std::vector<int> labels;
  std::vector<double> confidence;
  bool all_ignored = false;  // warning flag for degenerate keep sets
};

struct PseudoLabelPolicy {
  double quantile = 0.2;  // per predicted class, drop the bottom q by confidence
  bool use_fusion = true;  // confidence from fused probs; otherwise 3D branch
};

/// Rank-based keep rule behind pseudo_label: within each predicted class,
/// keep the n_c - floor(q * n_c) most confident points.
std::vector<bool> quantile_keep_mask(const std::vector<int>& pred,
                                     const std::vector<double>& confidence, int num_classes,
                                     double quantile);

std::vector<PseudoLabeledFrame> pseudo_label(const std::vector<const Frame*>& frames,
                                             ModelParams& params,
                                             const PseudoLabelPolicy& policy);

/// Pseudo-labels only the frames selected in Z; everything else is excluded
/// from self-training entirely.
std::vector<PseudoLabeledFrame> apl(const std::vector<const Frame*>& frames, ModelParams& params,
                                    const sampling::SelectionResult& selection,
                                    const PseudoLabelPolicy& policy);

/// One target-domain training unit: a frame plus the labels to train against
/// (ground truth for oracle-annotated frames, pseudo-labels otherwise).
struct TargetSample {
  const Frame* frame = nullptr;
  std::vector<int> labels;  // aligned with frame->points
};

/// Joint objective: mean segmentation loss over the source subset plus mean
/// over the target subset, equally weighted, starting from the given params.
TrainHistory self_train(const std::vector<const Frame*>& source_frames,
                        const std::vector<TargetSample>& target_samples, ModelParams& params,
                        const TrainConfig& cfg, std::uint64_t seed);

}  // namespace mmda::adaptation
