#pragma once

#include <string>
#include <vector>

#include "mmda/discriminator.hpp"
#include "mmda/encoders.hpp"
#include "mmda/frame.hpp"
#include "mmda/interaction.hpp"

namespace mmda {

struct ModelConfig {
  int features = 16;
  int classes = 6;
  int disc_hidden = 32;
  interaction::Variant variant = interaction::Variant::symmetric;
  interaction::FusionMode fusion_mode = interaction::FusionMode::multiply;
  bool conventional_attention = false;
};

/// Every learnable tensor in the pipeline: both encoders, both segmentation
/// heads, the interaction weights, and the three discriminator heads (the
/// cross-modal one plus the single-modality baseline heads).
struct ModelParams {
  ModelConfig cfg;
  encoders::Encoder2dParams enc2d;
  encoders::Encoder3dParams enc3d;
  encoders::HeadParams head2d;
  encoders::HeadParams head3d;
  interaction::InteractionParams inter;
  discriminator::DiscriminatorParams disc_cross;
  discriminator::DiscriminatorParams disc_2d;
  discriminator::DiscriminatorParams disc_3d;

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);
  std::vector<numerics::ParamTensor*> all();
  /// Encoders + heads, the set Eq-style source training updates.
  std::vector<numerics::ParamTensor*> segmentation();
};

/// Per-frame forward products used by training and evaluation. Row i of both
/// feature vars describes Frame.points[point_index[i]].
struct EncodedFrame {
  numerics::Var f2d;
  numerics::Var f3d;
  std::vector<numerics::idx> point_index;
  std::vector<int> labels;
};

EncodedFrame encode_frame(numerics::Tape& tape, const Frame& frame, ModelParams& params);

/// Plain-matrix feature pair (no gradient tracking).
encoders::FeaturePair feature_pair(const Frame& frame, ModelParams& params);

/// Which features feed a discriminator head: the interacted cross-modal
/// concatenation, or one modality's raw backbone features.
enum class DiscFeatureKind { cross_modal, raw_2d, raw_3d };

numerics::Matrix disc_features(const Frame& frame, ModelParams& params, DiscFeatureKind kind);

discriminator::DiscriminatorParams& disc_for(ModelParams& params, DiscFeatureKind kind);

/// Encodes and interacts every frame once (upstream weights are frozen during
/// discriminator training), then trains the corresponding head on the cached
/// features with balanced source/target mini-batches.
discriminator::DiscHistory train_discriminator(const std::vector<const Frame*>& source_frames,
                                               const std::vector<const Frame*>& target_frames,
                                               ModelParams& params, DiscFeatureKind kind,
                                               const discriminator::TrainDiscConfig& cfg,
                                               std::uint64_t seed);

/// Forward-only frame score in (0,1) for one frame under a feature kind.
double score_frame(const Frame& frame, ModelParams& params, DiscFeatureKind kind);

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace mmda
