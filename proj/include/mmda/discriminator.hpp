#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmda/numerics.hpp"

namespace mmda::discriminator {

using numerics::idx;
using numerics::Matrix;
using numerics::ParamTensor;
using numerics::Tape;
using numerics::Var;

// Domain label convention: source frames are class 0, target frames class 1.
constexpr int kSourceLabel = 0;
constexpr int kTargetLabel = 1;

constexpr double kProbClamp = 1e-7;

/// Three pointwise affine layers (in -> H -> H -> 1) with ReLU between.
/// in_width is 2F for the cross-modal head and F for the single-modality
/// baseline heads.
struct DiscriminatorParams {
  ParamTensor l1_w, l1_b, l2_w, l2_b, l3_w, l3_b;
  bool trained = false;
  static DiscriminatorParams init(int in_width, int hidden, const std::string& prefix, Rng& rng);
  std::vector<ParamTensor*> all();
  idx in_width() const { return l1_w.cols; }
};

struct Discrimination {
  Var point_probs;  // N x 1 in (0,1)
  Var frame_score;  // 1 x 1 mean of the per-point probabilities
};

/// Runs the stack on the 2F-wide concatenation [f2d_hat, f3d_hat].
Discrimination discriminate(Tape& tape, Var f2d_hat, Var f3d_hat, DiscriminatorParams& params);

/// Same stack on an arbitrary feature matrix whose width matches the head.
Discrimination discriminate_features(Tape& tape, Var features, DiscriminatorParams& params);

/// Forward-only frame score of a cached feature matrix.
double score_features(const Matrix& features, DiscriminatorParams& params);

/// Mean over points of -[label ln p + (1-label) ln(1-p)], probabilities
/// clamped to [kProbClamp, 1-kProbClamp].
double bce_domain_loss(const std::vector<double>& probs, int label);

struct TrainDiscConfig {
  int iters = 300;
  int batch = 8;
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double poly_power = 0.9;
};

struct DiscHistory {
  std::vector<double> loss;      // per-iteration objective
  std::vector<double> accuracy;  // per-iteration training batch frame accuracy
};

/// Adam + poly schedule over balanced mini-batches of cached per-frame
/// feature matrices (each rows x in_width). Upstream encoders/interaction are
/// frozen, which is what makes the caching exact.
DiscHistory train_discriminator_cached(const std::vector<Matrix>& source_features,
                                       const std::vector<Matrix>& target_features,
                                       DiscriminatorParams& params, const TrainDiscConfig& cfg,
                                       std::uint64_t seed);

}  // namespace mmda::discriminator
