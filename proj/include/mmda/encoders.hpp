#pragma once

#include <vector>

#include "mmda/frame.hpp"
#include "mmda/numerics.hpp"

namespace mmda::encoders {

using numerics::idx;
using numerics::Matrix;
using numerics::ParamTensor;
using numerics::Tape;
using numerics::Var;

struct EmptyProjectionError : Error {
  using Error::Error;
};

/// Result of the pinhole projection: continuous pixel coordinates for the
/// points that land inside the image, plus their (strictly increasing)
/// indices into the input cloud.
struct Projection {
  std::vector<double> u;
  std::vector<double> v;
  std::vector<idx> kept;
};

Projection project_points(const std::vector<std::array<double, 3>>& points,
                          const Calibration& calib, int height, int width);

/// Aligned per-point feature matrices from the two branches; row i of both
/// describes points[point_index[i]].
struct FeaturePair {
  std::vector<idx> point_index;
  Matrix f2d;
  Matrix f3d;
};

/// Two 3x3 convolutions (widths 8 then F) with a ReLU between them.
struct Encoder2dParams {
  ParamTensor conv1_w, conv1_b, conv2_w, conv2_b;
  static Encoder2dParams init(int features, Rng& rng);
  std::vector<ParamTensor*> all();
};

/// Per-point MLP (4 -> 16 -> F) with mean-pooled context concatenation and a
/// final 2F -> F projection. Permutation-equivariant by construction.
struct Encoder3dParams {
  ParamTensor mlp1_w, mlp1_b, mlp2_w, mlp2_b, ctx_w, ctx_b;
  static Encoder3dParams init(int features, Rng& rng);
  std::vector<ParamTensor*> all();
};

/// Pointwise affine segmentation head, F -> C.
struct HeadParams {
  ParamTensor w, b;
  static HeadParams init(int features, int classes, const std::string& prefix, Rng& rng);
  std::vector<ParamTensor*> all();
};

/// Dense conv features over the image, then a nearest-cell row gather at the
/// projected pixel of each point. Output is N x F.
Var encode_2d(Tape& tape, const std::vector<double>& image, int height, int width,
              const std::vector<double>& u, const std::vector<double>& v, Encoder2dParams& params);

/// N x F features from (x, y, z, range) per point.
Var encode_3d(Tape& tape, const std::vector<std::array<double, 3>>& points,
              Encoder3dParams& params);

/// N x C logits.
Var segment(Tape& tape, Var features, HeadParams& head);

}  // namespace mmda::encoders
