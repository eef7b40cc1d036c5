#pragma once

#include <string>
#include <vector>

#include "mmda/numerics.hpp"

namespace mmda::interaction {

using numerics::idx;
using numerics::Matrix;
using numerics::ParamTensor;
using numerics::Tape;
using numerics::Var;

/// Which direction(s) of cross-modal attention run. two_d_to_three_d only
/// enhances the 3D features; three_d_to_two_d only the 2D ones.
enum class Variant { symmetric, two_d_to_three_d, three_d_to_two_d, none };

/// How the relation matrix is combined with the backbone features before the
/// Norm + FFN stack: element-wise product (default) or element-wise sum.
enum class FusionMode { multiply, add };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);
FusionMode fusion_mode_from_string(const std::string& s);
std::string to_string(FusionMode m);

/// Per-modality weights: QKV projections, norm affine, and the two FFN layers.
struct ModalityParams {
  ParamTensor wq, wk, wv;              // F x F each
  ParamTensor norm_gamma, norm_beta;   // 1 x F
  ParamTensor ffn1_w, ffn1_b;          // 2F x F, 1 x 2F
  ParamTensor ffn2_w, ffn2_b;          // F x 2F, 1 x F
  static ModalityParams init(int features, const std::string& prefix, Rng& rng);
  std::vector<ParamTensor*> all();
};

struct InteractionParams {
  ModalityParams m2d;
  ModalityParams m3d;
  static InteractionParams init(int features, Rng& rng);
  std::vector<ParamTensor*> all();
};

struct Qkv {
  Var q, k, v;
};

/// Row-wise projections q_i = Wq f_i, k_i = Wk f_i, v_i = Wv f_i.
Qkv qkv(Tape& tape, Var f, ModalityParams& params);

/// A = K_a V_b^T, then R = softmax_rows(A, sqrt(F)) V_a. The key-times-value
/// form is intentional; see conventional_relation for the Q K^T flavor.
Var cross_relation(Tape& tape, Var k_a, Var v_b, Var v_a);

/// softmax(Q_a K_b^T / sqrt(F)) V_b, available behind a config switch.
Var conventional_relation(Tape& tape, Var q_a, Var k_b, Var v_b);

/// FFN(Norm(f (*) R)) with (*) given by the fusion mode.
Var fuse(Tape& tape, Var f, Var r, ModalityParams& params, FusionMode mode);

struct Interacted {
  Var f2d, f3d;
};

Interacted interact(Tape& tape, Var f2d, Var f3d, InteractionParams& params, Variant variant,
                    FusionMode mode = FusionMode::multiply, bool conventional_attention = false);

constexpr double kNormEps = 1e-5;

}  // namespace mmda::interaction
