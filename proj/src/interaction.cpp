#include "mmda/interaction.hpp"

#include <cmath>

namespace mmda::interaction {

Variant variant_from_string(const std::string& s) {
  if (s == "symmetric") return Variant::symmetric;
  if (s == "two_d_to_three_d") return Variant::two_d_to_three_d;
  if (s == "three_d_to_two_d") return Variant::three_d_to_two_d;
  if (s == "none") return Variant::none;
  throw ArgumentError("unknown interaction variant: " + s);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::symmetric: return "symmetric";
    case Variant::two_d_to_three_d: return "two_d_to_three_d";
    case Variant::three_d_to_two_d: return "three_d_to_two_d";
    case Variant::none: return "none";
  }
  return "?";
}

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "multiply") return FusionMode::multiply;
  if (s == "add") return FusionMode::add;
  throw ArgumentError("unknown fusion mode: " + s);
}

std::string to_string(FusionMode m) { return m == FusionMode::multiply ? "multiply" : "add"; }

ModalityParams ModalityParams::init(int features, const std::string& prefix, Rng& rng) {
  ModalityParams p;
  const idx f = features;
  p.wq = ParamTensor(prefix + ".wq", f, f);
  p.wk = ParamTensor(prefix + ".wk", f, f);
  p.wv = ParamTensor(prefix + ".wv", f, f);
  p.norm_gamma = ParamTensor(prefix + ".norm_gamma", 1, f);
  p.norm_beta = ParamTensor(prefix + ".norm_beta", 1, f);
  p.ffn1_w = ParamTensor(prefix + ".ffn1_w", 2 * f, f);
  p.ffn1_b = ParamTensor(prefix + ".ffn1_b", 1, 2 * f);
  p.ffn2_w = ParamTensor(prefix + ".ffn2_w", f, 2 * f);
  p.ffn2_b = ParamTensor(prefix + ".ffn2_b", 1, f);
  const double s = std::sqrt(1.0 / features);
  p.wq.init_normal(rng, s);
  p.wk.init_normal(rng, s);
  p.wv.init_normal(rng, s);
  p.norm_gamma.init_constant(1.0);
  p.ffn1_w.init_normal(rng, std::sqrt(2.0 / features));
  p.ffn2_w.init_normal(rng, std::sqrt(1.0 / (2.0 * features)));
  return p;
}

std::vector<ParamTensor*> ModalityParams::all() {
  return {&wq, &wk, &wv, &norm_gamma, &norm_beta, &ffn1_w, &ffn1_b, &ffn2_w, &ffn2_b};
}

InteractionParams InteractionParams::init(int features, Rng& rng) {
  InteractionParams p;
  Rng r2 = rng.split(0x2d);
  Rng r3 = rng.split(0x3d);
  p.m2d = ModalityParams::init(features, "inter.m2d", r2);
  p.m3d = ModalityParams::init(features, "inter.m3d", r3);
  return p;
}

std::vector<ParamTensor*> InteractionParams::all() {
  std::vector<ParamTensor*> out = m2d.all();
  for (ParamTensor* p : m3d.all()) out.push_back(p);
  return out;
}

Qkv qkv(Tape& tape, Var f, ModalityParams& params) {
  if (tape.val(f).cols() != params.wq.rows)
    throw ShapeError("qkv: projection width does not match feature width");
  Qkv out;
  out.q = tape.matmul_nt(f, tape.param(params.wq));
  out.k = tape.matmul_nt(f, tape.param(params.wk));
  out.v = tape.matmul_nt(f, tape.param(params.wv));
  return out;
}

Var cross_relation(Tape& tape, Var k_a, Var v_b, Var v_a) {
  const idx f = tape.val(v_a).cols();
  Var a = tape.matmul_nt(k_a, v_b);
  Var s = tape.softmax_rows(a, std::sqrt(static_cast<double>(f)));
  return tape.matmul(s, v_a);
}

Var conventional_relation(Tape& tape, Var q_a, Var k_b, Var v_b) {
  const idx f = tape.val(v_b).cols();
  Var a = tape.matmul_nt(q_a, k_b);
  Var s = tape.softmax_rows(a, std::sqrt(static_cast<double>(f)));
  return tape.matmul(s, v_b);
}

Var fuse(Tape& tape, Var f, Var r, ModalityParams& params, FusionMode mode) {
  Var z;
  switch (mode) {
    case FusionMode::multiply: z = tape.mul(f, r); break;
    case FusionMode::add: z = tape.add(f, r); break;
    default: throw ArgumentError("fuse: unknown fusion mode");
  }
  Var n = tape.layer_norm_rows(z, tape.param(params.norm_gamma), tape.param(params.norm_beta),
                               kNormEps);
  Var h = tape.relu(tape.affine(n, tape.param(params.ffn1_w), tape.param(params.ffn1_b)));
  return tape.affine(h, tape.param(params.ffn2_w), tape.param(params.ffn2_b));
}

Interacted interact(Tape& tape, Var f2d, Var f3d, InteractionParams& params, Variant variant,
                    FusionMode mode, bool conventional_attention) {
  if (tape.val(f2d).rows() != tape.val(f3d).rows() ||
      tape.val(f2d).cols() != tape.val(f3d).cols())
    throw ShapeError("interact: feature pair must share N and F");
  if (variant == Variant::none) return {f2d, f3d};

  Qkv p2d = qkv(tape, f2d, params.m2d);
  Qkv p3d = qkv(tape, f3d, params.m3d);

  Interacted out{f2d, f3d};
  if (variant == Variant::symmetric || variant == Variant::three_d_to_two_d) {
    Var r = conventional_attention ? conventional_relation(tape, p2d.q, p3d.k, p3d.v)
                                   : cross_relation(tape, p2d.k, p3d.v, p2d.v);
    out.f2d = fuse(tape, f2d, r, params.m2d, mode);
  }
  if (variant == Variant::symmetric || variant == Variant::two_d_to_three_d) {
    Var r = conventional_attention ? conventional_relation(tape, p3d.q, p2d.k, p2d.v)
                                   : cross_relation(tape, p3d.k, p2d.v, p3d.v);
    out.f3d = fuse(tape, f3d, r, params.m3d, mode);
  }
  return out;
}

}  // namespace mmda::interaction
