#include "mmda/encoders.hpp"

#include <cmath>

namespace mmda {

bool Calibration::rotation_orthonormal(double tol) const {
  // R^T R == I entrywise within tol.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += rot[static_cast<std::size_t>(k * 3 + i)] * rot[static_cast<std::size_t>(k * 3 + j)];
      const double want = i == j ? 1.0 : 0.0;
      if (std::fabs(dot - want) > tol) return false;
    }
  }
  return true;
}

std::array<double, 3> Calibration::to_camera(const std::array<double, 3>& p) const {
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    out[static_cast<std::size_t>(i)] = rot[static_cast<std::size_t>(i * 3 + 0)] * p[0] +
                                       rot[static_cast<std::size_t>(i * 3 + 1)] * p[1] +
                                       rot[static_cast<std::size_t>(i * 3 + 2)] * p[2] +
                                       trans[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace mmda

namespace mmda::encoders {

Projection project_points(const std::vector<std::array<double, 3>>& points,
                          const Calibration& calib, int height, int width) {
  if (!(calib.fx > 0.0) || !(calib.fy > 0.0))
    throw ArgumentError("project_points: focal lengths must be positive");
  if (!calib.rotation_orthonormal())
    throw ArgumentError("project_points: pose rotation is not orthonormal");
  Projection out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto pc = calib.to_camera(points[i]);
    if (pc[2] <= 0.0) continue;
    const double u = calib.fx * pc[0] / pc[2] + calib.cx;
    const double v = calib.fy * pc[1] / pc[2] + calib.cy;
    if (u < 0.0 || u >= static_cast<double>(width) || v < 0.0 || v >= static_cast<double>(height))
      continue;
    out.u.push_back(u);
    out.v.push_back(v);
    out.kept.push_back(static_cast<idx>(i));
  }
  if (out.kept.empty()) throw EmptyProjectionError("project_points: no point projects into the image");
  return out;
}

Encoder2dParams Encoder2dParams::init(int features, Rng& rng) {
  Encoder2dParams p;
  p.conv1_w = ParamTensor("enc2d.conv1_w", 8, 3 * 9);
  p.conv1_b = ParamTensor("enc2d.conv1_b", 1, 8);
  p.conv2_w = ParamTensor("enc2d.conv2_w", features, 8 * 9);
  p.conv2_b = ParamTensor("enc2d.conv2_b", 1, features);
  p.conv1_w.init_normal(rng, std::sqrt(2.0 / (3.0 * 9.0)));
  p.conv2_w.init_normal(rng, std::sqrt(2.0 / (8.0 * 9.0)));
  return p;
}

std::vector<ParamTensor*> Encoder2dParams::all() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b};
}

Encoder3dParams Encoder3dParams::init(int features, Rng& rng) {
  Encoder3dParams p;
  p.mlp1_w = ParamTensor("enc3d.mlp1_w", 16, 4);
  p.mlp1_b = ParamTensor("enc3d.mlp1_b", 1, 16);
  p.mlp2_w = ParamTensor("enc3d.mlp2_w", features, 16);
  p.mlp2_b = ParamTensor("enc3d.mlp2_b", 1, features);
  p.ctx_w = ParamTensor("enc3d.ctx_w", features, 2 * features);
  p.ctx_b = ParamTensor("enc3d.ctx_b", 1, features);
  p.mlp1_w.init_normal(rng, std::sqrt(2.0 / 4.0));
  p.mlp2_w.init_normal(rng, std::sqrt(2.0 / 16.0));
  p.ctx_w.init_normal(rng, std::sqrt(1.0 / (2.0 * features)));
  return p;
}

std::vector<ParamTensor*> Encoder3dParams::all() {
  return {&mlp1_w, &mlp1_b, &mlp2_w, &mlp2_b, &ctx_w, &ctx_b};
}

HeadParams HeadParams::init(int features, int classes, const std::string& prefix, Rng& rng) {
  HeadParams p;
  p.w = ParamTensor(prefix + ".w", classes, features);
  p.b = ParamTensor(prefix + ".b", 1, classes);
  p.w.init_normal(rng, std::sqrt(1.0 / features));
  return p;
}

std::vector<ParamTensor*> HeadParams::all() { return {&w, &b}; }

Var encode_2d(Tape& tape, const std::vector<double>& image, int height, int width,
              const std::vector<double>& u, const std::vector<double>& v,
              Encoder2dParams& params) {
  if (image.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * 3)
    throw ShapeError("encode_2d: image buffer size mismatch");
  if (u.size() != v.size()) throw ShapeError("encode_2d: coordinate arrays differ in length");
  std::vector<idx> cells(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const idx cu = static_cast<idx>(std::floor(u[i]));
    const idx cv = static_cast<idx>(std::floor(v[i]));
    if (cu < 0 || cu >= width || cv < 0 || cv >= height)
      throw ArgumentError("encode_2d: pixel coordinate outside image");
    cells[i] = cv * width + cu;
  }
  Matrix img(static_cast<idx>(height) * width, 3);
  img.values() = image;
  Var x = tape.constant(std::move(img));
  Var h = tape.relu(tape.conv3x3(x, tape.param(params.conv1_w), tape.param(params.conv1_b), height,
                                 width));
  Var feat = tape.conv3x3(h, tape.param(params.conv2_w), tape.param(params.conv2_b), height, width);
  return tape.gather_rows(feat, std::move(cells));
}

Var encode_3d(Tape& tape, const std::vector<std::array<double, 3>>& points,
              Encoder3dParams& params) {
  if (points.empty()) throw ShapeError("encode_3d: empty point set");
  Matrix in(static_cast<idx>(points.size()), 4);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const idx r = static_cast<idx>(i);
    in(r, 0) = p[0];
    in(r, 1) = p[1];
    in(r, 2) = p[2];
    in(r, 3) = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  }
  Var x = tape.constant(std::move(in));
  Var h1 = tape.relu(tape.affine(x, tape.param(params.mlp1_w), tape.param(params.mlp1_b)));
  Var h2 = tape.affine(h1, tape.param(params.mlp2_w), tape.param(params.mlp2_b));
  Var pooled = tape.repeat_rows(tape.mean_rows(h2), static_cast<idx>(points.size()));
  Var cat = tape.concat_cols(h2, pooled);
  return tape.affine(cat, tape.param(params.ctx_w), tape.param(params.ctx_b));
}

Var segment(Tape& tape, Var features, HeadParams& head) {
  if (tape.val(features).cols() != head.w.cols)
    throw ShapeError("segment: head width does not match feature width");
  return tape.affine(features, tape.param(head.w), tape.param(head.b));
}

}  // namespace mmda::encoders
