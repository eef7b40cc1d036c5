#include "mmda/model.hpp"

#include "binio.hpp"

namespace mmda {

using numerics::idx;
using numerics::Matrix;
using numerics::ParamTensor;
using numerics::Tape;
using numerics::Var;

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p;
  p.cfg = cfg;
  Rng master(seed);
  Rng r_enc2d = master.split(1);
  Rng r_enc3d = master.split(2);
  Rng r_head2d = master.split(3);
  Rng r_head3d = master.split(4);
  Rng r_inter = master.split(5);
  Rng r_disc = master.split(6);
  Rng r_disc2d = master.split(7);
  Rng r_disc3d = master.split(8);
  p.enc2d = encoders::Encoder2dParams::init(cfg.features, r_enc2d);
  p.enc3d = encoders::Encoder3dParams::init(cfg.features, r_enc3d);
  p.head2d = encoders::HeadParams::init(cfg.features, cfg.classes, "head2d", r_head2d);
  p.head3d = encoders::HeadParams::init(cfg.features, cfg.classes, "head3d", r_head3d);
  p.inter = interaction::InteractionParams::init(cfg.features, r_inter);
  p.disc_cross =
      discriminator::DiscriminatorParams::init(2 * cfg.features, cfg.disc_hidden, "disc", r_disc);
  p.disc_2d =
      discriminator::DiscriminatorParams::init(cfg.features, cfg.disc_hidden, "disc2d", r_disc2d);
  p.disc_3d =
      discriminator::DiscriminatorParams::init(cfg.features, cfg.disc_hidden, "disc3d", r_disc3d);
  return p;
}

std::vector<ParamTensor*> ModelParams::all() {
  std::vector<ParamTensor*> out;
  auto append = [&out](std::vector<ParamTensor*> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  append(enc2d.all());
  append(enc3d.all());
  append(head2d.all());
  append(head3d.all());
  append(inter.all());
  append(disc_cross.all());
  append(disc_2d.all());
  append(disc_3d.all());
  return out;
}

std::vector<ParamTensor*> ModelParams::segmentation() {
  std::vector<ParamTensor*> out;
  auto append = [&out](std::vector<ParamTensor*> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  append(enc2d.all());
  append(enc3d.all());
  append(head2d.all());
  append(head3d.all());
  return out;
}

EncodedFrame encode_frame(Tape& tape, const Frame& frame, ModelParams& params) {
  encoders::Projection proj =
      encoders::project_points(frame.points, frame.calib, frame.height, frame.width);
  EncodedFrame out;
  out.point_index = proj.kept;
  out.labels.reserve(proj.kept.size());
  std::vector<std::array<double, 3>> kept_points;
  kept_points.reserve(proj.kept.size());
  for (idx i : proj.kept) {
    out.labels.push_back(frame.labels[static_cast<std::size_t>(i)]);
    kept_points.push_back(frame.points[static_cast<std::size_t>(i)]);
  }
  out.f2d =
      encoders::encode_2d(tape, frame.image, frame.height, frame.width, proj.u, proj.v, params.enc2d);
  out.f3d = encoders::encode_3d(tape, kept_points, params.enc3d);
  return out;
}

encoders::FeaturePair feature_pair(const Frame& frame, ModelParams& params) {
  Tape tape;
  EncodedFrame enc = encode_frame(tape, frame, params);
  encoders::FeaturePair fp;
  fp.point_index = enc.point_index;
  fp.f2d = tape.val(enc.f2d);
  fp.f3d = tape.val(enc.f3d);
  return fp;
}

Matrix disc_features(const Frame& frame, ModelParams& params, DiscFeatureKind kind) {
  Tape tape;
  EncodedFrame enc = encode_frame(tape, frame, params);
  switch (kind) {
    case DiscFeatureKind::raw_2d:
      return tape.val(enc.f2d);
    case DiscFeatureKind::raw_3d:
      return tape.val(enc.f3d);
    case DiscFeatureKind::cross_modal: {
      interaction::Interacted inter =
          interaction::interact(tape, enc.f2d, enc.f3d, params.inter, params.cfg.variant,
                                params.cfg.fusion_mode, params.cfg.conventional_attention);
      return tape.val(tape.concat_cols(inter.f2d, inter.f3d));
    }
  }
  throw ArgumentError("disc_features: unknown feature kind");
}

discriminator::DiscriminatorParams& disc_for(ModelParams& params, DiscFeatureKind kind) {
  switch (kind) {
    case DiscFeatureKind::cross_modal: return params.disc_cross;
    case DiscFeatureKind::raw_2d: return params.disc_2d;
    case DiscFeatureKind::raw_3d: return params.disc_3d;
  }
  throw ArgumentError("disc_for: unknown feature kind");
}

discriminator::DiscHistory train_discriminator(const std::vector<const Frame*>& source_frames,
                                               const std::vector<const Frame*>& target_frames,
                                               ModelParams& params, DiscFeatureKind kind,
                                               const discriminator::TrainDiscConfig& cfg,
                                               std::uint64_t seed) {
  if (source_frames.empty() || target_frames.empty())
    throw ArgumentError("train_discriminator: both domains must be non-empty");
  std::vector<Matrix> src;
  src.reserve(source_frames.size());
  for (const Frame* f : source_frames) src.push_back(disc_features(*f, params, kind));
  std::vector<Matrix> tgt;
  tgt.reserve(target_frames.size());
  for (const Frame* f : target_frames) tgt.push_back(disc_features(*f, params, kind));
  return discriminator::train_discriminator_cached(src, tgt, disc_for(params, kind), cfg, seed);
}

double score_frame(const Frame& frame, ModelParams& params, DiscFeatureKind kind) {
  return discriminator::score_features(disc_features(frame, params, kind),
                                       disc_for(params, kind));
}

namespace {

constexpr char kCheckpointMagic[4] = {'M', 'M', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  ModelParams& p = const_cast<ModelParams&>(params);
  binio::Writer w(path);
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.i32(p.cfg.features);
  w.i32(p.cfg.classes);
  w.i32(p.cfg.disc_hidden);
  w.u8(static_cast<std::uint8_t>(p.cfg.variant));
  w.u8(static_cast<std::uint8_t>(p.cfg.fusion_mode));
  w.u8(p.cfg.conventional_attention ? 1 : 0);
  w.u8(p.disc_cross.trained ? 1 : 0);
  w.u8(p.disc_2d.trained ? 1 : 0);
  w.u8(p.disc_3d.trained ? 1 : 0);
  std::vector<ParamTensor*> ps = p.all();
  w.u32(static_cast<std::uint32_t>(ps.size()));
  for (const ParamTensor* t : ps) {
    w.str(t->name);
    w.i64(t->rows);
    w.i64(t->cols);
    w.f64s(t->value);
  }
  w.close();
}

ModelParams load_checkpoint(const std::string& path) {
  binio::Reader r(path);
  r.expect_magic(kCheckpointMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version in " + path);
  ModelConfig cfg;
  cfg.features = r.i32();
  cfg.classes = r.i32();
  cfg.disc_hidden = r.i32();
  cfg.variant = static_cast<interaction::Variant>(r.u8());
  cfg.fusion_mode = static_cast<interaction::FusionMode>(r.u8());
  cfg.conventional_attention = r.u8() != 0;
  ModelParams params = ModelParams::init(cfg, 0);
  params.disc_cross.trained = r.u8() != 0;
  params.disc_2d.trained = r.u8() != 0;
  params.disc_3d.trained = r.u8() != 0;
  const std::uint32_t count = r.u32();
  std::vector<ParamTensor*> ps = params.all();
  if (count != ps.size()) throw FormatError("checkpoint parameter count mismatch in " + path);
  for (ParamTensor* t : ps) {
    const std::string name = r.str();
    if (name != t->name) throw FormatError("checkpoint parameter order mismatch in " + path);
    const std::int64_t rows = r.i64();
    const std::int64_t cols = r.i64();
    if (rows != t->rows || cols != t->cols)
      throw FormatError("checkpoint parameter shape mismatch in " + path);
    r.f64s(t->value, static_cast<std::size_t>(rows * cols));
  }
  return params;
}

}  // namespace mmda
