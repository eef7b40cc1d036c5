#include "mmda/adaptation.hpp"

#include <algorithm>
#include <cmath>

#include "mmda/kernels.hpp"
#include "mmda/optim.hpp"

namespace mmda::adaptation {

using numerics::idx;

Var seg_loss(Tape& tape, Var logits, const std::vector<int>& labels) {
  return tape.cross_entropy_rows(logits, labels, kIgnoreLabel);
}

Matrix fuse_predictions(const Matrix& logits2d, const Matrix& logits3d) {
  if (!logits2d.same_shape(logits3d)) throw ShapeError("fuse_predictions: shape mismatch");
  Matrix p2(logits2d.rows(), logits2d.cols());
  Matrix p3(logits3d.rows(), logits3d.cols());
  kernels::softmax_rows(logits2d.data(), p2.data(), logits2d.rows(), logits2d.cols(), 1.0);
  kernels::softmax_rows(logits3d.data(), p3.data(), logits3d.rows(), logits3d.cols(), 1.0);
  Matrix out(p2.rows(), p2.cols());
  for (idx i = 0; i < out.size(); ++i) out.data()[i] = 0.5 * (p2.data()[i] + p3.data()[i]);
  return out;
}

namespace {

/// Branch losses for one frame on the tape: w2*L2d + w3*L3d at the projected
/// points. labels_raw is aligned with frame.points.
Var frame_seg_loss(Tape& tape, const Frame& frame, const std::vector<int>& labels_raw,
                   ModelParams& params, const TrainConfig& cfg) {
  EncodedFrame enc = encode_frame(tape, frame, params);
  std::vector<int> labels;
  labels.reserve(enc.point_index.size());
  for (idx i : enc.point_index) labels.push_back(labels_raw[static_cast<std::size_t>(i)]);
  Var logits2d = encoders::segment(tape, enc.f2d, params.head2d);
  Var logits3d = encoders::segment(tape, enc.f3d, params.head3d);
  Var l2 = tape.scale(seg_loss(tape, logits2d, labels), cfg.loss_weight_2d);
  Var l3 = tape.scale(seg_loss(tape, logits3d, labels), cfg.loss_weight_3d);
  return tape.add(l2, l3);
}

bool has_valid_labels(const Frame& frame, const std::vector<int>& labels_raw) {
  encoders::Projection proj;
  try {
    proj = encoders::project_points(frame.points, frame.calib, frame.height, frame.width);
  } catch (const encoders::EmptyProjectionError&) {
    return false;
  }
  for (idx i : proj.kept) {
    if (labels_raw[static_cast<std::size_t>(i)] != kIgnoreLabel) return true;
  }
  return false;
}

}  // namespace

TrainHistory train_source(const std::vector<const Frame*>& frames, ModelParams& params,
                          const TrainConfig& cfg, std::uint64_t seed) {
  if (frames.empty()) throw ArgumentError("train_source: empty frame set");
  if (cfg.batch < 1) throw ArgumentError("train_source: batch must be >= 1");
  Rng rng(seed);
  numerics::OptimizerState opt;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.base_lr = cfg.base_lr;
  std::vector<numerics::ParamTensor*> ps = params.segmentation();
  TrainHistory hist;
  hist.loss.reserve(static_cast<std::size_t>(cfg.max_iters));
  for (int it = 0; it < cfg.max_iters; ++it) {
    Tape tape;
    Var acc;
    for (int b = 0; b < cfg.batch; ++b) {
      const Frame& f = *frames[static_cast<std::size_t>(rng.uniform_int(frames.size()))];
      Var l = frame_seg_loss(tape, f, f.labels, params, cfg);
      acc = acc.ok() ? tape.add(acc, l) : l;
    }
    Var loss = tape.scale(acc, 1.0 / cfg.batch);
    numerics::zero_grads(ps);
    tape.backward(loss);
    numerics::adam_step(ps, opt, numerics::poly_lr(it, cfg.max_iters, cfg.base_lr, cfg.poly_power));
    hist.loss.push_back(tape.scalar(loss));
  }
  return hist;
}

std::vector<bool> quantile_keep_mask(const std::vector<int>& pred,
                                     const std::vector<double>& confidence, int num_classes,
                                     double quantile) {
  if (pred.size() != confidence.size())
    throw ShapeError("quantile_keep_mask: prediction/confidence length mismatch");
  if (quantile < 0.0 || quantile > 1.0)
    throw ArgumentError("quantile_keep_mask: quantile must be in [0,1]");
  std::vector<bool> keep(pred.size(), false);
  for (int cls = 0; cls < num_classes; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == cls) members.push_back(i);
    }
    if (members.empty()) continue;
    std::stable_sort(members.begin(), members.end(), [&confidence](std::size_t a, std::size_t b) {
      return confidence[a] > confidence[b];
    });
    const std::size_t drop =
        static_cast<std::size_t>(std::floor(quantile * static_cast<double>(members.size())));
    const std::size_t count = members.size() - drop;
    for (std::size_t k = 0; k < count; ++k) keep[members[k]] = true;
  }
  return keep;
}

std::vector<PseudoLabeledFrame> pseudo_label(const std::vector<const Frame*>& frames,
                                             ModelParams& params,
                                             const PseudoLabelPolicy& policy) {
  if (policy.quantile < 0.0 || policy.quantile > 1.0)
    throw ArgumentError("pseudo_label: quantile must be in [0,1]");
  std::vector<PseudoLabeledFrame> out;
  out.reserve(frames.size());
  for (const Frame* fp : frames) {
    const Frame& frame = *fp;
    PseudoLabeledFrame pl;
    pl.id = frame.id;
    pl.labels.assign(frame.points.size(), kIgnoreLabel);
    pl.confidence.assign(frame.points.size(), 0.0);

    Tape tape;
    EncodedFrame enc = encode_frame(tape, frame, params);
    const Matrix& l2 = tape.val(encoders::segment(tape, enc.f2d, params.head2d));
    const Matrix& l3 = tape.val(encoders::segment(tape, enc.f3d, params.head3d));
    Matrix probs;
    if (policy.use_fusion) {
      probs = fuse_predictions(l2, l3);
    } else {
      probs = Matrix(l3.rows(), l3.cols());
      kernels::softmax_rows(l3.data(), probs.data(), l3.rows(), l3.cols(), 1.0);
    }

    const idx n = probs.rows();
    std::vector<int> pred(static_cast<std::size_t>(n));
    std::vector<double> conf(static_cast<std::size_t>(n));
    for (idx i = 0; i < n; ++i) {
      int best = 0;
      for (idx c = 1; c < probs.cols(); ++c) {
        if (probs(i, c) > probs(i, best)) best = static_cast<int>(c);
      }
      pred[static_cast<std::size_t>(i)] = best;
      conf[static_cast<std::size_t>(i)] = probs(i, best);
    }

    const std::vector<bool> keep =
        quantile_keep_mask(pred, conf, params.cfg.classes, policy.quantile);
    bool any_kept = false;
    for (idx i = 0; i < n; ++i) {
      if (!keep[static_cast<std::size_t>(i)]) continue;
      const idx raw = enc.point_index[static_cast<std::size_t>(i)];
      pl.labels[static_cast<std::size_t>(raw)] = pred[static_cast<std::size_t>(i)];
      pl.confidence[static_cast<std::size_t>(raw)] = conf[static_cast<std::size_t>(i)];
      any_kept = true;
    }
    pl.all_ignored = !any_kept;
    out.push_back(std::move(pl));
  }
  return out;
}

std::vector<PseudoLabeledFrame> apl(const std::vector<const Frame*>& frames, ModelParams& params,
                                    const sampling::SelectionResult& selection,
                                    const PseudoLabelPolicy& policy) {
  std::vector<const Frame*> selected;
  selected.reserve(selection.ids.size());
  for (std::uint64_t id : selection.ids) {
    const Frame* found = nullptr;
    for (const Frame* f : frames) {
      if (f->id == id) {
        found = f;
        break;
      }
    }
    if (found == nullptr)
      throw ArgumentError("apl: selected frame id " + std::to_string(id) + " not in frame set");
    selected.push_back(found);
  }
  return pseudo_label(selected, params, policy);
}

TrainHistory self_train(const std::vector<const Frame*>& source_frames,
                        const std::vector<TargetSample>& target_samples, ModelParams& params,
                        const TrainConfig& cfg, std::uint64_t seed) {
  if (source_frames.empty()) throw ArgumentError("self_train: empty source subset");
  if (target_samples.empty()) throw ArgumentError("self_train: empty target subset");
  // Frames whose kept points are all ignored cannot contribute a loss.
  std::vector<const TargetSample*> usable;
  for (const TargetSample& t : target_samples) {
    if (t.labels.size() != t.frame->points.size())
      throw ShapeError("self_train: target labels misaligned with points");
    if (has_valid_labels(*t.frame, t.labels)) usable.push_back(&t);
  }
  if (usable.empty()) throw ArgumentError("self_train: no target frame has usable labels");

  const int half = std::max(1, cfg.batch / 2);
  Rng rng(seed);
  numerics::OptimizerState opt;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.base_lr = cfg.base_lr;
  std::vector<numerics::ParamTensor*> ps = params.segmentation();
  TrainHistory hist;
  hist.loss.reserve(static_cast<std::size_t>(cfg.max_iters));
  for (int it = 0; it < cfg.max_iters; ++it) {
    Tape tape;
    Var src_acc;
    for (int b = 0; b < half; ++b) {
      const Frame& f = *source_frames[static_cast<std::size_t>(rng.uniform_int(source_frames.size()))];
      Var l = frame_seg_loss(tape, f, f.labels, params, cfg);
      src_acc = src_acc.ok() ? tape.add(src_acc, l) : l;
    }
    Var tgt_acc;
    for (int b = 0; b < half; ++b) {
      const TargetSample& t = *usable[static_cast<std::size_t>(rng.uniform_int(usable.size()))];
      Var l = frame_seg_loss(tape, *t.frame, t.labels, params, cfg);
      tgt_acc = tgt_acc.ok() ? tape.add(tgt_acc, l) : l;
    }
    Var loss = tape.add(tape.scale(src_acc, 1.0 / half), tape.scale(tgt_acc, 1.0 / half));
    numerics::zero_grads(ps);
    tape.backward(loss);
    numerics::adam_step(ps, opt, numerics::poly_lr(it, cfg.max_iters, cfg.base_lr, cfg.poly_power));
    hist.loss.push_back(tape.scalar(loss));
  }
  return hist;
}

}  // namespace mmda::adaptation
