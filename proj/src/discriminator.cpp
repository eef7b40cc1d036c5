#include "mmda/discriminator.hpp"

#include <cmath>

namespace mmda::discriminator {

DiscriminatorParams DiscriminatorParams::init(int in_width, int hidden, const std::string& prefix,
                                              Rng& rng) {
  DiscriminatorParams p;
  p.l1_w = ParamTensor(prefix + ".l1_w", hidden, in_width);
  p.l1_b = ParamTensor(prefix + ".l1_b", 1, hidden);
  p.l2_w = ParamTensor(prefix + ".l2_w", hidden, hidden);
  p.l2_b = ParamTensor(prefix + ".l2_b", 1, hidden);
  p.l3_w = ParamTensor(prefix + ".l3_w", 1, hidden);
  p.l3_b = ParamTensor(prefix + ".l3_b", 1, 1);
  p.l1_w.init_normal(rng, std::sqrt(2.0 / in_width));
  p.l2_w.init_normal(rng, std::sqrt(2.0 / hidden));
  p.l3_w.init_normal(rng, std::sqrt(1.0 / hidden));
  return p;
}

std::vector<ParamTensor*> DiscriminatorParams::all() {
  return {&l1_w, &l1_b, &l2_w, &l2_b, &l3_w, &l3_b};
}

Discrimination discriminate_features(Tape& tape, Var features, DiscriminatorParams& params) {
  if (tape.val(features).cols() != params.in_width())
    throw ShapeError("discriminate: feature width does not match discriminator input");
  Var h1 = tape.relu(tape.affine(features, tape.param(params.l1_w), tape.param(params.l1_b)));
  Var h2 = tape.relu(tape.affine(h1, tape.param(params.l2_w), tape.param(params.l2_b)));
  Var logit = tape.affine(h2, tape.param(params.l3_w), tape.param(params.l3_b));
  Discrimination out;
  out.point_probs = tape.sigmoid(logit);
  out.frame_score = tape.mean_all(out.point_probs);
  return out;
}

Discrimination discriminate(Tape& tape, Var f2d_hat, Var f3d_hat, DiscriminatorParams& params) {
  return discriminate_features(tape, tape.concat_cols(f2d_hat, f3d_hat), params);
}

double score_features(const Matrix& features, DiscriminatorParams& params) {
  Tape tape;
  Var f = tape.constant(features);
  return tape.scalar(discriminate_features(tape, f, params).frame_score);
}

double bce_domain_loss(const std::vector<double>& probs, int label) {
  if (probs.empty()) throw ArgumentError("bce_domain_loss: empty probability list");
  if (label != 0 && label != 1) throw ArgumentError("bce_domain_loss: label must be 0 or 1");
  const double y = static_cast<double>(label);
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw NumericError("bce_domain_loss: probability outside [0,1]");
    const double pc = std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
    total += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
  }
  return total / static_cast<double>(probs.size());
}

DiscHistory train_discriminator_cached(const std::vector<Matrix>& source_features,
                                       const std::vector<Matrix>& target_features,
                                       DiscriminatorParams& params, const TrainDiscConfig& cfg,
                                       std::uint64_t seed) {
  if (source_features.empty() || target_features.empty())
    throw ArgumentError("train_discriminator: both domains must be non-empty");
  const int half = std::max(1, cfg.batch / 2);
  Rng rng(seed);
  numerics::OptimizerState opt;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.base_lr = cfg.base_lr;
  std::vector<ParamTensor*> ps = params.all();
  DiscHistory hist;
  hist.loss.reserve(static_cast<std::size_t>(cfg.iters));
  hist.accuracy.reserve(static_cast<std::size_t>(cfg.iters));

  for (int it = 0; it < cfg.iters; ++it) {
    Tape tape;
    Var loss_src;
    Var loss_tgt;
    int correct = 0;
    for (int domain = 0; domain < 2; ++domain) {
      const auto& pool = domain == 0 ? source_features : target_features;
      const double label = domain == 0 ? kSourceLabel : kTargetLabel;
      Var acc;
      for (int b = 0; b < half; ++b) {
        const std::size_t pick = static_cast<std::size_t>(rng.uniform_int(pool.size()));
        Var feats = tape.constant(pool[pick]);
        Discrimination d = discriminate_features(tape, feats, params);
        Var l = tape.bce_mean(d.point_probs, label, kProbClamp);
        acc = acc.ok() ? tape.add(acc, l) : l;
        const double score = tape.scalar(d.frame_score);
        if ((score >= 0.5) == (label > 0.5)) ++correct;
      }
      Var mean = tape.scale(acc, 1.0 / half);
      (domain == 0 ? loss_src : loss_tgt) = mean;
    }
    Var loss = tape.add(loss_src, loss_tgt);
    numerics::zero_grads(ps);
    tape.backward(loss);
    const double lr = numerics::poly_lr(it, cfg.iters, cfg.base_lr, cfg.poly_power);
    numerics::adam_step(ps, opt, lr);
    hist.loss.push_back(tape.scalar(loss));
    hist.accuracy.push_back(static_cast<double>(correct) / (2.0 * half));
  }
  params.trained = true;
  return hist;
}

}  // namespace mmda::discriminator
