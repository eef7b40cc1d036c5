#include "mmda/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

namespace fs = std::filesystem;

namespace mmda::adaptation {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<const Frame*> frames_by_ids(const data::Dataset& ds,
                                        const std::vector<std::uint64_t>& ids) {
  std::vector<const Frame*> out;
  out.reserve(ids.size());
  for (std::uint64_t id : ids) out.push_back(&ds.by_id(id));
  return out;
}

/// UFDA: a seeded p-fraction of the target train pool, sorted by id so that
/// p = 1.0 coincides exactly with the full (UDA) pool.
std::vector<const Frame*> ufda_pool(const std::vector<const Frame*>& t_train, double p,
                                    Rng rng) {
  const std::size_t n = t_train.size();
  const std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(p * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i + 1));
    std::swap(order[i], order[j]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<const Frame*> out;
  out.reserve(k);
  for (std::size_t i : order) out.push_back(t_train[i]);
  return out;
}

}  // namespace

TaskSpec task_spec_from_config(const PipelineConfig& cfg, std::uint64_t seed) {
  TaskSpec spec;
  spec.task = cfg.task.type;
  spec.target_fraction = cfg.task.target_fraction;
  spec.source_budget = cfg.sampling.source_budget;
  spec.target_budget = cfg.sampling.target_budget;
  spec.strategy = cfg.sampling.strategy;
  spec.source_sampling = cfg.task.source_sampling;
  spec.self_training = cfg.task.self_training;
  spec.fusion = cfg.task.fusion;
  spec.seed = seed;
  return spec;
}

std::string run_dir_name(const PipelineConfig& cfg, std::uint64_t seed) {
  return config_hash(cfg) + "-s" + std::to_string(seed);
}

RunArtifacts run_task(const PipelineConfig& cfg, std::uint64_t seed, const data::Dataset& source,
                      const data::Dataset& target, const std::string& out_dir) {
  const TaskSpec spec = task_spec_from_config(cfg, seed);
  if (spec.task == TaskType::UFDA &&
      !(spec.target_fraction > 0.0 && spec.target_fraction <= 1.0))
    throw ConfigError("UFDA requires target_fraction in (0,1]");
  if (spec.task == TaskType::ADA && spec.self_training == SelfTrainingMode::pl)
    throw ConfigError("ADA supports self_training none or apl");

  const std::vector<const Frame*> s_train = source.split("train");
  const std::vector<const Frame*> t_train = target.split("train");
  const std::vector<const Frame*> t_test = target.split("test");
  if (s_train.empty() || t_train.empty()) throw ArgumentError("run_task: empty train split");
  if (t_test.empty()) throw ArgumentError("run_task: empty target test split");

  Rng master(seed);
  eval::EvaluationReport report;
  report.config_hash = config_hash(cfg);
  report.config_echo_json = canonical_config_json(cfg);
  report.seed = seed;
  report.task = to_string(spec.task);

  const bool write_files = !out_dir.empty();
  const fs::path ckpt_dir = fs::path(out_dir) / "checkpoints";
  if (write_files) fs::create_directories(ckpt_dir);
  auto checkpoint = [&](ModelParams& p, const char* name) {
    if (write_files) save_checkpoint(p, (ckpt_dir / name).string());
  };

  ModelParams params = ModelParams::init(cfg.model, master.split(1).next_u64());

  TrainConfig base;
  base.batch = cfg.train.batch;
  base.base_lr = cfg.train.lr;
  base.beta1 = cfg.train.beta1;
  base.beta2 = cfg.train.beta2;
  base.poly_power = cfg.train.poly_power;
  base.max_iters = cfg.train.source_iters;

  auto t0 = Clock::now();
  train_source(s_train, params, base, master.split(2).next_u64());
  report.timings.emplace_back("train_source", seconds_since(t0));
  checkpoint(params, "source.ckpt");

  const bool need_disc = (spec.source_sampling || spec.task == TaskType::ADA ||
                          spec.self_training == SelfTrainingMode::apl) &&
                         spec.strategy != sampling::Strategy::random;
  std::vector<const Frame*> disc_target = t_train;
  if (spec.task == TaskType::UFDA)
    disc_target = ufda_pool(t_train, spec.target_fraction, master.split(3));
  if (need_disc) {
    discriminator::TrainDiscConfig dc;
    dc.iters = cfg.discriminator.iters;
    dc.batch = cfg.discriminator.batch;
    dc.base_lr = cfg.discriminator.lr;
    dc.beta1 = cfg.train.beta1;
    dc.beta2 = cfg.train.beta2;
    dc.poly_power = cfg.train.poly_power;
    t0 = Clock::now();
    switch (spec.strategy) {
      case sampling::Strategy::cross_modal:
        train_discriminator(s_train, disc_target, params, DiscFeatureKind::cross_modal, dc,
                            master.split(4).next_u64());
        break;
      case sampling::Strategy::two_d_only:
        train_discriminator(s_train, disc_target, params, DiscFeatureKind::raw_2d, dc,
                            master.split(5).next_u64());
        break;
      case sampling::Strategy::three_d_only:
        train_discriminator(s_train, disc_target, params, DiscFeatureKind::raw_3d, dc,
                            master.split(6).next_u64());
        break;
      case sampling::Strategy::average_2d_3d:
        train_discriminator(s_train, disc_target, params, DiscFeatureKind::raw_2d, dc,
                            master.split(5).next_u64());
        train_discriminator(s_train, disc_target, params, DiscFeatureKind::raw_3d, dc,
                            master.split(6).next_u64());
        break;
      case sampling::Strategy::random:
        break;
    }
    report.timings.emplace_back("train_discriminator", seconds_since(t0));
    checkpoint(params, "discriminator.ckpt");
  }

  std::vector<const Frame*> source_subset = s_train;
  if (spec.source_sampling) {
    t0 = Clock::now();
    sampling::SelectionResult z_s = sampling::sample_source(
        s_train, params, spec.source_budget, spec.strategy, master.split(7).next_u64());
    report.selections.push_back({"source", z_s});
    source_subset = frames_by_ids(source, z_s.ids);
    report.timings.emplace_back("sample_source", seconds_since(t0));

    TrainConfig ft = base;
    ft.max_iters = cfg.train.finetune_iters;
    t0 = Clock::now();
    train_source(source_subset, params, ft, master.split(8).next_u64());
    report.timings.emplace_back("finetune_sampled_source", seconds_since(t0));
    checkpoint(params, "finetuned.ckpt");
  }

  PseudoLabelPolicy policy;
  policy.quantile = cfg.train.pl_quantile;
  policy.use_fusion = spec.fusion;
  std::vector<TargetSample> targets;
  std::int64_t pseudo_labeled = 0;
  std::int64_t oracle_labeled = 0;

  t0 = Clock::now();
  if (spec.task == TaskType::ADA) {
    sampling::SelectionResult z_t = sampling::sample_target(
        t_train, params, spec.target_budget, spec.strategy, master.split(9).next_u64());
    report.selections.push_back({"target_oracle", z_t});
    for (const Frame* f : frames_by_ids(target, z_t.ids)) {
      // Simulated oracle: ground-truth labels revealed for the selection.
      targets.push_back({f, f->labels});
      ++oracle_labeled;
    }
    if (spec.self_training == SelfTrainingMode::apl) {
      std::vector<const Frame*> remaining;
      for (const Frame* f : t_train) {
        if (std::find(z_t.ids.begin(), z_t.ids.end(), f->id) == z_t.ids.end())
          remaining.push_back(f);
      }
      if (!remaining.empty()) {
        const std::int64_t b2 =
            std::min<std::int64_t>(z_t.budget, static_cast<std::int64_t>(remaining.size()));
        sampling::SelectionResult z_t2 =
            sampling::sample_target(remaining, params, sampling::Budget::absolute(b2),
                                    spec.strategy, master.split(10).next_u64());
        report.selections.push_back({"target_apl", z_t2});
        std::vector<PseudoLabeledFrame> pls = apl(remaining, params, z_t2, policy);
        for (const PseudoLabeledFrame& pl : pls) {
          targets.push_back({&target.by_id(pl.id), pl.labels});
          ++pseudo_labeled;
        }
      }
    }
  } else if (spec.self_training == SelfTrainingMode::pl) {
    for (const PseudoLabeledFrame& pl : pseudo_label(t_train, params, policy)) {
      targets.push_back({&target.by_id(pl.id), pl.labels});
      ++pseudo_labeled;
    }
  } else if (spec.self_training == SelfTrainingMode::apl) {
    sampling::SelectionResult z_t = sampling::sample_target(
        t_train, params, spec.target_budget, spec.strategy, master.split(9).next_u64());
    report.selections.push_back({"target_apl", z_t});
    for (const PseudoLabeledFrame& pl : apl(t_train, params, z_t, policy)) {
      targets.push_back({&target.by_id(pl.id), pl.labels});
      ++pseudo_labeled;
    }
  }

  if (!targets.empty()) {
    TrainConfig st = base;
    st.max_iters = cfg.train.selftrain_iters;
    self_train(source_subset, targets, params, st, master.split(11).next_u64());
    report.timings.emplace_back("adaptation", seconds_since(t0));
    checkpoint(params, "adapted.ckpt");
  }

  t0 = Clock::now();
  report.result = eval::evaluate_model(params, t_test);
  report.timings.emplace_back("evaluate", seconds_since(t0));

  report.frame_counts.emplace_back("source_train", static_cast<std::int64_t>(s_train.size()));
  report.frame_counts.emplace_back("target_train", static_cast<std::int64_t>(t_train.size()));
  report.frame_counts.emplace_back("target_test", static_cast<std::int64_t>(t_test.size()));
  report.frame_counts.emplace_back("discriminator_target_pool",
                                   static_cast<std::int64_t>(disc_target.size()));
  report.frame_counts.emplace_back("source_selected",
                                   spec.source_sampling
                                       ? static_cast<std::int64_t>(source_subset.size())
                                       : static_cast<std::int64_t>(0));
  report.frame_counts.emplace_back("target_oracle", oracle_labeled);
  report.frame_counts.emplace_back("target_pseudo_labeled", pseudo_labeled);

  if (write_files) eval::emit_report(report, out_dir);
  return RunArtifacts{std::move(report), std::move(params)};
}

}  // namespace mmda::adaptation
