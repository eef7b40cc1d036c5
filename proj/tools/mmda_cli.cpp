#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "mmda/evaluation.hpp"
#include "mmda/pipeline.hpp"
#include "mmda/textio.hpp"

namespace fs = std::filesystem;
using namespace mmda;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};

PipelineConfig get_config(const GlobalArgs& g) {
  return g.config_path.empty() ? default_config() : load_config(g.config_path);
}

std::pair<data::Dataset, data::Dataset> get_datasets(const PipelineConfig& cfg,
                                                     const GlobalArgs& g) {
  return resolve_datasets(cfg.data, g.seed);
}

fs::path checkpoint_dir(const GlobalArgs& g) { return fs::path(g.out_dir) / "checkpoints"; }

ModelParams load_stage_checkpoint(const GlobalArgs& g, const std::string& requested) {
  const fs::path dir = checkpoint_dir(g);
  if (!requested.empty()) return load_checkpoint(requested);
  for (const char* name : {"adapted.ckpt", "finetuned.ckpt", "discriminator.ckpt", "source.ckpt"}) {
    if (fs::exists(dir / name)) return load_checkpoint((dir / name).string());
  }
  throw IoError("no checkpoint found under " + dir.string());
}

adaptation::TrainConfig train_config(const PipelineConfig& cfg, int iters) {
  adaptation::TrainConfig tc;
  tc.batch = cfg.train.batch;
  tc.base_lr = cfg.train.lr;
  tc.beta1 = cfg.train.beta1;
  tc.beta2 = cfg.train.beta2;
  tc.poly_power = cfg.train.poly_power;
  tc.max_iters = iters;
  return tc;
}

discriminator::TrainDiscConfig disc_config(const PipelineConfig& cfg) {
  discriminator::TrainDiscConfig dc;
  dc.iters = cfg.discriminator.iters;
  dc.batch = cfg.discriminator.batch;
  dc.base_lr = cfg.discriminator.lr;
  dc.beta1 = cfg.train.beta1;
  dc.beta2 = cfg.train.beta2;
  dc.poly_power = cfg.train.poly_power;
  return dc;
}

int cmd_gen_data(const GlobalArgs& g) {
  PipelineConfig cfg = get_config(g);
  auto [source, target] = get_datasets(cfg, g);
  data::save_dataset(source, (fs::path(g.out_dir) / "source").string());
  data::save_dataset(target, (fs::path(g.out_dir) / "target").string());
  std::printf("wrote %zu source and %zu target frames under %s\n", source.frames.size(),
              target.frames.size(), g.out_dir.c_str());
  return 0;
}

int cmd_train_source(const GlobalArgs& g) {
  PipelineConfig cfg = get_config(g);
  auto [source, target] = get_datasets(cfg, g);
  Rng master(g.seed);
  ModelParams params = ModelParams::init(cfg.model, master.split(1).next_u64());
  adaptation::TrainHistory hist = adaptation::train_source(
      source.split("train"), params, train_config(cfg, cfg.train.source_iters),
      master.split(2).next_u64());
  fs::create_directories(checkpoint_dir(g));
  save_checkpoint(params, (checkpoint_dir(g) / "source.ckpt").string());
  std::printf("train-source: %d iters, final loss %.4f -> %s\n", cfg.train.source_iters,
              hist.loss.back(), (checkpoint_dir(g) / "source.ckpt").string().c_str());
  return 0;
}

int cmd_train_disc(const GlobalArgs& g, const std::string& checkpoint) {
  PipelineConfig cfg = get_config(g);
  auto [source, target] = get_datasets(cfg, g);
  ModelParams params = load_stage_checkpoint(g, checkpoint);
  Rng master(g.seed);
  auto s_train = source.split("train");
  auto t_train = target.split("train");

  const auto dc = disc_config(cfg);
  switch (cfg.sampling.strategy) {
    case sampling::Strategy::cross_modal:
      train_discriminator(s_train, t_train, params, DiscFeatureKind::cross_modal, dc,
                          master.split(4).next_u64());
      break;
    case sampling::Strategy::two_d_only:
      train_discriminator(s_train, t_train, params, DiscFeatureKind::raw_2d, dc,
                          master.split(5).next_u64());
      break;
    case sampling::Strategy::three_d_only:
      train_discriminator(s_train, t_train, params, DiscFeatureKind::raw_3d, dc,
                          master.split(6).next_u64());
      break;
    case sampling::Strategy::average_2d_3d:
      train_discriminator(s_train, t_train, params, DiscFeatureKind::raw_2d, dc,
                          master.split(5).next_u64());
      train_discriminator(s_train, t_train, params, DiscFeatureKind::raw_3d, dc,
                          master.split(6).next_u64());
      break;
    case sampling::Strategy::random:
      std::printf("train-disc: strategy 'random' needs no discriminator\n");
      return 0;
  }
  fs::create_directories(checkpoint_dir(g));
  save_checkpoint(params, (checkpoint_dir(g) / "discriminator.ckpt").string());
  std::printf("train-disc: %d iters -> %s\n", cfg.discriminator.iters,
              (checkpoint_dir(g) / "discriminator.ckpt").string().c_str());
  return 0;
}

int cmd_sample(const GlobalArgs& g, const std::string& checkpoint) {
  PipelineConfig cfg = get_config(g);
  auto [source, target] = get_datasets(cfg, g);
  ModelParams params = load_stage_checkpoint(g, checkpoint);
  Rng master(g.seed);
  sampling::SelectionResult z_s =
      sampling::sample_source(source.split("train"), params, cfg.sampling.source_budget,
                              cfg.sampling.strategy, master.split(7).next_u64());
  sampling::SelectionResult z_t =
      sampling::sample_target(target.split("train"), params, cfg.sampling.target_budget,
                              cfg.sampling.strategy, master.split(9).next_u64());
  fs::create_directories(g.out_dir);
  write_text_file((fs::path(g.out_dir) / "selections.csv").string(),
                  sampling::selection_csv({&z_s, &z_t}));
  std::printf("sample: %zu source + %zu target ids -> %s/selections.csv\n", z_s.ids.size(),
              z_t.ids.size(), g.out_dir.c_str());
  return 0;
}

int cmd_adapt(const GlobalArgs& g, const std::string& checkpoint) {
  PipelineConfig cfg = get_config(g);
  auto [source, target] = get_datasets(cfg, g);
  ModelParams params = load_stage_checkpoint(g, checkpoint);
  Rng master(g.seed);
  auto s_train = source.split("train");
  auto t_train = target.split("train");

  std::vector<const Frame*> source_subset = s_train;
  if (cfg.task.source_sampling) {
    sampling::SelectionResult z_s =
        sampling::sample_source(s_train, params, cfg.sampling.source_budget,
                                cfg.sampling.strategy, master.split(7).next_u64());
    source_subset.clear();
    for (std::uint64_t id : z_s.ids) source_subset.push_back(&source.by_id(id));
    adaptation::train_source(source_subset, params, train_config(cfg, cfg.train.finetune_iters),
                             master.split(8).next_u64());
  }

  adaptation::PseudoLabelPolicy policy;
  policy.quantile = cfg.train.pl_quantile;
  policy.use_fusion = cfg.task.fusion;
  std::vector<adaptation::TargetSample> targets;
  if (cfg.task.type == TaskType::ADA) {
    sampling::SelectionResult z_t =
        sampling::sample_target(t_train, params, cfg.sampling.target_budget,
                                cfg.sampling.strategy, master.split(9).next_u64());
    for (std::uint64_t id : z_t.ids) targets.push_back({&target.by_id(id), target.by_id(id).labels});
  } else if (cfg.task.self_training == SelfTrainingMode::pl) {
    for (const auto& pl : adaptation::pseudo_label(t_train, params, policy))
      targets.push_back({&target.by_id(pl.id), pl.labels});
  } else if (cfg.task.self_training == SelfTrainingMode::apl) {
    sampling::SelectionResult z_t =
        sampling::sample_target(t_train, params, cfg.sampling.target_budget,
                                cfg.sampling.strategy, master.split(9).next_u64());
    for (const auto& pl : adaptation::apl(t_train, params, z_t, policy))
      targets.push_back({&target.by_id(pl.id), pl.labels});
  }
  if (!targets.empty()) {
    adaptation::self_train(source_subset, targets, params,
                           train_config(cfg, cfg.train.selftrain_iters),
                           master.split(11).next_u64());
  }
  fs::create_directories(checkpoint_dir(g));
  save_checkpoint(params, (checkpoint_dir(g) / "adapted.ckpt").string());
  std::printf("adapt: %zu target samples -> %s\n", targets.size(),
              (checkpoint_dir(g) / "adapted.ckpt").string().c_str());
  return 0;
}

int cmd_eval(const GlobalArgs& g, const std::string& checkpoint) {
  PipelineConfig cfg = get_config(g);
  auto [source, target] = get_datasets(cfg, g);
  ModelParams params = load_stage_checkpoint(g, checkpoint);
  eval::EvaluationReport report;
  report.config_hash = config_hash(cfg);
  report.config_echo_json = canonical_config_json(cfg);
  report.seed = g.seed;
  report.task = to_string(cfg.task.type);
  report.result = eval::evaluate_model(params, target.split("test"));
  eval::emit_report(report, g.out_dir);
  std::printf("eval: mIoU 2d=%.4f 3d=%.4f fused=%.4f -> %s\n", report.result.iou_2d.mean,
              report.result.iou_3d.mean, report.result.iou_fused.mean, g.out_dir.c_str());
  return 0;
}

int cmd_run(const GlobalArgs& g) {
  PipelineConfig cfg = get_config(g);
  auto [source, target] = get_datasets(cfg, g);
  const fs::path run_dir = fs::path(g.out_dir) / adaptation::run_dir_name(cfg, g.seed);
  adaptation::RunArtifacts art =
      adaptation::run_task(cfg, g.seed, source, target, run_dir.string());
  std::printf("run: task %s seed %llu mIoU 2d=%.4f 3d=%.4f fused=%.4f -> %s\n",
              art.report.task.c_str(), static_cast<unsigned long long>(g.seed),
              art.report.result.iou_2d.mean, art.report.result.iou_3d.mean,
              art.report.result.iou_fused.mean, run_dir.string().c_str());
  return 0;
}

int cmd_selftest() {
  int failures = 0;
  auto report = [&failures](const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  };

  {
    numerics::Matrix a = numerics::Matrix::from({{1, 2}, {3, 4}});
    numerics::Matrix b = numerics::Matrix::from({{5, 6}, {7, 8}});
    numerics::Matrix c = numerics::matmul(a, b);
    report("matmul hand case", c(0, 0) == 19 && c(0, 1) == 22 && c(1, 0) == 43 && c(1, 1) == 50);
  }
  {
    numerics::Matrix s = numerics::softmax_rows(numerics::Matrix::from({{0.0, std::log(3.0)}}), 1.0);
    report("softmax analytic case",
           std::fabs(s(0, 0) - 0.25) < 1e-12 && std::fabs(s(0, 1) - 0.75) < 1e-12);
  }
  {
    report("poly schedule anchors",
           numerics::poly_lr(0, 10, 1e-3, 0.9) == 1e-3 && numerics::poly_lr(10, 10, 1e-3, 0.9) == 0.0);
  }
  {
    numerics::ParamTensor p("p", 1, 1);
    p.grad[0] = 2.0;
    numerics::OptimizerState st;
    std::vector<numerics::ParamTensor*> ps = {&p};
    numerics::adam_step(ps, st, 1e-2);
    report("adam first step", std::fabs(p.value[0] + 1e-2) < 1e-5);
  }
  {
    encoders::Projection proj = encoders::project_points(
        {{1.0, 2.0, 10.0}}, Calibration{100.0, 100.0, 50.0, 50.0, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}},
        128, 128);
    report("pinhole worked case",
           std::fabs(proj.u[0] - 60.0) < 1e-12 && std::fabs(proj.v[0] - 70.0) < 1e-12);
  }
  {
    numerics::Tape t;
    numerics::Var k = t.constant(numerics::Matrix::from({{0.0}, {0.0}}));
    numerics::Var vb = t.constant(numerics::Matrix::from({{1.0}, {1.0}}));
    numerics::Var va = t.constant(numerics::Matrix::from({{2.0}, {4.0}}));
    numerics::Matrix r = t.val(interaction::cross_relation(t, k, vb, va));
    report("attention uniform case",
           std::fabs(r(0, 0) - 3.0) < 1e-12 && std::fabs(r(1, 0) - 3.0) < 1e-12);
  }
  {
    report("bce at 0.5 is ln 2",
           std::fabs(discriminator::bce_domain_loss({0.5}, 1) - std::log(2.0)) < 1e-12);
  }
  {
    std::vector<sampling::ScoredFrame> scored = {{0, 0.9}, {1, 0.1}, {2, 0.5}};
    auto sel = sampling::select_top(scored, sampling::Budget::absolute(2));
    report("selection order", sel.ids.size() == 2 && sel.ids[0] == 0 && sel.ids[1] == 2);
  }
  {
    eval::IouResult r = eval::miou(eval::confusion({0, 0, 1, 1}, {0, 1, 1, 1}, 2));
    report("miou 7/12 case", std::fabs(r.mean - 7.0 / 12.0) < 1e-15);
  }
  {
    data::DomainSpec spec = data::default_spec();
    spec.min_points = 32;
    spec.max_points = 48;
    Frame a = data::generate_frame(spec, 11);
    Frame b = data::generate_frame(spec, 11);
    report("generator determinism", a.image == b.image && a.points == b.points);
  }
  if (failures > 0) {
    std::printf("selftest: %d failure(s)\n", failures);
    return 4;
  }
  std::printf("selftest: all checks passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale multi-modal domain adaptation pipeline"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "Path to a JSON pipeline config");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out_dir, "Output directory");

  std::string checkpoint;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate and persist a dataset pair");
  CLI::App* ts = app.add_subcommand("train-source", "Supervised source training");
  CLI::App* td = app.add_subcommand("train-disc", "Train the domain discriminator");
  td->add_option("--checkpoint", checkpoint, "Checkpoint to start from");
  CLI::App* sa = app.add_subcommand("sample", "Score frames and select budgets");
  sa->add_option("--checkpoint", checkpoint, "Checkpoint to score with");
  CLI::App* ad = app.add_subcommand("adapt", "Fine-tune on the sampled subset and self-train");
  ad->add_option("--checkpoint", checkpoint, "Checkpoint to start from");
  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the target test split");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate");
  CLI::App* run = app.add_subcommand("run", "Full task pipeline for (config, seed)");
  CLI::App* st = app.add_subcommand("selftest", "Quick invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(g);
    if (ts->parsed()) return cmd_train_source(g);
    if (td->parsed()) return cmd_train_disc(g, checkpoint);
    if (sa->parsed()) return cmd_sample(g, checkpoint);
    if (ad->parsed()) return cmd_adapt(g, checkpoint);
    if (ev->parsed()) return cmd_eval(g, checkpoint);
    if (run->parsed()) return cmd_run(g);
    if (st->parsed()) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const eval::UndefinedMetricError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
