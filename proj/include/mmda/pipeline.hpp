#pragma once

#include <string>

#include "mmda/config.hpp"
#include "mmda/evaluation.hpp"

namespace mmda::adaptation {

/// One task run, fully determined by (config, seed). Mirrors the staged
/// recipe: source training, discriminator training on the task's target
/// pool, source sampling + fine-tune, task-specific adaptation, evaluation.
struct TaskSpec {
  TaskType task = TaskType::UDA;
  double target_fraction = 1.0;
  sampling::Budget source_budget;
  sampling::Budget target_budget;
  sampling::Strategy strategy = sampling::Strategy::cross_modal;
  bool source_sampling = true;
  SelfTrainingMode self_training = SelfTrainingMode::none;
  bool fusion = true;
  std::uint64_t seed = 0;
};

TaskSpec task_spec_from_config(const PipelineConfig& cfg, std::uint64_t seed);

struct RunArtifacts {
  eval::EvaluationReport report;
  ModelParams params;
};

/// Executes the full pipeline for one (config, seed). When out_dir is
/// non-empty, checkpoints land under out_dir/checkpoints/ and the report
/// files under out_dir.
RunArtifacts run_task(const PipelineConfig& cfg, std::uint64_t seed, const data::Dataset& source,
                      const data::Dataset& target, const std::string& out_dir = "");

/// Directory name for a run: <config-hash>-s<seed>.
std::string run_dir_name(const PipelineConfig& cfg, std::uint64_t seed);

}  // namespace mmda::adaptation
