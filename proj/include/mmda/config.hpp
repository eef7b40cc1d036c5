#pragma once

#include <cstdint>
#include <string>

#include "mmda/data.hpp"
#include "mmda/discriminator.hpp"
#include "mmda/model.hpp"
#include "mmda/sampling.hpp"

namespace mmda {

enum class TaskType { UDA, UFDA, ADA };
enum class SelfTrainingMode { none, pl, apl };

TaskType task_type_from_string(const std::string& s);
std::string to_string(TaskType t);
SelfTrainingMode self_training_from_string(const std::string& s);
std::string to_string(SelfTrainingMode m);

struct DataConfig {
  // Either directories of previously generated datasets...
  std::string source_dir;
  std::string target_dir;
  // ...or generation settings.
  std::string preset = "benchmark";  // benchmark | separable | identical
  int source_frames = 60;
  int target_frames = 40;
  int target_test_frames = 20;
  double overlap_rho = 0.3;
};

struct SamplingConfig {
  sampling::Strategy strategy = sampling::Strategy::cross_modal;
  sampling::Budget source_budget = sampling::Budget::fraction(0.3);
  sampling::Budget target_budget = sampling::Budget::fraction(0.05);
};

struct TaskConfig {
  TaskType type = TaskType::UDA;
  double target_fraction = 1.0;  // UFDA p
  bool source_sampling = true;
  SelfTrainingMode self_training = SelfTrainingMode::none;
  bool fusion = true;  // fused vs 3D-only confidence for pseudo-labels
};

struct TrainSection {
  int batch = 8;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double poly_power = 0.9;
  int source_iters = 2000;
  int finetune_iters = 1000;
  int selftrain_iters = 2000;
  double pl_quantile = 0.2;
};

struct DiscSection {
  int iters = 300;
  int batch = 8;
  double lr = 1e-3;
};

struct PipelineConfig {
  DataConfig data;
  ModelConfig model;
  DiscSection discriminator;
  SamplingConfig sampling;
  TaskConfig task;
  TrainSection train;
};

PipelineConfig default_config();
PipelineConfig load_config(const std::string& path);

/// Canonical JSON dump of a config (fixed field order); echoed into reports.
std::string canonical_config_json(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);

/// Resolves the data section: loads the directories when set, otherwise
/// generates the preset pair with the given seed.
std::pair<data::Dataset, data::Dataset> resolve_datasets(const DataConfig& cfg,
                                                         std::uint64_t seed);

}  // namespace mmda
