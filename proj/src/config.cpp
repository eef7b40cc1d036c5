#include "mmda/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "mmda/hash.hpp"

using ordered_json = nlohmann::ordered_json;

namespace mmda {

TaskType task_type_from_string(const std::string& s) {
  if (s == "UDA") return TaskType::UDA;
  if (s == "UFDA") return TaskType::UFDA;
  if (s == "ADA") return TaskType::ADA;
  throw ConfigError("unknown task type: " + s);
}

std::string to_string(TaskType t) {
  switch (t) {
    case TaskType::UDA: return "UDA";
    case TaskType::UFDA: return "UFDA";
    case TaskType::ADA: return "ADA";
  }
  return "?";
}

SelfTrainingMode self_training_from_string(const std::string& s) {
  if (s == "none") return SelfTrainingMode::none;
  if (s == "pl") return SelfTrainingMode::pl;
  if (s == "apl") return SelfTrainingMode::apl;
  throw ConfigError("unknown self-training mode: " + s);
}

std::string to_string(SelfTrainingMode m) {
  switch (m) {
    case SelfTrainingMode::none: return "none";
    case SelfTrainingMode::pl: return "pl";
    case SelfTrainingMode::apl: return "apl";
  }
  return "?";
}

PipelineConfig default_config() { return PipelineConfig{}; }

namespace {

ordered_json budget_json(const sampling::Budget& b) {
  ordered_json j;
  j["kind"] = b.kind == sampling::Budget::Kind::absolute ? "absolute" : "fraction";
  j["value"] = b.value;
  return j;
}

sampling::Budget budget_from_json(const ordered_json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("value"))
    throw ConfigError(where + ": budget needs {kind, value}");
  const std::string kind = j.at("kind").get<std::string>();
  const double value = j.at("value").get<double>();
  if (kind == "absolute") return sampling::Budget::absolute(static_cast<std::int64_t>(value));
  if (kind == "fraction") return sampling::Budget::fraction(value);
  throw ConfigError(where + ": budget kind must be absolute or fraction");
}

void check_keys(const ordered_json& j, const std::vector<std::string>& allowed,
                const std::string& section) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in config section " + section);
  }
}

template <typename T>
void maybe(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string canonical_config_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["version"] = 1;
  ordered_json jd;
  jd["source_dir"] = cfg.data.source_dir;
  jd["target_dir"] = cfg.data.target_dir;
  jd["preset"] = cfg.data.preset;
  jd["source_frames"] = cfg.data.source_frames;
  jd["target_frames"] = cfg.data.target_frames;
  jd["target_test_frames"] = cfg.data.target_test_frames;
  jd["overlap_rho"] = cfg.data.overlap_rho;
  j["data"] = jd;
  ordered_json jm;
  jm["features"] = cfg.model.features;
  jm["classes"] = cfg.model.classes;
  jm["disc_hidden"] = cfg.model.disc_hidden;
  jm["interaction_variant"] = interaction::to_string(cfg.model.variant);
  jm["fusion_mode"] = interaction::to_string(cfg.model.fusion_mode);
  jm["conventional_attention"] = cfg.model.conventional_attention;
  j["model"] = jm;
  ordered_json jdisc;
  jdisc["iters"] = cfg.discriminator.iters;
  jdisc["batch"] = cfg.discriminator.batch;
  jdisc["lr"] = cfg.discriminator.lr;
  j["discriminator"] = jdisc;
  ordered_json js;
  js["strategy"] = sampling::to_string(cfg.sampling.strategy);
  js["source_budget"] = budget_json(cfg.sampling.source_budget);
  js["target_budget"] = budget_json(cfg.sampling.target_budget);
  j["sampling"] = js;
  ordered_json jt;
  jt["type"] = to_string(cfg.task.type);
  jt["target_fraction"] = cfg.task.target_fraction;
  jt["source_sampling"] = cfg.task.source_sampling;
  jt["self_training"] = to_string(cfg.task.self_training);
  jt["fusion"] = cfg.task.fusion;
  j["task"] = jt;
  ordered_json jtr;
  jtr["batch"] = cfg.train.batch;
  jtr["lr"] = cfg.train.lr;
  jtr["beta1"] = cfg.train.beta1;
  jtr["beta2"] = cfg.train.beta2;
  jtr["poly_power"] = cfg.train.poly_power;
  jtr["source_iters"] = cfg.train.source_iters;
  jtr["finetune_iters"] = cfg.train.finetune_iters;
  jtr["selftrain_iters"] = cfg.train.selftrain_iters;
  jtr["pl_quantile"] = cfg.train.pl_quantile;
  j["train"] = jtr;
  j["eval"] = ordered_json::object();
  return j.dump(2);
}

std::string config_hash(const PipelineConfig& cfg) {
  return hex_u64(fnv1a64(canonical_config_json(cfg)));
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("invalid config json in " + path + ": " + e.what());
  }
  try {
    PipelineConfig cfg;
    check_keys(j, {"version", "data", "model", "discriminator", "sampling", "task", "train",
                   "eval"},
               "<root>");
    if (j.contains("version") && j.at("version").get<int>() != 1)
      throw ConfigError("unsupported config version");
    if (j.contains("data")) {
      const auto& jd = j.at("data");
      check_keys(jd,
                 {"source_dir", "target_dir", "preset", "source_frames", "target_frames",
                  "target_test_frames", "overlap_rho"},
                 "data");
      maybe(jd, "source_dir", cfg.data.source_dir);
      maybe(jd, "target_dir", cfg.data.target_dir);
      maybe(jd, "preset", cfg.data.preset);
      maybe(jd, "source_frames", cfg.data.source_frames);
      maybe(jd, "target_frames", cfg.data.target_frames);
      maybe(jd, "target_test_frames", cfg.data.target_test_frames);
      maybe(jd, "overlap_rho", cfg.data.overlap_rho);
    }
    if (j.contains("model")) {
      const auto& jm = j.at("model");
      check_keys(jm,
                 {"features", "classes", "disc_hidden", "interaction_variant", "fusion_mode",
                  "conventional_attention"},
                 "model");
      maybe(jm, "features", cfg.model.features);
      maybe(jm, "classes", cfg.model.classes);
      maybe(jm, "disc_hidden", cfg.model.disc_hidden);
      if (jm.contains("interaction_variant"))
        cfg.model.variant =
            interaction::variant_from_string(jm.at("interaction_variant").get<std::string>());
      if (jm.contains("fusion_mode"))
        cfg.model.fusion_mode =
            interaction::fusion_mode_from_string(jm.at("fusion_mode").get<std::string>());
      maybe(jm, "conventional_attention", cfg.model.conventional_attention);
    }
    if (j.contains("discriminator")) {
      const auto& jd = j.at("discriminator");
      check_keys(jd, {"iters", "batch", "lr"}, "discriminator");
      maybe(jd, "iters", cfg.discriminator.iters);
      maybe(jd, "batch", cfg.discriminator.batch);
      maybe(jd, "lr", cfg.discriminator.lr);
    }
    if (j.contains("sampling")) {
      const auto& js = j.at("sampling");
      check_keys(js, {"strategy", "source_budget", "target_budget"}, "sampling");
      if (js.contains("strategy"))
        cfg.sampling.strategy = sampling::strategy_from_string(js.at("strategy").get<std::string>());
      if (js.contains("source_budget"))
        cfg.sampling.source_budget = budget_from_json(js.at("source_budget"), "sampling");
      if (js.contains("target_budget"))
        cfg.sampling.target_budget = budget_from_json(js.at("target_budget"), "sampling");
    }
    if (j.contains("task")) {
      const auto& jt = j.at("task");
      check_keys(jt, {"type", "target_fraction", "source_sampling", "self_training", "fusion"},
                 "task");
      if (jt.contains("type")) cfg.task.type = task_type_from_string(jt.at("type").get<std::string>());
      maybe(jt, "target_fraction", cfg.task.target_fraction);
      maybe(jt, "source_sampling", cfg.task.source_sampling);
      if (jt.contains("self_training"))
        cfg.task.self_training =
            self_training_from_string(jt.at("self_training").get<std::string>());
      maybe(jt, "fusion", cfg.task.fusion);
    }
    if (j.contains("train")) {
      const auto& jtr = j.at("train");
      check_keys(jtr,
                 {"batch", "lr", "beta1", "beta2", "poly_power", "source_iters", "finetune_iters",
                  "selftrain_iters", "pl_quantile"},
                 "train");
      maybe(jtr, "batch", cfg.train.batch);
      maybe(jtr, "lr", cfg.train.lr);
      maybe(jtr, "beta1", cfg.train.beta1);
      maybe(jtr, "beta2", cfg.train.beta2);
      maybe(jtr, "poly_power", cfg.train.poly_power);
      maybe(jtr, "source_iters", cfg.train.source_iters);
      maybe(jtr, "finetune_iters", cfg.train.finetune_iters);
      maybe(jtr, "selftrain_iters", cfg.train.selftrain_iters);
      maybe(jtr, "pl_quantile", cfg.train.pl_quantile);
    }
    if (j.contains("eval")) check_keys(j.at("eval"), {}, "eval");

    if (cfg.task.type == TaskType::UFDA &&
        !(cfg.task.target_fraction > 0.0 && cfg.task.target_fraction <= 1.0))
      throw ConfigError("UFDA requires target_fraction in (0,1]");
    if (cfg.task.type == TaskType::ADA && cfg.task.self_training == SelfTrainingMode::pl)
      throw ConfigError("ADA supports self_training none or apl");
    if (cfg.train.batch < 1 || cfg.discriminator.batch < 1) throw ConfigError("batch must be >= 1");
    if (!(cfg.train.lr > 0.0)) throw ConfigError("lr must be positive");
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

std::pair<data::Dataset, data::Dataset> resolve_datasets(const DataConfig& cfg,
                                                         std::uint64_t seed) {
  if (!cfg.source_dir.empty() || !cfg.target_dir.empty()) {
    if (cfg.source_dir.empty() || cfg.target_dir.empty())
      throw ConfigError("data: set both source_dir and target_dir or neither");
    return {data::load_dataset(cfg.source_dir), data::load_dataset(cfg.target_dir)};
  }
  data::DomainSpec src;
  data::DomainSpec tgt;
  if (cfg.preset == "benchmark") {
    src = data::benchmark_source_spec();
    tgt = data::benchmark_target_spec();
  } else if (cfg.preset == "separable") {
    src = data::separable_source_spec();
    tgt = data::separable_target_spec();
  } else if (cfg.preset == "identical") {
    src = data::benchmark_source_spec();
    tgt = data::benchmark_source_spec();
  } else {
    throw ConfigError("unknown data preset: " + cfg.preset);
  }
  data::PairCounts counts;
  counts.source_train = cfg.source_frames;
  counts.target_train = cfg.target_frames;
  counts.target_test = cfg.target_test_frames;
  return data::generate_domain_pair(src, tgt, counts, cfg.overlap_rho, seed);
}

}  // namespace mmda
