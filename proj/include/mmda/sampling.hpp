#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmda/frame.hpp"
#include "mmda/model.hpp"

namespace mmda::sampling {

/// Annotation budget, given as an absolute frame count or a fraction of the
/// domain size (resolved by floor with a minimum of 1).
struct Budget {
  enum class Kind { absolute, fraction };
  Kind kind = Kind::absolute;
  double value = 1.0;

  static Budget absolute(std::int64_t n);
  static Budget fraction(double f);
  std::int64_t resolve(std::int64_t domain_size) const;
};

enum class Strategy { cross_modal, two_d_only, three_d_only, average_2d_3d, random };

Strategy strategy_from_string(const std::string& s);
std::string to_string(Strategy s);

struct ScoredFrame {
  std::uint64_t id = 0;
  double score = 0.0;
};

/// Ordered selection: ids sorted by descending score (ties by ascending id),
/// cut at the resolved budget.
struct SelectionResult {
  std::vector<std::uint64_t> ids;
  std::vector<double> scores;  // aligned with ids, non-increasing
  std::int64_t budget = 0;
  std::string strategy;
};

/// Domainness scores per frame. cross_modal runs the discriminator on the
/// interacted features; two_d_only / three_d_only use the heads trained on
/// raw single-modality features; average_2d_3d is their arithmetic mean;
/// random draws a seeded uniform score keyed by (seed, frame id).
std::vector<ScoredFrame> score_frames(const std::vector<const Frame*>& frames,
                                      ModelParams& params, Strategy strategy, std::uint64_t seed);

SelectionResult select_top(std::vector<ScoredFrame> scored, const Budget& budget);

SelectionResult sample_source(const std::vector<const Frame*>& source_frames, ModelParams& params,
                              const Budget& budget, Strategy strategy, std::uint64_t seed);

SelectionResult sample_target(const std::vector<const Frame*>& target_frames, ModelParams& params,
                              const Budget& budget, Strategy strategy, std::uint64_t seed);

/// CSV with header frame_id,score,rank,strategy,budget.
std::string selection_csv(const std::vector<const SelectionResult*>& selections);

}  // namespace mmda::sampling
