#include "mmda/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "mmda/textio.hpp"

namespace mmda::sampling {

Budget Budget::absolute(std::int64_t n) {
  Budget b;
  b.kind = Kind::absolute;
  b.value = static_cast<double>(n);
  return b;
}

Budget Budget::fraction(double f) {
  Budget b;
  b.kind = Kind::fraction;
  b.value = f;
  return b;
}

std::int64_t Budget::resolve(std::int64_t domain_size) const {
  if (domain_size < 1) throw ArgumentError("budget: empty domain");
  std::int64_t n = 0;
  if (kind == Kind::absolute) {
    n = static_cast<std::int64_t>(value);
    if (static_cast<double>(n) != value || n < 1)
      throw ArgumentError("budget: absolute count must be a positive integer");
  } else {
    if (!(value > 0.0) || value > 1.0) throw ArgumentError("budget: fraction must be in (0,1]");
    n = std::max<std::int64_t>(1, static_cast<std::int64_t>(
                                      std::floor(value * static_cast<double>(domain_size))));
  }
  if (n > domain_size) throw ArgumentError("budget exceeds frame count");
  return n;
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "cross_modal") return Strategy::cross_modal;
  if (s == "two_d_only") return Strategy::two_d_only;
  if (s == "three_d_only") return Strategy::three_d_only;
  if (s == "average_2d_3d") return Strategy::average_2d_3d;
  if (s == "random") return Strategy::random;
  throw ArgumentError("unknown sampling strategy: " + s);
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::cross_modal: return "cross_modal";
    case Strategy::two_d_only: return "two_d_only";
    case Strategy::three_d_only: return "three_d_only";
    case Strategy::average_2d_3d: return "average_2d_3d";
    case Strategy::random: return "random";
  }
  return "?";
}

namespace {

void require_trained(const discriminator::DiscriminatorParams& d, const char* which) {
  if (!d.trained)
    throw StateError(std::string("score_frames: ") + which + " discriminator not trained");
}

}  // namespace

std::vector<ScoredFrame> score_frames(const std::vector<const Frame*>& frames,
                                      ModelParams& params, Strategy strategy, std::uint64_t seed) {
  std::vector<ScoredFrame> out;
  out.reserve(frames.size());
  switch (strategy) {
    case Strategy::cross_modal:
      require_trained(params.disc_cross, "cross-modal");
      break;
    case Strategy::two_d_only:
      require_trained(params.disc_2d, "2D");
      break;
    case Strategy::three_d_only:
      require_trained(params.disc_3d, "3D");
      break;
    case Strategy::average_2d_3d:
      require_trained(params.disc_2d, "2D");
      require_trained(params.disc_3d, "3D");
      break;
    case Strategy::random:
      break;
  }
  for (const Frame* f : frames) {
    double score = 0.0;
    switch (strategy) {
      case Strategy::cross_modal:
        score = score_frame(*f, params, DiscFeatureKind::cross_modal);
        break;
      case Strategy::two_d_only:
        score = score_frame(*f, params, DiscFeatureKind::raw_2d);
        break;
      case Strategy::three_d_only:
        score = score_frame(*f, params, DiscFeatureKind::raw_3d);
        break;
      case Strategy::average_2d_3d:
        score = 0.5 * (score_frame(*f, params, DiscFeatureKind::raw_2d) +
                       score_frame(*f, params, DiscFeatureKind::raw_3d));
        break;
      case Strategy::random:
        score = Rng(seed).split(f->id).uniform();
        break;
    }
    out.push_back({f->id, score});
  }
  return out;
}

SelectionResult select_top(std::vector<ScoredFrame> scored, const Budget& budget) {
  for (const ScoredFrame& s : scored) {
    if (!std::isfinite(s.score)) throw ArgumentError("select_top: non-finite score");
  }
  for (std::size_t i = 0; i < scored.size(); ++i) {
    for (std::size_t j = i + 1; j < scored.size(); ++j) {
      if (scored[i].id == scored[j].id) throw ArgumentError("select_top: duplicate frame id");
    }
  }
  const std::int64_t b = budget.resolve(static_cast<std::int64_t>(scored.size()));
  std::sort(scored.begin(), scored.end(), [](const ScoredFrame& a, const ScoredFrame& bf) {
    if (a.score != bf.score) return a.score > bf.score;
    return a.id < bf.id;
  });
  SelectionResult out;
  out.budget = b;
  out.ids.reserve(static_cast<std::size_t>(b));
  out.scores.reserve(static_cast<std::size_t>(b));
  for (std::int64_t i = 0; i < b; ++i) {
    out.ids.push_back(scored[static_cast<std::size_t>(i)].id);
    out.scores.push_back(scored[static_cast<std::size_t>(i)].score);
  }
  return out;
}

SelectionResult sample_source(const std::vector<const Frame*>& source_frames, ModelParams& params,
                              const Budget& budget, Strategy strategy, std::uint64_t seed) {
  SelectionResult out = select_top(score_frames(source_frames, params, strategy, seed), budget);
  out.strategy = to_string(strategy);
  return out;
}

SelectionResult sample_target(const std::vector<const Frame*>& target_frames, ModelParams& params,
                              const Budget& budget, Strategy strategy, std::uint64_t seed) {
  SelectionResult out = select_top(score_frames(target_frames, params, strategy, seed), budget);
  out.strategy = to_string(strategy);
  return out;
}

std::string selection_csv(const std::vector<const SelectionResult*>& selections) {
  std::string out = "frame_id,score,rank,strategy,budget\n";
  for (const SelectionResult* sel : selections) {
    for (std::size_t i = 0; i < sel->ids.size(); ++i) {
      out += std::to_string(sel->ids[i]);
      out += ',';
      out += format_double(sel->scores[i]);
      out += ',';
      out += std::to_string(i + 1);
      out += ',';
      out += sel->strategy;
      out += ',';
      out += std::to_string(sel->budget);
      out += '\n';
    }
  }
  return out;
}

}  // namespace mmda::sampling
