#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmda/frame.hpp"
#include "mmda/rng.hpp"

namespace mmda::data {

enum class Primitive { ground_plane, box, cylinder, wall, pole, clutter };

struct ClassDef {
  std::string name;
  Primitive prim;
  std::array<double, 3> color;
};

/// Generator recipe for one domain. Shift knobs (brightness offset, point
/// dropout, shape scale) plus illumination/noise/class-frequency differences
/// are what create the domain gap between a source and a target spec.
struct DomainSpec {
  std::vector<ClassDef> classes;
  std::vector<double> class_weights;  // placement frequency per class, sums to 1
  double illumination = 0.85;         // [0,1]
  double geom_noise_sigma = 0.01;     // meters
  int min_points = 512;
  int max_points = 1024;
  int image_h = 64;
  int image_w = 64;
  Calibration calib;
  int num_primitives = 12;
  double brightness_offset = 0.0;
  double point_dropout = 0.0;  // [0,1)
  double shape_scale = 1.0;

  int num_classes() const { return static_cast<int>(classes.size()); }
  void validate() const;
  std::uint64_t hash() const;
};

/// The 6-class scene all presets share: ground, box, cylinder, wall, pole,
/// clutter.
DomainSpec default_spec();

// Bundled presets. benchmark_* is the desk-scale pair used by the end-to-end
// suites; separable_* pushes every shift knob for discriminator tests.
DomainSpec benchmark_source_spec();
DomainSpec benchmark_target_spec();
DomainSpec separable_source_spec();
DomainSpec separable_target_spec();

Frame generate_frame(const DomainSpec& spec, std::uint64_t seed);

struct ManifestEntry {
  std::uint64_t id = 0;
  std::string file;
  std::string split;  // "train" or "test"
  bool target_like = false;  // hidden mixture flag, test oracles only
  std::uint64_t checksum = 0;
};

struct DatasetManifest {
  DomainTag domain = DomainTag::source;
  std::uint64_t spec_hash = 0;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Frame> frames;  // aligned with manifest.entries

  std::vector<const Frame*> split(const std::string& name) const;
  std::vector<const Frame*> all() const;
  const Frame& by_id(std::uint64_t id) const;
  const ManifestEntry& entry_by_id(std::uint64_t id) const;
};

struct PairCounts {
  int source_train = 60;
  int target_train = 40;
  int target_test = 20;
};

/// Source set is a rho-mixture: round(rho * n) frames are drawn from the
/// target spec's distribution and flagged target_like in the manifest (for
/// test oracles only); the target set is pure. Frame ids are globally unique
/// across the pair.
std::pair<Dataset, Dataset> generate_domain_pair(const DomainSpec& source_spec,
                                                 const DomainSpec& target_spec,
                                                 const PairCounts& counts, double overlap_rho,
                                                 std::uint64_t seed);

void save_dataset(const Dataset& dataset, const std::string& directory);
Dataset load_dataset(const std::string& directory);

/// Ordered source-class -> mapped-class table; mapped names come from a
/// declared closed set.
struct ClassMapping {
  std::vector<std::pair<std::string, std::string>> entries;
  const std::string* find(const std::string& source_class) const;
};

/// The closed set of mapped names (includes "ignore").
const std::vector<std::string>& mapped_class_names();

ClassMapping load_class_mapping(const std::string& path);

/// Rewrites every label to its mapped class. Names already in the mapped
/// closed set pass through so the operation is idempotent; anything else
/// unknown raises a format error.
std::vector<std::string> apply_mapping(const std::vector<std::string>& labels,
                                       const ClassMapping& mapping);

}  // namespace mmda::data
