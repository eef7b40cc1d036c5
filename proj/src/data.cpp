#include "mmda/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binio.hpp"
#include "mmda/hash.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace mmda::data {

namespace {

constexpr double kGroundY = 1.6;  // camera height above ground; y points down

struct Prim {
  Primitive kind = Primitive::box;
  int class_id = 0;
  // Boxes (box/wall/clutter) as AABBs.
  std::array<double, 3> bmin{0, 0, 0};
  std::array<double, 3> bmax{0, 0, 0};
  // Cylinders (cylinder/pole): vertical axis at (cx, cz).
  double cx = 0, cz = 0, radius = 0, y_top = 0, y_bottom = 0;
};

struct Scene {
  int ground_class = -1;
  std::vector<Prim> prims;
};

struct Hit {
  bool ok = false;
  double t = 0;
  int class_id = -1;
  std::array<double, 3> normal{0, 0, 0};
};

bool intersect_aabb(const Prim& p, const std::array<double, 3>& dir, double& t_out,
                    std::array<double, 3>& n_out) {
  double tmin = 1e-6;
  double tmax = 1e30;
  int axis = -1;
  bool axis_neg = false;
  for (int a = 0; a < 3; ++a) {
    const double d = dir[static_cast<std::size_t>(a)];
    const double lo = p.bmin[static_cast<std::size_t>(a)];
    const double hi = p.bmax[static_cast<std::size_t>(a)];
    if (std::fabs(d) < 1e-12) {
      if (0.0 < lo || 0.0 > hi) return false;
      continue;
    }
    double t1 = lo / d;
    double t2 = hi / d;
    bool neg = d < 0.0;
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > tmin) {
      tmin = t1;
      axis = a;
      axis_neg = !neg;  // entering through the low face when moving +dir
    }
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return false;
  }
  if (axis < 0) return false;  // origin inside the box; treat as a miss
  t_out = tmin;
  n_out = {0, 0, 0};
  n_out[static_cast<std::size_t>(axis)] = axis_neg ? 1.0 : -1.0;
  // Normal should face back toward the ray origin.
  if (n_out[static_cast<std::size_t>(axis)] * dir[static_cast<std::size_t>(axis)] > 0)
    n_out[static_cast<std::size_t>(axis)] = -n_out[static_cast<std::size_t>(axis)];
  return true;
}

bool intersect_cylinder(const Prim& p, const std::array<double, 3>& dir, double& t_out,
                        std::array<double, 3>& n_out) {
  const double dx = dir[0];
  const double dz = dir[2];
  const double a = dx * dx + dz * dz;
  if (a < 1e-12) return false;
  const double b = -2.0 * (dx * p.cx + dz * p.cz);
  const double c = p.cx * p.cx + p.cz * p.cz - p.radius * p.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (t <= 1e-6) continue;
    const double y = t * dir[1];
    if (y < p.y_top || y > p.y_bottom) continue;  // y grows downward
    t_out = t;
    n_out = {(t * dx - p.cx) / p.radius, 0.0, (t * dz - p.cz) / p.radius};
    return true;
  }
  return false;
}

Hit cast_ray(const Scene& scene, const std::array<double, 3>& dir) {
  Hit best;
  if (scene.ground_class >= 0 && dir[1] > 1e-9) {
    best.ok = true;
    best.t = kGroundY / dir[1];
    best.class_id = scene.ground_class;
    best.normal = {0, -1, 0};
  }
  for (const Prim& p : scene.prims) {
    double t = 0;
    std::array<double, 3> n{};
    bool hit = false;
    if (p.kind == Primitive::cylinder || p.kind == Primitive::pole)
      hit = intersect_cylinder(p, dir, t, n);
    else
      hit = intersect_aabb(p, dir, t, n);
    if (hit && (!best.ok || t < best.t)) {
      best.ok = true;
      best.t = t;
      best.class_id = p.class_id;
      best.normal = n;
    }
  }
  return best;
}

Scene build_scene(const DomainSpec& spec, Rng& rng) {
  Scene scene;
  std::vector<int> placeable;
  std::vector<double> weights;
  for (int c = 0; c < spec.num_classes(); ++c) {
    if (spec.classes[static_cast<std::size_t>(c)].prim == Primitive::ground_plane) {
      scene.ground_class = c;
    } else if (spec.class_weights[static_cast<std::size_t>(c)] > 0.0) {
      placeable.push_back(c);
      weights.push_back(spec.class_weights[static_cast<std::size_t>(c)]);
    }
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (scene.ground_class < 0 && placeable.empty())
    throw ArgumentError("generate_frame: no active classes in spec");
  const double s = spec.shape_scale;
  for (int i = 0; i < spec.num_primitives && !placeable.empty(); ++i) {
    double pick = rng.uniform() * wsum;
    std::size_t ci = 0;
    for (; ci + 1 < weights.size(); ++ci) {
      if (pick < weights[ci]) break;
      pick -= weights[ci];
    }
    const int cls = placeable[ci];
    const Primitive kind = spec.classes[static_cast<std::size_t>(cls)].prim;
    Prim p;
    p.kind = kind;
    p.class_id = cls;
    switch (kind) {
      case Primitive::box: {
        const double w = rng.uniform(0.9, 2.2) * s;
        const double h = rng.uniform(0.9, 2.0) * s;
        const double d = rng.uniform(0.9, 2.2) * s;
        const double x = rng.uniform(-7.0, 7.0);
        const double z = rng.uniform(4.0, 16.0);
        p.bmin = {x - w / 2, kGroundY - h, z - d / 2};
        p.bmax = {x + w / 2, kGroundY, z + d / 2};
        break;
      }
      case Primitive::wall: {
        const double w = rng.uniform(3.0, 6.0) * s;
        const double h = rng.uniform(2.0, 3.2) * s;
        const double x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(3.5, 8.0);
        const double z = rng.uniform(5.0, 18.0);
        p.bmin = {x - 0.15, kGroundY - h, z - w / 2};
        p.bmax = {x + 0.15, kGroundY, z + w / 2};
        break;
      }
      case Primitive::clutter: {
        const double w = rng.uniform(0.2, 0.55) * s;
        const double x = rng.uniform(-5.0, 5.0);
        const double z = rng.uniform(3.0, 12.0);
        p.bmin = {x - w / 2, kGroundY - w, z - w / 2};
        p.bmax = {x + w / 2, kGroundY, z + w / 2};
        break;
      }
      case Primitive::cylinder: {
        p.radius = rng.uniform(0.35, 0.7) * s;
        const double h = rng.uniform(1.2, 2.4) * s;
        p.cx = rng.uniform(-6.0, 6.0);
        p.cz = rng.uniform(4.0, 14.0);
        p.y_bottom = kGroundY;
        p.y_top = kGroundY - h;
        break;
      }
      case Primitive::pole: {
        p.radius = rng.uniform(0.05, 0.1) * s;
        const double h = rng.uniform(2.5, 4.0) * s;
        p.cx = rng.uniform(-6.0, 6.0);
        p.cz = rng.uniform(4.0, 14.0);
        p.y_bottom = kGroundY;
        p.y_top = kGroundY - h;
        break;
      }
      case Primitive::ground_plane:
        continue;  // not placeable
    }
    scene.prims.push_back(p);
  }
  return scene;
}

void render_image(Frame& frame, const Scene& scene, const DomainSpec& spec, Rng& rng) {
  frame.image.assign(static_cast<std::size_t>(spec.image_h) * spec.image_w * 3, 0.0);
  const double illum = 0.2 + 0.8 * spec.illumination;
  // Light direction (unit) from surfaces toward the light, slightly tilted.
  const std::array<double, 3> light = {-0.24077170617153834, -0.8186238009832303,
                                       -0.5215719633716663};
  for (int r = 0; r < spec.image_h; ++r) {
    for (int c = 0; c < spec.image_w; ++c) {
      const double u = static_cast<double>(c) + 0.5;
      const double v = static_cast<double>(r) + 0.5;
      std::array<double, 3> dir = {(u - spec.calib.cx) / spec.calib.fx,
                                   (v - spec.calib.cy) / spec.calib.fy, 1.0};
      const double inv = 1.0 / std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
      for (double& d : dir) d *= inv;
      Hit hit = cast_ray(scene, dir);
      std::array<double, 3> base;
      double shade = 1.0;
      if (hit.ok) {
        base = spec.classes[static_cast<std::size_t>(hit.class_id)].color;
        const double diffuse = std::max(
            0.0, hit.normal[0] * light[0] + hit.normal[1] * light[1] + hit.normal[2] * light[2]);
        shade = 0.35 + 0.65 * diffuse;
      } else {
        base = {0.55, 0.62, 0.75};  // sky
      }
      double* px = &frame.image[(static_cast<std::size_t>(r) * spec.image_w + c) * 3];
      for (int ch = 0; ch < 3; ++ch) {
        const double noise = 0.02 * rng.normal();
        double val = base[static_cast<std::size_t>(ch)] * shade * illum +
                     spec.brightness_offset + noise;
        px[ch] = std::min(1.0, std::max(0.0, val));
      }
    }
  }
}

void sample_points(Frame& frame, const Scene& scene, const DomainSpec& spec, Rng& rng) {
  const int span = spec.max_points - spec.min_points + 1;
  const int n_target =
      spec.min_points + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span)));
  frame.points.clear();
  frame.labels.clear();
  frame.cam_visible.clear();
  frame.pixel_row.clear();
  frame.pixel_col.clear();
  for (int k = 0; k < n_target; ++k) {
    Hit hit;
    std::array<double, 3> dir{};
    for (int attempt = 0; attempt < 64 && !hit.ok; ++attempt) {
      const double u = rng.uniform(0.0, static_cast<double>(spec.image_w));
      const double v = rng.uniform(0.0, static_cast<double>(spec.image_h));
      dir = {(u - spec.calib.cx) / spec.calib.fx, (v - spec.calib.cy) / spec.calib.fy, 1.0};
      const double inv = 1.0 / std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
      for (double& d : dir) d *= inv;
      hit = cast_ray(scene, dir);
    }
    if (!hit.ok) continue;
    std::array<double, 3> p = {hit.t * dir[0], hit.t * dir[1], hit.t * dir[2]};
    for (double& coord : p) coord += spec.geom_noise_sigma * rng.normal();
    const bool dropped = rng.uniform() < spec.point_dropout;
    if (dropped) continue;
    frame.points.push_back(p);
    frame.labels.push_back(hit.class_id);
    // Post-noise reprojection; the recorded cell is what the projection
    // operator must reproduce exactly.
    std::uint8_t vis = 0;
    int prow = -1;
    int pcol = -1;
    if (p[2] > 0.0) {
      const double pu = spec.calib.fx * p[0] / p[2] + spec.calib.cx;
      const double pv = spec.calib.fy * p[1] / p[2] + spec.calib.cy;
      if (pu >= 0.0 && pu < static_cast<double>(spec.image_w) && pv >= 0.0 &&
          pv < static_cast<double>(spec.image_h)) {
        vis = 1;
        prow = static_cast<int>(std::floor(pv));
        pcol = static_cast<int>(std::floor(pu));
      }
    }
    frame.cam_visible.push_back(vis);
    frame.pixel_row.push_back(prow);
    frame.pixel_col.push_back(pcol);
  }
}

std::uint64_t frame_seed(std::uint64_t dataset_seed, std::uint64_t frame_id) {
  Rng base(dataset_seed);
  return base.split(frame_id).next_u64();
}

}  // namespace

void DomainSpec::validate() const {
  if (classes.size() < 2) throw ArgumentError("domain spec: need at least 2 classes");
  if (class_weights.size() != classes.size())
    throw ArgumentError("domain spec: class_weights length mismatch");
  double sum = 0.0;
  bool any = false;
  for (double w : class_weights) {
    if (w < 0.0) throw ArgumentError("domain spec: negative class weight");
    if (w > 0.0) any = true;
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw ArgumentError("domain spec: class weights must sum to 1");
  if (!any) throw ArgumentError("domain spec: no active classes");
  if (point_dropout < 0.0 || point_dropout >= 1.0)
    throw ArgumentError("domain spec: dropout must be in [0,1)");
  if (illumination < 0.0 || illumination > 1.0)
    throw ArgumentError("domain spec: illumination must be in [0,1]");
  if (min_points < 1 || max_points < min_points)
    throw ArgumentError("domain spec: bad points-per-frame range");
  if (image_h <= 0 || image_w <= 0) throw ArgumentError("domain spec: bad image size");
  if (!(calib.fx > 0.0) || !(calib.fy > 0.0))
    throw ArgumentError("domain spec: focal lengths must be positive");
}

std::uint64_t DomainSpec::hash() const {
  std::string buf;
  auto put_d = [&buf](double v) { buf.append(reinterpret_cast<const char*>(&v), sizeof v); };
  auto put_i = [&buf](std::int64_t v) { buf.append(reinterpret_cast<const char*>(&v), sizeof v); };
  for (const ClassDef& c : classes) {
    buf += c.name;
    put_i(static_cast<std::int64_t>(c.prim));
    for (double col : c.color) put_d(col);
  }
  for (double w : class_weights) put_d(w);
  put_d(illumination);
  put_d(geom_noise_sigma);
  put_i(min_points);
  put_i(max_points);
  put_i(image_h);
  put_i(image_w);
  put_d(calib.fx);
  put_d(calib.fy);
  put_d(calib.cx);
  put_d(calib.cy);
  for (double v : calib.rot) put_d(v);
  for (double v : calib.trans) put_d(v);
  put_i(num_primitives);
  put_d(brightness_offset);
  put_d(point_dropout);
  put_d(shape_scale);
  return fnv1a64(buf);
}

DomainSpec default_spec() {
  DomainSpec s;
  s.classes = {
      {"ground", Primitive::ground_plane, {0.45, 0.42, 0.40}},
      {"box", Primitive::box, {0.75, 0.25, 0.20}},
      {"cylinder", Primitive::cylinder, {0.20, 0.65, 0.25}},
      {"wall", Primitive::wall, {0.25, 0.35, 0.75}},
      {"pole", Primitive::pole, {0.80, 0.75, 0.20}},
      {"clutter", Primitive::clutter, {0.70, 0.25, 0.70}},
  };
  s.class_weights = {0.20, 0.25, 0.15, 0.15, 0.12, 0.13};
  s.calib.fx = 52.0;
  s.calib.fy = 52.0;
  s.calib.cx = 32.0;
  s.calib.cy = 32.0;
  return s;
}

DomainSpec benchmark_source_spec() { return default_spec(); }

DomainSpec benchmark_target_spec() {
  DomainSpec s = default_spec();
  s.illumination = 0.5;
  s.brightness_offset = -0.12;
  s.point_dropout = 0.22;
  s.shape_scale = 1.3;
  s.geom_noise_sigma = 0.03;
  s.class_weights = {0.20, 0.14, 0.22, 0.16, 0.15, 0.13};
  return s;
}

DomainSpec separable_source_spec() { return default_spec(); }

DomainSpec separable_target_spec() {
  DomainSpec s = default_spec();
  s.illumination = 0.25;
  s.brightness_offset = -0.30;
  s.point_dropout = 0.45;
  s.shape_scale = 1.6;
  s.geom_noise_sigma = 0.06;
  s.class_weights = {0.18, 0.10, 0.25, 0.18, 0.16, 0.13};
  return s;
}

Frame generate_frame(const DomainSpec& spec, std::uint64_t seed) {
  spec.validate();
  Frame frame;
  frame.id = seed;
  frame.height = spec.image_h;
  frame.width = spec.image_w;
  frame.calib = spec.calib;
  Rng rng(seed);
  Scene scene = build_scene(spec, rng);
  render_image(frame, scene, spec, rng);
  sample_points(frame, scene, spec, rng);
  return frame;
}

std::vector<const Frame*> Dataset::split(const std::string& name) const {
  std::vector<const Frame*> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (manifest.entries[i].split == name) out.push_back(&frames[i]);
  }
  return out;
}

std::vector<const Frame*> Dataset::all() const {
  std::vector<const Frame*> out;
  out.reserve(frames.size());
  for (const Frame& f : frames) out.push_back(&f);
  return out;
}

const Frame& Dataset::by_id(std::uint64_t id) const {
  for (const Frame& f : frames) {
    if (f.id == id) return f;
  }
  throw ArgumentError("dataset: unknown frame id");
}

const ManifestEntry& Dataset::entry_by_id(std::uint64_t id) const {
  for (const ManifestEntry& e : manifest.entries) {
    if (e.id == id) return e;
  }
  throw ArgumentError("dataset: unknown frame id");
}

std::pair<Dataset, Dataset> generate_domain_pair(const DomainSpec& source_spec,
                                                 const DomainSpec& target_spec,
                                                 const PairCounts& counts, double overlap_rho,
                                                 std::uint64_t seed) {
  source_spec.validate();
  target_spec.validate();
  if (counts.source_train <= 0 || counts.target_train <= 0 || counts.target_test < 0)
    throw ArgumentError("generate_domain_pair: frame counts must be positive");
  if (overlap_rho < 0.0 || overlap_rho > 1.0)
    throw ArgumentError("generate_domain_pair: rho must be in [0,1]");

  const int n_s = counts.source_train;
  const int flagged = static_cast<int>(std::llround(overlap_rho * n_s));
  std::vector<int> order(static_cast<std::size_t>(n_s));
  for (int i = 0; i < n_s; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng shuffle_rng = Rng(seed).split(0xF1A6);
  for (int i = n_s - 1; i > 0; --i) {
    const int j = static_cast<int>(shuffle_rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<bool> target_like(static_cast<std::size_t>(n_s), false);
  for (int i = 0; i < flagged; ++i) target_like[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  const std::uint64_t mixture_hash =
      fnv1a64(hex_u64(source_spec.hash()) + hex_u64(target_spec.hash()) +
              std::to_string(overlap_rho));

  Dataset source;
  source.manifest.domain = DomainTag::source;
  source.manifest.spec_hash = mixture_hash;
  source.manifest.seed = seed;
  for (int i = 0; i < n_s; ++i) {
    const std::uint64_t id = static_cast<std::uint64_t>(i);
    const bool tl = target_like[static_cast<std::size_t>(i)];
    Frame f = generate_frame(tl ? target_spec : source_spec, frame_seed(seed, id));
    f.id = id;
    f.domain = DomainTag::source;
    source.frames.push_back(std::move(f));
    ManifestEntry e;
    e.id = id;
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06llu.bin", static_cast<unsigned long long>(id));
    e.file = std::string("frames/") + buf;
    e.split = "train";
    e.target_like = tl;
    source.manifest.entries.push_back(e);
  }

  Dataset target;
  target.manifest.domain = DomainTag::target;
  target.manifest.spec_hash = target_spec.hash();
  target.manifest.seed = seed;
  const int n_t = counts.target_train + counts.target_test;
  for (int j = 0; j < n_t; ++j) {
    const std::uint64_t id = static_cast<std::uint64_t>(n_s + j);
    Frame f = generate_frame(target_spec, frame_seed(seed, id));
    f.id = id;
    f.domain = DomainTag::target;
    target.frames.push_back(std::move(f));
    ManifestEntry e;
    e.id = id;
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06llu.bin", static_cast<unsigned long long>(id));
    e.file = std::string("frames/") + buf;
    e.split = j < counts.target_train ? "train" : "test";
    target.manifest.entries.push_back(e);
  }
  return {std::move(source), std::move(target)};
}

namespace {

constexpr char kFrameMagic[4] = {'M', 'M', 'F', 'R'};
constexpr std::uint32_t kFrameVersion = 1;
constexpr std::uint32_t kManifestVersion = 1;

std::string serialize_frame(const Frame& f) {
  std::ostringstream os(std::ios::binary);
  auto raw = [&os](const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  };
  auto put_u32 = [&raw](std::uint32_t v) { raw(&v, sizeof v); };
  auto put_i32 = [&raw](std::int32_t v) { raw(&v, sizeof v); };
  auto put_u64 = [&raw](std::uint64_t v) { raw(&v, sizeof v); };
  auto put_u8 = [&raw](std::uint8_t v) { raw(&v, sizeof v); };
  auto put_d = [&raw](double v) { raw(&v, sizeof v); };
  raw(kFrameMagic, 4);
  put_u32(kFrameVersion);
  put_u32(static_cast<std::uint32_t>(f.height));
  put_u32(static_cast<std::uint32_t>(f.width));
  raw(f.image.data(), f.image.size() * sizeof(double));
  put_u32(static_cast<std::uint32_t>(f.points.size()));
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    put_d(f.points[i][0]);
    put_d(f.points[i][1]);
    put_d(f.points[i][2]);
    put_i32(f.labels[i]);
    put_u8(f.cam_visible[i]);
    put_i32(f.pixel_row[i]);
    put_i32(f.pixel_col[i]);
  }
  put_d(f.calib.fx);
  put_d(f.calib.fy);
  put_d(f.calib.cx);
  put_d(f.calib.cy);
  for (double v : f.calib.rot) put_d(v);
  for (double v : f.calib.trans) put_d(v);
  put_u8(static_cast<std::uint8_t>(f.domain));
  put_u64(f.id);
  return os.str();
}

Frame deserialize_frame(const std::string& bytes, const std::string& path) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw FormatError("truncated frame file: " + path);
  };
  auto raw = [&](void* p, std::size_t n) {
    need(n);
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  };
  auto get_u32 = [&raw]() { std::uint32_t v; raw(&v, sizeof v); return v; };
  auto get_i32 = [&raw]() { std::int32_t v; raw(&v, sizeof v); return v; };
  auto get_u64 = [&raw]() { std::uint64_t v; raw(&v, sizeof v); return v; };
  auto get_u8 = [&raw]() { std::uint8_t v; raw(&v, sizeof v); return v; };
  auto get_d = [&raw]() { double v; raw(&v, sizeof v); return v; };
  char magic[4];
  raw(magic, 4);
  if (std::memcmp(magic, kFrameMagic, 4) != 0) throw FormatError("bad frame magic: " + path);
  const std::uint32_t version = get_u32();
  if (version != kFrameVersion) throw FormatError("unsupported frame version: " + path);
  Frame f;
  f.height = static_cast<int>(get_u32());
  f.width = static_cast<int>(get_u32());
  f.image.resize(static_cast<std::size_t>(f.height) * static_cast<std::size_t>(f.width) * 3);
  raw(f.image.data(), f.image.size() * sizeof(double));
  const std::uint32_t n = get_u32();
  f.points.resize(n);
  f.labels.resize(n);
  f.cam_visible.resize(n);
  f.pixel_row.resize(n);
  f.pixel_col.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    f.points[i][0] = get_d();
    f.points[i][1] = get_d();
    f.points[i][2] = get_d();
    f.labels[i] = get_i32();
    f.cam_visible[i] = get_u8();
    f.pixel_row[i] = get_i32();
    f.pixel_col[i] = get_i32();
  }
  f.calib.fx = get_d();
  f.calib.fy = get_d();
  f.calib.cx = get_d();
  f.calib.cy = get_d();
  for (double& v : f.calib.rot) v = get_d();
  for (double& v : f.calib.trans) v = get_d();
  f.domain = static_cast<DomainTag>(get_u8());
  f.id = get_u64();
  if (pos != bytes.size()) throw FormatError("trailing bytes in frame file: " + path);
  return f;
}

ordered_json manifest_to_json(const DatasetManifest& m) {
  ordered_json j;
  j["version"] = kManifestVersion;
  j["domain"] = m.domain == DomainTag::source ? "source" : "target";
  j["spec_hash"] = hex_u64(m.spec_hash);
  j["seed"] = m.seed;
  ordered_json entries = ordered_json::array();
  for (const ManifestEntry& e : m.entries) {
    ordered_json je;
    je["id"] = e.id;
    je["file"] = e.file;
    je["split"] = e.split;
    je["target_like"] = e.target_like;
    je["checksum"] = hex_u64(e.checksum);
    entries.push_back(je);
  }
  j["entries"] = entries;
  return j;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& directory) {
  if (dataset.frames.size() != dataset.manifest.entries.size())
    throw ArgumentError("save_dataset: frames and manifest entries misaligned");
  fs::create_directories(fs::path(directory) / "frames");
  DatasetManifest manifest = dataset.manifest;
  for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
    const std::string bytes = serialize_frame(dataset.frames[i]);
    manifest.entries[i].checksum = fnv1a64(bytes);
    const fs::path path = fs::path(directory) / manifest.entries[i].file;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw IoError("write failed: " + path.string());
  }
  ordered_json j = manifest_to_json(manifest);
  j["manifest_checksum"] = hex_u64(fnv1a64(j.dump()));
  std::ofstream out(fs::path(directory) / "manifest.json");
  if (!out) throw IoError("cannot open for writing: " + directory + "/manifest.json");
  out << j.dump(2) << "\n";
  if (!out.good()) throw IoError("write failed: " + directory + "/manifest.json");
}

Dataset load_dataset(const std::string& directory) {
  const fs::path mpath = fs::path(directory) / "manifest.json";
  std::ifstream in(mpath);
  if (!in) throw IoError("cannot open: " + mpath.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw FormatError("invalid manifest json: " + mpath.string() + ": " + e.what());
  }
  if (!j.contains("version") || j["version"].get<std::uint32_t>() != kManifestVersion)
    throw FormatError("unsupported manifest version: " + mpath.string());

  Dataset out;
  out.manifest.domain = j.at("domain").get<std::string>() == "source" ? DomainTag::source
                                                                      : DomainTag::target;
  out.manifest.spec_hash = std::stoull(j.at("spec_hash").get<std::string>(), nullptr, 16);
  out.manifest.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& je : j.at("entries")) {
    ManifestEntry e;
    e.id = je.at("id").get<std::uint64_t>();
    e.file = je.at("file").get<std::string>();
    e.split = je.at("split").get<std::string>();
    e.target_like = je.at("target_like").get<bool>();
    e.checksum = std::stoull(je.at("checksum").get<std::string>(), nullptr, 16);
    out.manifest.entries.push_back(e);
  }
  // Verify the manifest's own checksum over its canonical serialization.
  if (!j.contains("manifest_checksum"))
    throw FormatError("manifest missing checksum: " + mpath.string());
  const std::string recorded = j.at("manifest_checksum").get<std::string>();
  ordered_json canonical = manifest_to_json(out.manifest);
  if (hex_u64(fnv1a64(canonical.dump())) != recorded)
    throw FormatError("manifest checksum mismatch: " + mpath.string());

  for (const ManifestEntry& e : out.manifest.entries) {
    const fs::path fpath = fs::path(directory) / e.file;
    std::ifstream fin(fpath, std::ios::binary);
    if (!fin) throw IoError("cannot open: " + fpath.string());
    std::ostringstream buf;
    buf << fin.rdbuf();
    const std::string bytes = buf.str();
    if (fnv1a64(bytes) != e.checksum)
      throw FormatError("frame checksum mismatch: " + fpath.string());
    Frame f = deserialize_frame(bytes, fpath.string());
    if (f.id != e.id) throw FormatError("frame id mismatch: " + fpath.string());
    out.frames.push_back(std::move(f));
  }
  return out;
}

const std::vector<std::string>& mapped_class_names() {
  static const std::vector<std::string> names = {
      "car",  "bike",    "person",   "truck",  "other-objects", "road",
      "parking", "sidewalk", "building", "nature", "ignore"};
  return names;
}

const std::string* ClassMapping::find(const std::string& source_class) const {
  for (const auto& [src, dst] : entries) {
    if (src == source_class) return &dst;
  }
  return nullptr;
}

ClassMapping load_class_mapping(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty class mapping file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "source_class,mapped_class")
    throw FormatError("bad class mapping header in " + path);
  ClassMapping mapping;
  const auto& closed = mapped_class_names();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw FormatError("malformed row " + std::to_string(line_no) + " in " + path);
    std::string src = line.substr(0, comma);
    std::string dst = line.substr(comma + 1);
    if (src.empty() || dst.empty())
      throw FormatError("malformed row " + std::to_string(line_no) + " in " + path);
    if (mapping.find(src) != nullptr)
      throw FormatError("duplicate source class '" + src + "' in " + path);
    if (std::find(closed.begin(), closed.end(), dst) == closed.end())
      throw FormatError("unknown mapped class '" + dst + "' in " + path);
    mapping.entries.emplace_back(std::move(src), std::move(dst));
  }
  if (mapping.entries.empty()) throw FormatError("no rows in class mapping file: " + path);
  return mapping;
}

std::vector<std::string> apply_mapping(const std::vector<std::string>& labels,
                                       const ClassMapping& mapping) {
  const auto& closed = mapped_class_names();
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const std::string& label : labels) {
    if (const std::string* dst = mapping.find(label)) {
      out.push_back(*dst);
    } else if (std::find(closed.begin(), closed.end(), label) != closed.end()) {
      out.push_back(label);  // already mapped; keeps the operation idempotent
    } else {
      throw FormatError("label '" + label + "' not covered by the class mapping");
    }
  }
  return out;
}

}  // namespace mmda::data
