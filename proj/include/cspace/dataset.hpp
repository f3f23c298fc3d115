#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cspace/digest.hpp"
#include "cspace/grid.hpp"
#include "cspace/parallel.hpp"
#include "cspace/rng.hpp"
#include "cspace/robot.hpp"
#include "cspace/workspace.hpp"

namespace cspace {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kGeneratorVersion = "1.0.0";

enum class Family { ThreeCircles, OneToThreeCircles, ThreeConvex, ThreeConvexRotated };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::ThreeCircles: return "three_circles";
    case Family::OneToThreeCircles: return "one_to_three_circles";
    case Family::ThreeConvex: return "three_convex";
    case Family::ThreeConvexRotated: return "three_convex_rotated";
  }
  throw std::invalid_argument("unknown family");
}

inline Family parse_family(const std::string& s) {
  if (s == "three_circles") return Family::ThreeCircles;
  if (s == "one_to_three_circles") return Family::OneToThreeCircles;
  if (s == "three_convex") return Family::ThreeConvex;
  if (s == "three_convex_rotated") return Family::ThreeConvexRotated;
  throw std::invalid_argument("unknown family name: " + s);
}

struct FamilySpec {
  Family family = Family::ThreeCircles;
  double circle_radius = 0.06;
  double square_side = 0.12;
  double triangle_side = 0.14;
  double center_min = 0.08;
  double center_max = 0.92;
  int max_attempts = 10000;
};

// Shape parameters sufficient to rebuild the exact obstacle. Vertices are
// stored verbatim so a manifest regenerates bit-identical geometry.
struct ObstacleParams {
  std::string kind;  // "circle" | "square" | "triangle"
  Point2 center;
  double size = 0.0;  // radius or side length
  double rotation = 0.0;
  std::vector<Point2> vertices;  // polygons only

  ObstacleShape to_shape() const {
    if (kind == "circle") return Circle2{center, size};
    return ConvexPolygon2::make(vertices);
  }

  bool operator==(const ObstacleParams& o) const {
    if (kind != o.kind || center.x != o.center.x || center.y != o.center.y ||
        size != o.size || rotation != o.rotation || vertices.size() != o.vertices.size()) {
      return false;
    }
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      if (vertices[i].x != o.vertices[i].x || vertices[i].y != o.vertices[i].y) return false;
    }
    return true;
  }
};

inline Workspace to_workspace(const std::vector<ObstacleParams>& obstacles) {
  Workspace w;
  for (const auto& ob : obstacles) w.obstacles.push_back(ob.to_shape());
  return w;
}

namespace detail {

inline ObstacleParams sample_obstacle(const FamilySpec& spec, const std::string& kind,
                                      double rotation, Rng& rng, const RobotModel& robot,
                                      const std::vector<ObstacleParams>& placed) {
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    ObstacleParams p;
    p.kind = kind;
    p.rotation = rotation;
    p.center = {rng.uniform(spec.center_min, spec.center_max),
                rng.uniform(spec.center_min, spec.center_max)};
    if (kind == "circle") {
      p.size = spec.circle_radius;
    } else if (kind == "square") {
      p.size = spec.square_side;
      const auto g = make_square(p.center, p.size, rotation);
      p.vertices = g.vertices();
    } else {
      p.size = spec.triangle_side;
      const auto g = make_equilateral_triangle(p.center, p.size, rotation);
      p.vertices = g.vertices();
    }
    const ObstacleShape shape = p.to_shape();
    if (!obstacle_inside_unit_frame(shape)) continue;
    if (obstacle_overlaps_polygon(shape, robot.base_footprint(1)) ||
        obstacle_overlaps_polygon(shape, robot.base_footprint(2))) {
      continue;
    }
    bool clash = false;
    for (const auto& other : placed) {
      if (obstacles_overlap(shape, other.to_shape())) {
        clash = true;
        break;
      }
    }
    if (!clash) return p;
  }
  throw std::runtime_error("workspace sampling exceeded " + std::to_string(spec.max_attempts) +
                           " attempts for a " + kind +
                           "; shape sizes or margins leave no room");
}

}  // namespace detail

// Draws one workspace for the family, deterministically from the seed.
// Obstacle poses are rejection-sampled until the Workspace invariants hold.
inline std::vector<ObstacleParams> sample_workspace_params(const FamilySpec& spec,
                                                           std::uint64_t seed,
                                                           const RobotModel& robot) {
  Rng rng(seed);
  std::vector<std::pair<std::string, double>> inventory;  // kind, rotation
  switch (spec.family) {
    case Family::ThreeCircles:
      inventory = {{"circle", 0.0}, {"circle", 0.0}, {"circle", 0.0}};
      break;
    case Family::OneToThreeCircles: {
      const int count = 1 + static_cast<int>(rng.uniform_int(3));
      for (int i = 0; i < count; ++i) inventory.emplace_back("circle", 0.0);
      break;
    }
    case Family::ThreeConvex:
      inventory = {{"circle", 0.0}, {"square", 0.0}, {"triangle", 0.0}};
      break;
    case Family::ThreeConvexRotated:
      inventory = {{"circle", 0.0}, {"square", 0.0}, {"triangle", 0.0}};
      for (auto& [kind, rot] : inventory) rot = rng.uniform(0.0, kTwoPi);
      break;
  }

  std::vector<ObstacleParams> placed;
  for (const auto& [kind, rotation] : inventory) {
    placed.push_back(detail::sample_obstacle(spec, kind, rotation, rng, robot, placed));
  }
  return placed;
}

inline Workspace sample_workspace(const FamilySpec& spec, std::uint64_t seed,
                                  const RobotModel& robot) {
  return to_workspace(sample_workspace_params(spec, seed, robot));
}

enum class Split { Train, Val, Test };

inline std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw std::invalid_argument("unknown split");
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split name: " + s);
}

struct SampleRecord {
  std::string id;
  std::uint64_t seed = 0;
  Split split = Split::Train;
  std::vector<ObstacleParams> obstacles;
  std::string workspace_image;  // paths relative to the manifest directory
  std::string cspace_image;
};

struct RobotParams {
  Point2 anchor1{0.30, 0.50};
  Point2 anchor2{0.70, 0.50};
  double link_length = 0.25;
  double link_half_width = 0.02;
  double base_side = 0.06;

  RobotModel build() const {
    return RobotModel(anchor1, anchor2, link_length, link_half_width, base_side);
  }
};

struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  std::string generator_version = kGeneratorVersion;
  Family family = Family::ThreeCircles;
  FamilySpec family_spec;
  RobotParams robot;
  std::uint64_t master_seed = 0;
  int count = 0;
  double ratios[3] = {0.7, 0.15, 0.15};
  int resolution = 0;
  std::vector<SampleRecord> samples;
  std::string directory;  // where the manifest lives; not serialized

  std::vector<const SampleRecord*> split_samples(Split s) const {
    std::vector<const SampleRecord*> out;
    for (const auto& rec : samples) {
      if (rec.split == s) out.push_back(&rec);
    }
    return out;
  }

  std::string resolve(const std::string& rel) const {
    return (std::filesystem::path(directory) / rel).string();
  }
};

// ---- JSON (de)serialization -------------------------------------------

inline nlohmann::json to_json(const Point2& p) { return nlohmann::json::array({p.x, p.y}); }

inline Point2 point_from_json(const nlohmann::json& j) {
  return Point2{j.at(0).get<double>(), j.at(1).get<double>()};
}

inline nlohmann::json to_json(const ObstacleParams& p) {
  nlohmann::json j{{"kind", p.kind},
                   {"center", to_json(p.center)},
                   {"size", p.size},
                   {"rotation", p.rotation}};
  if (!p.vertices.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& v : p.vertices) arr.push_back(to_json(v));
    j["vertices"] = arr;
  }
  return j;
}

inline ObstacleParams obstacle_from_json(const nlohmann::json& j) {
  ObstacleParams p;
  p.kind = j.at("kind").get<std::string>();
  p.center = point_from_json(j.at("center"));
  p.size = j.at("size").get<double>();
  p.rotation = j.at("rotation").get<double>();
  if (j.contains("vertices")) {
    for (const auto& v : j.at("vertices")) p.vertices.push_back(point_from_json(v));
  }
  return p;
}

inline nlohmann::json to_json(const RobotParams& r) {
  return {{"anchor1", to_json(r.anchor1)},
          {"anchor2", to_json(r.anchor2)},
          {"link_length", r.link_length},
          {"link_half_width", r.link_half_width},
          {"base_side", r.base_side}};
}

inline RobotParams robot_from_json(const nlohmann::json& j) {
  RobotParams r;
  r.anchor1 = point_from_json(j.at("anchor1"));
  r.anchor2 = point_from_json(j.at("anchor2"));
  r.link_length = j.at("link_length").get<double>();
  r.link_half_width = j.at("link_half_width").get<double>();
  r.base_side = j.at("base_side").get<double>();
  return r;
}

inline nlohmann::json to_json(const FamilySpec& s) {
  return {{"family", family_name(s.family)},
          {"circle_radius", s.circle_radius},
          {"square_side", s.square_side},
          {"triangle_side", s.triangle_side},
          {"center_min", s.center_min},
          {"center_max", s.center_max},
          {"max_attempts", s.max_attempts}};
}

inline FamilySpec family_spec_from_json(const nlohmann::json& j) {
  FamilySpec s;
  s.family = parse_family(j.at("family").get<std::string>());
  s.circle_radius = j.at("circle_radius").get<double>();
  s.square_side = j.at("square_side").get<double>();
  s.triangle_side = j.at("triangle_side").get<double>();
  s.center_min = j.at("center_min").get<double>();
  s.center_max = j.at("center_max").get<double>();
  s.max_attempts = j.at("max_attempts").get<int>();
  return s;
}

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& rec : m.samples) {
    nlohmann::json obs = nlohmann::json::array();
    for (const auto& ob : rec.obstacles) obs.push_back(to_json(ob));
    samples.push_back({{"id", rec.id},
                       {"seed", rec.seed},
                       {"split", split_name(rec.split)},
                       {"obstacles", obs},
                       {"workspace_image", rec.workspace_image},
                       {"cspace_image", rec.cspace_image}});
  }
  return {{"schema_version", m.schema_version},
          {"generator_version", m.generator_version},
          {"family", family_name(m.family)},
          {"family_spec", to_json(m.family_spec)},
          {"robot", to_json(m.robot)},
          {"master_seed", m.master_seed},
          {"count", m.count},
          {"ratios", {m.ratios[0], m.ratios[1], m.ratios[2]}},
          {"resolution", m.resolution},
          {"samples", samples}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != kManifestSchemaVersion) {
    throw std::runtime_error("unsupported manifest schema_version " +
                             std::to_string(m.schema_version));
  }
  m.generator_version = j.at("generator_version").get<std::string>();
  m.family = parse_family(j.at("family").get<std::string>());
  m.family_spec = family_spec_from_json(j.at("family_spec"));
  m.robot = robot_from_json(j.at("robot"));
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.count = j.at("count").get<int>();
  for (int i = 0; i < 3; ++i) m.ratios[i] = j.at("ratios").at(i).get<double>();
  m.resolution = j.at("resolution").get<int>();
  for (const auto& sj : j.at("samples")) {
    SampleRecord rec;
    rec.id = sj.at("id").get<std::string>();
    rec.seed = sj.at("seed").get<std::uint64_t>();
    rec.split = parse_split(sj.at("split").get<std::string>());
    for (const auto& ob : sj.at("obstacles")) rec.obstacles.push_back(obstacle_from_json(ob));
    rec.workspace_image = sj.at("workspace_image").get<std::string>();
    rec.cspace_image = sj.at("cspace_image").get<std::string>();
    m.samples.push_back(std::move(rec));
  }
  return m;
}

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << to_json(m).dump(2) << '\n';
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read manifest: " + path);
  nlohmann::json j;
  in >> j;
  auto m = manifest_from_json(j);
  m.directory = std::filesystem::path(path).parent_path().string();
  return m;
}

// Deterministic shuffled split assignment; depends only on (master_seed,
// count, ratios).
inline std::vector<Split> assign_splits(std::uint64_t master_seed, int count,
                                        const double ratios[3]) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
  int n_train = static_cast<int>(std::llround(ratios[0] * count));
  int n_val = static_cast<int>(std::llround(ratios[1] * count));
  n_train = std::min(n_train, count);
  n_val = std::min(n_val, count - n_train);

  std::vector<int> order(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
  constexpr std::uint64_t kSplitStream = 0x53504C4954ull;  // distinct from sample streams
  Rng rng(derive_seed(master_seed, kSplitStream));
  for (int i = count - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<Split> splits(static_cast<std::size_t>(count), Split::Test);
  for (int i = 0; i < n_train; ++i) splits[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = Split::Train;
  for (int i = n_train; i < n_train + n_val; ++i) {
    splits[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = Split::Val;
  }
  return splits;
}

inline std::string sample_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

struct GenerateOptions {
  int threads = 0;
  bool resume = true;
  // progress(done, total), called from the generation loop
  std::function<void(int, int)> progress;
};

// Generates `count` workspace/C-space pairs under root/<family>/ and writes
// the manifest. Per-sample seeds are derived independently from the master
// seed, so generation order and thread count do not affect the output.
// With resume, samples whose manifest entries and files already exist and
// match the expected parameters are skipped.
inline DatasetManifest generate_dataset(const FamilySpec& spec, int count,
                                        const double ratios[3], std::uint64_t master_seed,
                                        int resolution, const RobotParams& robot_params,
                                        const std::string& root,
                                        const GenerateOptions& opt = {}) {
  if (count < 1) throw std::invalid_argument("dataset count must be >= 1");
  if (resolution < 2) throw std::invalid_argument("dataset resolution must be >= 2");
  const RobotModel robot = robot_params.build();

  namespace fs = std::filesystem;
  const fs::path dir = fs::path(root) / family_name(spec.family);
  fs::create_directories(dir / "workspace");
  fs::create_directories(dir / "cspace");

  DatasetManifest manifest;
  manifest.family = spec.family;
  manifest.family_spec = spec;
  manifest.robot = robot_params;
  manifest.master_seed = master_seed;
  manifest.count = count;
  for (int i = 0; i < 3; ++i) manifest.ratios[i] = ratios[i];
  manifest.resolution = resolution;
  manifest.directory = dir.string();

  std::optional<DatasetManifest> previous;
  if (opt.resume && fs::exists(dir / "manifest.json")) {
    try {
      previous = load_manifest((dir / "manifest.json").string());
      if (previous->master_seed != master_seed || previous->resolution != resolution ||
          previous->family != spec.family) {
        previous.reset();
      }
    } catch (const std::exception&) {
      previous.reset();
    }
  }

  const auto splits = assign_splits(master_seed, count, ratios);
  manifest.samples.resize(static_cast<std::size_t>(count));
  std::vector<std::string> errors(static_cast<std::size_t>(count));
  std::atomic<int> done{0};

  parallel_for(count, opt.threads, [&](std::int64_t i, int) {
    const int idx = static_cast<int>(i);
    SampleRecord rec;
    rec.id = sample_id(idx);
    rec.seed = derive_seed(master_seed, static_cast<std::uint64_t>(idx));
    rec.split = splits[static_cast<std::size_t>(idx)];
    rec.workspace_image = "workspace/" + rec.id + ".png";
    rec.cspace_image = "cspace/" + rec.id + ".png";
    try {
      rec.obstacles = sample_workspace_params(spec, rec.seed, robot);

      bool reuse = false;
      if (previous && idx < static_cast<int>(previous->samples.size())) {
        const auto& old = previous->samples[static_cast<std::size_t>(idx)];
        if (old.seed == rec.seed && old.obstacles == rec.obstacles &&
            fs::exists(dir / old.workspace_image) && fs::exists(dir / old.cspace_image)) {
          reuse = true;
        }
      }
      if (!reuse) {
        const Workspace w = to_workspace(rec.obstacles);
        write_png_gray8((dir / rec.workspace_image).string(), render_workspace(w, resolution));
        const CSpaceGrid grid = rasterize(robot, w, resolution, 1);
        write_png_gray8((dir / rec.cspace_image).string(), grid_to_image(grid));
      }
      manifest.samples[static_cast<std::size_t>(idx)] = std::move(rec);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(idx)] = e.what();
    }
    const int d = ++done;
    if (opt.progress) opt.progress(d, count);
  });

  std::string failure;
  for (int i = 0; i < count; ++i) {
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      failure += "sample " + sample_id(i) + ": " + errors[static_cast<std::size_t>(i)] + "\n";
    }
  }
  if (!failure.empty()) throw std::runtime_error("dataset generation failed:\n" + failure);

  save_manifest(manifest, (dir / "manifest.json").string());
  return manifest;
}

}  // namespace cspace
