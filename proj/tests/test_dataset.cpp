#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "cspace/dataset.hpp"
#include "cspace/rng.hpp"

using namespace cspace;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const auto dir = fs::temp_directory_path() /
                   ("cspace_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

const RobotParams kRobot;

}  // namespace

TEST_CASE("three-circles workspaces hold the family contract") {
  FamilySpec spec;
  spec.family = Family::ThreeCircles;
  const auto robot = kRobot.build();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto params = sample_workspace_params(spec, derive_seed(99, seed), robot);
    REQUIRE(params.size() == 3);
    for (const auto& p : params) {
      CHECK(p.kind == "circle");
      CHECK(p.size == spec.circle_radius);
    }
    const auto w = to_workspace(params);
    CHECK(workspace_violation(w, robot.base_footprint(1), robot.base_footprint(2)).empty());
  }
}

TEST_CASE("convex families place one circle, one square, one triangle") {
  const auto robot = kRobot.build();
  for (const Family f : {Family::ThreeConvex, Family::ThreeConvexRotated}) {
    FamilySpec spec;
    spec.family = f;
    const auto params = sample_workspace_params(spec, 7, robot);
    REQUIRE(params.size() == 3);
    CHECK(params[0].kind == "circle");
    CHECK(params[1].kind == "square");
    CHECK(params[2].kind == "triangle");
    for (const auto& p : params) {
      if (f == Family::ThreeConvex) CHECK(p.rotation == 0.0);
    }
    const auto w = to_workspace(params);
    CHECK(workspace_violation(w, robot.base_footprint(1), robot.base_footprint(2)).empty());
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  FamilySpec spec;
  spec.family = Family::ThreeConvexRotated;
  const auto robot = kRobot.build();
  const auto a = sample_workspace_params(spec, 123456, robot);
  const auto b = sample_workspace_params(spec, 123456, robot);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  const auto c = sample_workspace_params(spec, 123457, robot);
  CHECK_FALSE(a[0] == c[0]);
}

TEST_CASE("one-to-three circle counts are uniform") {
  FamilySpec spec;
  spec.family = Family::OneToThreeCircles;
  const auto robot = kRobot.build();
  int counts[4] = {0, 0, 0, 0};
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto params = sample_workspace_params(spec, derive_seed(5, static_cast<std::uint64_t>(i)), robot);
    REQUIRE(params.size() >= 1);
    REQUIRE(params.size() <= 3);
    counts[params.size()]++;
  }
  // 3-sigma binomial band around draws/3
  const double expect = draws / 3.0;
  const double sigma = std::sqrt(draws * (1.0 / 3.0) * (2.0 / 3.0));
  for (int k = 1; k <= 3; ++k) {
    CHECK(std::abs(counts[k] - expect) < 3.0 * sigma);
  }
}

TEST_CASE("infeasible sizes fail with a diagnostic") {
  FamilySpec spec;
  spec.family = Family::ThreeCircles;
  spec.circle_radius = 0.4;  // three of these cannot fit
  spec.max_attempts = 200;
  const auto robot = kRobot.build();
  CHECK_THROWS_WITH(sample_workspace_params(spec, 1, robot),
                    Catch::Matchers::ContainsSubstring("attempts"));
}

TEST_CASE("workspace rendering") {
  SECTION("empty is all white, covered is all black") {
    const auto white = render_workspace({}, 32);
    for (const float v : white.px) CHECK(v == 1.0f);

    Workspace w;
    w.obstacles.push_back(make_square({0.5, 0.5}, 2.5));
    const auto black = render_workspace(w, 32);
    for (const float v : black.px) CHECK(v == 0.0f);
  }

  SECTION("disk pixel area is close to the analytic area") {
    Workspace w;
    w.obstacles.push_back(Circle2{{0.5, 0.5}, 0.06});
    const int n = 512;
    const auto img = render_workspace(w, n);
    std::int64_t black = 0;
    for (const float v : img.px) black += v == 0.0f ? 1 : 0;
    const double expect = std::numbers::pi * (0.06 * n) * (0.06 * n);
    CHECK(std::abs(black - expect) / expect < 0.02);
  }

  SECTION("rejects tiny resolutions") {
    CHECK_THROWS_AS(render_workspace({}, 1), std::invalid_argument);
  }
}

TEST_CASE("split assignment") {
  SECTION("matches the configured ratios within rounding") {
    const double ratios[3] = {0.7, 0.15, 0.15};
    const auto splits = assign_splits(42, 10000, ratios);
    int n[3] = {0, 0, 0};
    for (const auto s : splits) n[static_cast<int>(s)]++;
    CHECK(n[0] == 7000);
    CHECK(n[1] == 1500);
    CHECK(n[2] == 1500);
  }
  SECTION("train-only") {
    const double ratios[3] = {1.0, 0.0, 0.0};
    const auto splits = assign_splits(1, 3, ratios);
    for (const auto s : splits) CHECK(s == Split::Train);
  }
  SECTION("depends only on the inputs") {
    const double ratios[3] = {0.6, 0.2, 0.2};
    CHECK(assign_splits(9, 100, ratios) == assign_splits(9, 100, ratios));
    CHECK(assign_splits(9, 100, ratios) != assign_splits(10, 100, ratios));
  }
  SECTION("rejects ratios that do not sum to 1") {
    const double ratios[3] = {0.5, 0.2, 0.2};
    CHECK_THROWS_AS(assign_splits(1, 10, ratios), std::invalid_argument);
  }
}

TEST_CASE("dataset generation writes a reproducible tree") {
  FamilySpec spec;
  spec.family = Family::ThreeCircles;
  const double ratios[3] = {0.6, 0.2, 0.2};
  GenerateOptions opt;
  opt.threads = 2;

  const auto root_a = make_temp_dir("gen_a");
  const auto root_b = make_temp_dir("gen_b");
  const auto ma = generate_dataset(spec, 10, ratios, 77, 32, kRobot, root_a.string(), opt);
  opt.threads = 1;
  const auto mb = generate_dataset(spec, 10, ratios, 77, 32, kRobot, root_b.string(), opt);

  REQUIRE(ma.samples.size() == 10);

  SECTION("identical seeds give byte-identical artifacts across runs and thread counts") {
    CHECK(slurp(root_a / "three_circles/manifest.json") ==
          slurp(root_b / "three_circles/manifest.json"));
    for (const auto& rec : ma.samples) {
      CHECK(slurp(root_a / "three_circles" / rec.workspace_image) ==
            slurp(root_b / "three_circles" / rec.workspace_image));
      CHECK(slurp(root_a / "three_circles" / rec.cspace_image) ==
            slurp(root_b / "three_circles" / rec.cspace_image));
    }
  }

  SECTION("manifest round-trips through JSON") {
    const auto loaded = load_manifest((root_a / "three_circles/manifest.json").string());
    CHECK(loaded.master_seed == ma.master_seed);
    CHECK(loaded.count == ma.count);
    CHECK(loaded.resolution == ma.resolution);
    REQUIRE(loaded.samples.size() == ma.samples.size());
    for (std::size_t i = 0; i < ma.samples.size(); ++i) {
      CHECK(loaded.samples[i].id == ma.samples[i].id);
      CHECK(loaded.samples[i].seed == ma.samples[i].seed);
      CHECK(loaded.samples[i].split == ma.samples[i].split);
      REQUIRE(loaded.samples[i].obstacles.size() == ma.samples[i].obstacles.size());
      for (std::size_t k = 0; k < ma.samples[i].obstacles.size(); ++k) {
        CHECK(loaded.samples[i].obstacles[k] == ma.samples[i].obstacles[k]);
      }
    }
  }

  SECTION("stored obstacle parameters regenerate the stored images") {
    const auto loaded = load_manifest((root_a / "three_circles/manifest.json").string());
    const auto robot = loaded.robot.build();
    for (const auto& rec : loaded.samples) {
      const auto w = to_workspace(rec.obstacles);
      const auto ws_img = render_workspace(w, loaded.resolution);
      const auto cs_img = grid_to_image(rasterize(robot, w, loaded.resolution, 1));
      const auto tmp = make_temp_dir("rerender");
      write_png_gray8((tmp / "ws.png").string(), ws_img);
      write_png_gray8((tmp / "cs.png").string(), cs_img);
      CHECK(slurp(tmp / "ws.png") == slurp(loaded.resolve(rec.workspace_image)));
      CHECK(slurp(tmp / "cs.png") == slurp(loaded.resolve(rec.cspace_image)));
    }
  }

  SECTION("every stored workspace satisfies the invariants") {
    const auto robot = kRobot.build();
    for (const auto& rec : ma.samples) {
      const auto w = to_workspace(rec.obstacles);
      CHECK(workspace_violation(w, robot.base_footprint(1), robot.base_footprint(2)).empty());
    }
  }

  SECTION("resume skips existing samples") {
    // delete one pair; regeneration must restore it and keep others untouched
    const auto victim = root_a / "three_circles" / ma.samples[3].workspace_image;
    const auto before = slurp(victim);
    fs::remove(victim);
    auto last_write = fs::last_write_time(root_a / "three_circles" / ma.samples[5].workspace_image);
    opt.resume = true;
    const auto mc = generate_dataset(spec, 10, ratios, 77, 32, kRobot, root_a.string(), opt);
    CHECK(slurp(victim) == before);
    CHECK(fs::last_write_time(root_a / "three_circles" / ma.samples[5].workspace_image) ==
          last_write);
  }
}
