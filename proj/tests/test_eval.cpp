#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "cspace/eval.hpp"
#include "cspace/rng.hpp"

using namespace cspace;
namespace fs = std::filesystem;

namespace {

CSpaceGrid random_grid(int n, Rng& rng, double collision_fraction = 0.3) {
  CSpaceGrid g(n);
  for (auto& c : g.cells) c = rng.uniform() < collision_fraction ? Cell::Collision : Cell::Free;
  return g;
}

const DatasetManifest& eval_manifest() {
  static DatasetManifest manifest = [] {
    FamilySpec spec;
    spec.family = Family::ThreeCircles;
    const double ratios[3] = {0.5, 0.25, 0.25};
    const auto root = fs::temp_directory_path() /
                      ("cspace_eval_toy_" + std::to_string(::getpid()));
    GenerateOptions opt;
    opt.threads = 2;
    return generate_dataset(spec, 16, ratios, 77, 16, RobotParams{}, root.string(), opt);
  }();
  return manifest;
}

}  // namespace

TEST_CASE("confusion counts") {
  Rng rng(1);
  const auto truth = random_grid(16, rng);

  SECTION("identical grids have empty off-diagonals") {
    const auto cm = confusion(truth, truth);
    CHECK(cm.collision_free == 0);
    CHECK(cm.free_collision == 0);
    CHECK(cm.total() == 256);
  }

  SECTION("all-free prediction vs all-collision truth") {
    CSpaceGrid all_clsn(8);
    for (auto& c : all_clsn.cells) c = Cell::Collision;
    const CSpaceGrid all_free(8);
    const auto cm = confusion(all_free, all_clsn);
    CHECK(cm.collision_free == 64);
    CHECK(cm.total() == 64);
  }

  SECTION("random pair matches a direct per-pixel tally") {
    const auto pred = random_grid(16, rng);
    const auto cm = confusion(pred, truth);
    std::uint64_t cc = 0, cf = 0, fc = 0, ff = 0;
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const bool t = truth.at(r, c) == Cell::Collision;
        const bool p = pred.at(r, c) == Cell::Collision;
        cc += t && p;
        cf += t && !p;
        fc += !t && p;
        ff += !t && !p;
      }
    }
    CHECK(cm.collision_collision == cc);
    CHECK(cm.collision_free == cf);
    CHECK(cm.free_collision == fc);
    CHECK(cm.free_free == ff);
  }

  SECTION("resolution mismatch is rejected") {
    CHECK_THROWS_AS(confusion(CSpaceGrid(8), CSpaceGrid(16)), std::invalid_argument);
  }
}

TEST_CASE("metric definitions") {
  SECTION("closed form") {
    ConfusionMatrix cm;
    cm.free_free = 90;        // TP (free positive)
    cm.collision_free = 10;   // FP
    cm.free_collision = 10;   // FN
    cm.collision_collision = 90;
    const auto m = metrics(cm, PositiveClass::Free);
    CHECK(m.precision == Catch::Approx(0.9));
    CHECK(m.recall == Catch::Approx(0.9));
    CHECK(m.f1 == Catch::Approx(0.9));
    CHECK(m.accuracy == Catch::Approx(0.9));
    // symmetric counts: the collision-positive convention matches here
    const auto mc = metrics(cm, PositiveClass::Collision);
    CHECK(mc.f1 == Catch::Approx(0.9));
  }

  SECTION("perfect matrix") {
    ConfusionMatrix cm;
    cm.free_free = 70;
    cm.collision_collision = 30;
    for (const auto positive : {PositiveClass::Free, PositiveClass::Collision}) {
      const auto m = metrics(cm, positive);
      CHECK(m.accuracy == 1.0);
      CHECK(m.precision == 1.0);
      CHECK(m.recall == 1.0);
      CHECK(m.f1 == 1.0);
    }
  }

  SECTION("degenerate cases return flagged sentinels") {
    ConfusionMatrix cm;
    cm.free_collision = 5;  // everything predicted collision, truth all free
    const auto m = metrics(cm, PositiveClass::Free);
    CHECK(m.no_predicted_positives);
    CHECK(m.precision == 0.0);
    CHECK(m.f1 == 0.0);

    ConfusionMatrix empty;
    CHECK_THROWS_AS(metrics(empty, PositiveClass::Free), std::invalid_argument);
  }

  SECTION("f1 is the harmonic mean of its own precision and recall") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      ConfusionMatrix cm;
      cm.collision_collision = rng.uniform_int(100);
      cm.collision_free = rng.uniform_int(100);
      cm.free_collision = rng.uniform_int(100);
      cm.free_free = 1 + rng.uniform_int(100);
      const auto m = metrics(cm, PositiveClass::Free);
      if (!m.no_predicted_positives && !m.no_actual_positives && m.precision + m.recall > 0) {
        CHECK(m.f1 ==
              Catch::Approx(2.0 * m.precision * m.recall / (m.precision + m.recall)));
      }
    }
  }
}

TEST_CASE("undetected rates are row-normalized") {
  ConfusionMatrix cm;
  cm.collision_collision = 75;
  cm.collision_free = 25;
  cm.free_collision = 10;
  cm.free_free = 90;
  CHECK(undetected_collision_rate(cm) == Catch::Approx(0.25));
  CHECK(undetected_free_rate(cm) == Catch::Approx(0.10));
}

TEST_CASE("threshold selection") {
  Rng rng(7);

  SECTION("perfect binary predictions tie-break to the largest eta") {
    SplitPredictions val;
    for (int s = 0; s < 3; ++s) {
      const auto truth = random_grid(16, rng);
      val.truth.push_back(truth);
      val.pred.push_back(grid_to_image(truth));
    }
    const auto choice = select_threshold(val);
    CHECK(choice.eta == Catch::Approx(0.99));
    CHECK(choice.val_f1 == 1.0);
  }

  SECTION("overlapping noise pushes the optimum into the interior") {
    SplitPredictions val;
    for (int s = 0; s < 4; ++s) {
      const auto truth = random_grid(32, rng, 0.5);
      GrayImage pred = grid_to_image(truth);
      for (auto& v : pred.px) {
        v = std::clamp(v + static_cast<float>(rng.uniform(-0.6, 0.6)), 0.0f, 1.0f);
      }
      val.truth.push_back(truth);
      val.pred.push_back(pred);
    }
    const auto choice = select_threshold(val);
    CHECK(choice.eta >= 0.35);
    CHECK(choice.eta <= 0.65);
  }

  SECTION("selection is deterministic") {
    SplitPredictions val;
    const auto truth = random_grid(16, rng);
    GrayImage pred = grid_to_image(truth);
    for (auto& v : pred.px) v = std::clamp(v + static_cast<float>(rng.uniform(-0.4, 0.4)), 0.0f, 1.0f);
    val.truth.push_back(truth);
    val.pred.push_back(pred);
    const auto a = select_threshold(val);
    const auto b = select_threshold(val);
    CHECK(a.eta == b.eta);
    CHECK(a.val_f1 == b.val_f1);
  }
}

TEST_CASE("raising eta trades undetected collisions for undetected free space") {
  Rng rng(11);
  SplitPredictions split;
  for (int s = 0; s < 3; ++s) {
    const auto truth = random_grid(32, rng, 0.4);
    GrayImage pred = grid_to_image(truth);
    for (auto& v : pred.px) v = std::clamp(v + static_cast<float>(rng.uniform(-0.7, 0.7)), 0.0f, 1.0f);
    split.truth.push_back(truth);
    split.pred.push_back(pred);
  }
  std::uint64_t prev_missed_clsn = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t prev_missed_free = 0;
  for (int step = 1; step <= 99; ++step) {
    const auto report = evaluate(split, step / 100.0);
    CHECK(report.confusion.collision_free <= prev_missed_clsn);
    CHECK(report.confusion.free_collision >= prev_missed_free);
    prev_missed_clsn = report.confusion.collision_free;
    prev_missed_free = report.confusion.free_collision;
  }
}

TEST_CASE("micro-averaging pools counts; macro averages per image") {
  Rng rng(13);
  SplitPredictions split;
  for (int s = 0; s < 4; ++s) {
    const auto truth = random_grid(16, rng, 0.2 + 0.15 * s);
    GrayImage pred = grid_to_image(truth);
    for (auto& v : pred.px) v = std::clamp(v + static_cast<float>(rng.uniform(-0.6, 0.6)), 0.0f, 1.0f);
    split.truth.push_back(truth);
    split.pred.push_back(pred);
  }
  const auto report = evaluate(split, 0.5);
  ConfusionMatrix pooled;
  for (std::size_t s = 0; s < split.pred.size(); ++s) {
    pooled += confusion(image_to_grid(split.pred[s], 0.5), split.truth[s]);
  }
  CHECK(report.free_positive.f1 == metrics(pooled, PositiveClass::Free).f1);
  REQUIRE(report.per_image_f1.size() == 4);
  double mean = 0.0;
  for (const double f : report.per_image_f1) mean += f;
  CHECK(report.macro_f1_free_positive == Catch::Approx(mean / 4.0));
}

TEST_CASE("oracle backend yields perfect metrics end to end") {
  const auto& manifest = eval_manifest();
  const auto result = run_protocol(make_oracle_backend(manifest), manifest, 2);
  CHECK(result.test.free_positive.f1 == 1.0);
  CHECK(result.test.collision_positive.f1 == 1.0);
  CHECK(result.test.undetected_collision == 0.0);
  CHECK(result.test.undetected_free == 0.0);
  CHECK(result.test.confusion.collision_free == 0);
}

TEST_CASE("inverting predictions complements the accuracy") {
  const auto& manifest = eval_manifest();
  const auto oracle = make_oracle_backend(manifest);
  const auto straight = collect_predictions(oracle, manifest, Split::Test, 1);
  SplitPredictions inverted = straight;
  for (auto& img : inverted.pred) {
    for (auto& v : img.px) v = 1.0f - v;
  }
  const auto a = evaluate(straight, 0.5);
  const auto b = evaluate(inverted, 0.5);
  CHECK(a.free_positive.accuracy == Catch::Approx(1.0));
  CHECK(b.free_positive.accuracy == Catch::Approx(1.0 - a.free_positive.accuracy).margin(1e-12));
}

TEST_CASE("evaluation reports are identical across thread counts") {
  const auto& manifest = eval_manifest();
  const auto oracle = make_oracle_backend(manifest);
  const auto r1 = evaluate(collect_predictions(oracle, manifest, Split::Test, 1), 0.5);
  const auto r2 = evaluate(collect_predictions(oracle, manifest, Split::Test, 2), 0.5);
  CHECK(to_json(r1).dump() == to_json(r2).dump());
}

TEST_CASE("zero-shot on the source family equals plain evaluation") {
  const auto& manifest = eval_manifest();
  net::NetConfig cfg;
  cfg.resolution = 16;
  cfg.convs_per_block = {2, 2};
  cfg.channels = {4, 8};
  net::TrainHyper hp;
  hp.max_epochs = 2;
  hp.seed = 3;
  hp.threads = 2;
  auto ckpt = net::train<float>(cfg, manifest, hp);

  const auto zs = zero_shot_eval(ckpt, manifest, 2);
  CHECK(zs.digest_before == zs.digest_after);

  const auto plain = run_protocol(make_net_backend(ckpt, manifest), manifest, 2);
  CHECK(zs.f1 == plain.test.free_positive.f1);
  CHECK(zs.eta == plain.threshold.eta);
  CHECK(zs.missed_collision_pct == Catch::Approx(100.0 * plain.test.undetected_collision));
}

TEST_CASE("data size study emits one row per size") {
  const auto& manifest = eval_manifest();
  net::NetConfig cfg;
  cfg.resolution = 16;
  cfg.convs_per_block = {2, 2};
  cfg.channels = {4, 8};
  net::TrainHyper hp;
  hp.max_epochs = 2;
  hp.seed = 3;
  hp.threads = 2;
  const auto rows = data_size_study<float>(cfg, manifest, {4, 8}, hp);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].samples == 4);
  CHECK(rows[1].samples == 8);
  for (const auto& r : rows) {
    CHECK(r.f1 >= 0.0);
    CHECK(r.f1 <= 1.0);
    CHECK(r.epochs_ran >= 1);
  }
  CHECK_THROWS_AS(data_size_study<float>(cfg, manifest, {10000}, hp), std::invalid_argument);
}

TEST_CASE("timing benchmark reports per-configuration time with provenance") {
  net::NetConfig cfg;
  cfg.resolution = 16;
  cfg.convs_per_block = {2, 2};
  cfg.channels = {4, 8};
  net::EncoderDecoder<float> model(cfg, 1);
  const auto report = timing_benchmark(model, 1, 3);
  CHECK(report.median_ms > 0.0);
  CHECK(report.us_per_configuration ==
        Catch::Approx(report.median_ms * 1000.0 / (16.0 * 16.0)));
  CHECK(report.n_runs == 3);
  CHECK(!report.cpu_model.empty());
  CHECK(report.hardware_threads >= 1);
  CHECK_THROWS_AS(timing_benchmark(model, 0, 0), std::invalid_argument);
}
