// Command-line front end: dataset generation, training, evaluation and the
// transfer/data-size/timing experiment protocols, driven by a JSON config.

#include <CLI11.hpp>
#include <json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cspace/config.hpp"
#include "cspace/dataset.hpp"
#include "cspace/digest.hpp"
#include "cspace/eval.hpp"
#include "cspace/grid.hpp"
#include "cspace/net/checkpoint.hpp"
#include "cspace/net/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One process owns one output directory for the duration of a run.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw std::runtime_error("output directory is locked by another run: " + dir.string() +
                               " (remove " + path_.string() + " if that run is gone)");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string json_digest(const json& j) {
  const std::string s = j.dump();
  return cspace::digest_bytes(s.data(), s.size());
}

// Provenance manifest written next to every run's outputs.
void write_run_manifest_at(const fs::path& file, const std::string& subcommand,
                           const cspace::ExperimentConfig& cfg, json extra) {
  json j;
  j["subcommand"] = subcommand;
  j["config"] = cspace::to_json(cfg);
  j["config_digest"] = json_digest(cspace::to_json(cfg));
  j["generator_version"] = cspace::kGeneratorVersion;
  j["extra"] = std::move(extra);
  std::ofstream out(file);
  out << j.dump(2) << '\n';
}

void write_run_manifest(const fs::path& dir, const std::string& subcommand,
                        const cspace::ExperimentConfig& cfg, json extra) {
  write_run_manifest_at(dir / ("run_" + subcommand + ".json"), subcommand, cfg, std::move(extra));
}

fs::path dataset_dir(const cspace::ExperimentConfig& cfg) {
  return fs::path(cfg.dataset.root) / cspace::family_name(cfg.family.family);
}

cspace::DatasetManifest load_manifest_arg(const cspace::ExperimentConfig& cfg,
                                          const std::string& manifest_override) {
  const fs::path path = manifest_override.empty() ? dataset_dir(cfg) / "manifest.json"
                                                  : fs::path(manifest_override);
  if (!fs::exists(path)) {
    throw std::runtime_error("manifest not found: " + path.string() + " (run `gen` first?)");
  }
  return cspace::load_manifest(path.string());
}

void print_metrics(const cspace::MetricsReport& r) {
  const auto pct = [](double v) { return 100.0 * v; };
  std::printf("eta=%.2f\n", r.eta);
  std::printf("%-20s %9s %9s %9s %9s\n", "positive class", "acc(%)", "prec(%)", "recall(%)",
              "F1(%)");
  std::printf("%-20s %9.2f %9.2f %9.2f %9.2f\n", "free", pct(r.free_positive.accuracy),
              pct(r.free_positive.precision), pct(r.free_positive.recall),
              pct(r.free_positive.f1));
  std::printf("%-20s %9.2f %9.2f %9.2f %9.2f\n", "collision", pct(r.collision_positive.accuracy),
              pct(r.collision_positive.precision), pct(r.collision_positive.recall),
              pct(r.collision_positive.f1));
  std::printf("undetected collisions: %.2f%%   undetected free space: %.2f%%\n",
              pct(r.undetected_collision), pct(r.undetected_free));
  std::printf("%s", cspace::format_confusion_table(r.confusion).c_str());
}

int cmd_gen(const cspace::ExperimentConfig& cfg, int threads) {
  const fs::path dir = dataset_dir(cfg);
  DirLock lock(dir);
  cspace::GenerateOptions opt;
  opt.threads = threads;
  int last_pct = -1;
  opt.progress = [&](int done, int total) {
    const int pct = 100 * done / total;
    if (pct / 10 != last_pct / 10) {
      std::fprintf(stderr, "gen: %d/%d (%d%%)\n", done, total, pct);
      last_pct = pct;
    }
  };
  const auto manifest = cspace::generate_dataset(cfg.family, cfg.dataset.count,
                                                 cfg.dataset.ratios, cfg.dataset.master_seed,
                                                 cfg.dataset.resolution, cfg.robot,
                                                 cfg.dataset.root, opt);
  write_run_manifest(dir, "gen", cfg,
                     {{"master_seed", cfg.dataset.master_seed},
                      {"count", cfg.dataset.count},
                      {"manifest", (dir / "manifest.json").string()}});
  std::printf("generated %zu samples under %s\n", manifest.samples.size(), dir.string().c_str());
  return 0;
}

int cmd_train(const cspace::ExperimentConfig& cfg, const std::string& manifest_path,
              const std::string& out_dir) {
  const auto manifest = load_manifest_arg(cfg, manifest_path);
  const fs::path dir = out_dir;
  DirLock lock(dir);
  std::ofstream log(dir / "history.jsonl");
  cspace::net::EncoderDecoder<float> probe(cfg.net, cfg.train.seed);
  std::printf("model: %d conv layers, %lld parameters\n", probe.conv_layer_count(),
              static_cast<long long>(probe.parameter_count()));
  auto on_epoch = [&](const cspace::net::EpochRecord& r) {
    log << cspace::net::to_json(r).dump() << '\n';
    log.flush();
    std::printf("epoch %3d  %s  train %.6f  val_l2 %.6f  val_l1 %.6f  lr %.6f\n", r.epoch,
                r.loss_name.c_str(), r.train_loss, r.val_l2, r.val_l1, r.lr);
    std::fflush(stdout);
  };
  auto ckpt = cspace::net::train<float>(cfg.net, manifest, cfg.train, on_epoch);
  const std::string ckpt_path = (dir / "checkpoint.ckpt").string();
  cspace::net::save_checkpoint(ckpt, ckpt_path);
  write_run_manifest(dir, "train", cfg,
                     {{"manifest", manifest.directory},
                      {"seed", cfg.train.seed},
                      {"checkpoint", ckpt_path},
                      {"checkpoint_digest", ckpt.weight_digest()},
                      {"epochs", ckpt.epochs_completed},
                      {"best_epoch", ckpt.best_epoch}});
  std::printf("checkpoint: %s (digest %s, best epoch %d)\n", ckpt_path.c_str(),
              ckpt.weight_digest().c_str(), ckpt.best_epoch);
  return 0;
}

int cmd_finetune(const cspace::ExperimentConfig& cfg, const std::string& manifest_path,
                 const std::string& ckpt_path, const std::string& out_dir, int epochs,
                 double lr) {
  const auto manifest = load_manifest_arg(cfg, manifest_path);
  auto source = cspace::net::load_checkpoint<float>(ckpt_path);
  const fs::path dir = out_dir;
  DirLock lock(dir);
  std::ofstream log(dir / "history.jsonl");
  auto on_epoch = [&](const cspace::net::EpochRecord& r) {
    log << cspace::net::to_json(r).dump() << '\n';
    std::printf("epoch %3d  %s  train %.6f  val_l2 %.6f  lr %.6f\n", r.epoch,
                r.loss_name.c_str(), r.train_loss, r.val_l2, r.lr);
  };
  cspace::net::TrainHyper hp = cfg.train;
  auto tuned = cspace::net::fine_tune(source, manifest, epochs, lr, hp, on_epoch);
  const std::string out_path = (dir / "checkpoint.ckpt").string();
  cspace::net::save_checkpoint(tuned, out_path);
  write_run_manifest(dir, "finetune", cfg,
                     {{"manifest", manifest.directory},
                      {"source_checkpoint", ckpt_path},
                      {"source_digest", tuned.source_digest},
                      {"checkpoint", out_path},
                      {"checkpoint_digest", tuned.weight_digest()},
                      {"epochs", epochs},
                      {"lr", lr}});
  std::printf("fine-tuned checkpoint: %s (source digest %s)\n", out_path.c_str(),
              tuned.source_digest.c_str());
  return 0;
}

int cmd_eval(const cspace::ExperimentConfig& cfg, const std::string& manifest_path,
             const std::string& ckpt_path, bool oracle, const std::string& out_dir,
             int threads) {
  const auto manifest = load_manifest_arg(cfg, manifest_path);
  const fs::path dir = out_dir;
  DirLock lock(dir);

  std::optional<cspace::net::Checkpoint<float>> ckpt;
  cspace::PredictBackend backend;
  std::string digest = "oracle";
  if (oracle) {
    backend = cspace::make_oracle_backend(manifest);
  } else {
    if (ckpt_path.empty()) throw std::invalid_argument("eval needs --ckpt or --oracle");
    ckpt = cspace::net::load_checkpoint<float>(ckpt_path);
    digest = ckpt->weight_digest();
    backend = cspace::make_net_backend(*ckpt, manifest);
  }

  cspace::ThresholdChoice choice;
  if (cfg.eval.eta > 0.0) {
    choice.eta = cfg.eval.eta;
    choice.val_f1 = -1.0;
  } else {
    choice = cspace::select_threshold(
        cspace::collect_predictions(backend, manifest, cspace::Split::Val, threads));
  }
  const auto test = cspace::collect_predictions(backend, manifest, cspace::Split::Test, threads);
  auto report = cspace::evaluate(test, choice.eta);
  report.dataset_id = cspace::family_name(manifest.family) + ":" + manifest.directory;
  report.checkpoint_digest = digest;

  json out = cspace::to_json(report);
  out["threshold"] = {{"eta", choice.eta}, {"val_f1", choice.val_f1}};
  std::ofstream rep(dir / "report.json");
  rep << out.dump(2) << '\n';
  write_run_manifest(dir, "eval", cfg,
                     {{"manifest", manifest.directory},
                      {"checkpoint_digest", digest},
                      {"eta", choice.eta},
                      {"report", (dir / "report.json").string()}});
  print_metrics(report);
  return 0;
}

int cmd_zeroshot(const cspace::ExperimentConfig& cfg, const std::string& target_manifest,
                 const std::string& ckpt_path, const std::string& out_dir, int threads) {
  const auto manifest = load_manifest_arg(cfg, target_manifest);
  auto ckpt = cspace::net::load_checkpoint<float>(ckpt_path);
  const fs::path dir = out_dir;
  DirLock lock(dir);
  const auto report = cspace::zero_shot_eval(ckpt, manifest, threads);
  std::ofstream rep(dir / "zero_shot.json");
  rep << cspace::to_json(report).dump(2) << '\n';
  write_run_manifest(dir, "zeroshot", cfg,
                     {{"target_manifest", manifest.directory},
                      {"checkpoint_digest", report.digest_before},
                      {"report", (dir / "zero_shot.json").string()}});
  std::printf("%-14s %8s %16s %14s\n", "transfer to", "F1(%)", "missed clsn(%)",
              "missed free(%)");
  std::printf("%-14s %8.2f %16.2f %14.2f\n", cspace::family_name(manifest.family).c_str(),
              100.0 * report.f1, report.missed_collision_pct, report.missed_free_pct);
  if (report.digest_before != report.digest_after) {
    throw std::runtime_error("zero-shot evaluation modified the weights");
  }
  return 0;
}

int cmd_study(const cspace::ExperimentConfig& cfg, const std::string& manifest_path,
              const std::vector<int>& sizes, const std::string& out_dir) {
  const auto manifest = load_manifest_arg(cfg, manifest_path);
  const fs::path dir = out_dir;
  DirLock lock(dir);
  auto on_epoch = [](const cspace::net::EpochRecord& r) {
    std::printf("  epoch %3d %s val_l2 %.6f\n", r.epoch, r.loss_name.c_str(), r.val_l2);
  };
  const auto rows = cspace::data_size_study<float>(cfg.net, manifest, sizes, cfg.train, on_epoch);
  json out = json::array();
  std::printf("%10s %8s %16s %14s %8s\n", "samples", "F1(%)", "missed clsn(%)", "missed free(%)",
              "epochs");
  for (const auto& r : rows) {
    std::printf("%10d %8.2f %16.2f %14.2f %8d\n", r.samples, 100.0 * r.f1,
                r.missed_collision_pct, r.missed_free_pct, r.epochs_ran);
    out.push_back({{"samples", r.samples},
                   {"f1", r.f1},
                   {"missed_collision_pct", r.missed_collision_pct},
                   {"missed_free_pct", r.missed_free_pct},
                   {"epochs_ran", r.epochs_ran}});
  }
  std::ofstream rep(dir / "data_size_study.json");
  rep << out.dump(2) << '\n';
  write_run_manifest(dir, "study-datasize", cfg, {{"manifest", manifest.directory}});
  return 0;
}

int cmd_bench(const cspace::ExperimentConfig& cfg, const std::string& ckpt_path,
              bool random_init, const std::string& out_dir, int warmup, int runs) {
  const fs::path dir = out_dir;
  DirLock lock(dir);
  cspace::TimingReport report;
  std::string digest;
  if (random_init) {
    cspace::net::EncoderDecoder<float> model(cfg.net, cfg.train.seed);
    report = cspace::timing_benchmark(model, warmup, runs);
    digest = "random-init";
  } else {
    if (ckpt_path.empty()) throw std::invalid_argument("bench needs --ckpt or --random-init");
    auto ckpt = cspace::net::load_checkpoint<float>(ckpt_path);
    report = cspace::timing_benchmark(ckpt.model, warmup, runs);
    digest = ckpt.weight_digest();
  }
  json out = cspace::to_json(report);
  out["checkpoint_digest"] = digest;
  std::ofstream rep(dir / "timing.json");
  rep << out.dump(2) << '\n';
  write_run_manifest(dir, "bench", cfg, {{"checkpoint_digest", digest}});
  std::printf("forward pass at N=%d: median %.3f ms -> %.4f us per configuration\n",
              report.resolution, report.median_ms, report.us_per_configuration);
  std::printf("hardware: %s (%d threads), %s\n", report.cpu_model.c_str(),
              report.hardware_threads, report.compiler.c_str());
  return 0;
}

int cmd_predict(const cspace::ExperimentConfig& cfg, const std::string& ckpt_path, bool oracle,
                const std::string& image_path, const std::string& workspace_json,
                const std::string& out_path) {
  cspace::GrayImage out;
  std::string digest = "oracle";
  if (oracle) {
    if (workspace_json.empty()) {
      throw std::invalid_argument("--oracle predicts from geometry; pass --workspace <json>");
    }
    std::ifstream in(workspace_json);
    if (!in) throw std::runtime_error("cannot open workspace file: " + workspace_json);
    json j;
    in >> j;
    std::vector<cspace::ObstacleParams> obstacles;
    for (const auto& ob : j.at("obstacles")) obstacles.push_back(cspace::obstacle_from_json(ob));
    const auto grid = cspace::rasterize(cfg.robot.build(), cspace::to_workspace(obstacles),
                                        cfg.dataset.resolution);
    out = cspace::grid_to_image(grid);
  } else {
    if (ckpt_path.empty() || image_path.empty()) {
      throw std::invalid_argument("predict needs --ckpt with --image, or --oracle");
    }
    auto ckpt = cspace::net::load_checkpoint<float>(ckpt_path);
    out = cspace::net::predict(ckpt.model, cspace::read_png_gray8(image_path));
    digest = ckpt.weight_digest();
  }
  cspace::write_png_gray8(out_path, out);
  write_run_manifest_at(out_path + ".run.json", "predict", cfg,
                        {{"checkpoint_digest", digest},
                         {"input_image", image_path},
                         {"workspace", workspace_json},
                         {"output", out_path}});
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

cspace::GrayImage compose_panels(const std::vector<cspace::GrayImage>& panels, int gap = 4) {
  const int h = panels.front().height;
  int w = -gap;
  for (const auto& p : panels) w += p.width + gap;
  cspace::GrayImage out(w, h, 1.0f);
  int x0 = 0;
  for (const auto& p : panels) {
    for (int r = 0; r < p.height; ++r) {
      for (int c = 0; c < p.width; ++c) out.at(r, x0 + c) = p.at(r, c);
    }
    x0 += p.width + gap;
  }
  return out;
}

int cmd_plot(const cspace::ExperimentConfig& cfg, const std::string& manifest_path,
             const std::string& sample_id, const std::string& ckpt_path, bool oracle, double eta,
             const std::string& out_path) {
  const auto manifest = load_manifest_arg(cfg, manifest_path);
  const cspace::SampleRecord* rec = nullptr;
  for (const auto& s : manifest.samples) {
    if (s.id == sample_id) {
      rec = &s;
      break;
    }
  }
  if (!rec) throw std::invalid_argument("sample id not in manifest: " + sample_id);

  std::optional<cspace::net::Checkpoint<float>> ckpt;
  cspace::PredictBackend backend;
  if (oracle) {
    backend = cspace::make_oracle_backend(manifest);
  } else {
    if (ckpt_path.empty()) throw std::invalid_argument("plot needs --ckpt or --oracle");
    ckpt = cspace::net::load_checkpoint<float>(ckpt_path);
    backend = cspace::make_net_backend(*ckpt, manifest);
  }

  const auto ws = cspace::read_png_gray8(manifest.resolve(rec->workspace_image));
  const auto truth = cspace::image_to_grid(
      cspace::read_png_gray8(manifest.resolve(rec->cspace_image)), 0.5);
  const auto pred_img = backend(*rec);
  const auto pred = cspace::image_to_grid(pred_img, eta);

  const int n = truth.n;
  cspace::GrayImage undetected_clsn(n, n, 1.0f);
  cspace::GrayImage undetected_free(n, n, 1.0f);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const bool t_clsn = truth.at(r, c) == cspace::Cell::Collision;
      const bool p_clsn = pred.at(r, c) == cspace::Cell::Collision;
      if (t_clsn && !p_clsn) undetected_clsn.at(r, c) = 0.0f;
      if (!t_clsn && p_clsn) undetected_free.at(r, c) = 0.0f;
    }
  }
  // workspace | actual | predicted | undetected collisions | undetected free
  const auto composite = compose_panels(
      {ws, cspace::grid_to_image(truth), cspace::grid_to_image(pred), undetected_clsn,
       undetected_free});
  cspace::write_png_gray8(out_path, composite);
  write_run_manifest_at(out_path + ".run.json", "plot", cfg,
                        {{"sample_id", sample_id},
                         {"eta", eta},
                         {"checkpoint_digest", ckpt ? ckpt->weight_digest() : "oracle"},
                         {"output", out_path}});
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact C-space construction and learned C-space prediction for a planar dual-arm robot"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--set", overrides, "override a config key: section.key=value");

  std::string manifest_path, ckpt_path, out_dir = "out", image_path, workspace_json;
  std::string sample_id, out_path = "out.png", sizes_csv;
  bool oracle = false, random_init = false;
  int threads = 0, epochs = 20, warmup = 3, runs = 10;
  double lr = 0.001, eta = 0.5;

  auto* gen = app.add_subcommand("gen", "generate a dataset family");
  gen->add_option("--threads", threads, "worker threads (0 = all)");

  auto* train = app.add_subcommand("train", "train the encoder-decoder");
  train->add_option("--manifest", manifest_path, "dataset manifest (default from config)");
  train->add_option("-o,--out", out_dir, "output directory");

  auto* finetune = app.add_subcommand("finetune", "adapt a checkpoint to another dataset");
  finetune->add_option("--manifest", manifest_path, "target dataset manifest");
  finetune->add_option("--ckpt", ckpt_path, "source checkpoint")->required();
  finetune->add_option("-o,--out", out_dir, "output directory");
  finetune->add_option("--epochs", epochs, "fine-tuning epochs");
  finetune->add_option("--lr", lr, "fine-tuning learning rate");

  auto* eval = app.add_subcommand("eval", "select a threshold and score the test split");
  eval->add_option("--manifest", manifest_path, "dataset manifest (default from config)");
  eval->add_option("--ckpt", ckpt_path, "trained checkpoint");
  eval->add_flag("--oracle", oracle, "use the exact rasterizer instead of a model");
  eval->add_option("-o,--out", out_dir, "output directory");
  eval->add_option("--threads", threads, "worker threads (0 = all)");

  auto* zeroshot = app.add_subcommand("zeroshot", "evaluate on a new family without updates");
  zeroshot->add_option("--manifest", manifest_path, "target family manifest")->required();
  zeroshot->add_option("--ckpt", ckpt_path, "trained checkpoint")->required();
  zeroshot->add_option("-o,--out", out_dir, "output directory");
  zeroshot->add_option("--threads", threads, "worker threads (0 = all)");

  auto* study = app.add_subcommand("study-datasize", "train at several train-set sizes");
  study->add_option("--manifest", manifest_path, "dataset manifest (default from config)");
  study->add_option("--sizes", sizes_csv, "comma-separated train-set sizes")->required();
  study->add_option("-o,--out", out_dir, "output directory");

  auto* bench = app.add_subcommand("bench", "time the forward pass");
  bench->add_option("--ckpt", ckpt_path, "trained checkpoint");
  bench->add_flag("--random-init", random_init, "benchmark a freshly initialized model");
  bench->add_option("-o,--out", out_dir, "output directory");
  bench->add_option("--warmup", warmup, "warmup runs (excluded)");
  bench->add_option("--runs", runs, "timed runs");

  auto* predict = app.add_subcommand("predict", "map one workspace to a C-space image");
  predict->add_option("--ckpt", ckpt_path, "trained checkpoint");
  predict->add_flag("--oracle", oracle, "exact rasterizer backend");
  predict->add_option("--image", image_path, "workspace image (PNG)");
  predict->add_option("--workspace", workspace_json, "workspace geometry (JSON, oracle backend)");
  predict->add_option("-o,--out", out_path, "output PNG");

  auto* plot = app.add_subcommand("plot", "workspace | truth | prediction | error-mask panels");
  plot->add_option("--manifest", manifest_path, "dataset manifest (default from config)");
  plot->add_option("--id", sample_id, "sample id")->required();
  plot->add_option("--ckpt", ckpt_path, "trained checkpoint");
  plot->add_flag("--oracle", oracle, "exact rasterizer backend");
  plot->add_option("--eta", eta, "binarization threshold");
  plot->add_option("-o,--out", out_path, "output PNG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e) == 0) return 0;  // --help and friends
    std::fprintf(stderr, "error-class: validation\n");
    return 1;
  }

  try {
    const auto cfg = cspace::load_experiment_config(config_path, overrides);
    const int effective_threads = threads > 0 ? threads : cfg.train.threads;
    if (gen->parsed()) return cmd_gen(cfg, effective_threads);
    if (train->parsed()) return cmd_train(cfg, manifest_path, out_dir);
    if (finetune->parsed()) return cmd_finetune(cfg, manifest_path, ckpt_path, out_dir, epochs, lr);
    if (eval->parsed()) return cmd_eval(cfg, manifest_path, ckpt_path, oracle, out_dir, effective_threads);
    if (zeroshot->parsed()) return cmd_zeroshot(cfg, manifest_path, ckpt_path, out_dir, effective_threads);
    if (study->parsed()) {
      std::vector<int> sizes;
      std::size_t start = 0;
      while (start < sizes_csv.size()) {
        const auto comma = sizes_csv.find(',', start);
        sizes.push_back(std::stoi(sizes_csv.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (sizes.empty()) throw std::invalid_argument("--sizes must list at least one size");
      return cmd_study(cfg, manifest_path, sizes, out_dir);
    }
    if (bench->parsed()) return cmd_bench(cfg, ckpt_path, random_init, out_dir, warmup, runs);
    if (predict->parsed()) return cmd_predict(cfg, ckpt_path, oracle, image_path, workspace_json, out_path);
    if (plot->parsed()) return cmd_plot(cfg, manifest_path, sample_id, ckpt_path, oracle, eta, out_path);
    return 1;
  } catch (const cspace::ConfigError& e) {
    std::fprintf(stderr, "error-class: validation\nerror: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error-class: validation\nerror: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error-class: runtime\nerror: %s\n", e.what());
    return 2;
  }
}
