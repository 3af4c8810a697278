// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "artflow/dataset.hpp"
#include "artflow/evaluation.hpp"
#include "artflow/image_io.hpp"
#include "artflow/pipeline.hpp"
#include "artflow/service.hpp"

namespace fs = std::filesystem;
using namespace artflow;

namespace {

void log_line(const std::string& m) { std::cerr << "[artflow] " << m << '\n'; }

WorkflowConfig config_or_default(const std::string& path) {
  WorkflowConfig cfg = path.empty() ? WorkflowConfig{} : load_config(path);
  require_valid(cfg);
  return cfg;
}

// Models from `dir`; a --config file may replace the hyperparameters but not the architecture.
std::shared_ptr<ModelBundle> load_models(const std::string& dir, const std::string& config_path) {
  auto models = std::make_shared<ModelBundle>(ModelBundle::load(dir));
  if (!config_path.empty()) {
    const WorkflowConfig cfg = load_config(config_path);
    if (config_hash(cfg) != models->config_hash) {
      throw std::runtime_error("--config " + config_path + " describes a different architecture than " + dir);
    }
    models->config.hyper = cfg.hyper;
    models->config.options = cfg.options;
  }
  return models;
}

std::vector<fs::path> png_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Service* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Artflow: multi-stage artwork generation, inference and editing"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  auto common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--config", config_path, "Workflow config JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Random seed");
    auto* out = sub->add_option("--out", out_dir, "Output directory");
    if (out_required) out->required();
  };

  auto* dataset = app.add_subcommand("dataset", "Build or check staged corpora");
  dataset->require_subcommand(1);
  int count = 0;
  auto* synth = dataset->add_subcommand("synth", "Render the synthetic workflow dataset");
  common(synth, true);
  synth->add_option("--count", count, "Number of examples")->required()->check(CLI::PositiveNumber);

  std::string input_dir;
  int superpixels = 50;
  auto* stage = dataset->add_subcommand("stage", "Derive procedural stages from a directory of artworks");
  common(stage, true);
  stage->add_option("--input", input_dir, "Directory of PNG artworks")->required()->check(CLI::ExistingDirectory);
  stage->add_option("--superpixels", superpixels, "SLIC superpixels for the rough-color stage")
      ->check(CLI::PositiveNumber);

  std::string dataset_dir;
  auto* validate = dataset->add_subcommand("validate", "Check a corpus for alignment and geometry");
  common(validate, false);
  validate->add_option("--dataset", dataset_dir, "Corpus root")->required()->check(CLI::ExistingDirectory);

  std::string spec_path;
  PhaseSchedule schedule;
  int holdout = 0;
  bool strict = false, no_regularizers = false;
  long long stop_after = -1;
  auto* train = app.add_subcommand("train", "Train every network of a workflow");
  common(train, false);
  train->add_option("--spec", spec_path, "Experiment spec JSON")->check(CLI::ExistingFile);
  train->add_option("--dataset", dataset_dir, "Corpus root");
  train->add_option("--inference-iters", schedule.inference_separate, "Separate iterations per inference net");
  train->add_option("--inference-joint-iters", schedule.inference_joint, "Joint inference iterations");
  train->add_option("--generation-iters", schedule.generation_separate, "Separate iterations per generation net");
  train->add_option("--generation-joint-iters", schedule.generation_joint, "Joint generation iterations");
  train->add_option("--regularizer-iters", schedule.regularizer, "Regularizer iterations (default T_reg)");
  train->add_option("--checkpoint-every", schedule.checkpoint_every, "Steps between checkpoints");
  train->add_option("--holdout", holdout, "Trailing examples kept out of training");
  train->add_flag("--no-regularizers", no_regularizers, "Skip regularizer training");
  train->add_flag("--strict-determinism", strict, "Single-threaded, bitwise-reproducible execution");
  train->add_option("--stop-after", stop_after, "Checkpoint and stop after this many steps");

  std::string models_dir, modes = "none,z,adain,adain-lr";
  int trials = 5, test_count = 0;
  auto* eval = app.add_subcommand("eval", "Reconstruction and editing metrics on held-out artworks");
  common(eval, true);
  eval->add_option("--models", models_dir, "Trained artifact directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--dataset", dataset_dir, "Corpus root")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--test-count", test_count, "Trailing examples to evaluate (default: all)");
  eval->add_option("--modes", modes, "Comma-separated: none, z, adain, adain-w<value>, adain-lr");
  eval->add_option("--trials", trials, "Editing trials")->check(CLI::PositiveNumber);
  eval->add_flag("--strict-determinism", strict, "Single-threaded, bitwise-reproducible execution");

  std::string image_path;
  auto* reconstruct = app.add_subcommand("reconstruct", "Infer and reconstruct every stage of one artwork");
  common(reconstruct, true);
  reconstruct->add_option("--models", models_dir, "Trained artifact directory")->required()->check(CLI::ExistingDirectory);
  reconstruct->add_option("--image", image_path, "Artwork PNG")->required()->check(CLI::ExistingFile);

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the /v1 HTTP API");
  common(serve, false);
  serve->add_option("--models", models_dir, "Trained artifact directory")->check(CLI::ExistingDirectory);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));

  auto* features = app.add_subcommand("features", "Write the fixed feature-extractor weights");
  common(features, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const WorkflowConfig cfg = config_or_default(config_path);
      const auto examples = make_synthetic_workflow_dataset(count, cfg, seed);
      export_dataset(out_dir, examples, cfg);
      log_line("wrote " + std::to_string(examples.size()) + " examples to " + out_dir);
    } else if (stage->parsed()) {
      const WorkflowConfig cfg = config_or_default(config_path);
      std::vector<StagedExample> examples;
      for (const auto& path : png_files(input_dir)) {
        examples.push_back(
            stage_artwork(path.stem().string(), read_png(path, cfg.num_stages, cfg.channels), cfg, superpixels));
      }
      if (examples.empty()) throw dataset_error("no PNG files in " + input_dir);
      export_dataset(out_dir, examples, cfg);
      log_line("staged " + std::to_string(examples.size()) + " artworks into " + out_dir);
    } else if (validate->parsed()) {
      const Corpus corpus = load_dataset(dataset_dir);
      if (!config_path.empty() && config_hash(load_config(config_path)) != config_hash(corpus.config)) {
        throw dataset_error("corpus geometry differs from " + config_path);
      }
      std::cout << "ok: " << corpus.examples.size() << " examples, " << corpus.config.num_stages << " stages, "
                << corpus.config.image_size.height << "x" << corpus.config.image_size.width << '\n';
    } else if (train->parsed()) {
      ExperimentSpec spec;
      if (!spec_path.empty()) {
        spec = ExperimentSpec::load(spec_path);
      } else {
        spec.schedule = schedule;
        spec.holdout = holdout;
        spec.train_regularizers = !no_regularizers;
      }
      if (!config_path.empty()) spec.config_path = config_path;
      if (!dataset_dir.empty()) spec.dataset_path = dataset_dir;
      if (!out_dir.empty()) spec.output_dir = out_dir;
      if (train->count("--seed")) spec.seed = seed;
      if (strict) spec.strict_determinism = true;
      if (spec.config_path.empty() || spec.dataset_path.empty() || spec.output_dir.empty()) {
        throw CLI::RequiredError("train needs --config, --dataset and --out (or a --spec providing them)");
      }
      TrainHooks hooks{log_line, stop_after};
      const TrainSummary s = train_all(spec, hooks);
      log_line(std::string(s.completed ? "complete" : "stopped") + " after " + std::to_string(s.steps_run) +
               " steps in this run");
    } else if (eval->parsed()) {
      auto models = load_models(models_dir, config_path);
      Corpus corpus = load_dataset(dataset_dir);
      std::vector<StagedExample> test = std::move(corpus.examples);
      if (test_count > 0) test = split_dataset(std::move(test), test_count).second;
      std::vector<EvalMode> parsed;
      std::stringstream ss(modes);
      for (std::string m; std::getline(ss, m, ',');) parsed.push_back(EvalMode::parse(m));
      EvalOptions opts;
      opts.seed = seed;
      opts.trials = trials;
      opts.reconstructions_dir = fs::path(out_dir) / "reconstructions";
      opts.log = log_line;
      const auto rows = run_eval_suite(*models, test, parsed, models->config.hyper, opts);
      std::vector<EvalReport> rec, edit;
      for (const auto& r : rows) (r.group == "reconstruction" ? rec : edit).push_back(r);
      fs::create_directories(out_dir);
      write_eval_csv(fs::path(out_dir) / "eval_reconstruction.csv", rec);
      write_eval_csv(fs::path(out_dir) / "eval_editing.csv", edit);
      for (const auto& r : rows) {
        std::printf("%-14s %-8s %-6s l1=%.5f fid=%.4f+-%.4f n=%d\n", r.group.c_str(), r.method.c_str(),
                    r.w_mode.c_str(), r.l1, r.fid_mean, r.fid_std, r.n);
      }
    } else if (reconstruct->parsed()) {
      auto models = load_models(models_dir, config_path);
      SessionEngine engine(models);
      std::ifstream in(image_path, std::ios::binary);
      const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const StageImage artwork = engine.prepare_upload(bytes);
      const auto inferred = infer_all_stages(models->inf, artwork);
      std::vector<std::optional<RegularizerWeights>> regs;
      if (models->has_learned_regularizers()) regs = models->regs;
      const auto perceptual = default_perceptual_features<float>(models->config.channels);
      const Reconstruction rec = reconstruct_sequential(models->gen, inferred, models->config.hyper, regs, *perceptual,
                                                        models->config.options.alg1_input);
      const fs::path out(out_dir);
      fs::create_directories(out);
      for (std::size_t k = 0; k < inferred.size(); ++k) {
        write_png(out / ("inferred_stage" + std::to_string(k + 1) + ".png"), inferred[k]);
        write_png(out / ("reconstructed_stage" + std::to_string(k + 1) + ".png"), rec.images[k]);
      }
      bool failed = false;
      for (const auto& st : rec.states) {
        write_json(out / ("optstate_stage" + std::to_string(st.stage_index) + ".json"), st);
        failed = failed || st.failed;
      }
      std::printf("l1 %.6f\n", l1_error(rec.images.back(), artwork));
      if (failed) {
        log_line("optimization diverged; last finite parameters were written");
        return 3;
      }
    } else if (serve->parsed()) {
      std::shared_ptr<ModelBundle> models;
      if (!models_dir.empty()) models = load_models(models_dir, config_path);
      ServiceOptions opts;
      opts.session_dir = out_dir;
      Service service(models, opts);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      log_line("serving /v1 on " + host + ":" + std::to_string(port) + (models ? "" : " without a model"));
      service.serve(host, port);
      g_service = nullptr;
    } else if (features->parsed()) {
      const int channels = config_or_default(config_path).channels;
      fs::create_directories(out_dir);
      RandomConvFeatures<float>(channels, kPerceptualFeatureSeed).save(fs::path(out_dir) / "perceptual_features.ckpt");
      RandomConvFeatures<float>(channels, kFidFeatureSeed, {1, 2, 3}).save(fs::path(out_dir) / "fid_features.ckpt");
      log_line("wrote feature extractors to " + out_dir);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
