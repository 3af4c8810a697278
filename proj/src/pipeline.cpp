// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "artflow/dataset.hpp"
#include "artflow/models.hpp"
#include "artflow/regularizer.hpp"
#include "artflow/training.hpp"

namespace artflow {

namespace fs = std::filesystem;

void to_json(nlohmann::json& j, const PhaseSchedule& s) {
  j = {{"inference_separate", s.inference_separate}, {"inference_joint", s.inference_joint},
       {"generation_separate", s.generation_separate}, {"generation_joint", s.generation_joint},
       {"regularizer", s.regularizer}, {"checkpoint_every", s.checkpoint_every}};
}

void from_json(const nlohmann::json& j, PhaseSchedule& s) {
  s.inference_separate = j.value("inference_separate", s.inference_separate);
  s.inference_joint = j.value("inference_joint", s.inference_joint);
  s.generation_separate = j.value("generation_separate", s.generation_separate);
  s.generation_joint = j.value("generation_joint", s.generation_joint);
  s.regularizer = j.value("regularizer", s.regularizer);
  s.checkpoint_every = j.value("checkpoint_every", s.checkpoint_every);
}

void to_json(nlohmann::json& j, const ExperimentSpec& s) {
  j = {{"config", s.config_path.string()}, {"dataset", s.dataset_path.string()},
       {"schedule", s.schedule},           {"seed", s.seed},
       {"output", s.output_dir.string()},  {"holdout", s.holdout},
       {"train_regularizers", s.train_regularizers}, {"strict_determinism", s.strict_determinism},
       {"hyper_overrides", s.hyper_overrides}};
}

void from_json(const nlohmann::json& j, ExperimentSpec& s) {
  s.config_path = j.at("config").get<std::string>();
  s.dataset_path = j.at("dataset").get<std::string>();
  s.schedule = j.value("schedule", PhaseSchedule{});
  s.seed = j.value("seed", s.seed);
  s.output_dir = j.value("output", std::string{});
  s.holdout = j.value("holdout", s.holdout);
  s.train_regularizers = j.value("train_regularizers", s.train_regularizers);
  s.strict_determinism = j.value("strict_determinism", s.strict_determinism);
  s.hyper_overrides = j.value("hyper_overrides", nlohmann::json::object());
}

ExperimentSpec ExperimentSpec::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment spec " + path.string());
  ExperimentSpec s = nlohmann::json::parse(in).get<ExperimentSpec>();
  const fs::path base = path.parent_path();
  auto resolve = [&](fs::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(s.config_path);
  resolve(s.dataset_path);
  resolve(s.output_dir);
  return s;
}

WorkflowConfig apply_overrides(WorkflowConfig cfg, const nlohmann::json& hyper_overrides) {
  if (!hyper_overrides.is_null() && !hyper_overrides.empty()) from_json(hyper_overrides, cfg.hyper);
  return cfg;
}

namespace {

struct Unit {
  std::string phase;
  int stage = 0;  // 0 for joint phases
  int steps = 0;
  std::uint64_t tag = 0;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json_atomic(const fs::path& path, const nlohmann::json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

class Run {
 public:
  Run(const ExperimentSpec& spec, const TrainHooks& hooks) : spec_(spec), hooks_(hooks) {}

  TrainSummary execute();

 private:
  void log(const std::string& m) {
    if (hooks_.log) hooks_.log(m);
  }
  std::vector<Unit> plan() const;
  std::vector<int> batch_indices(Rng& rng) const;
  void record(long long step, const std::string& prefix, const LossBreakdown& b);
  void record(long long step, const std::string& name, double value);
  void step_unit(const Unit& u, int s);
  void checkpoint(std::size_t unit, int step);
  void restore();
  void write_manifest(const std::string& status);

  const ExperimentSpec& spec_;
  const TrainHooks& hooks_;
  WorkflowConfig cfg_;
  std::uint64_t hash_ = 0;
  ModelBundle models_;
  std::vector<StagedExample> train_;
  std::vector<std::unique_ptr<InferenceTrainer<float>>> inf_tr_;
  std::vector<std::unique_ptr<GenerationTrainer<float>>> gen_tr_;
  std::vector<L2RTrainState> l2r_;
  std::vector<Unit> units_;
  std::size_t unit_ = 0;
  int step_ = 0;
  long long global_step_ = 0;
  std::string pending_csv_;
  bool resumed_ = false;
};

std::vector<Unit> Run::plan() const {
  const int n = cfg_.num_stages;
  const auto& s = spec_.schedule;
  std::vector<Unit> u;
  for (int k = n - 1; k >= 1; --k) u.push_back({"inference_separate", k, s.inference_separate, 1});
  u.push_back({"inference_joint", 0, s.inference_joint, 2});
  for (int k = 1; k <= n - 1; ++k) u.push_back({"generation_separate", k, s.generation_separate, 3});
  u.push_back({"generation_joint", 0, s.generation_joint, 4});
  if (spec_.train_regularizers) {
    const int steps = s.regularizer >= 0 ? s.regularizer : cfg_.hyper.T_reg;
    for (int k = 1; k <= n - 1; ++k) u.push_back({"regularizer", k, steps, 5});
  }
  return u;
}

std::vector<int> Run::batch_indices(Rng& rng) const {
  std::vector<int> idx(static_cast<std::size_t>(cfg_.hyper.batch_size));
  for (auto& i : idx) i = rng.uniform_int(0, static_cast<int>(train_.size()) - 1);
  return idx;
}

void Run::record(long long step, const std::string& name, double value) {
  pending_csv_ += std::to_string(step) + ',' + name + ',' + fmt(value) + '\n';
}

void Run::record(long long step, const std::string& prefix, const LossBreakdown& b) {
  record(step, prefix + "/total", b.total);
  for (const auto& t : b.terms) record(step, prefix + '/' + t.name, t.value);
  for (const auto& t : b.extras) record(step, prefix + '/' + t.name, t.value);
}

void Run::step_unit(const Unit& u, int s) {
  const int n = cfg_.num_stages;
  const double tf = cfg_.options.teacher_forcing;
  Rng rng(Rng::derive(spec_.seed, {u.tag, static_cast<std::uint64_t>(u.stage), static_cast<std::uint64_t>(s)}));
  const std::string stage_name = "stage" + std::to_string(u.stage);

  if (u.phase == "inference_separate" || u.phase == "generation_separate") {
    const auto idx = batch_indices(rng);
    std::vector<StageImage> xs, ys;
    for (int i : idx) {
      xs.push_back(train_[i].images[u.stage - 1]);
      ys.push_back(train_[i].images[u.stage]);
    }
    if (u.phase == "inference_separate") {
      record(global_step_, u.phase + '/' + stage_name, inf_tr_[u.stage - 1]->step(xs, ys));
    } else {
      record(global_step_, u.phase + '/' + stage_name,
             gen_tr_[u.stage - 1]->step(xs, ys, rng, &models_.inf[u.stage - 1]));
    }
    return;
  }

  if (u.phase == "inference_joint") {
    const auto idx = batch_indices(rng);
    std::vector<StageImage> inputs;
    for (int i : idx) inputs.push_back(train_[i].images[n - 1]);
    for (int k = n - 1; k >= 1; --k) {
      std::vector<StageImage> xs;
      for (int i : idx) xs.push_back(train_[i].images[k - 1]);
      if (k < n - 1) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
          if (rng.uniform() < tf) inputs[b] = train_[idx[b]].images[k];
        }
      }
      record(global_step_, u.phase + "/stage" + std::to_string(k), inf_tr_[k - 1]->step(xs, inputs));
      for (auto& in : inputs) in = infer_prev(models_.inf[k - 1], in);
    }
    return;
  }

  if (u.phase == "generation_joint") {
    const auto idx = batch_indices(rng);
    std::vector<StageImage> inputs;
    for (int i : idx) inputs.push_back(train_[i].images[0]);
    for (int k = 1; k <= n - 1; ++k) {
      std::vector<StageImage> ys;
      for (int i : idx) ys.push_back(train_[i].images[k]);
      if (k > 1) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
          if (rng.uniform() < tf) inputs[b] = train_[idx[b]].images[k - 1];
        }
      }
      record(global_step_, u.phase + "/stage" + std::to_string(k),
             gen_tr_[k - 1]->step(inputs, ys, rng, &models_.inf[k - 1]));
      const auto& net = models_.gen[k - 1];
      for (std::size_t b = 0; b < idx.size(); ++b) {
        inputs[b] = generate_next(net, inputs[b], latent_to_adain(net, encode_latent(net, ys[b])));
      }
    }
    return;
  }

  // regularizer
  auto& state = l2r_[u.stage - 1];
  HyperParams h = cfg_.hyper;
  const auto features = default_perceptual_features<float>(cfg_.channels);
  const L2RTriple triple = sample_l2r_triple(train_, u.stage, spec_.seed, s);
  const auto skipped_before = state.skipped_steps.size();
  l2r_train_step(models_.gen[u.stage - 1], state, triple, h, *features, L2ROptions::from(cfg_.options));
  if (state.skipped_steps.size() == skipped_before) {
    record(global_step_, "regularizer/" + stage_name + "/ada", state.loss_history.back().first);
    record(global_step_, "regularizer/" + stage_name + "/gan", state.loss_history.back().second);
  } else {
    record(global_step_, "regularizer/" + stage_name + "/skipped", 1.0);
  }
}

void Run::checkpoint(std::size_t unit, int step) {
  const fs::path& dir = spec_.output_dir;
  for (int k = 1; k < cfg_.num_stages; ++k) {
    {
      Checkpoint c;
      c.kind = "generation";
      c.stage_index = k;
      c.config_hash = hash_;
      c.iteration = global_step_;
      c.meta = {{"seed", spec_.seed}};
      const auto& net = models_.gen[k - 1];
      export_params(net.encoder_params(), c.tensors);
      export_params(net.generator_params(), c.tensors);
      export_params(net.discriminator_params(), c.tensors);
      export_adam(gen_tr_[k - 1]->eg_optimizer(), "opt.eg", c.tensors);
      export_adam(gen_tr_[k - 1]->d_optimizer(), "opt.d", c.tensors);
      write_checkpoint(generation_checkpoint_path(dir, k), c);
    }
    {
      Checkpoint c;
      c.kind = "inference";
      c.stage_index = k;
      c.config_hash = hash_;
      c.iteration = global_step_;
      c.meta = {{"seed", spec_.seed}};
      const auto& net = models_.inf[k - 1];
      export_params(net.generator_params(), c.tensors);
      export_params(net.discriminator_params(), c.tensors);
      export_adam(inf_tr_[k - 1]->g_optimizer(), "opt.g", c.tensors);
      export_adam(inf_tr_[k - 1]->d_optimizer(), "opt.d", c.tensors);
      write_checkpoint(inference_checkpoint_path(dir, k), c);
    }
  }
  for (std::size_t u = 0; u < units_.size() && u <= unit; ++u) {
    if (units_[u].phase != "regularizer") continue;
    const int k = units_[u].stage;
    const auto& st = l2r_[k - 1];
    Checkpoint c;
    c.kind = "regularizer";
    c.stage_index = k;
    c.config_hash = hash_;
    c.iteration = st.outer_step;
    c.meta = {{"seed", spec_.seed}, {"skipped_steps", st.skipped_steps}};
    c.tensors.push_back({"w", {static_cast<int>(st.reg.w.size())}, st.reg.w});
    c.tensors.push_back({"opt.t", {1}, {static_cast<double>(st.optimizer.steps())}});
    c.tensors.push_back({"opt.m", {static_cast<int>(st.reg.w.size())}, st.optimizer.first_moment()});
    c.tensors.push_back({"opt.v", {static_cast<int>(st.reg.w.size())}, st.optimizer.second_moment()});
    write_checkpoint(regularizer_checkpoint_path(dir, k), c);
  }

  const fs::path csv = dir / "losses.csv";
  {
    std::ofstream out(csv, std::ios::app);
    out << pending_csv_;
    if (!out) throw std::runtime_error("cannot append to " + csv.string());
  }
  pending_csv_.clear();
  write_json_atomic(dir / "progress.json", {{"unit", unit},
                                            {"step", step},
                                            {"global_step", global_step_},
                                            {"csv_bytes", fs::file_size(csv)},
                                            {"config_hash", hash_hex(hash_)},
                                            {"seed", spec_.seed}});
}

void Run::restore() {
  const fs::path& dir = spec_.output_dir;
  std::ifstream in(dir / "progress.json");
  const auto p = nlohmann::json::parse(in);
  if (p.at("config_hash").get<std::string>() != hash_hex(hash_) || p.at("seed").get<std::uint64_t>() != spec_.seed) {
    throw std::runtime_error("output directory " + dir.string() + " holds a run with a different config or seed");
  }
  unit_ = p.at("unit").get<std::size_t>();
  step_ = p.at("step").get<int>();
  global_step_ = p.at("global_step").get<long long>();
  fs::resize_file(dir / "losses.csv", p.at("csv_bytes").get<std::uintmax_t>());
  for (int k = 1; k < cfg_.num_stages; ++k) {
    const Checkpoint g = read_checkpoint(generation_checkpoint_path(dir, k), "generation", k, hash_);
    for (auto* group : models_.gen[k - 1].groups()) import_params(*group, g);
    import_adam(gen_tr_[k - 1]->eg_optimizer(), "opt.eg", g);
    import_adam(gen_tr_[k - 1]->d_optimizer(), "opt.d", g);
    const Checkpoint i = read_checkpoint(inference_checkpoint_path(dir, k), "inference", k, hash_);
    for (auto* group : models_.inf[k - 1].groups()) import_params(*group, i);
    import_adam(inf_tr_[k - 1]->g_optimizer(), "opt.g", i);
    import_adam(inf_tr_[k - 1]->d_optimizer(), "opt.d", i);
  }
  for (std::size_t u = 0; u < units_.size() && u <= unit_; ++u) {
    if (units_[u].phase != "regularizer") continue;
    const int k = units_[u].stage;
    const fs::path path = regularizer_checkpoint_path(dir, k);
    if (!fs::exists(path)) continue;
    const Checkpoint c = read_checkpoint(path, "regularizer", k, hash_);
    auto& st = l2r_[k - 1];
    st.reg.w = c.find("w")->data;
    st.outer_step = static_cast<int>(c.iteration);
    st.skipped_steps = c.meta.value("skipped_steps", std::vector<int>{});
    st.optimizer.restore(static_cast<std::int64_t>(c.find("opt.t")->data.at(0)), c.find("opt.m")->data,
                         c.find("opt.v")->data);
  }
  resumed_ = true;
}

void Run::write_manifest(const std::string& status) {
  nlohmann::json phases = nlohmann::json::array();
  nlohmann::json ckpts = nlohmann::json::array();
  for (const auto& u : units_) phases.push_back({{"phase", u.phase}, {"stage", u.stage}, {"steps", u.steps}});
  for (int k = 1; k < cfg_.num_stages; ++k) {
    ckpts.push_back(generation_checkpoint_path("", k).string());
    ckpts.push_back(inference_checkpoint_path("", k).string());
    if (spec_.train_regularizers) ckpts.push_back(regularizer_checkpoint_path("", k).string());
  }
  write_json_atomic(spec_.output_dir / "manifest.json",
                    {{"format", "artflow-run-1"},
                     {"status", status},
                     {"config_hash", hash_hex(hash_)},
                     {"seed", spec_.seed},
                     {"strict_determinism", spec_.strict_determinism},
                     {"spec", spec_},
                     {"train_examples", train_.size()},
                     {"phases", phases},
                     {"global_step", global_step_},
                     {"checkpoints", ckpts},
                     {"loss_curves", "losses.csv"}});
}

TrainSummary Run::execute() {
  cfg_ = apply_overrides(load_config(spec_.config_path), spec_.hyper_overrides);
  require_valid(cfg_);
  hash_ = config_hash(cfg_);
  Corpus corpus = load_dataset(spec_.dataset_path);
  if (corpus.config.image_size != cfg_.image_size || corpus.config.num_stages != cfg_.num_stages ||
      corpus.config.channels != cfg_.channels) {
    throw dataset_error("dataset " + spec_.dataset_path.string() + " does not match the workflow geometry");
  }
  auto split = split_dataset(std::move(corpus.examples), spec_.holdout);
  train_ = std::move(split.first);
  if (train_.size() < 2) throw dataset_error("training needs at least two examples");

  fs::create_directories(spec_.output_dir);
  models_ = ModelBundle::initialize(cfg_, spec_.seed);
  for (int k = 1; k < cfg_.num_stages; ++k) {
    inf_tr_.push_back(std::make_unique<InferenceTrainer<float>>(models_.inf[k - 1], cfg_.hyper));
    gen_tr_.push_back(std::make_unique<GenerationTrainer<float>>(models_.gen[k - 1], cfg_.hyper));
    l2r_.push_back(L2RTrainState::start(k, cfg_.adain_channels, cfg_.hyper));
  }
  units_ = plan();

  TrainSummary summary;
  summary.dir = spec_.output_dir;
  for (const auto& u : units_) summary.total_steps += u.steps;
  if (fs::exists(spec_.output_dir / "progress.json")) {
    restore();
    log("resuming at " + (unit_ < units_.size() ? units_[unit_].phase : std::string("end")) + " step " +
        std::to_string(step_));
  } else {
    save_config(cfg_, spec_.output_dir / "config.json");
    std::ofstream(spec_.output_dir / "losses.csv") << "iteration,loss_name,value\n";
    checkpoint(0, 0);
  }
  write_manifest("running");
  summary.resumed = resumed_;

  const int every = std::max(1, spec_.schedule.checkpoint_every);
  for (; unit_ < units_.size(); ++unit_, step_ = 0) {
    const Unit& u = units_[unit_];
    if (step_ == 0 && u.steps > 0) log(u.phase + (u.stage ? " stage " + std::to_string(u.stage) : std::string{}));
    while (step_ < u.steps) {
      try {
        step_unit(u, step_);
      } catch (const non_finite_loss& e) {
        write_json_atomic(spec_.output_dir / "failure.json",
                          {{"phase", u.phase}, {"stage", u.stage}, {"step", step_}, {"error", e.what()}});
        write_manifest("failed");
        throw;
      }
      ++step_;
      ++global_step_;
      ++summary.steps_run;
      const bool stop = hooks_.stop_after_steps >= 0 && summary.steps_run >= hooks_.stop_after_steps;
      if (step_ % every == 0 || step_ == u.steps || stop) {
        if (step_ == u.steps) {
          checkpoint(unit_ + 1, 0);
        } else {
          checkpoint(unit_, step_);
        }
      }
      if (stop && !(unit_ + 1 == units_.size() && step_ == u.steps)) {
        write_manifest("interrupted");
        log("stopped after " + std::to_string(summary.steps_run) + " steps");
        return summary;
      }
    }
  }
  checkpoint(units_.size(), 0);
  write_manifest("complete");
  summary.completed = true;
  return summary;
}

}  // namespace

TrainSummary train_all(const ExperimentSpec& spec, const TrainHooks& hooks) {
  if (spec.output_dir.empty()) throw std::invalid_argument("train_all: output directory required");
  if (!fs::exists(spec.config_path)) throw std::invalid_argument("config not found: " + spec.config_path.string());
  if (!fs::exists(spec.dataset_path)) throw std::invalid_argument("dataset not found: " + spec.dataset_path.string());
  const auto& s = spec.schedule;
  if (s.inference_separate < 0 || s.inference_joint < 0 || s.generation_separate < 0 || s.generation_joint < 0) {
    throw std::invalid_argument("train_all: iteration counts must be >= 0");
  }
  Run run(spec, hooks);
  return run.execute();
}

}  // namespace artflow
