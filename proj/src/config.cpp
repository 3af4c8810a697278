// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace artflow {
namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

template <typename V>
void read_opt(const nlohmann::json& j, const char* key, V& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace

std::string ValidationReport::summary() const {
  if (ok) return "ok";
  std::string s;
  for (const auto& e : errors) {
    if (!s.empty()) s += "; ";
    s += e;
  }
  return s;
}

ValidationReport validate_config(const WorkflowConfig& cfg) {
  ValidationReport r;
  if (cfg.num_stages < 2) r.fail("num_stages must be >= 2");
  if (static_cast<int>(cfg.stage_names.size()) != cfg.num_stages) {
    r.fail("stage_names must have exactly num_stages entries");
  }
  if (std::set<std::string>(cfg.stage_names.begin(), cfg.stage_names.end()).size() !=
      cfg.stage_names.size()) {
    r.fail("stage_names must be unique");
  }
  for (const auto& n : cfg.stage_names) {
    if (n.empty()) r.fail("stage names must be non-empty");
  }
  if (cfg.latent_dim < 1) r.fail("latent_dim must be >= 1");
  if (cfg.adain_channels < 1) r.fail("adain_channels must be >= 1");
  if (cfg.channels != 1 && cfg.channels != 3) r.fail("channels must be 1 or 3");
  const auto& sz = cfg.image_size;
  if (!is_power_of_two(sz.height) || !is_power_of_two(sz.width)) {
    r.fail("image dimensions must be powers of two");
  }
  if (sz.height < 16 || sz.width < 16) r.fail("image dimensions must be >= 16");

  const auto& h = cfg.hyper;
  const double scalars[] = {h.lambda_c, h.lambda_1,   h.lambda_p,  h.lambda_latent, h.lambda_kl,
                            h.lambda_gan, h.alpha,    h.eta,       h.lr};
  for (double s : scalars) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      r.fail("hyperparameter scalars must be finite and >= 0");
      break;
    }
  }
  if (h.T < 1) r.fail("T must be >= 1");
  if (h.T_reg < 1) r.fail("T_reg must be >= 1");
  if (h.batch_size < 1) r.fail("batch_size must be >= 1");
  if (!(h.adam_beta1 >= 0 && h.adam_beta1 < 1) || !(h.adam_beta2 >= 0 && h.adam_beta2 < 1)) {
    r.fail("adam betas must lie in [0, 1)");
  }

  const auto& a = cfg.arch;
  if (a.mapping_hidden < 1 || a.encoder_channels < 1 || a.discriminator_channels < 1 ||
      a.inference_channels < 1) {
    r.fail("architecture widths must be >= 1");
  }
  const auto& st = cfg.staging;
  if (st.median_kernel < 1 || st.median_kernel % 2 == 0) r.fail("median_kernel must be odd and >= 1");
  if (st.slic_iterations < 1) r.fail("slic_iterations must be >= 1");
  const auto& o = cfg.options;
  if (!(o.teacher_forcing >= 0 && o.teacher_forcing <= 1)) r.fail("teacher_forcing must lie in [0, 1]");
  if (o.l2r_warmup_steps < 0) r.fail("l2r_warmup_steps must be >= 0");
  if (o.l2r_optimizer != "adam" && o.l2r_optimizer != "sgd") r.fail("l2r_optimizer must be adam or sgd");
  if (o.alg1_input != "optimized" && o.alg1_input != "inferred") {
    r.fail("alg1_input must be optimized or inferred");
  }
  return r;
}

void require_valid(const WorkflowConfig& cfg) {
  const auto report = validate_config(cfg);
  if (!report.ok) throw std::invalid_argument("invalid workflow config: " + report.summary());
}

void to_json(nlohmann::json& j, const HyperParams& h) {
  j = nlohmann::json{{"lambda_c", h.lambda_c},   {"lambda_1", h.lambda_1},
                     {"lambda_p", h.lambda_p},   {"lambda_latent", h.lambda_latent},
                     {"lambda_kl", h.lambda_kl}, {"lambda_gan", h.lambda_gan},
                     {"alpha", h.alpha},         {"T", h.T},
                     {"eta", h.eta},             {"T_reg", h.T_reg},
                     {"lr", h.lr},               {"batch_size", h.batch_size},
                     {"adam_beta1", h.adam_beta1}, {"adam_beta2", h.adam_beta2}};
}

void from_json(const nlohmann::json& j, HyperParams& h) {
  read_opt(j, "lambda_c", h.lambda_c);
  read_opt(j, "lambda_1", h.lambda_1);
  read_opt(j, "lambda_p", h.lambda_p);
  read_opt(j, "lambda_latent", h.lambda_latent);
  read_opt(j, "lambda_kl", h.lambda_kl);
  read_opt(j, "lambda_gan", h.lambda_gan);
  read_opt(j, "alpha", h.alpha);
  read_opt(j, "T", h.T);
  read_opt(j, "eta", h.eta);
  read_opt(j, "T_reg", h.T_reg);
  read_opt(j, "lr", h.lr);
  read_opt(j, "batch_size", h.batch_size);
  read_opt(j, "adam_beta1", h.adam_beta1);
  read_opt(j, "adam_beta2", h.adam_beta2);
}

void to_json(nlohmann::json& j, const WorkflowConfig& cfg) {
  j = nlohmann::json{
      {"num_stages", cfg.num_stages},
      {"stage_names", cfg.stage_names},
      {"image_size", {{"height", cfg.image_size.height}, {"width", cfg.image_size.width}}},
      {"channels", cfg.channels},
      {"latent_dim", cfg.latent_dim},
      {"adain_channels", cfg.adain_channels},
      {"hyper", cfg.hyper},
      {"arch",
       {{"mapping_hidden", cfg.arch.mapping_hidden},
        {"encoder_channels", cfg.arch.encoder_channels},
        {"discriminator_channels", cfg.arch.discriminator_channels},
        {"inference_channels", cfg.arch.inference_channels}}},
      {"staging",
       {{"sketch_threshold", cfg.staging.sketch_threshold},
        {"slic_compactness", cfg.staging.slic_compactness},
        {"slic_iterations", cfg.staging.slic_iterations},
        {"median_kernel", cfg.staging.median_kernel}}},
      {"options",
       {{"teacher_forcing", cfg.options.teacher_forcing},
        {"l2r_warmup_steps", cfg.options.l2r_warmup_steps},
        {"l2r_optimizer", cfg.options.l2r_optimizer},
        {"alg1_input", cfg.options.alg1_input},
        {"resample_keep_delta", cfg.options.resample_keep_delta}}},
  };
}

void from_json(const nlohmann::json& j, WorkflowConfig& cfg) {
  read_opt(j, "num_stages", cfg.num_stages);
  read_opt(j, "stage_names", cfg.stage_names);
  if (auto it = j.find("image_size"); it != j.end()) {
    read_opt(*it, "height", cfg.image_size.height);
    read_opt(*it, "width", cfg.image_size.width);
  }
  read_opt(j, "channels", cfg.channels);
  read_opt(j, "latent_dim", cfg.latent_dim);
  read_opt(j, "adain_channels", cfg.adain_channels);
  read_opt(j, "hyper", cfg.hyper);
  if (auto it = j.find("arch"); it != j.end()) {
    read_opt(*it, "mapping_hidden", cfg.arch.mapping_hidden);
    read_opt(*it, "encoder_channels", cfg.arch.encoder_channels);
    read_opt(*it, "discriminator_channels", cfg.arch.discriminator_channels);
    read_opt(*it, "inference_channels", cfg.arch.inference_channels);
  }
  if (auto it = j.find("staging"); it != j.end()) {
    read_opt(*it, "sketch_threshold", cfg.staging.sketch_threshold);
    read_opt(*it, "slic_compactness", cfg.staging.slic_compactness);
    read_opt(*it, "slic_iterations", cfg.staging.slic_iterations);
    read_opt(*it, "median_kernel", cfg.staging.median_kernel);
  }
  if (auto it = j.find("options"); it != j.end()) {
    read_opt(*it, "teacher_forcing", cfg.options.teacher_forcing);
    read_opt(*it, "l2r_warmup_steps", cfg.options.l2r_warmup_steps);
    read_opt(*it, "l2r_optimizer", cfg.options.l2r_optimizer);
    read_opt(*it, "alg1_input", cfg.options.alg1_input);
    read_opt(*it, "resample_keep_delta", cfg.options.resample_keep_delta);
  }
}

WorkflowConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed config " + path.string() + ": " + e.what());
  }
  return j.get<WorkflowConfig>();
}

void save_config(const WorkflowConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << nlohmann::json(cfg).dump(2) << '\n';
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const WorkflowConfig& cfg) {
  const nlohmann::json j = {
      {"num_stages", cfg.num_stages},
      {"stage_names", cfg.stage_names},
      {"image_size", {cfg.image_size.height, cfg.image_size.width}},
      {"channels", cfg.channels},
      {"latent_dim", cfg.latent_dim},
      {"adain_channels", cfg.adain_channels},
      {"arch",
       {cfg.arch.mapping_hidden, cfg.arch.encoder_channels, cfg.arch.discriminator_channels,
        cfg.arch.inference_channels}},
  };
  const std::string s = j.dump();
  return fnv1a(s.data(), s.size());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace artflow
