// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "artflow/adain_optimization.hpp"
#include "artflow/models.hpp"

namespace artflow {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws image_error on malformed input.
std::vector<std::uint8_t> base64_decode(const std::string& text);

struct ReconstructOutcome {
  bool failed = false;
  std::string failure;
  double l1 = 0.0;          // final stage against the uploaded artwork
  double l1_forward = 0.0;  // same, with every delta left at zero
  std::vector<std::vector<double>> traces;  // per-stage loss trace
};

void to_json(nlohmann::json& j, const ReconstructOutcome& r);

/// Stage images are held at 8-bit precision.
struct SessionState {
  std::vector<StageImage> images;   // stages 1..N
  std::vector<AdaINParams> params;  // stages 1..N-1
  std::vector<LatentCode> latents;
  std::optional<ReconstructOutcome> reconstruction;  // cleared by any later change

  bool operator==(const SessionState& o) const;
};

struct SessionEvent {
  std::string type;  // upload | reconstruct | resample | edit | undo
  int stage = 0;
  std::uint64_t seed = 0;
  std::optional<StageImage> image;
};

struct Session {
  std::string id;
  StageImage artwork;
  SessionState state;
  std::vector<SessionState> undo_stack;
  std::vector<SessionEvent> history;
};

/// Event log with images as base64 PNG.
nlohmann::json session_log(const Session& s);

class session_error : public std::runtime_error {
 public:
  session_error(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Session operations on a loaded bundle. Not thread-safe; the service
/// drives it from a single worker.
class SessionEngine {
 public:
  explicit SessionEngine(std::shared_ptr<const ModelBundle> models);

  const ModelBundle& models() const { return *models_; }

  /// Decodes, resizes to the model geometry and quantizes an upload.
  StageImage prepare_upload(std::span<const std::uint8_t> bytes) const;
  /// Decodes a stage image; throws session_error(400) on a geometry mismatch.
  StageImage prepare_stage_image(std::span<const std::uint8_t> bytes, int stage) const;

  Session create(std::string id, const StageImage& artwork) const;
  ReconstructOutcome reconstruct(Session& s, const std::function<void(int, const OptState&)>& progress = {}) const;
  void resample(Session& s, int stage, std::uint64_t seed) const;
  void edit(Session& s, int stage, const StageImage& image) const;
  void undo(Session& s) const;

  /// Rebuilds a session by re-running its event log.
  Session replay(const nlohmann::json& log) const;

 private:
  void check_stage(int stage, int lo, int hi) const;
  void push_undo(Session& s) const;
  /// Regenerates stages stage+1..N from stage `stage`, quantized to 8 bits.
  void regenerate(SessionState& st, int stage) const;

  std::shared_ptr<const ModelBundle> models_;
  std::shared_ptr<const FeatureExtractor<float>> features_;
};

/// Runs jobs one at a time in submission order on its own thread.
class ModelWorker {
 public:
  ModelWorker();
  ~ModelWorker();
  ModelWorker(const ModelWorker&) = delete;
  ModelWorker& operator=(const ModelWorker&) = delete;

  std::future<void> submit(std::function<void()> job);

 private:
  void run();

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::packaged_task<void()>> queue_;
  bool stopping_ = false;
  std::thread thread_;
};

struct ServiceOptions {
  std::filesystem::path session_dir;  // event logs are written here when set
};

/// The /v1 HTTP API. A null bundle serves health and metadata only.
class Service {
 public:
  Service(std::shared_ptr<const ModelBundle> models, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void serve(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace artflow
