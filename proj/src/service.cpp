// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/service.hpp"

#include <sodium.h>

#include <atomic>
#include <fstream>
#include <map>

#include "artflow/evaluation.hpp"
#include "artflow/image_io.hpp"
// After Eigen: resolv.h defines _res.
#include "httplib.h"

namespace artflow {

namespace fs = std::filesystem;
using nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  const std::size_t len = sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(len, '\0');
  sodium_bin2base64(out.data(), len, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(len - 1);
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \r\n", &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw image_error("malformed base64 image");
  }
  out.resize(len);
  return out;
}

void to_json(json& j, const ReconstructOutcome& r) {
  j = {{"failed", r.failed}, {"l1", r.l1}, {"l1_forward", r.l1_forward}, {"traces", r.traces}};
  if (r.failed) j["failure"] = r.failure;
}

bool SessionState::operator==(const SessionState& o) const {
  if (images.size() != o.images.size() || params.size() != o.params.size()) return false;
  for (std::size_t i = 0; i < images.size(); ++i)
    if (!identical(images[i], o.images[i])) return false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].base != o.params[i].base || params[i].delta != o.params[i].delta) return false;
  }
  return true;
}

namespace {

std::string encode_image(const StageImage& img) { return base64_encode(encode_png(img)); }

json event_json(const SessionEvent& e) {
  json j = {{"type", e.type}};
  if (e.stage) j["stage"] = e.stage;
  if (e.type == "resample") j["seed"] = e.seed;
  if (e.image) j["image"] = encode_image(*e.image);
  return j;
}

}  // namespace

json session_log(const Session& s) {
  json events = json::array();
  for (const auto& e : s.history) events.push_back(event_json(e));
  return {{"format", "artflow-session-1"}, {"id", s.id}, {"events", events}};
}

SessionEngine::SessionEngine(std::shared_ptr<const ModelBundle> models)
    : models_(std::move(models)),
      features_(default_perceptual_features<float>(models_->config.channels)) {}

void SessionEngine::check_stage(int stage, int lo, int hi) const {
  if (stage < lo || stage > hi) {
    throw session_error(400, "stage " + std::to_string(stage) + " outside [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]");
  }
}

StageImage SessionEngine::prepare_upload(std::span<const std::uint8_t> bytes) const {
  const auto& cfg = models_->config;
  StageImage img = decode_png(bytes, cfg.num_stages, cfg.channels);
  if (img.height() != cfg.image_size.height || img.width() != cfg.image_size.width) {
    img = resize_bilinear(img, cfg.image_size.height, cfg.image_size.width);
    quantize8(img);
  }
  return img;
}

StageImage SessionEngine::prepare_stage_image(std::span<const std::uint8_t> bytes, int stage) const {
  const auto& cfg = models_->config;
  check_stage(stage, 1, cfg.num_stages);
  StageImage img = decode_png(bytes, stage, cfg.channels);
  if (img.height() != cfg.image_size.height || img.width() != cfg.image_size.width) {
    throw session_error(400, "image is " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                                 ", model expects " + std::to_string(cfg.image_size.height) + "x" +
                                 std::to_string(cfg.image_size.width));
  }
  return img;
}

Session SessionEngine::create(std::string id, const StageImage& artwork) const {
  Session s;
  s.id = std::move(id);
  s.artwork = artwork;
  s.state.images = infer_all_stages(models_->inf, artwork);
  for (auto& img : s.state.images) quantize8(img);
  for (int k = 0; k + 1 < models_->num_stages(); ++k) {
    const auto& net = models_->gen[k];
    LatentCode z = encode_latent(net, s.state.images[k + 1]);
    s.state.params.push_back(latent_to_adain(net, z));
    s.state.latents.push_back(std::move(z));
  }
  s.history.push_back({"upload", 0, 0, artwork});
  return s;
}

void SessionEngine::push_undo(Session& s) const { s.undo_stack.push_back(s.state); }

void SessionEngine::regenerate(SessionState& st, int stage) const {
  for (int k = stage; k < models_->num_stages(); ++k) {
    st.images[k] = generate_next(models_->gen[k - 1], st.images[k - 1], st.params[k - 1]);
    quantize8(st.images[k]);
  }
}

ReconstructOutcome SessionEngine::reconstruct(Session& s,
                                              const std::function<void(int, const OptState&)>& progress) const {
  s.history.push_back({"reconstruct", 0, 0, std::nullopt});
  if (s.state.reconstruction) return *s.state.reconstruction;

  const auto& m = *models_;
  const HyperParams& hyper = m.config.hyper;
  ReconstructOutcome out;
  const Reconstruction forward = reconstruct_with_mode(m, s.state.images, EvalMode::parse("none"), hyper, *features_);
  out.l1_forward = l1_error(forward.images.back(), s.artwork);

  std::vector<std::optional<RegularizerWeights>> regs;
  if (m.has_learned_regularizers()) regs = m.regs;
  int stage = 0;
  const Reconstruction rec = reconstruct_sequential(m.gen, s.state.images, hyper, regs, *features_,
                                                    m.config.options.alg1_input, [&](const OptState& st) {
                                                      if (progress) progress(++stage, st);
                                                    });
  for (const auto& st : rec.states) {
    out.traces.push_back(st.loss_trace);
    if (st.failed && !out.failed) {
      out.failed = true;
      out.failure = "stage " + std::to_string(st.stage_index) + ": " + st.failure;
    }
  }
  SessionState next = s.state;
  next.params.clear();
  for (const auto& st : rec.states) next.params.push_back(st.ada);
  regenerate(next, 1);
  out.l1 = l1_error(next.images.back(), s.artwork);
  if (out.failed) return out;

  push_undo(s);
  s.state = std::move(next);
  for (std::size_t k = 0; k < rec.states.size(); ++k) {
    if (rec.states[k].latent) s.state.latents[k] = *rec.states[k].latent;
  }
  s.state.reconstruction = out;
  return out;
}

void SessionEngine::resample(Session& s, int stage, std::uint64_t seed) const {
  const auto& m = *models_;
  check_stage(stage, 1, m.num_stages() - 1);
  push_undo(s);
  const LatentCode z = sample_latent(seed, stage, m.config);
  AdaINParams fresh = latent_to_adain(m.gen[stage - 1], z);
  if (m.config.options.resample_keep_delta) fresh.delta = s.state.params[stage - 1].delta;
  s.state.params[stage - 1] = std::move(fresh);
  regenerate(s.state, stage);
  s.state.latents[stage - 1] = z;
  s.state.reconstruction.reset();
  s.history.push_back({"resample", stage, seed, std::nullopt});
}

void SessionEngine::edit(Session& s, int stage, const StageImage& image) const {
  const auto& m = *models_;
  check_stage(stage, 1, m.num_stages());
  if (!image.same_geometry(s.state.images[0])) throw session_error(400, "edited image geometry does not match");
  push_undo(s);
  StageImage img = image;
  img.stage_index = stage;
  quantize8(img);
  s.state.images[stage - 1] = img;
  regenerate(s.state, stage);
  s.state.reconstruction.reset();
  s.history.push_back({"edit", stage, 0, img});
}

void SessionEngine::undo(Session& s) const {
  if (s.undo_stack.empty()) throw session_error(409, "nothing to undo");
  s.state = std::move(s.undo_stack.back());
  s.undo_stack.pop_back();
  s.history.push_back({"undo", 0, 0, std::nullopt});
}

Session SessionEngine::replay(const json& log) const {
  const auto& events = log.at("events");
  if (events.empty() || events[0].at("type") != "upload") throw session_error(400, "log must start with an upload");
  Session s;
  for (const auto& e : events) {
    const std::string type = e.at("type");
    if (type == "upload") {
      if (!s.history.empty()) throw session_error(400, "log has a second upload");
      const auto bytes = base64_decode(e.at("image"));
      s = create(log.value("id", std::string{}), decode_png(bytes, models_->num_stages(), models_->config.channels));
    } else if (type == "reconstruct") {
      reconstruct(s);
    } else if (type == "resample") {
      resample(s, e.at("stage"), e.at("seed"));
    } else if (type == "edit") {
      const int stage = e.at("stage");
      edit(s, stage, decode_png(base64_decode(e.at("image")), stage, models_->config.channels));
    } else if (type == "undo") {
      undo(s);
    } else {
      throw session_error(400, "unknown event " + type);
    }
  }
  return s;
}

ModelWorker::ModelWorker() : thread_([this] { run(); }) {}

ModelWorker::~ModelWorker() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  thread_.join();
}

std::future<void> ModelWorker::submit(std::function<void()> job) {
  std::packaged_task<void()> task(std::move(job));
  auto fut = task.get_future();
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(task));
  }
  cv_.notify_one();
  return fut;
}

void ModelWorker::run() {
  for (;;) {
    std::packaged_task<void()> task;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

struct ReconstructJob {
  std::string status = "idle";  // idle | queued | running | done | failed
  std::vector<std::vector<double>> traces;
  std::optional<ReconstructOutcome> outcome;
};

struct SessionSlot {
  std::mutex mutex;
  Session session;
  ReconstructJob job;
};

struct Service::Impl {
  std::shared_ptr<const ModelBundle> models;
  ServiceOptions options;
  std::unique_ptr<SessionEngine> engine;
  ModelWorker worker;
  httplib::Server server;
  std::thread server_thread;

  std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions;

  std::shared_ptr<SessionSlot> find(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw session_error(404, "no session " + id);
    return it->second;
  }

  void require_models() const {
    if (!engine) throw session_error(409, "no model loaded");
  }

  void persist(const Session& s) {
    if (options.session_dir.empty()) return;
    fs::create_directories(options.session_dir);
    const fs::path path = options.session_dir / (s.id + ".json");
    const fs::path tmp = path.string() + ".tmp";
    std::ofstream(tmp) << session_log(s).dump() << '\n';
    fs::rename(tmp, path);
  }

  // Runs `op` on a copy of the session on the worker and commits it.
  void mutate(const std::shared_ptr<SessionSlot>& slot, const std::function<void(Session&)>& op) {
    worker
        .submit([&] {
          Session work;
          {
            std::lock_guard lock(slot->mutex);
            work = slot->session;
          }
          op(work);
          std::lock_guard lock(slot->mutex);
          slot->session = std::move(work);
          persist(slot->session);
        })
        .get();
  }

  json stages_json(const Session& s, int from) const {
    json out = json::array();
    const auto& names = models->config.stage_names;
    for (int i = from; i <= static_cast<int>(s.state.images.size()); ++i) {
      out.push_back({{"index", i}, {"name", names[i - 1]}, {"image", encode_image(s.state.images[i - 1])}});
    }
    return out;
  }

  static json parse_body(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::exception& e) {
      throw session_error(400, std::string("malformed JSON body: ") + e.what());
    }
  }

  static std::vector<std::uint8_t> image_bytes(const httplib::Request& req) {
    if (req.get_header_value("Content-Type") == "image/png") return {req.body.begin(), req.body.end()};
    const json body = parse_body(req);
    if (!body.contains("image") || !body["image"].is_string()) throw session_error(400, "missing base64 image");
    try {
      return base64_decode(body["image"].get<std::string>());
    } catch (const image_error& e) {
      throw session_error(400, e.what());
    }
  }

  static std::string new_id() {
    std::uint8_t raw[8];
    randombytes_buf(raw, sizeof raw);
    static const char* hex = "0123456789abcdef";
    std::string id;
    for (auto b : raw) {
      id += hex[b >> 4];
      id += hex[b & 15];
    }
    return id;
  }

  void routes();
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const session_error& e) {
      send_json(res, e.status(), {{"error", e.what()}});
    } catch (const image_error& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const stage_error& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  };
}

int path_stage(const httplib::Request& req, std::size_t index) {
  try {
    return std::stoi(req.matches[index].str());
  } catch (const std::exception&) {
    throw session_error(404, "bad stage index");
  }
}

}  // namespace

void Service::Impl::routes() {
  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });

  server.Get("/v1/models", guarded([this](const httplib::Request&, httplib::Response& res) {
               if (!models) return send_json(res, 200, {{"loaded", false}});
               const auto& cfg = models->config;
               send_json(res, 200,
                         {{"loaded", true},
                          {"num_stages", cfg.num_stages},
                          {"stage_names", cfg.stage_names},
                          {"geometry", {{"height", cfg.image_size.height},
                                        {"width", cfg.image_size.width},
                                        {"channels", cfg.channels}}},
                          {"latent_dim", cfg.latent_dim},
                          {"config_hash", hash_hex(models->config_hash)},
                          {"learned_regularizers", models->has_learned_regularizers()},
                          {"source", models->source.string()}});
             }));

  server.Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                require_models();
                const auto bytes = image_bytes(req);
                auto slot = std::make_shared<SessionSlot>();
                worker
                    .submit([&] {
                      const StageImage artwork = engine->prepare_upload(bytes);
                      slot->session = engine->create(new_id(), artwork);
                      persist(slot->session);
                    })
                    .get();
                {
                  std::lock_guard lock(sessions_mutex);
                  sessions[slot->session.id] = slot;
                }
                send_json(res, 201, {{"session_id", slot->session.id}, {"stages", stages_json(slot->session, 1)}});
              }));

  server.Get(R"(/v1/sessions/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto slot = find(req.matches[1]);
               std::lock_guard lock(slot->mutex);
               const Session& s = slot->session;
               send_json(res, 200,
                         {{"session_id", s.id},
                          {"num_stages", s.state.images.size()},
                          {"history", session_log(s)["events"].size()},
                          {"undo_depth", s.undo_stack.size()},
                          {"reconstructed", s.state.reconstruction.has_value()},
                          {"reconstruct_status", slot->job.status}});
             }));

  server.Get(R"(/v1/sessions/([0-9a-f]+)/stages/(-?\d+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto slot = find(req.matches[1]);
               const int i = path_stage(req, 2);
               std::vector<std::uint8_t> png;
               {
                 std::lock_guard lock(slot->mutex);
                 const auto& images = slot->session.state.images;
                 if (i < 1 || i > static_cast<int>(images.size())) {
                   throw session_error(404, "stage " + std::to_string(i) + " does not exist (stages are 1-based)");
                 }
                 png = encode_png(images[i - 1]);
               }
               res.set_content(std::string(png.begin(), png.end()), "image/png");
             }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/reconstruct)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto slot = find(req.matches[1]);
                {
                  std::lock_guard lock(slot->mutex);
                  if (slot->job.status == "queued" || slot->job.status == "running") {
                    return send_json(res, 202, {{"status", slot->job.status}});
                  }
                  slot->job = ReconstructJob{};
                  slot->job.status = "queued";
                }
                worker.submit([this, slot] {
                  Session work;
                  {
                    std::lock_guard lock(slot->mutex);
                    work = slot->session;
                    slot->job.status = "running";
                  }
                  ReconstructOutcome out;
                  try {
                    out = engine->reconstruct(work, [&](int, const OptState& st) {
                      std::lock_guard lock(slot->mutex);
                      slot->job.traces.push_back(st.loss_trace);
                    });
                  } catch (const std::exception& e) {
                    out.failed = true;
                    out.failure = e.what();
                  }
                  std::lock_guard lock(slot->mutex);
                  slot->session = std::move(work);
                  slot->job.traces = out.traces;
                  slot->job.status = out.failed ? "failed" : "done";
                  slot->job.outcome = out;
                  persist(slot->session);
                });
                send_json(res, 202, {{"status", "queued"}, {"poll", "/v1/sessions/" + slot->session.id + "/reconstruct"}});
              }));

  server.Get(R"(/v1/sessions/([0-9a-f]+)/reconstruct)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto slot = find(req.matches[1]);
               std::lock_guard lock(slot->mutex);
               const auto& job = slot->job;
               json body = {{"status", job.status}, {"traces", job.traces}};
               if (job.outcome) {
                 body["l1"] = job.outcome->l1;
                 body["l1_forward"] = job.outcome->l1_forward;
               }
               if (job.status == "failed") {
                 body["error"] = job.outcome ? job.outcome->failure : std::string("failed");
                 return send_json(res, 422, body);
               }
               send_json(res, 200, body);
             }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/resample)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto slot = find(req.matches[1]);
                const json body = parse_body(req);
                const int stage = body.at("stage").get<int>();
                const std::uint64_t seed = body.value("seed", std::uint64_t{0});
                mutate(slot, [&](Session& s) { engine->resample(s, stage, seed); });
                std::lock_guard lock(slot->mutex);
                send_json(res, 200, {{"session_id", slot->session.id}, {"stages", stages_json(slot->session, stage + 1)}});
              }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/edit)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto slot = find(req.matches[1]);
                const json body = parse_body(req);
                const int stage = body.at("stage").get<int>();
                if (!body.contains("image") || !body["image"].is_string()) throw session_error(400, "missing base64 image");
                const auto bytes = base64_decode(body["image"].get<std::string>());
                mutate(slot, [&](Session& s) { engine->edit(s, stage, engine->prepare_stage_image(bytes, stage)); });
                std::lock_guard lock(slot->mutex);
                send_json(res, 200, {{"session_id", slot->session.id}, {"stages", stages_json(slot->session, stage)}});
              }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/undo)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto slot = find(req.matches[1]);
                mutate(slot, [&](Session& s) { engine->undo(s); });
                std::lock_guard lock(slot->mutex);
                send_json(res, 200, {{"session_id", slot->session.id}, {"stages", stages_json(slot->session, 1)}});
              }));
}

Service::Service(std::shared_ptr<const ModelBundle> models, ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  if (sodium_init() < 0) throw std::runtime_error("libsodium failed to initialize");
  impl_->models = std::move(models);
  impl_->options = std::move(options);
  if (impl_->models) impl_->engine = std::make_unique<SessionEngine>(impl_->models);
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::serve(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

}  // namespace artflow
