// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "artflow/config.hpp"

namespace artflow {
namespace {

constexpr char kMagic[] = "ARTFLOWCK1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

}  // namespace

const TensorRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header = {{"kind", ckpt.kind},
                           {"stage_index", ckpt.stage_index},
                           {"config_hash", hash_hex(ckpt.config_hash)},
                           {"iteration", ckpt.iteration},
                           {"meta", ckpt.meta}};
  auto& table = header["tensors"] = nlohmann::json::array();
  for (const auto& t : ckpt.tensors) {
    if (nn::Tensor<double>::count(t.shape) != t.data.size()) {
      throw checkpoint_error("tensor " + t.name + " data does not match its shape");
    }
    table.push_back({{"name", t.name}, {"shape", t.shape}});
  }
  const std::string text = header.dump();
  // Write a sibling, then rename over the target.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw checkpoint_error("cannot write checkpoint " + path.string());
    out.write(kMagic, kMagicLen);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : ckpt.tensors) {
      out.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!out) throw checkpoint_error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw checkpoint_error("cannot open checkpoint " + path.string());
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    throw checkpoint_error(path.string() + " is not an artflow checkpoint");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len > (1u << 26)) throw checkpoint_error("corrupt checkpoint header in " + path.string());
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.kind = header.at("kind").get<std::string>();
    ckpt.stage_index = header.at("stage_index").get<int>();
    ckpt.config_hash = std::stoull(header.at("config_hash").get<std::string>(), nullptr, 16);
    ckpt.iteration = header.at("iteration").get<std::int64_t>();
    ckpt.meta = header.value("meta", nlohmann::json::object());
    for (const auto& t : header.at("tensors")) {
      TensorRecord rec{t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>(), {}};
      rec.data.resize(nn::Tensor<double>::count(rec.shape));
      ckpt.tensors.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw checkpoint_error("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  for (auto& t : ckpt.tensors) {
    in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw checkpoint_error("truncated checkpoint " + path.string());
  }
  return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path, const std::string& kind, int stage_index,
                           std::uint64_t expected_hash) {
  Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.kind != kind) {
    throw checkpoint_error(path.string() + " holds a '" + ckpt.kind + "' checkpoint, expected '" + kind + "'");
  }
  if (ckpt.stage_index != stage_index) {
    throw checkpoint_error(path.string() + " is for stage " + std::to_string(ckpt.stage_index) + ", expected " +
                           std::to_string(stage_index));
  }
  if (ckpt.config_hash != expected_hash) {
    throw checkpoint_error(path.string() + " was written for config " + hash_hex(ckpt.config_hash) +
                           ", current config is " + hash_hex(expected_hash));
  }
  return ckpt;
}

}  // namespace artflow
