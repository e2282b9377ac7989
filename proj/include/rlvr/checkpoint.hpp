// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rlvr/core/error.hpp"
#include "rlvr/policy.hpp"

namespace rlvr {

inline constexpr const char* kCheckpointFormat = "rlvr-policy/1";

// {"format", "version", "shape": [F, L, V], "vocab", "separator", "logits"}
// Logits are flattened row-major over (feature, position, token).
inline nlohmann::json checkpoint_to_json(const Policy& policy) {
  const auto& p = policy.params;
  return nlohmann::json{
      {"format", kCheckpointFormat},
      {"version", p.version()},
      {"shape", {p.features(), p.length(), p.vocab()}},
      {"vocab", policy.vocab.tokens()},
      {"separator", policy.vocab.separator()},
      {"logits", std::vector<double>(p.logits().begin(), p.logits().end())},
  };
}

inline Policy checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw DataError("unsupported checkpoint format " + j.at("format").dump());
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw DataError("checkpoint shape must have 3 entries");
    Vocabulary vocab(j.at("vocab").get<std::vector<std::string>>(),
                     j.at("separator").get<std::string>());
    if (vocab.size() != shape[2]) throw DataError("checkpoint vocab size does not match shape");
    PolicyParams params(shape[0], shape[1], shape[2], j.at("logits").get<std::vector<double>>(),
                        j.at("version").get<std::uint64_t>());
    return Policy{std::move(vocab), std::move(params)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Policy& policy, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path);
  out << checkpoint_to_json(policy).dump() << '\n';
}

inline Policy load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace rlvr
