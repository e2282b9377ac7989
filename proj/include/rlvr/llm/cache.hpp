// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "rlvr/core/error.hpp"
#include "rlvr/verifiers.hpp"

namespace rlvr::llm {

/// Judgments keyed by prompt hash. With a path, every insert is appended to a
/// JSONL file ({prompt_hash, verdict, confidence}) and the file is replayed
/// on construction; later lines win.
class JudgmentCache {
 public:
  JudgmentCache() = default;

  explicit JudgmentCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(*path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        entries_[j.at("prompt_hash").get<std::string>()] =
            Judgment{verdict_from_string(j.at("verdict").get<std::string>()),
                     j.at("confidence").get<double>()};
      } catch (const nlohmann::json::exception& e) {
        throw DataError("cache " + *path_ + " line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  std::optional<Judgment> get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& key, const Judgment& j) {
    std::unique_lock lock(mutex_);
    entries_[key] = j;
    if (!path_) return;
    std::ofstream out(*path_, std::ios::app);
    if (!out) throw Error("cannot append to cache " + *path_);
    out << nlohmann::json{{"prompt_hash", key},
                          {"verdict", std::string(to_string(j.verdict))},
                          {"confidence", j.confidence}}
               .dump()
        << '\n';
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

 private:
  std::optional<std::string> path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Judgment> entries_;
};

}  // namespace rlvr::llm
