// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rlvr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: bad JSONL, invalid instances, bad split parameters.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The judge endpoint could not be reached (after retries) or returned an
/// HTTP failure.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retryable)
      : Error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

/// The judge endpoint answered, but not in the expected shape.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Distillation records would leak training prompts to the reward model.
class SeparationError : public Error {
 public:
  explicit SeparationError(std::vector<std::string> ids)
      : Error(make_message(ids)), ids_(std::move(ids)) {}
  const std::vector<std::string>& offending_ids() const noexcept { return ids_; }

 private:
  static std::string make_message(const std::vector<std::string>& ids) {
    std::string msg = "distill records reference training prompts:";
    for (const auto& id : ids) msg += " " + id;
    return msg;
  }
  std::vector<std::string> ids_;
};

/// An internal invariant did not hold. Indicates a bug, not bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace rlvr
