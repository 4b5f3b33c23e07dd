// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_ERROR_HPP
#define MOLA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mola {

enum class ErrorKind {
  invalid_input,
  shape_mismatch,
  config,
  schedule,
  divergence,
  tokenizer,
  not_found,
  io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Config errors name the offending field, e.g. "vae.d_z".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorKind::config, field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace mola

#endif  // MOLA_ERROR_HPP
