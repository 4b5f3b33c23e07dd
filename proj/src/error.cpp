// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/error.hpp"

namespace mola {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::config: return "config";
    case ErrorKind::schedule: return "schedule";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::tokenizer: return "tokenizer";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace mola
