// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_SERVICE_ULID_HPP
#define MOLA_SERVICE_ULID_HPP

#include <array>
#include <cstdint>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

namespace mola::service {

/// 26-character Crockford base32 ids: 48-bit millisecond time, 80 random bits.
/// Ids from one generator are strictly increasing, also within a millisecond.
class UlidGenerator {
 public:
  UlidGenerator();
  explicit UlidGenerator(std::uint64_t seed);

  std::string next();
  std::string next(std::uint64_t unix_ms);

 private:
  std::mutex mutex_;
  std::mt19937_64 rng_;
  std::uint64_t last_ms_ = 0;
  std::array<std::uint8_t, 10> last_random_{};
};

bool is_ulid(std::string_view id);

/// Millisecond timestamp encoded in a valid id.
std::uint64_t ulid_time_ms(std::string_view id);

}  // namespace mola::service

#endif  // MOLA_SERVICE_ULID_HPP
