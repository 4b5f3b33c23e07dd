// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/service/ulid.hpp"

#include "mola/error.hpp"

#include <chrono>

namespace mola::service {
namespace {

constexpr char kAlphabet[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

int decode_char(char c) {
  for (int i = 0; i < 32; ++i)
    if (kAlphabet[i] == c) return i;
  return -1;
}

}  // namespace

UlidGenerator::UlidGenerator() : rng_(std::random_device{}()) {}

UlidGenerator::UlidGenerator(std::uint64_t seed) : rng_(seed) {}

std::string UlidGenerator::next() {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return next(static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(now).count()));
}

std::string UlidGenerator::next(std::uint64_t unix_ms) {
  std::lock_guard lock(mutex_);
  if (unix_ms <= last_ms_) {
    // Same or earlier clock reading: bump the random part of the previous id.
    unix_ms = last_ms_;
    int i = 9;
    while (i >= 0 && ++last_random_[static_cast<std::size_t>(i)] == 0) --i;
    if (i < 0) ++unix_ms;
  } else {
    for (auto& b : last_random_) b = static_cast<std::uint8_t>(rng_());
  }
  last_ms_ = unix_ms;

  // 128 bits: time in the top 48, randomness below.
  std::array<std::uint8_t, 16> bytes{};
  for (int i = 0; i < 6; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(unix_ms >> (8 * (5 - i)));
  for (int i = 0; i < 10; ++i) bytes[static_cast<std::size_t>(6 + i)] = last_random_[static_cast<std::size_t>(i)];

  std::string out(26, '0');
  for (int c = 0; c < 26; ++c) {
    // Character c holds bits [130 - 5(c+1), 130 - 5c) of a 130-bit left-padded value.
    int value = 0;
    for (int b = 0; b < 5; ++b) {
      const int bit = 5 * c + b - 2;  // index from the most significant bit of the 128
      int v = 0;
      if (bit >= 0) v = (bytes[static_cast<std::size_t>(bit / 8)] >> (7 - bit % 8)) & 1;
      value = (value << 1) | v;
    }
    out[static_cast<std::size_t>(c)] = kAlphabet[value];
  }
  return out;
}

bool is_ulid(std::string_view id) {
  if (id.size() != 26 || decode_char(id[0]) > 7) return false;
  for (char c : id)
    if (decode_char(c) < 0) return false;
  return true;
}

std::uint64_t ulid_time_ms(std::string_view id) {
  require(is_ulid(id), ErrorKind::invalid_input, "not a ULID: " + std::string(id));
  std::uint64_t t = 0;
  for (int c = 0; c < 10; ++c) t = (t << 5) | static_cast<std::uint64_t>(decode_char(id[static_cast<std::size_t>(c)]));
  return t;
}

}  // namespace mola::service
