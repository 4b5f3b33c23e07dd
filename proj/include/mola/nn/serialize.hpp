// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_NN_SERIALIZE_HPP
#define MOLA_NN_SERIALIZE_HPP

#include "mola/nn/tensor.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace mola::nn {

/// Binary blob: magic, count, then per matrix (name, rows, cols, raw doubles).
/// Round-trips bit-exactly on little-endian hosts.
std::string encode_matrices(const std::map<std::string, Matrix>& matrices);
std::map<std::string, Matrix> decode_matrices(const std::string& blob);

void save_parameters(const std::filesystem::path& path, const NamedParameters& params);
/// Loads into existing parameters; names and shapes must match exactly.
void load_parameters(const std::filesystem::path& path, const NamedParameters& params);

/// Hash of the parameter values in declaration order.
std::string parameters_hash(const NamedParameters& params);

}  // namespace mola::nn

#endif  // MOLA_NN_SERIALIZE_HPP
