// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/nn/serialize.hpp"

#include "mola/error.hpp"
#include "mola/io.hpp"

#include <cstdint>
#include <cstring>

namespace mola::nn {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'L', 'A', 'W', 'T', '0', '1'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void read_into(double* dst, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(dst, data_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(ErrorKind::io, "weights blob truncated");
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_matrices(const std::map<std::string, Matrix>& matrices) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, matrices.size());
  for (const auto& [name, m] : matrices) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  return out;
}

std::map<std::string, Matrix> decode_matrices(const std::string& blob) {
  Reader r(blob);
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw Error(ErrorKind::io, "not a weights blob (bad magic)");
  const auto count = r.get<std::uint64_t>();
  std::map<std::string, Matrix> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>();
    std::string name = r.bytes(len);
    const auto rows = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    const auto cols = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    Matrix m(rows, cols);
    r.read_into(m.data(), static_cast<std::size_t>(m.size()));
    out.emplace(std::move(name), std::move(m));
  }
  if (!r.done()) throw Error(ErrorKind::io, "trailing bytes in weights blob");
  return out;
}

void save_parameters(const std::filesystem::path& path, const NamedParameters& params) {
  std::map<std::string, Matrix> m;
  for (const auto& [name, t] : params) {
    require(m.emplace(name, t.value()).second, ErrorKind::invalid_input, "duplicate parameter name " + name);
  }
  atomic_write(path, encode_matrices(m));
}

void load_parameters(const std::filesystem::path& path, const NamedParameters& params) {
  const auto stored = decode_matrices(read_file(path));
  require(stored.size() == params.size(), ErrorKind::shape_mismatch,
          "checkpoint has " + std::to_string(stored.size()) + " tensors, model expects " + std::to_string(params.size()));
  for (const auto& [name, t] : params) {
    const auto it = stored.find(name);
    require(it != stored.end(), ErrorKind::shape_mismatch, "checkpoint lacks parameter " + name);
    require(it->second.rows() == t.rows() && it->second.cols() == t.cols(), ErrorKind::shape_mismatch,
            "shape mismatch for parameter " + name);
    Tensor handle = t;
    handle.mutable_value() = it->second;
  }
}

std::string parameters_hash(const NamedParameters& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : params) {
    h = fnv1a64(name, h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(t.value().data()),
                                 static_cast<std::size_t>(t.value().size()) * sizeof(double)),
                h);
  }
  return hash_hex(h);
}

}  // namespace mola::nn
