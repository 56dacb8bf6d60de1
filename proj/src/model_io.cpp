// Copyright 2026 The m4d Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "m4d/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "m4d/error.hpp"

namespace m4d {
namespace {

constexpr char kMagic[4] = {'M', '4', 'D', 'M'};

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  auto bits = std::bit_cast<U>(value);
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(bits & 0xffu);
    bits = static_cast<U>(bits >> 8);
  }
  out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw FormatError(std::string("truncated stream while reading ") + what);
  }
  U bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) {
    bits = static_cast<U>((bits << 8) | bytes[i]);
  }
  return std::bit_cast<T>(bits);
}

template <typename Derived>
void put_doubles(std::ostream& out, const Eigen::DenseBase<Derived>& values) {
  // Eigen's default storage is column-major, which is the on-disk order.
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      put_le<double>(out, values(i, j));
    }
  }
}

void get_doubles(std::istream& in, double* data, std::uint64_t count, const char* what) {
  for (std::uint64_t i = 0; i < count; ++i) {
    data[i] = get_le<double>(in, what);
  }
}

std::uint32_t checked_u32(std::size_t value, const char* what) {
  if (value > std::numeric_limits<std::uint32_t>::max()) {
    throw InvariantViolation(std::string(what) + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(value);
}

// Bytes left in a seekable stream, or nullopt-like max when not seekable.
std::uint64_t remaining_bytes(std::istream& in) {
  const auto here = in.tellg();
  if (here < 0) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  if (end < here) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(end - here);
}

}  // namespace

void save_model(const MorphableModel& model, std::ostream& out) {
  validate_model(model);
  if (model.model_id.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw InvariantViolation("model_id longer than 65535 bytes");
  }
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kModelFormatVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(model.model_id.size()));
  out.write(model.model_id.data(), static_cast<std::streamsize>(model.model_id.size()));
  put_le<std::uint32_t>(out, checked_u32(static_cast<std::size_t>(model.n_vertices()), "N"));
  put_le<std::uint32_t>(out, checked_u32(static_cast<std::size_t>(model.n_identity()), "K_id"));
  put_le<std::uint32_t>(out, checked_u32(static_cast<std::size_t>(model.n_expression()), "K_exp"));
  put_le<std::uint32_t>(out, checked_u32(model.landmark_indices.size(), "L"));
  put_le<std::uint32_t>(out, checked_u32(model.triangles.size(), "T"));
  put_doubles(out, model.mean_shape);
  put_doubles(out, model.id_basis);
  put_doubles(out, model.id_stddev);
  put_doubles(out, model.exp_basis);
  put_doubles(out, model.exp_stddev);
  for (const auto idx : model.landmark_indices) {
    put_le<std::uint32_t>(out, idx);
  }
  for (const auto& tri : model.triangles) {
    for (const auto v : tri) {
      put_le<std::uint32_t>(out, v);
    }
  }
  if (!out) {
    throw Error("failed to write model stream");
  }
}

MorphableModel load_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, sizeof(magic))) {
    throw FormatError("truncated stream while reading magic");
  }
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("bad magic, not an M4DM stream");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported M4DM version " + std::to_string(version));
  }
  MorphableModel model;
  const auto id_len = get_le<std::uint16_t>(in, "model_id length");
  model.model_id.resize(id_len);
  if (id_len > 0 && !in.read(model.model_id.data(), id_len)) {
    throw FormatError("truncated stream while reading model_id");
  }
  const std::uint64_t n = get_le<std::uint32_t>(in, "N");
  const std::uint64_t k_id = get_le<std::uint32_t>(in, "K_id");
  const std::uint64_t k_exp = get_le<std::uint32_t>(in, "K_exp");
  const std::uint64_t l = get_le<std::uint32_t>(in, "L");
  const std::uint64_t t = get_le<std::uint32_t>(in, "T");

  const std::uint64_t n_doubles = 3 * n * (1 + k_id + k_exp) + k_id + k_exp;
  const std::uint64_t expected = 8 * n_doubles + 4 * (l + 3 * t);
  const std::uint64_t available = remaining_bytes(in);
  if (available != std::numeric_limits<std::uint64_t>::max()) {
    if (available < expected) {
      throw FormatError("truncated stream: payload needs " + std::to_string(expected) +
                        " bytes, " + std::to_string(available) + " available");
    }
    if (available > expected) {
      throw FormatError("trailing bytes after M4DM payload");
    }
  } else if (expected > (std::uint64_t{1} << 34)) {
    throw FormatError("declared payload of " + std::to_string(expected) + " bytes is too large");
  }

  const auto rows = static_cast<Eigen::Index>(3 * n);
  model.mean_shape.resize(rows);
  get_doubles(in, model.mean_shape.data(), 3 * n, "mean_shape");
  model.id_basis.resize(rows, static_cast<Eigen::Index>(k_id));
  get_doubles(in, model.id_basis.data(), 3 * n * k_id, "id_basis");
  model.id_stddev.resize(static_cast<Eigen::Index>(k_id));
  get_doubles(in, model.id_stddev.data(), k_id, "id_stddev");
  model.exp_basis.resize(rows, static_cast<Eigen::Index>(k_exp));
  get_doubles(in, model.exp_basis.data(), 3 * n * k_exp, "exp_basis");
  model.exp_stddev.resize(static_cast<Eigen::Index>(k_exp));
  get_doubles(in, model.exp_stddev.data(), k_exp, "exp_stddev");
  model.landmark_indices.resize(l);
  for (auto& idx : model.landmark_indices) {
    idx = get_le<std::uint32_t>(in, "landmark_indices");
  }
  model.triangles.resize(t);
  for (auto& tri : model.triangles) {
    for (auto& v : tri) {
      v = get_le<std::uint32_t>(in, "triangles");
    }
  }
  validate_model(model);
  return model;
}

void save_model_file(const MorphableModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  save_model(model, out);
}

MorphableModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open model file " + path.string());
  }
  return load_model(in);
}

}  // namespace m4d
