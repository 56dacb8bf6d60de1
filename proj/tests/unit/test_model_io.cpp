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

#include <doctest.h>

#include <cstring>
#include <sstream>
#include <string>

#include "m4d/error.hpp"
#include "m4d/model_io.hpp"
#include "m4d/morphable_model.hpp"

using namespace m4d;

namespace {

// Byte-level encoder written straight from the format description; it does
// not validate, so it can produce invalid fixtures.
struct RawWriter {
  std::string bytes;

  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, sizeof(v));
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void raw(const std::string& s) { bytes += s; }
};

std::string encode(const MorphableModel& m, std::uint32_t version = 1) {
  RawWriter w;
  w.raw("M4DM");
  w.u32(version);
  w.u16(static_cast<std::uint16_t>(m.model_id.size()));
  w.raw(m.model_id);
  w.u32(static_cast<std::uint32_t>(m.n_vertices()));
  w.u32(static_cast<std::uint32_t>(m.id_basis.cols()));
  w.u32(static_cast<std::uint32_t>(m.exp_basis.cols()));
  w.u32(static_cast<std::uint32_t>(m.landmark_indices.size()));
  w.u32(static_cast<std::uint32_t>(m.triangles.size()));
  for (Eigen::Index i = 0; i < m.mean_shape.size(); ++i) w.f64(m.mean_shape[i]);
  for (Eigen::Index k = 0; k < m.id_basis.cols(); ++k)
    for (Eigen::Index i = 0; i < m.id_basis.rows(); ++i) w.f64(m.id_basis(i, k));
  for (Eigen::Index k = 0; k < m.id_stddev.size(); ++k) w.f64(m.id_stddev[k]);
  for (Eigen::Index k = 0; k < m.exp_basis.cols(); ++k)
    for (Eigen::Index i = 0; i < m.exp_basis.rows(); ++i) w.f64(m.exp_basis(i, k));
  for (Eigen::Index k = 0; k < m.exp_stddev.size(); ++k) w.f64(m.exp_stddev[k]);
  for (const auto idx : m.landmark_indices) w.u32(idx);
  for (const auto& t : m.triangles)
    for (const auto v : t) w.u32(v);
  return w.bytes;
}

std::string save_to_string(const MorphableModel& m) {
  std::ostringstream out(std::ios::binary);
  save_model(m, out);
  return out.str();
}

MorphableModel load_from_string(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return load_model(in);
}

const MorphableModel& fixture() {
  static const MorphableModel m = synthesize_model(5, 120, 6, 4, 16, "white-7to18");
  return m;
}

}  // namespace

TEST_CASE("save_model writes the documented byte layout") {
  CHECK(save_to_string(fixture()) == encode(fixture()));
}

TEST_CASE("save/load round trip is bit-exact") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const MorphableModel m = synthesize_model(seed, 300, 12, 7, 25, "black-all");
    const std::string bytes = save_to_string(m);
    const MorphableModel back = load_from_string(bytes);
    CHECK(back == m);
    CHECK(std::memcmp(back.mean_shape.data(), m.mean_shape.data(),
                      sizeof(double) * static_cast<std::size_t>(m.mean_shape.size())) == 0);
    CHECK(save_to_string(back) == bytes);
  }
}

TEST_CASE("every truncation of a valid stream is a FormatError") {
  const std::string bytes = save_to_string(fixture());
  for (std::size_t len = 0; len < bytes.size(); len += (len < 64 ? 1 : 97)) {
    CHECK_THROWS_AS(load_from_string(bytes.substr(0, len)), FormatError);
  }
  CHECK_THROWS_AS(load_from_string(bytes.substr(0, bytes.size() - 1)), FormatError);
}

TEST_CASE("header corruption is a FormatError") {
  std::string bytes = save_to_string(fixture());
  SUBCASE("bad magic") {
    bytes[1] = 'X';
    CHECK_THROWS_AS(load_from_string(bytes), FormatError);
  }
  SUBCASE("unsupported version") {
    CHECK_THROWS_AS(load_from_string(encode(fixture(), 2)), FormatError);
  }
  SUBCASE("trailing bytes") {
    bytes.push_back('\0');
    CHECK_THROWS_AS(load_from_string(bytes), FormatError);
  }
  SUBCASE("inflated vertex count") {
    // N sits right after magic, version, id length and the id itself.
    const std::size_t n_offset = 4 + 4 + 2 + fixture().model_id.size();
    bytes[n_offset + 3] = '\x7f';
    CHECK_THROWS_AS(load_from_string(bytes), FormatError);
  }
}

TEST_CASE("structurally valid streams with broken invariants are InvariantViolation") {
  SUBCASE("id_basis column with norm 0.5") {
    MorphableModel m = fixture();
    m.id_basis.col(0) *= 0.5;
    CHECK_THROWS_AS(load_from_string(encode(m)), InvariantViolation);
  }
  SUBCASE("landmark index out of range") {
    MorphableModel m = fixture();
    m.landmark_indices.back() = 100000;
    CHECK_THROWS_AS(load_from_string(encode(m)), InvariantViolation);
  }
  SUBCASE("negative sigma") {
    MorphableModel m = fixture();
    m.id_stddev[1] = -1.0;
    CHECK_THROWS_AS(load_from_string(encode(m)), InvariantViolation);
  }
}

TEST_CASE("save_model refuses invalid models") {
  MorphableModel m = fixture();
  m.exp_basis.col(0) *= 2.0;
  std::ostringstream out;
  CHECK_THROWS_AS(save_model(m, out), InvariantViolation);
}

TEST_CASE("load_model_file names a missing path") {
  try {
    load_model_file("/nonexistent/dir/model.m4dm");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/model.m4dm") != std::string::npos);
  }
}
