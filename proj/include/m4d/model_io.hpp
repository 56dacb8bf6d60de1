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

#pragma once

#include <filesystem>
#include <iosfwd>

#include "m4d/morphable_model.hpp"

namespace m4d {

/**
 * M4DM binary model format, version 1, little-endian, no padding:
 *
 *   "M4DM"  u32 version  u16 id_len  id_len bytes of UTF-8 model_id
 *   u32 N  u32 K_id  u32 K_exp  u32 L  u32 T
 *   f64[3N] mean_shape
 *   f64[3N*K_id] id_basis (column-major)   f64[K_id] id_stddev
 *   f64[3N*K_exp] exp_basis (column-major) f64[K_exp] exp_stddev
 *   u32[L] landmark_indices                u32[3T] triangles (row-major)
 */
inline constexpr std::uint32_t kModelFormatVersion = 1;

// Throws InvariantViolation if the model is not valid.
void save_model(const MorphableModel& model, std::ostream& out);

// Throws FormatError on malformed streams and InvariantViolation when the
// decoded model fails validation.
MorphableModel load_model(std::istream& in);

void save_model_file(const MorphableModel& model, const std::filesystem::path& path);
MorphableModel load_model_file(const std::filesystem::path& path);

}  // namespace m4d
