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

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "m4d/morphable_model.hpp"

namespace m4d {

// The global model plus the demographic bespoke models.
inline constexpr std::array<std::string_view, 7> kRecognizedModelIds = {
    "global",       "black-all",    "chinese-all", "white-under7",
    "white-7to18",  "white-18to50", "white-over50"};

bool is_recognized_model_id(std::string_view id);

// Read-only after construction; shared between sessions.
class ModelRegistry {
 public:
  using ModelPtr = std::shared_ptr<const MorphableModel>;

  // Throws UnknownModel for ids outside kRecognizedModelIds and
  // InvariantViolation for invalid models. Replaces any model with the same id.
  void add(MorphableModel model);

  bool contains(std::string_view id) const;
  // Throws UnknownModel.
  ModelPtr get(std::string_view id) const;
  std::vector<std::string> ids() const;
  std::size_t size() const { return models_.size(); }

  // Loads every *.m4dm file in dir. Throws InvalidConfig when "global" is missing.
  static ModelRegistry load_directory(const std::filesystem::path& dir);

  // One synthetic model per recognized id, seeded from seed + position.
  static ModelRegistry synthesize_all(std::uint64_t seed, int n_vertices, int k_id, int k_exp,
                                      int n_landmarks);

 private:
  std::map<std::string, ModelPtr, std::less<>> models_;
};

}  // namespace m4d
