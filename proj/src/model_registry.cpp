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

#include "m4d/model_registry.hpp"

#include <algorithm>

#include "m4d/error.hpp"
#include "m4d/model_io.hpp"

namespace m4d {

bool is_recognized_model_id(std::string_view id) {
  return std::find(kRecognizedModelIds.begin(), kRecognizedModelIds.end(), id) !=
         kRecognizedModelIds.end();
}

void ModelRegistry::add(MorphableModel model) {
  if (!is_recognized_model_id(model.model_id)) {
    throw UnknownModel("unrecognized model id '" + model.model_id + "'");
  }
  validate_model(model);
  std::string id = model.model_id;
  models_.insert_or_assign(std::move(id), std::make_shared<const MorphableModel>(std::move(model)));
}

bool ModelRegistry::contains(std::string_view id) const { return models_.find(id) != models_.end(); }

ModelRegistry::ModelPtr ModelRegistry::get(std::string_view id) const {
  const auto it = models_.find(id);
  if (it == models_.end()) {
    throw UnknownModel("no model '" + std::string(id) + "' in registry");
  }
  return it->second;
}

std::vector<std::string> ModelRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(models_.size());
  for (const auto& [id, model] : models_) {
    out.push_back(id);
  }
  return out;
}

ModelRegistry ModelRegistry::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("model directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".m4dm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  ModelRegistry registry;
  for (const auto& file : files) {
    registry.add(load_model_file(file));
  }
  if (!registry.contains("global")) {
    throw InvalidConfig("model directory " + dir.string() + " has no 'global' model");
  }
  return registry;
}

ModelRegistry ModelRegistry::synthesize_all(std::uint64_t seed, int n_vertices, int k_id,
                                            int k_exp, int n_landmarks) {
  ModelRegistry registry;
  std::uint64_t offset = 0;
  for (const auto id : kRecognizedModelIds) {
    registry.add(synthesize_model(seed + offset++, n_vertices, k_id, k_exp, n_landmarks,
                                  std::string(id)));
  }
  return registry;
}

}  // namespace m4d
