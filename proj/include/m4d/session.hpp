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

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "m4d/fitting.hpp"
#include "m4d/model_registry.hpp"
#include "m4d/sequence.hpp"
#include "m4d/temporal.hpp"

namespace m4d {

inline constexpr int kProtocolVersion = 1;
inline constexpr double kMaxExaggeration = 4.0;

// Live controls of a viewing session.
struct SessionOptions {
  std::string model_id = "global";
  double exaggeration = 1.0;
  bool show_landmarks = false;
  bool show_bbox = false;
  bool smoothing_enabled = true;
  double playback_fps = 30.0;
};

nlohmann::json to_json(const SessionOptions& options);

/**
 * Per-connection protocol state machine. Replays a landmark sequence through
 * fit -> smooth -> exaggerate and answers control messages. Every inbound
 * message produces exactly one acknowledgement or error (set_options may
 * add a model_info after its options_ack). Not thread-safe: the owner
 * serialises message handling and frame emission.
 *
 * Inbound:  set_options, play, pause, seek{frame}, list_models
 * Outbound: hello, options_ack, model_info, ack, models, frame,
 *           dropped_frame, error{code: UNKNOWN_TYPE | UNKNOWN_MODEL | BAD_VALUE}
 */
class Session {
 public:
  Session(std::shared_ptr<const ModelRegistry> registry,
          std::shared_ptr<const LandmarkSequence> sequence, FitConfig fit_config = {});

  nlohmann::json hello() const;

  // Malformed JSON yields a BAD_VALUE error; the session always survives.
  std::vector<nlohmann::json> handle_text(std::string_view text);
  std::vector<nlohmann::json> handle_message(const nlohmann::json& message);

  // Fits the frame under the cursor and advances it; playback stops after
  // the last frame. Requires playing().
  nlohmann::json emit_frame();

  bool playing() const { return playing_; }
  std::size_t cursor() const { return cursor_; }
  const SessionOptions& options() const { return options_; }
  const MorphableModel& model() const { return *model_; }
  double frame_interval_seconds() const { return 1.0 / options_.playback_fps; }

 private:
  std::vector<nlohmann::json> set_options(const nlohmann::json& message);
  nlohmann::json ack(std::string_view request) const;

  std::shared_ptr<const ModelRegistry> registry_;
  std::shared_ptr<const LandmarkSequence> sequence_;
  FitConfig fit_config_;
  SessionOptions options_;
  ModelRegistry::ModelPtr model_;
  PoseSmoother smoother_;
  std::size_t cursor_ = 0;
  bool playing_ = false;
};

nlohmann::json error_message(std::string_view code, std::string_view message,
                             std::string_view field = {});

// Everything a client needs to rebuild meshes from frame coefficients.
nlohmann::json model_info_message(const MorphableModel& model);

// The client-side reconstruction rule, evaluated from the two messages alone:
// mean + U_id p + U_exp q with bases read from model_info.
std::vector<double> reconstruct_from_messages(const nlohmann::json& model_info,
                                              const nlohmann::json& frame);

}  // namespace m4d
