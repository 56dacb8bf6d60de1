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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "m4d/fitting.hpp"
#include "m4d/morphable_model.hpp"
#include "m4d/pose.hpp"

namespace m4d {

struct LandmarkSequence {
  std::vector<LandmarkFrame> frames;
  std::string source = "file";
  int image_width = 640;
  int image_height = 480;

  Eigen::Index n_landmarks() const { return frames.empty() ? 0 : frames.front().n_landmarks(); }
};

// Per-frame pose and coefficients the generator used.
struct GroundTruth {
  std::vector<Pose> poses;
  std::vector<Coefficients> coeffs;
};

/**
 * Synthetic capture settings. The head follows smooth sinusoids whose
 * slowest component (yaw) has period period_frames; pitch, roll,
 * translation and scale use fixed multiples of that rate with seeded
 * phases. Expression components oscillate with seeded periods of 30-120
 * frames at up to 2 sigma; identity is drawn once in [-2 sigma, 2 sigma].
 */
struct SequenceGenConfig {
  std::uint64_t seed = 1;
  int n_frames = 300;
  double fps = 30.0;
  int image_width = 640;
  int image_height = 480;
  double yaw_deg = 30.0;
  double pitch_deg = 10.0;
  double roll_deg = 5.0;
  double translation_px = 15.0;
  double scale = 1.2;
  double scale_range = 0.05;
  double period_frames = 900.0;
  double noise_sigma_px = 0.0;
  double occlusion_rate = 0.0;
};

// Throws InvalidConfig.
void validate_sequence_config(const SequenceGenConfig& config);

// Throws InvalidConfig for bad configs and InvariantViolation for bad models.
std::pair<LandmarkSequence, GroundTruth> generate_sequence(const MorphableModel& model,
                                                           const SequenceGenConfig& config);

/**
 * Line-oriented JSON landmark sequence (.lmk.jsonl):
 *   {"version":1,"n_landmarks":L,"image_size":[w,h]}
 *   {"t":ms,"pts":[[x,y],...],"conf":[...]}      one line per frame
 * Reals are written as shortest round-trip decimals.
 */
void write_sequence(const LandmarkSequence& sequence, std::ostream& out);

// Throws ParseError (bad JSON, missing header) and SchemaError (wrong
// landmark count, non-increasing timestamps, bad fields), both with a line number.
LandmarkSequence read_sequence(std::istream& in);

void write_sequence_file(const LandmarkSequence& sequence, const std::filesystem::path& path);
LandmarkSequence read_sequence_file(const std::filesystem::path& path);

// Ground truth as one JSON document: {"version":1,"frames":[{"rho","R","t","p","q"}...]}.
void write_ground_truth(const GroundTruth& truth, std::ostream& out);
GroundTruth read_ground_truth(std::istream& in);

}  // namespace m4d
