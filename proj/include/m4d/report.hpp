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

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "m4d/fitting.hpp"
#include "m4d/sequence.hpp"

namespace m4d {

// Outcome of fitting one frame of a sequence.
struct FrameRecord {
  double timestamp_ms = 0.0;
  std::optional<FitResult> raw;     // empty when the frame was dropped
  std::optional<FitResult> output;  // raw, or pose-smoothed when smoothing is on
  std::string drop_reason;

  bool dropped() const { return !raw.has_value(); }
};

struct ReportSummary {
  std::size_t n_frames = 0;
  std::size_t n_dropped = 0;
  double mean_rmse = 0.0;
  double p95_rmse = 0.0;
  std::optional<double> jitter_raw;
  std::optional<double> jitter_smoothed;
  bool smoothing = true;

  // Jitter of the poses actually emitted.
  std::optional<double> jitter_output() const { return smoothing ? jitter_smoothed : jitter_raw; }
};

// One parsed per-frame report line.
struct ReportFrame {
  double timestamp_ms = 0.0;
  bool dropped = false;
  std::string reason;
  Pose pose;
  Coefficients coeffs;
  double rmse = 0.0;
  int n_iterations = 0;
};

struct Report {
  std::vector<ReportFrame> frames;
  ReportSummary summary;
};

// Fits every frame in order. TooFewLandmarks / RankDeficient frames are
// recorded as dropped; other errors propagate.
std::vector<FrameRecord> fit_sequence(const LandmarkSequence& sequence, const MorphableModel& model,
                                      const FitConfig& config, bool smoothing);

// Mean and 95th percentile (nearest rank) of the raw RMSE, jitter of the raw
// poses and of the same poses through a fresh 3-frame smoother.
ReportSummary summarize(std::span<const FrameRecord> records, bool smoothing);

/**
 * Writes one JSON object per frame,
 *   {"timestamp","rho","R"[9, row-major],"t"[2],"p","q","reprojection_rmse","n_iterations"}
 * or {"timestamp","dropped":true,"reason"} for dropped frames, followed by
 *   {"summary":{"n_frames","n_dropped","mean_rmse","p95_rmse","jitter_raw",
 *               "jitter_smoothed","smoothing"}}
 * Throws EmptyInput for an empty record list.
 */
void write_report(std::span<const FrameRecord> records, bool smoothing, std::ostream& out);

// Throws ParseError / SchemaError with line numbers.
Report read_report(std::istream& in);

}  // namespace m4d
