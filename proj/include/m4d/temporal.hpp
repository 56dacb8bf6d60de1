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
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "m4d/fitting.hpp"
#include "m4d/pose.hpp"

namespace m4d {

// Chordal L2 mean: entrywise average projected back onto SO(3).
// Throws EmptyInput.
Eigen::Matrix3d average_rotations(std::span<const Eigen::Matrix3d> rotations);

// Arithmetic mean of scale and translation, chordal mean of rotation.
// Throws EmptyInput.
Pose average_poses(std::span<const Pose> poses);

struct SmootherConfig {
  std::size_t window_len = 3;
  // Exponential moving average of coefficients; pose-only smoothing when unset.
  bool smooth_coefficients = false;
  double coefficient_alpha = 0.5;
};

/**
 * Trailing-window pose smoother. Each pushed fit comes back with its pose
 * replaced by the average over the last window_len poses, including itself;
 * during warm-up the average runs over whatever is available.
 * One instance per stream; not thread-safe.
 */
class PoseSmoother {
 public:
  explicit PoseSmoother(SmootherConfig config = {});

  FitResult push_and_smooth(const FitResult& fit);
  void reset();

  std::size_t size() const { return window_.size(); }
  const SmootherConfig& config() const { return config_; }

 private:
  SmootherConfig config_;
  std::deque<Pose> window_;
  std::optional<Coefficients> coefficient_state_;
};

/**
 * Mean over consecutive pairs of
 *   rotation angle (rad) + |delta t| / 100 px + |delta scale| / mean scale,
 * where the mean scale is that of the pair. Throws TooShort for fewer than
 * two poses.
 */
double jitter_metric(std::span<const Pose> poses);

}  // namespace m4d
