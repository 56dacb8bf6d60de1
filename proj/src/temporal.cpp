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

#include "m4d/temporal.hpp"

#include <stdexcept>

#include "m4d/error.hpp"

namespace m4d {

Eigen::Matrix3d average_rotations(std::span<const Eigen::Matrix3d> rotations) {
  if (rotations.empty()) {
    throw EmptyInput("cannot average an empty set of rotations");
  }
  Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
  for (const auto& r : rotations) {
    sum += r;
  }
  return nearest_rotation(sum / static_cast<double>(rotations.size()));
}

Pose average_poses(std::span<const Pose> poses) {
  if (poses.empty()) {
    throw EmptyInput("cannot average an empty set of poses");
  }
  if (poses.size() == 1) {
    return poses.front();
  }
  std::vector<Eigen::Matrix3d> rotations;
  rotations.reserve(poses.size());
  Pose mean;
  mean.scale = 0.0;
  for (const auto& p : poses) {
    mean.scale += p.scale;
    mean.translation += p.translation;
    rotations.push_back(p.rotation);
  }
  const auto n = static_cast<double>(poses.size());
  mean.scale /= n;
  mean.translation /= n;
  mean.rotation = average_rotations(rotations);
  return mean;
}

PoseSmoother::PoseSmoother(SmootherConfig config) : config_(config) {
  if (config_.window_len < 1) {
    throw InvalidConfig("smoothing window must hold at least one pose");
  }
  if (!(config_.coefficient_alpha > 0.0 && config_.coefficient_alpha <= 1.0)) {
    throw InvalidConfig("coefficient_alpha must lie in (0, 1]");
  }
}

FitResult PoseSmoother::push_and_smooth(const FitResult& fit) {
  window_.push_back(fit.pose);
  while (window_.size() > config_.window_len) {
    window_.pop_front();
  }
  FitResult out = fit;
  const std::vector<Pose> poses(window_.begin(), window_.end());
  out.pose = average_poses(poses);

  if (config_.smooth_coefficients) {
    if (!coefficient_state_) {
      coefficient_state_ = fit.coeffs;
    } else {
      const double a = config_.coefficient_alpha;
      coefficient_state_->identity = a * fit.coeffs.identity + (1.0 - a) * coefficient_state_->identity;
      coefficient_state_->expression =
          a * fit.coeffs.expression + (1.0 - a) * coefficient_state_->expression;
    }
    out.coeffs = *coefficient_state_;
  }
  return out;
}

void PoseSmoother::reset() {
  window_.clear();
  coefficient_state_.reset();
}

double jitter_metric(std::span<const Pose> poses) {
  if (poses.size() < 2) {
    throw TooShort("jitter needs at least two poses");
  }
  double total = 0.0;
  for (std::size_t k = 1; k < poses.size(); ++k) {
    const Pose& a = poses[k - 1];
    const Pose& b = poses[k];
    const double mean_scale = 0.5 * (a.scale + b.scale);
    total += rotation_distance(a.rotation, b.rotation) +
             (b.translation - a.translation).norm() / 100.0 +
             std::abs(b.scale - a.scale) / mean_scale;
  }
  return total / static_cast<double>(poses.size() - 1);
}

}  // namespace m4d
