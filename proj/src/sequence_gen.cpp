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

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "m4d/error.hpp"
#include "m4d/sequence.hpp"

namespace m4d {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

struct ExpressionTrack {
  double amplitude;
  double period;
  double phase;
};

}  // namespace

void validate_sequence_config(const SequenceGenConfig& c) {
  const auto finite = [](double v) { return std::isfinite(v); };
  if (c.n_frames < 1) {
    throw InvalidConfig("n_frames must be positive");
  }
  if (!(c.fps > 0.0) || !finite(c.fps)) {
    throw InvalidConfig("fps must be positive");
  }
  if (c.image_width < 1 || c.image_height < 1) {
    throw InvalidConfig("image size must be positive");
  }
  if (!finite(c.yaw_deg) || !finite(c.pitch_deg) || !finite(c.roll_deg) ||
      !finite(c.translation_px)) {
    throw InvalidConfig("trajectory amplitudes must be finite");
  }
  if (!(c.scale > 0.0) || !finite(c.scale)) {
    throw InvalidConfig("scale must be positive");
  }
  if (!(c.scale_range >= 0.0 && c.scale_range < 1.0)) {
    throw InvalidConfig("scale_range must lie in [0, 1)");
  }
  if (!(c.period_frames > 0.0) || !finite(c.period_frames)) {
    throw InvalidConfig("period_frames must be positive");
  }
  if (!(c.noise_sigma_px >= 0.0) || !finite(c.noise_sigma_px)) {
    throw InvalidConfig("noise_sigma_px must be non-negative");
  }
  if (!(c.occlusion_rate >= 0.0 && c.occlusion_rate < 1.0)) {
    throw InvalidConfig("occlusion_rate must lie in [0, 1)");
  }
}

std::pair<LandmarkSequence, GroundTruth> generate_sequence(const MorphableModel& model,
                                                           const SequenceGenConfig& config) {
  validate_sequence_config(config);
  validate_model(model);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::uniform_real_distribution<double> amplitude(0.5, 1.0);
  std::uniform_real_distribution<double> exp_period(30.0, 120.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  Eigen::VectorXd identity(model.n_identity());
  for (Eigen::Index k = 0; k < identity.size(); ++k) {
    identity[k] = 2.0 * model.id_stddev[k] * unit(rng);
  }
  std::vector<ExpressionTrack> tracks(static_cast<std::size_t>(model.n_expression()));
  for (auto& track : tracks) {
    track.amplitude = amplitude(rng);
    track.period = exp_period(rng);
    track.phase = angle(rng);
  }
  const double pitch_phase = angle(rng);
  const double roll_phase = angle(rng);
  const double tx_phase = angle(rng);
  const double ty_phase = angle(rng);
  const double scale_phase = angle(rng);
  const Eigen::Vector2d centre(0.5 * config.image_width, 0.5 * config.image_height);

  LandmarkSequence sequence;
  sequence.source = "synthetic";
  sequence.image_width = config.image_width;
  sequence.image_height = config.image_height;
  GroundTruth truth;
  const Eigen::Index n_lm = model.n_landmarks();

  for (int f = 0; f < config.n_frames; ++f) {
    const double phi = kTwoPi * f / config.period_frames;
    Pose pose;
    pose.rotation = euler_rotation(radians(config.yaw_deg) * std::sin(phi),
                                   radians(config.pitch_deg) * std::sin(0.7 * phi + pitch_phase),
                                   radians(config.roll_deg) * std::sin(1.3 * phi + roll_phase));
    pose.translation = centre + config.translation_px * Eigen::Vector2d(std::sin(0.9 * phi + tx_phase),
                                                                        std::sin(1.1 * phi + ty_phase));
    pose.scale = config.scale * (1.0 + config.scale_range * std::sin(0.5 * phi + scale_phase));

    Coefficients coeffs{identity, Eigen::VectorXd(model.n_expression())};
    for (Eigen::Index k = 0; k < coeffs.expression.size(); ++k) {
      const auto& track = tracks[static_cast<std::size_t>(k)];
      coeffs.expression[k] = 2.0 * model.exp_stddev[k] * track.amplitude *
                             std::sin(kTwoPi * f / track.period + track.phase);
    }

    const Eigen::Matrix2Xd clean = project(pose, landmark_shape(model, coeffs));
    LandmarkFrame frame;
    frame.timestamp_ms = 1000.0 * f / config.fps;
    frame.points.resize(n_lm, 2);
    frame.confidence.resize(n_lm);
    for (Eigen::Index i = 0; i < n_lm; ++i) {
      const bool occluded = coin(rng) < config.occlusion_rate;
      const double dx = config.noise_sigma_px * noise(rng);
      const double dy = config.noise_sigma_px * noise(rng);
      if (occluded) {
        frame.points.row(i).setZero();
        frame.confidence[i] = 0.0;
      } else {
        frame.points(i, 0) = clean(0, i) + dx;
        frame.points(i, 1) = clean(1, i) + dy;
        frame.confidence[i] = 1.0;
      }
    }
    sequence.frames.push_back(std::move(frame));
    truth.poses.push_back(pose);
    truth.coeffs.push_back(std::move(coeffs));
  }
  return {std::move(sequence), std::move(truth)};
}

}  // namespace m4d
