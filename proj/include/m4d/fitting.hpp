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

#include <Eigen/Core>

#include "m4d/morphable_model.hpp"
#include "m4d/pose.hpp"

namespace m4d {

// 2D landmarks observed in one frame. Rows of points follow the model's
// landmark order; points whose confidence falls below the fit config's
// confidence_floor are ignored entirely, whatever their coordinates.
struct LandmarkFrame {
  double timestamp_ms = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, 2> points;
  Eigen::VectorXd confidence;

  Eigen::Index n_landmarks() const { return points.rows(); }
};

struct FitConfig {
  double lambda_id = 0.05;
  double lambda_exp = 0.05;
  int n_alternations = 3;
  int min_valid_landmarks = 4;
  double confidence_floor = 0.1;
};

struct FitResult {
  Pose pose;
  Coefficients coeffs;
  // Confidence-weighted RMS landmark distance in pixels.
  double reprojection_rmse = 0.0;
  int n_iterations = 0;
  int valid_landmarks = 0;
};

// Throws InvalidConfig.
void validate_fit_config(const FitConfig& config);

// Throws InvariantViolation for non-finite points or confidences outside [0, 1].
void validate_frame(const LandmarkFrame& frame);

/**
 * Linear scaled-orthographic pose from 2D-3D correspondences.
 *
 * Solves the confidence-weighted least squares problem for the two scaled
 * rotation rows and the translation (8 unknowns), takes the scale as the mean
 * of the two row norms and snaps the normalised rows to the nearest pair of
 * orthonormal rows via SVD. The third row is their cross product.
 *
 * shape3d holds one column per landmark. Throws TooFewLandmarks when fewer
 * than config.min_valid_landmarks points pass the confidence floor and
 * RankDeficient for collinear or coplanar configurations.
 */
Pose estimate_pose(const LandmarkFrame& frame, const Eigen::Matrix3Xd& shape3d,
                   const FitConfig& config);

/**
 * Identity and expression coefficients for a fixed pose, minimising
 *
 *   sum_i w_i |s R2 (x_i + U_i c) + t - l_i|^2
 *     + lambda_id |p / sigma_id|^2 + lambda_exp |q / sigma_exp|^2
 *
 * as one stacked system solved by column-pivoting QR.
 * Throws SingularSystem when the regularised system is rank-deficient.
 */
Coefficients solve_coefficients(const LandmarkFrame& frame, const Pose& pose,
                                const MorphableModel& model, const FitConfig& config);

// Full per-frame fit: pose against the mean landmarks, coefficients, then
// n_alternations - 1 rounds of pose against the current shape + coefficients.
FitResult fit_frame(const LandmarkFrame& frame, const MorphableModel& model,
                    const FitConfig& config);

// Confidence-weighted RMS distance between frame landmarks and projected shape3d.
double reprojection_rmse(const LandmarkFrame& frame, const Pose& pose,
                         const Eigen::Matrix3Xd& shape3d, const FitConfig& config);

// Per-landmark weights: the confidence, or 0 below the floor.
Eigen::VectorXd landmark_weights(const LandmarkFrame& frame, const FitConfig& config);

}  // namespace m4d
