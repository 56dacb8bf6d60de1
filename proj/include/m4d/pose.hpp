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

namespace m4d {

/**
 * Scaled orthographic camera: a model point v lands at
 *
 *   scale * rotation.topRows<2>() * v + translation
 *
 * in pixels. Depth is absorbed into the scale.
 */
struct Pose {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();
};

// RtR = I and det(R) = +1 within tol.
bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-8);

// Throws InvariantViolation.
void validate_pose(const Pose& pose);

// 2xM image positions of the 3xM points.
Eigen::Matrix2Xd project(const Pose& pose, const Eigen::Matrix3Xd& vertices);

// Closest rotation in Frobenius norm (SVD with determinant correction).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

// Angle of R1^T R2 in radians, accurate for small angles.
double rotation_distance(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2);

// R_z(roll) * R_x(pitch) * R_y(yaw), angles in radians.
Eigen::Matrix3d euler_rotation(double yaw, double pitch, double roll);

}  // namespace m4d
