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

#include "m4d/pose.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "m4d/error.hpp"

namespace m4d {

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) {
    return false;
  }
  const double orth = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return orth <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

void validate_pose(const Pose& pose) {
  if (!std::isfinite(pose.scale) || !(pose.scale > 0.0)) {
    throw InvariantViolation("pose scale must be positive and finite");
  }
  if (!pose.translation.allFinite()) {
    throw InvariantViolation("pose translation is not finite");
  }
  if (!is_rotation(pose.rotation)) {
    throw InvariantViolation("pose rotation is not in SO(3)");
  }
}

Eigen::Matrix2Xd project(const Pose& pose, const Eigen::Matrix3Xd& vertices) {
  return ((pose.scale * pose.rotation.topRows<2>()) * vertices).colwise() + pose.translation;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  return svd.matrixU() * d * svd.matrixV().transpose();
}

double rotation_distance(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2) {
  const Eigen::Matrix3d rel = r1.transpose() * r2;
  const Eigen::Vector3d axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double sin_angle = 0.5 * axis.norm();
  const double cos_angle = 0.5 * (rel.trace() - 1.0);
  return std::atan2(sin_angle, cos_angle);
}

Eigen::Matrix3d euler_rotation(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()))
      .toRotationMatrix();
}

}  // namespace m4d
