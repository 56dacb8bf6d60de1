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

#include <doctest.h>

#include <random>

#include "m4d/error.hpp"
#include "m4d/pose.hpp"
#include "test_support.hpp"

using namespace m4d;
using namespace m4d::testing;

TEST_CASE("project: identity camera drops z") {
  Pose p;
  Eigen::Matrix3Xd v(3, 1);
  v << 1, 2, 3;
  const Eigen::Matrix2Xd out = project(p, v);
  CHECK(out(0, 0) == 1.0);
  CHECK(out(1, 0) == 2.0);
}

TEST_CASE("project: scale and translation") {
  Pose p;
  p.scale = 2.0;
  p.translation = {10.0, 10.0};
  Eigen::Matrix3Xd v(3, 1);
  v << 1, 2, 3;
  const Eigen::Matrix2Xd out = project(p, v);
  CHECK(out(0, 0) == 12.0);
  CHECK(out(1, 0) == 14.0);
}

TEST_CASE("project matches the per-point oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose pose = random_pose(rng);
    Eigen::Matrix3Xd cloud(3, 50);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) cloud.data()[i] = u(rng);
    const Eigen::Matrix2Xd out = project(pose, cloud);
    for (Eigen::Index i = 0; i < cloud.cols(); ++i) {
      const auto [x, y] = project_oracle(pose, cloud(0, i), cloud(1, i), cloud(2, i));
      CHECK(std::abs(out(0, i) - x) <= 1e-12);
      CHECK(std::abs(out(1, i) - y) <= 1e-12);
    }
  }
}

TEST_CASE("rotation_distance") {
  CHECK(rotation_distance(rot_z(0.1), Eigen::Matrix3d::Identity()) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rotation_distance(rot_z(1e-9), Eigen::Matrix3d::Identity()) ==
        doctest::Approx(1e-9).epsilon(1e-6));
  CHECK(rotation_distance(rot_y(0.3), rot_y(0.3)) == 0.0);
  CHECK(rotation_distance(rot_y(3.0), rot_y(-3.0)) == doctest::Approx(2 * std::numbers::pi - 6.0));
}

TEST_CASE("nearest_rotation") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d r = random_rotation(rng);
    CHECK((nearest_rotation(r) - r).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::Matrix3d noisy = r + 0.05 * Eigen::Matrix3d::Random();
    CHECK(is_rotation(nearest_rotation(noisy)));
  }
  // A reflection is corrected to a proper rotation.
  const Eigen::Matrix3d reflect = Eigen::Vector3d(1, 1, -1).asDiagonal();
  CHECK(is_rotation(nearest_rotation(reflect)));
}

TEST_CASE("euler_rotation composes roll * pitch * yaw") {
  CHECK((euler_rotation(0.2, 0.0, 0.0) - rot_y(0.2)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((euler_rotation(0.0, 0.0, 0.3) - rot_z(0.3)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(is_rotation(euler_rotation(0.3, -0.2, 0.1)));
}

TEST_CASE("validate_pose") {
  Pose p;
  CHECK_NOTHROW(validate_pose(p));
  p.scale = 0.0;
  CHECK_THROWS_AS(validate_pose(p), InvariantViolation);
  p.scale = 1.0;
  p.rotation(0, 1) = 0.01;
  CHECK_THROWS_AS(validate_pose(p), InvariantViolation);
  p.rotation = Eigen::Vector3d(1, 1, -1).asDiagonal();
  CHECK_THROWS_AS(validate_pose(p), InvariantViolation);
  p.rotation.setIdentity();
  p.translation.x() = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate_pose(p), InvariantViolation);
}
