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

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/QR>

#include "m4d/error.hpp"
#include "m4d/fitting.hpp"
#include "test_support.hpp"

using namespace m4d;
using namespace m4d::testing;

namespace {

const MorphableModel& desk_model() {
  static const MorphableModel model = synthesize_model(7, 2000, 40, 20, 68);
  return model;
}

// Same shape statistics but with plain orthonormalised Gaussian bases, so
// shape variation can mimic camera motion.
MorphableModel generic_model(std::uint64_t seed) {
  MorphableModel m = synthesize_model(seed, 400, 10, 6, 30);
  std::mt19937_64 rng(seed + 1000);
  for (auto* basis : {&m.id_basis, &m.exp_basis}) {
    Eigen::MatrixXd g(basis->rows(), basis->cols());
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = random_vector(rng, 1)[0];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    *basis = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
  }
  validate_model(m);
  return m;
}

Pose reference_pose() {
  Pose p;
  p.scale = 1.5;
  p.rotation = rot_y(deg(20.0));
  p.translation = {320.0, 240.0};
  return p;
}

void add_noise(LandmarkFrame& f, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> g(0.0, sigma);
  for (Eigen::Index i = 0; i < f.points.size(); ++i) f.points.data()[i] += g(rng);
}

FitConfig tiny_lambda() {
  FitConfig c;
  c.lambda_id = 1e-8;
  c.lambda_exp = 1e-8;
  return c;
}

double coefficient_error(const Coefficients& got, const Coefficients& want) {
  return (got.stacked() - want.stacked()).norm() / std::max(want.stacked().norm(), 1.0);
}

}  // namespace

TEST_CASE("estimate_pose recovers an exact scaled orthographic camera") {
  const auto& m = desk_model();
  const Pose truth = reference_pose();
  const Eigen::Matrix3Xd shape = mean_landmark_shape(m);
  const Pose est = estimate_pose(frame_from(truth, shape), shape, FitConfig{});
  CHECK(std::abs(est.scale - truth.scale) / truth.scale < 1e-6);
  CHECK(rotation_distance(est.rotation, truth.rotation) < 1e-6);
  CHECK((est.translation - truth.translation).norm() < 1e-6);
  CHECK(is_rotation(est.rotation));
}

TEST_CASE("estimate_pose recovers random poses of random shapes") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Matrix3Xd shape(3, 20);
    for (Eigen::Index i = 0; i < shape.size(); ++i) shape.data()[i] = u(rng);
    const Pose truth = random_pose(rng);
    const Pose est = estimate_pose(frame_from(truth, shape), shape, FitConfig{});
    CHECK(std::abs(est.scale - truth.scale) / truth.scale < 1e-6);
    CHECK(rotation_distance(est.rotation, truth.rotation) < 1e-6);
    CHECK((est.translation - truth.translation).norm() < 1e-6);
  }
}

TEST_CASE("estimate_pose rejects degenerate configurations") {
  const FitConfig cfg;
  SUBCASE("collinear landmarks") {
    Eigen::Matrix3Xd line(3, 10);
    for (int i = 0; i < 10; ++i) line.col(i) = Eigen::Vector3d(1, 2, 3) * i + Eigen::Vector3d(5, 0, 1);
    CHECK_THROWS_AS(estimate_pose(frame_from(reference_pose(), line), line, cfg), RankDeficient);
  }
  SUBCASE("coplanar landmarks") {
    Eigen::Matrix3Xd plane(3, 10);
    for (int i = 0; i < 10; ++i) plane.col(i) = Eigen::Vector3d(i * 7 % 5, i * 3 % 4, 0.0);
    CHECK_THROWS_AS(estimate_pose(frame_from(reference_pose(), plane), plane, cfg), RankDeficient);
  }
  SUBCASE("three valid landmarks") {
    const auto& m = desk_model();
    const Eigen::Matrix3Xd shape = mean_landmark_shape(m);
    LandmarkFrame f = frame_from(reference_pose(), shape);
    f.confidence.setConstant(0.05);  // below the 0.1 floor
    f.confidence.head(3).setOnes();
    CHECK_THROWS_AS(estimate_pose(f, shape, cfg), TooFewLandmarks);
    f.confidence[3] = 0.5;
    CHECK_NOTHROW(estimate_pose(f, shape, cfg));
  }
  SUBCASE("frame size mismatch") {
    const Eigen::Matrix3Xd shape = mean_landmark_shape(desk_model());
    LandmarkFrame f = frame_from(reference_pose(), shape.leftCols(10));
    CHECK_THROWS_AS(estimate_pose(f, shape, cfg), DimensionMismatch);
  }
}

TEST_CASE("estimate_pose is equivariant to image translation and scaling") {
  const auto& m = desk_model();
  std::mt19937_64 rng(44);
  const Eigen::Matrix3Xd shape = mean_landmark_shape(m);
  for (int trial = 0; trial < 20; ++trial) {
    LandmarkFrame f = frame_from(random_pose(rng), shape);
    add_noise(f, rng, 2.0);
    const Pose base = estimate_pose(f, shape, FitConfig{});

    const Eigen::Vector2d delta(37.5, -12.25);
    LandmarkFrame shifted = f;
    shifted.points.rowwise() += delta.transpose();
    const Pose moved = estimate_pose(shifted, shape, FitConfig{});
    CHECK((moved.translation - base.translation - delta).norm() <= 1e-9);
    CHECK(std::abs(moved.scale - base.scale) <= 1e-9);
    CHECK((moved.rotation - base.rotation).cwiseAbs().maxCoeff() <= 1e-9);

    const double s = 1.7;
    LandmarkFrame scaled = f;
    scaled.points *= s;
    const Pose grown = estimate_pose(scaled, shape, FitConfig{});
    CHECK(std::abs(grown.scale - s * base.scale) <= 1e-9);
    CHECK((grown.translation - s * base.translation).norm() <= 1e-9);
    CHECK((grown.rotation - base.rotation).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("solve_coefficients returns zero for a mean-shape frame") {
  const auto& m = desk_model();
  const Pose truth = reference_pose();
  const LandmarkFrame f = frame_from(truth, mean_landmark_shape(m));
  for (const double lambda : {1e-3, 0.05, 10.0}) {
    FitConfig cfg;
    cfg.lambda_id = lambda;
    cfg.lambda_exp = lambda;
    CHECK(solve_coefficients(f, truth, m, cfg).stacked().cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("solve_coefficients recovers in-span coefficients") {
  const auto& m = desk_model();
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Coefficients truth_c = random_coefficients(rng, m, 2.0);
    const Pose truth = random_pose(rng);
    const LandmarkFrame f = frame_from(truth, model_landmarks(m, truth_c));
    const Coefficients c = solve_coefficients(f, truth, m, tiny_lambda());
    CHECK((c.stacked() - truth_c.stacked()).norm() / truth_c.stacked().norm() < 1e-4);
  }
}

TEST_CASE("a huge identity weight leaves the residual to expression") {
  const auto& m = desk_model();
  std::mt19937_64 rng(77);
  const Coefficients truth_c = random_coefficients(rng, m, 2.0);
  const Pose truth = reference_pose();
  LandmarkFrame f = frame_from(truth, model_landmarks(m, truth_c));
  add_noise(f, rng, 1.0);
  FitConfig cfg;
  cfg.lambda_id = 1e9;
  const Coefficients c = solve_coefficients(f, truth, m, cfg);
  CHECK(c.identity.norm() < 1e-3);
  CHECK(c.expression.norm() > 1.0);
  const double rmse_fit = reprojection_rmse(f, truth, landmark_shape(m, c), cfg);
  const double rmse_zero = reprojection_rmse(f, truth, mean_landmark_shape(m), cfg);
  CHECK(rmse_fit < rmse_zero);
}

TEST_CASE("solve_coefficients satisfies the regularised normal equations") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const MorphableModel m = synthesize_model(trial, 150, 1 + trial % 9, 1 + trial % 5, 12 + trial % 9);
    const Pose pose = random_pose(rng);
    LandmarkFrame f = frame_from(pose, model_landmarks(m, random_coefficients(rng, m, 2.0)));
    add_noise(f, rng, 3.0);
    for (Eigen::Index i = 0; i < f.confidence.size(); ++i) f.confidence[i] = u(rng);
    FitConfig cfg;
    cfg.lambda_id = std::pow(10.0, -4.0 + 5.0 * u(rng));
    cfg.lambda_exp = std::pow(10.0, -4.0 + 5.0 * u(rng));
    const Coefficients c = solve_coefficients(f, pose, m, cfg);
    const NormalEquations ne = normal_equations(f, pose, m, cfg);
    CHECK((ne.lhs * c.stacked() - ne.rhs).norm() <= 1e-8 * ne.rhs.norm());
  }
}

TEST_CASE("solve_coefficients error paths") {
  const auto& m = desk_model();
  const Pose pose = reference_pose();
  SUBCASE("dimension mismatch") {
    const LandmarkFrame f = frame_from(pose, mean_landmark_shape(m).leftCols(20));
    CHECK_THROWS_AS(solve_coefficients(f, pose, m, FitConfig{}), DimensionMismatch);
  }
  SUBCASE("unregularised and underdetermined") {
    LandmarkFrame f = frame_from(pose, mean_landmark_shape(m));
    f.confidence.setZero();
    f.confidence.head(10).setOnes();  // 20 equations, 60 unknowns
    FitConfig cfg;
    cfg.lambda_id = 0.0;
    cfg.lambda_exp = 0.0;
    CHECK_THROWS_AS(solve_coefficients(f, pose, m, cfg), SingularSystem);
    cfg.lambda_exp = 1e-6;
    cfg.lambda_id = 1e-6;
    CHECK_NOTHROW(solve_coefficients(f, pose, m, cfg));
  }
}

TEST_CASE("fit_frame closes the loop on noiseless frames") {
  const auto& m = desk_model();
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Coefficients truth_c = random_coefficients(rng, m, 2.0);
    Pose truth = random_pose(rng);
    truth.rotation = euler_rotation(deg(40.0) * (u01(rng) - 0.5), deg(20.0) * (u01(rng) - 0.5),
                                    deg(20.0) * (u01(rng) - 0.5));
    const LandmarkFrame f = frame_from(truth, model_landmarks(m, truth_c));
    const FitResult r = fit_frame(f, m, tiny_lambda());
    CHECK(r.n_iterations == 3);
    CHECK(r.valid_landmarks == 68);
    CHECK(r.reprojection_rmse < 1e-6);
    CHECK(rotation_distance(r.pose.rotation, truth.rotation) < 1e-6);
    CHECK(coefficient_error(r.coeffs, truth_c) < 1e-4);
  }
}

TEST_CASE("fit_frame with one alternation uses the mean-face pose") {
  const auto& m = desk_model();
  std::mt19937_64 rng(9);
  LandmarkFrame f = frame_from(reference_pose(), model_landmarks(m, random_coefficients(rng, m, 2.0)));
  add_noise(f, rng, 1.0);
  FitConfig cfg;
  cfg.n_alternations = 1;
  const FitResult r = fit_frame(f, m, cfg);
  const Pose direct = estimate_pose(f, mean_landmark_shape(m), cfg);
  CHECK(r.n_iterations == 1);
  CHECK(r.pose.scale == direct.scale);
  CHECK(r.pose.rotation == direct.rotation);
  CHECK(r.pose.translation == direct.translation);
}

TEST_CASE("fit_frame RMSE stays within 2 px under 1 px noise") {
  const auto& m = desk_model();
  std::mt19937_64 rng(555);
  int within = 0;
  const int n = 200;
  for (int trial = 0; trial < n; ++trial) {
    Pose truth = reference_pose();
    truth.rotation = euler_rotation(deg(60.0) * (u01(rng) - 0.5), deg(20.0) * (u01(rng) - 0.5), 0.0);
    LandmarkFrame f = frame_from(truth, model_landmarks(m, random_coefficients(rng, m, 2.0)));
    add_noise(f, rng, 1.0);
    const FitResult r = fit_frame(f, m, FitConfig{});
    within += r.reprojection_rmse <= 2.0 ? 1 : 0;
    CHECK(is_rotation(r.pose.rotation));
  }
  CHECK(within >= 190);
}

TEST_CASE("RMSE never increases across alternations on noiseless frames") {
  std::mt19937_64 rng(63);
  for (const MorphableModel& m : {desk_model(), generic_model(3), generic_model(4)}) {
    for (int trial = 0; trial < 5; ++trial) {
      const LandmarkFrame f =
          frame_from(random_pose(rng), model_landmarks(m, random_coefficients(rng, m, 2.0)));
      double previous = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= 6; ++k) {
        FitConfig cfg = tiny_lambda();
        cfg.n_alternations = k;
        const double rmse = fit_frame(f, m, cfg).reprojection_rmse;
        CHECK(rmse <= previous + 1e-9);
        previous = rmse;
      }
    }
  }
}

TEST_CASE("a zero-confidence landmark is the same as a deleted one") {
  const auto& m = desk_model();
  std::mt19937_64 rng(71);
  LandmarkFrame f = frame_from(reference_pose(), model_landmarks(m, random_coefficients(rng, m, 2.0)));
  add_noise(f, rng, 1.0);
  for (const Eigen::Index dropped : {Eigen::Index{0}, Eigen::Index{33}, Eigen::Index{67}}) {
    LandmarkFrame zeroed = f;
    zeroed.confidence[dropped] = 0.0;
    zeroed.points.row(dropped) << 1e6, -1e6;  // never read

    MorphableModel reduced = m;
    reduced.landmark_indices.erase(reduced.landmark_indices.begin() + dropped);
    LandmarkFrame deleted;
    deleted.points.resize(f.points.rows() - 1, 2);
    deleted.confidence.resize(f.points.rows() - 1);
    for (Eigen::Index i = 0, j = 0; i < f.points.rows(); ++i) {
      if (i == dropped) continue;
      deleted.points.row(j) = f.points.row(i);
      deleted.confidence[j] = f.confidence[i];
      ++j;
    }
    const FitResult a = fit_frame(zeroed, m, FitConfig{});
    const FitResult b = fit_frame(deleted, reduced, FitConfig{});
    CHECK(std::abs(a.pose.scale - b.pose.scale) <= 1e-10);
    CHECK((a.pose.rotation - b.pose.rotation).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((a.pose.translation - b.pose.translation).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((a.coeffs.stacked() - b.coeffs.stacked()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(a.reprojection_rmse - b.reprojection_rmse) <= 1e-10);
    CHECK(a.valid_landmarks == 67);
  }
}

TEST_CASE("poses stay in SO(3) under noise and occlusion") {
  const auto& m = desk_model();
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int fitted = 0;
  for (int trial = 0; trial < 200; ++trial) {
    LandmarkFrame f = frame_from(random_pose(rng), model_landmarks(m, random_coefficients(rng, m, 2.0)));
    add_noise(f, rng, 3.0);
    for (Eigen::Index i = 0; i < f.confidence.size(); ++i) {
      f.confidence[i] = u(rng) < 0.5 ? 0.0 : u(rng);
    }
    try {
      const FitResult r = fit_frame(f, m, FitConfig{});
      CHECK(is_rotation(r.pose.rotation));
      CHECK(r.pose.scale > 0.0);
      CHECK(std::isfinite(r.reprojection_rmse));
      ++fitted;
    } catch (const TooFewLandmarks&) {
    }
  }
  CHECK(fitted > 150);
}

TEST_CASE("fit config validation") {
  const auto& m = desk_model();
  const LandmarkFrame f = frame_from(reference_pose(), mean_landmark_shape(m));
  FitConfig cfg;
  cfg.n_alternations = 0;
  CHECK_THROWS_AS(fit_frame(f, m, cfg), InvalidConfig);
  cfg = FitConfig{};
  cfg.lambda_id = -1.0;
  CHECK_THROWS_AS(fit_frame(f, m, cfg), InvalidConfig);
  cfg = FitConfig{};
  cfg.confidence_floor = 1.5;
  CHECK_THROWS_AS(fit_frame(f, m, cfg), InvalidConfig);
}
