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

#include "m4d/fitting.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "m4d/error.hpp"

namespace m4d {
namespace {

constexpr double kRankTolerance = 1e-9;

// Landmark-restricted view of a model, built once per fit.
struct LandmarkSystem {
  Eigen::Matrix3Xd mean;   // 3 x L
  Eigen::MatrixXd basis;   // 3L x K, [U_id | U_exp]
  Eigen::VectorXd prior;   // K, lambda / sigma^2

  LandmarkSystem(const MorphableModel& model, const FitConfig& config)
      : mean(mean_landmark_shape(model)), basis(landmark_basis(model)), prior(basis.cols()) {
    prior << (config.lambda_id / model.id_stddev.array().square()).matrix(),
        (config.lambda_exp / model.exp_stddev.array().square()).matrix();
  }

  Eigen::Matrix3Xd shape(const Eigen::VectorXd& c) const {
    const Eigen::VectorXd delta = basis * c;
    return mean + Eigen::Map<const Eigen::Matrix3Xd>(delta.data(), 3, mean.cols());
  }
};

void check_frame_size(const LandmarkFrame& frame, Eigen::Index expected) {
  if (frame.points.rows() != expected || frame.confidence.size() != expected) {
    throw DimensionMismatch("frame has " + std::to_string(frame.points.rows()) + " points and " +
                            std::to_string(frame.confidence.size()) + " confidences, expected " +
                            std::to_string(expected));
  }
}

Coefficients split(const Eigen::VectorXd& c, Eigen::Index k_id) {
  return {c.head(k_id), c.tail(c.size() - k_id)};
}

Eigen::VectorXd solve_stacked(const LandmarkFrame& frame, const Pose& pose,
                              const LandmarkSystem& system, const Eigen::VectorXd& weights) {
  const Eigen::Index k = system.basis.cols();
  Eigen::Index n_valid = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    n_valid += weights[i] > 0.0 ? 1 : 0;
  }

  const Eigen::Matrix<double, 2, 3> camera = pose.scale * pose.rotation.topRows<2>();
  Eigen::MatrixXd design(2 * n_valid + k, k);
  Eigen::VectorXd rhs(2 * n_valid + k);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) {
      continue;
    }
    const double sw = std::sqrt(weights[i]);
    design.middleRows<2>(row) = sw * (camera * system.basis.middleRows<3>(3 * i));
    const Eigen::Vector2d predicted = camera * system.mean.col(i) + pose.translation;
    rhs.segment<2>(row) = sw * (frame.points.row(i).transpose() - predicted);
    row += 2;
  }
  design.bottomRows(k) = system.prior.cwiseSqrt().asDiagonal();
  rhs.tail(k).setZero();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k) {
    throw SingularSystem("coefficient system has rank " + std::to_string(qr.rank()) + " < " +
                         std::to_string(k));
  }
  return qr.solve(rhs);
}

double weighted_rmse(const LandmarkFrame& frame, const Pose& pose, const Eigen::Matrix3Xd& shape,
                     const Eigen::VectorXd& weights) {
  const Eigen::Matrix2Xd projected = project(pose, shape);
  double sum = 0.0;
  double total_weight = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) {
      continue;
    }
    sum += weights[i] * (projected.col(i) - frame.points.row(i).transpose()).squaredNorm();
    total_weight += weights[i];
  }
  return total_weight > 0.0 ? std::sqrt(sum / total_weight) : 0.0;
}

}  // namespace

void validate_fit_config(const FitConfig& config) {
  if (!(config.lambda_id >= 0.0) || !(config.lambda_exp >= 0.0) ||
      !std::isfinite(config.lambda_id) || !std::isfinite(config.lambda_exp)) {
    throw InvalidConfig("regularisation weights must be finite and non-negative");
  }
  if (config.n_alternations < 1) {
    throw InvalidConfig("n_alternations must be positive");
  }
  if (config.min_valid_landmarks < 0) {
    throw InvalidConfig("min_valid_landmarks must be non-negative");
  }
  if (!(config.confidence_floor >= 0.0 && config.confidence_floor <= 1.0)) {
    throw InvalidConfig("confidence_floor must lie in [0, 1]");
  }
}

void validate_frame(const LandmarkFrame& frame) {
  if (frame.points.rows() != frame.confidence.size()) {
    throw DimensionMismatch("points and confidence lengths differ");
  }
  if (!frame.points.allFinite()) {
    throw InvariantViolation("landmark coordinates must be finite");
  }
  for (Eigen::Index i = 0; i < frame.confidence.size(); ++i) {
    if (!(frame.confidence[i] >= 0.0 && frame.confidence[i] <= 1.0)) {
      throw InvariantViolation("confidence " + std::to_string(i) + " outside [0, 1]");
    }
  }
}

Eigen::VectorXd landmark_weights(const LandmarkFrame& frame, const FitConfig& config) {
  Eigen::VectorXd w(frame.confidence.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double c = frame.confidence[i];
    w[i] = (c >= config.confidence_floor && c > 0.0) ? c : 0.0;
  }
  return w;
}

Pose estimate_pose(const LandmarkFrame& frame, const Eigen::Matrix3Xd& shape3d,
                   const FitConfig& config) {
  check_frame_size(frame, shape3d.cols());
  const Eigen::VectorXd w = landmark_weights(frame, config);
  Eigen::Index n_valid = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    n_valid += w[i] > 0.0 ? 1 : 0;
  }
  if (n_valid < config.min_valid_landmarks || n_valid == 0) {
    throw TooFewLandmarks(std::to_string(n_valid) + " valid landmarks, need " +
                          std::to_string(config.min_valid_landmarks));
  }

  // Centring decouples the translation; the remaining 6 unknowns share one
  // weighted 3-column design matrix.
  const double total = w.sum();
  Eigen::Vector3d model_centroid = Eigen::Vector3d::Zero();
  Eigen::Vector2d image_centroid = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) {
      model_centroid += w[i] * shape3d.col(i);
      image_centroid += w[i] * frame.points.row(i).transpose();
    }
  }
  model_centroid /= total;
  image_centroid /= total;

  Eigen::MatrixXd design(n_valid, 3);
  Eigen::MatrixXd target(n_valid, 2);
  for (Eigen::Index i = 0, row = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) {
      const double sw = std::sqrt(w[i]);
      design.row(row) = sw * (shape3d.col(i) - model_centroid).transpose();
      target.row(row) = sw * (frame.points.row(i) - image_centroid.transpose());
      ++row;
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[2] <= kRankTolerance * sv[0]) {
    throw RankDeficient("landmark shape is collinear or coplanar");
  }
  const Eigen::Matrix<double, 2, 3> affine = svd.solve(target).transpose();

  Pose pose;
  pose.scale = 0.5 * (affine.row(0).norm() + affine.row(1).norm());
  if (!(pose.scale > 0.0) || !std::isfinite(pose.scale)) {
    throw RankDeficient("degenerate image landmarks, scale vanished");
  }
  const Eigen::Matrix<double, 2, 3> rows = affine / pose.scale;
  Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> row_svd(rows, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (row_svd.singularValues()[1] <= kRankTolerance * row_svd.singularValues()[0]) {
    throw RankDeficient("image landmarks are collinear");
  }
  const Eigen::Matrix<double, 2, 3> orthonormal =
      row_svd.matrixU() * row_svd.matrixV().leftCols<2>().transpose();
  pose.rotation.row(0) = orthonormal.row(0);
  pose.rotation.row(1) = orthonormal.row(1);
  pose.rotation.row(2) = orthonormal.row(0).cross(orthonormal.row(1));
  pose.translation = image_centroid - affine * model_centroid;
  return pose;
}

Coefficients solve_coefficients(const LandmarkFrame& frame, const Pose& pose,
                                const MorphableModel& model, const FitConfig& config) {
  check_frame_size(frame, model.n_landmarks());
  const LandmarkSystem system(model, config);
  return split(solve_stacked(frame, pose, system, landmark_weights(frame, config)),
               model.n_identity());
}

FitResult fit_frame(const LandmarkFrame& frame, const MorphableModel& model,
                    const FitConfig& config) {
  validate_fit_config(config);
  check_frame_size(frame, model.n_landmarks());
  const LandmarkSystem system(model, config);
  const Eigen::VectorXd weights = landmark_weights(frame, config);

  FitResult result;
  Eigen::Matrix3Xd shape = system.mean;
  Eigen::VectorXd c;
  for (int it = 0; it < config.n_alternations; ++it) {
    result.pose = estimate_pose(frame, shape, config);
    c = solve_stacked(frame, result.pose, system, weights);
    shape = system.shape(c);
    result.n_iterations = it + 1;
  }
  result.coeffs = split(c, model.n_identity());
  result.reprojection_rmse = weighted_rmse(frame, result.pose, shape, weights);
  result.valid_landmarks = static_cast<int>((weights.array() > 0.0).count());
  return result;
}

double reprojection_rmse(const LandmarkFrame& frame, const Pose& pose,
                         const Eigen::Matrix3Xd& shape3d, const FitConfig& config) {
  check_frame_size(frame, shape3d.cols());
  return weighted_rmse(frame, pose, shape3d, landmark_weights(frame, config));
}

}  // namespace m4d
