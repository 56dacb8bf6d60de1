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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/QR>

#include "m4d/error.hpp"
#include "m4d/morphable_model.hpp"

namespace m4d {
namespace {

constexpr double kRadius = 100.0;
constexpr double kCapHalfAngle = 70.0 * std::numbers::pi / 180.0;
constexpr double kIdentitySigma0 = 10.0;
constexpr double kExpressionSigma0 = 5.0;
constexpr double kSigmaDecay = 0.9;

// Vertices on a lat/long grid over a frontal spherical cap, facing +z.
// Full grid rows are triangulated; a trailing partial row carries no faces.
void build_mean_shape(std::mt19937_64& rng, int n_vertices, MorphableModel& model) {
  const int cols = std::max(2, static_cast<int>(std::ceil(std::sqrt(double(n_vertices)))));
  const int rows = std::max(1, (n_vertices + cols - 1) / cols);
  std::normal_distribution<double> radial(0.0, 0.05);

  model.mean_shape.resize(3 * Eigen::Index{n_vertices});
  for (int v = 0; v < n_vertices; ++v) {
    const int r = v / cols;
    const int c = v % cols;
    const double lat = rows > 1 ? -kCapHalfAngle + 2.0 * kCapHalfAngle * r / (rows - 1) : 0.0;
    const double lon = -kCapHalfAngle + 2.0 * kCapHalfAngle * c / (cols - 1);
    const double radius = kRadius * (1.0 + radial(rng));
    model.mean_shape.segment<3>(3 * Eigen::Index{v}) << radius * std::sin(lon) * std::cos(lat),
        radius * std::sin(lat), radius * std::cos(lon) * std::cos(lat);
  }

  const int full_rows = n_vertices / cols;
  for (int r = 0; r + 1 < full_rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      const auto a = static_cast<std::uint32_t>(r * cols + c);
      const auto b = a + 1;
      const auto d = static_cast<std::uint32_t>(a + cols);
      const auto e = d + 1;
      model.triangles.push_back({a, d, b});
      model.triangles.push_back({b, d, e});
    }
  }
}

std::vector<std::uint32_t> draw_landmarks(std::mt19937_64& rng, int n_vertices, int n_landmarks) {
  std::vector<std::uint32_t> pool(static_cast<std::size_t>(n_vertices));
  std::iota(pool.begin(), pool.end(), 0u);
  // Partial Fisher-Yates; uniform_int_distribution keeps the draw order stable.
  for (int i = 0; i < n_landmarks; ++i) {
    std::uniform_int_distribution<int> pick(i, n_vertices - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(n_landmarks));
  return pool;
}

// Orthonormal basis (3L x 12) of { M x_i + b } over the landmark positions.
Eigen::MatrixXd affine_motion_basis(const Eigen::Matrix3Xd& landmarks) {
  const Eigen::Index n = landmarks.cols();
  Eigen::MatrixXd span = Eigen::MatrixXd::Zero(3 * n, 12);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int f = 0; f < 3; ++f) {
        span(3 * i + axis, 4 * axis + f) = landmarks(f, i);
      }
      span(3 * i + axis, 4 * axis + 3) = 1.0;
    }
  }
  const Eigen::Index rank = std::min<Eigen::Index>(12, 3 * n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(span);
  return qr.householderQ() * Eigen::MatrixXd::Identity(3 * n, rank);
}

Eigen::MatrixXd random_basis(std::mt19937_64& rng, const MorphableModel& model, int k,
                             const Eigen::MatrixXd& motion) {
  const Eigen::Index rows = model.mean_shape.size();
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(rows, k);
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      g(i, j) = gauss(rng);
    }
  }

  // Only possible when enough rows remain outside the motion space.
  if (rows - motion.cols() >= k) {
    const Eigen::Index n_lm = model.n_landmarks();
    Eigen::MatrixXd at_landmarks(3 * n_lm, k);
    for (Eigen::Index i = 0; i < n_lm; ++i) {
      at_landmarks.middleRows<3>(3 * i) = g.middleRows<3>(3 * Eigen::Index{model.landmark_indices[i]});
    }
    at_landmarks -= motion * (motion.transpose() * at_landmarks);
    for (Eigen::Index i = 0; i < n_lm; ++i) {
      g.middleRows<3>(3 * Eigen::Index{model.landmark_indices[i]}) = at_landmarks.middleRows<3>(3 * i);
    }
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, k);
}

Eigen::VectorXd decaying_sigmas(double sigma0, int k) {
  Eigen::VectorXd s(k);
  for (int i = 0; i < k; ++i) {
    s[i] = sigma0 * std::pow(kSigmaDecay, i);
  }
  return s;
}

}  // namespace

MorphableModel synthesize_model(std::uint64_t seed, int n_vertices, int k_id, int k_exp,
                                int n_landmarks, std::string model_id) {
  if (n_landmarks < 4) {
    throw InvalidConfig("n_landmarks must be at least 4, got " + std::to_string(n_landmarks));
  }
  if (n_vertices < n_landmarks) {
    throw InvalidConfig("n_vertices must be at least n_landmarks");
  }
  if (k_id < 1 || k_exp < 1) {
    throw InvalidConfig("k_id and k_exp must be at least 1");
  }
  if (k_id + k_exp >= 2 * n_landmarks) {
    throw InvalidConfig("k_id + k_exp must be below 2 * n_landmarks");
  }

  std::mt19937_64 rng(seed);
  MorphableModel model;
  model.model_id = std::move(model_id);
  build_mean_shape(rng, n_vertices, model);
  model.landmark_indices = draw_landmarks(rng, n_vertices, n_landmarks);

  const Eigen::MatrixXd motion = affine_motion_basis(mean_landmark_shape(model));
  model.id_basis = random_basis(rng, model, k_id, motion);
  model.id_stddev = decaying_sigmas(kIdentitySigma0, k_id);
  model.exp_basis = random_basis(rng, model, k_exp, motion);
  model.exp_stddev = decaying_sigmas(kExpressionSigma0, k_exp);
  return model;
}

}  // namespace m4d
