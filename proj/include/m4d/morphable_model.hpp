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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace m4d {

/**
 * Linear face model combining an identity subspace and an expression
 * (delta-blendshape) subspace around a single mean:
 *
 *   shape = mean_shape + id_basis * p + exp_basis * q
 *
 * Shapes are stored as 3N vectors with xyz interleaved per vertex. Basis
 * columns are unit-norm; the per-component standard deviations live in
 * id_stddev / exp_stddev, so coefficients are raw weights in model units.
 *
 * Instances are immutable once built and may be shared between sessions.
 */
struct MorphableModel {
  std::string model_id;
  Eigen::VectorXd mean_shape;
  Eigen::MatrixXd id_basis;
  Eigen::VectorXd id_stddev;
  Eigen::MatrixXd exp_basis;
  Eigen::VectorXd exp_stddev;
  std::vector<std::uint32_t> landmark_indices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  Eigen::Index n_vertices() const { return mean_shape.size() / 3; }
  Eigen::Index n_identity() const { return id_basis.cols(); }
  Eigen::Index n_expression() const { return exp_basis.cols(); }
  Eigen::Index n_landmarks() const { return static_cast<Eigen::Index>(landmark_indices.size()); }
};

// Field-by-field exact comparison; arrays of different shape compare unequal.
bool operator==(const MorphableModel& a, const MorphableModel& b);

struct Coefficients {
  Eigen::VectorXd identity;
  Eigen::VectorXd expression;

  static Coefficients zero(const MorphableModel& model) {
    return {Eigen::VectorXd::Zero(model.n_identity()), Eigen::VectorXd::Zero(model.n_expression())};
  }

  // (p; q) stacked into a single vector.
  Eigen::VectorXd stacked() const;
};

bool operator==(const Coefficients& a, const Coefficients& b);

// Throws InvariantViolation describing the first invariant that fails.
void validate_model(const MorphableModel& model);

// mean + U_id p + U_exp q. Throws DimensionMismatch on wrong coefficient lengths.
Eigen::VectorXd reconstruct_mesh(const MorphableModel& model, const Coefficients& coeffs);

// Caricature transform: q scaled by gamma_exp, p by gamma_id.
Coefficients exaggerate(const Coefficients& coeffs, double gamma_exp, double gamma_id = 1.0);

// 3xL positions of the landmark vertices of the reconstructed shape.
Eigen::Matrix3Xd landmark_shape(const MorphableModel& model, const Coefficients& coeffs);

// 3xL positions of the landmark vertices of the mean shape.
Eigen::Matrix3Xd mean_landmark_shape(const MorphableModel& model);

// Rows of [U_id | U_exp] at the landmark vertices, 3L x (K_id + K_exp),
// ordered landmark-major (x, y, z of landmark 0 first).
Eigen::MatrixXd landmark_basis(const MorphableModel& model);

/**
 * Deterministic synthetic model with the same structure as a real one.
 *
 * The mean is a perturbed sphere of radius ~100. Bases come from seeded
 * Gaussian matrices; on the landmark rows they are made orthogonal to the
 * 12-dimensional space of affine motions of the mean landmark shape before
 * orthonormalisation, so shape variation at the landmarks never mimics a
 * change of camera. Standard deviations decay as 10 * 0.9^k (identity)
 * and 5 * 0.9^k (expression).
 *
 * Throws InvalidConfig unless N >= L >= 4, K_id, K_exp >= 1 and
 * K_id + K_exp < 2L.
 */
MorphableModel synthesize_model(std::uint64_t seed, int n_vertices, int k_id, int k_exp,
                                int n_landmarks, std::string model_id = "global");

}  // namespace m4d
