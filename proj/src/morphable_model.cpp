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

#include "m4d/morphable_model.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "m4d/error.hpp"

namespace m4d {
namespace {

template <typename A, typename B>
bool same_array(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

void check_basis(const Eigen::MatrixXd& basis, const Eigen::VectorXd& stddev, Eigen::Index rows,
                 const char* name) {
  if (basis.rows() != rows) {
    throw InvariantViolation(std::string(name) + " has " + std::to_string(basis.rows()) +
                             " rows, expected " + std::to_string(rows));
  }
  if (stddev.size() != basis.cols()) {
    throw InvariantViolation(std::string(name) + " stddev length does not match column count");
  }
  if (!basis.allFinite() || !stddev.allFinite()) {
    throw InvariantViolation(std::string(name) + " contains non-finite values");
  }
  for (Eigen::Index k = 0; k < stddev.size(); ++k) {
    if (!(stddev[k] > 0.0)) {
      throw InvariantViolation(std::string(name) + " stddev[" + std::to_string(k) +
                               "] is not positive");
    }
  }
  const Eigen::MatrixXd gram = basis.transpose() * basis;
  for (Eigen::Index j = 0; j < gram.cols(); ++j) {
    const double norm = std::sqrt(gram(j, j));
    if (std::abs(norm - 1.0) > 1e-9) {
      throw InvariantViolation(std::string(name) + " column " + std::to_string(j) +
                               " has norm " + std::to_string(norm));
    }
    for (Eigen::Index i = 0; i < j; ++i) {
      if (std::abs(gram(i, j)) > 1e-8) {
        throw InvariantViolation(std::string(name) + " columns " + std::to_string(i) + " and " +
                                 std::to_string(j) + " are not orthogonal");
      }
    }
  }
}

void check_lengths(const MorphableModel& model, const Coefficients& coeffs) {
  if (coeffs.identity.size() != model.n_identity() ||
      coeffs.expression.size() != model.n_expression()) {
    throw DimensionMismatch("coefficients (" + std::to_string(coeffs.identity.size()) + ", " +
                            std::to_string(coeffs.expression.size()) + ") do not match model (" +
                            std::to_string(model.n_identity()) + ", " +
                            std::to_string(model.n_expression()) + ")");
  }
}

}  // namespace

Eigen::VectorXd Coefficients::stacked() const {
  Eigen::VectorXd c(identity.size() + expression.size());
  c << identity, expression;
  return c;
}

bool operator==(const Coefficients& a, const Coefficients& b) {
  return same_array(a.identity, b.identity) && same_array(a.expression, b.expression);
}

bool operator==(const MorphableModel& a, const MorphableModel& b) {
  return a.model_id == b.model_id && same_array(a.mean_shape, b.mean_shape) &&
         same_array(a.id_basis, b.id_basis) && same_array(a.id_stddev, b.id_stddev) &&
         same_array(a.exp_basis, b.exp_basis) && same_array(a.exp_stddev, b.exp_stddev) &&
         a.landmark_indices == b.landmark_indices && a.triangles == b.triangles;
}

void validate_model(const MorphableModel& model) {
  if (model.mean_shape.size() == 0 || model.mean_shape.size() % 3 != 0) {
    throw InvariantViolation("mean_shape length must be a positive multiple of 3");
  }
  if (!model.mean_shape.allFinite()) {
    throw InvariantViolation("mean_shape contains non-finite values");
  }
  const Eigen::Index rows = model.mean_shape.size();
  check_basis(model.id_basis, model.id_stddev, rows, "id_basis");
  check_basis(model.exp_basis, model.exp_stddev, rows, "exp_basis");

  const auto n = static_cast<std::uint64_t>(model.n_vertices());
  if (model.landmark_indices.size() < 4) {
    throw InvariantViolation("at least 4 landmarks are required");
  }
  std::unordered_set<std::uint32_t> seen;
  for (const auto idx : model.landmark_indices) {
    if (idx >= n) {
      throw InvariantViolation("landmark index " + std::to_string(idx) + " out of range");
    }
    if (!seen.insert(idx).second) {
      throw InvariantViolation("duplicate landmark index " + std::to_string(idx));
    }
  }
  for (const auto& tri : model.triangles) {
    for (const auto v : tri) {
      if (v >= n) {
        throw InvariantViolation("triangle references vertex " + std::to_string(v));
      }
    }
  }
}

Eigen::VectorXd reconstruct_mesh(const MorphableModel& model, const Coefficients& coeffs) {
  check_lengths(model, coeffs);
  return model.mean_shape + model.id_basis * coeffs.identity + model.exp_basis * coeffs.expression;
}

Coefficients exaggerate(const Coefficients& coeffs, double gamma_exp, double gamma_id) {
  return {gamma_id * coeffs.identity, gamma_exp * coeffs.expression};
}

Eigen::Matrix3Xd mean_landmark_shape(const MorphableModel& model) {
  Eigen::Matrix3Xd shape(3, model.n_landmarks());
  for (Eigen::Index i = 0; i < shape.cols(); ++i) {
    shape.col(i) = model.mean_shape.segment<3>(3 * Eigen::Index{model.landmark_indices[i]});
  }
  return shape;
}

Eigen::MatrixXd landmark_basis(const MorphableModel& model) {
  const Eigen::Index k_id = model.n_identity();
  Eigen::MatrixXd basis(3 * model.n_landmarks(), k_id + model.n_expression());
  for (Eigen::Index i = 0; i < model.n_landmarks(); ++i) {
    const Eigen::Index row = 3 * Eigen::Index{model.landmark_indices[i]};
    basis.block(3 * i, 0, 3, k_id) = model.id_basis.middleRows<3>(row);
    basis.block(3 * i, k_id, 3, model.n_expression()) = model.exp_basis.middleRows<3>(row);
  }
  return basis;
}

Eigen::Matrix3Xd landmark_shape(const MorphableModel& model, const Coefficients& coeffs) {
  check_lengths(model, coeffs);
  Eigen::Matrix3Xd shape = mean_landmark_shape(model);
  const Eigen::VectorXd delta = landmark_basis(model) * coeffs.stacked();
  shape += Eigen::Map<const Eigen::Matrix3Xd>(delta.data(), 3, shape.cols());
  return shape;
}

}  // namespace m4d
