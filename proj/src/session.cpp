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

#include "m4d/session.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "m4d/error.hpp"
#include "m4d/morphable_model.hpp"

namespace m4d {
namespace {

using nlohmann::json;

std::vector<double> flat(const Eigen::MatrixXd& m) { return {m.data(), m.data() + m.size()}; }

json pose_message(const Pose& pose) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r.push_back(pose.rotation(i, j));
    }
  }
  return {{"rho", pose.scale}, {"R", std::move(r)}, {"t2", {pose.translation.x(), pose.translation.y()}}};
}

// Thrown while validating set_options; turned into an error message.
struct RequestError {
  std::string code;
  std::string message;
  std::string field;
};

bool read_bool(const json& msg, const char* key, bool current) {
  const auto it = msg.find(key);
  if (it == msg.end()) {
    return current;
  }
  if (!it->is_boolean()) {
    throw RequestError{"BAD_VALUE", std::string(key) + " must be a boolean", key};
  }
  return it->get<bool>();
}

}  // namespace

json to_json(const SessionOptions& o) {
  return {{"model_id", o.model_id},
          {"exaggeration", o.exaggeration},
          {"show_landmarks", o.show_landmarks},
          {"show_bbox", o.show_bbox},
          {"smoothing_enabled", o.smoothing_enabled},
          {"playback_fps", o.playback_fps}};
}

json error_message(std::string_view code, std::string_view message, std::string_view field) {
  json out = {{"type", "error"}, {"code", code}, {"message", message}};
  if (!field.empty()) {
    out["field"] = field;
  }
  return out;
}

json model_info_message(const MorphableModel& model) {
  std::vector<std::uint32_t> triangles;
  triangles.reserve(3 * model.triangles.size());
  for (const auto& tri : model.triangles) {
    triangles.insert(triangles.end(), tri.begin(), tri.end());
  }
  return {{"type", "model_info"},
          {"model_id", model.model_id},
          {"n_vertices", model.n_vertices()},
          {"k_id", model.n_identity()},
          {"k_exp", model.n_expression()},
          {"n_landmarks", model.n_landmarks()},
          {"landmark_indices", model.landmark_indices},
          {"triangles", std::move(triangles)},
          {"mean_shape", flat(model.mean_shape)},
          {"id_basis", flat(model.id_basis)},
          {"id_stddev", flat(model.id_stddev)},
          {"exp_basis", flat(model.exp_basis)},
          {"exp_stddev", flat(model.exp_stddev)}};
}

std::vector<double> reconstruct_from_messages(const json& model_info, const json& frame) {
  const auto n3 = 3 * model_info.at("n_vertices").get<std::size_t>();
  const auto k_id = model_info.at("k_id").get<std::size_t>();
  const auto k_exp = model_info.at("k_exp").get<std::size_t>();
  const auto& mean = model_info.at("mean_shape");
  const auto& id_basis = model_info.at("id_basis");
  const auto& exp_basis = model_info.at("exp_basis");
  const auto& p = frame.at("p");
  const auto& q = frame.at("q");
  if (mean.size() != n3 || id_basis.size() != n3 * k_id || exp_basis.size() != n3 * k_exp ||
      p.size() != k_id || q.size() != k_exp) {
    throw DimensionMismatch("frame and model_info disagree on dimensions");
  }
  std::vector<double> vertices(n3);
  for (std::size_t i = 0; i < n3; ++i) {
    vertices[i] = mean[i].get<double>();
  }
  for (std::size_t k = 0; k < k_id; ++k) {
    const double w = p[k].get<double>();
    for (std::size_t i = 0; i < n3; ++i) {
      vertices[i] += w * id_basis[k * n3 + i].get<double>();
    }
  }
  for (std::size_t k = 0; k < k_exp; ++k) {
    const double w = q[k].get<double>();
    for (std::size_t i = 0; i < n3; ++i) {
      vertices[i] += w * exp_basis[k * n3 + i].get<double>();
    }
  }
  return vertices;
}

Session::Session(std::shared_ptr<const ModelRegistry> registry,
                 std::shared_ptr<const LandmarkSequence> sequence, FitConfig fit_config)
    : registry_(std::move(registry)), sequence_(std::move(sequence)), fit_config_(fit_config) {
  if (!registry_ || !sequence_) {
    throw InvalidConfig("session needs a registry and a sequence");
  }
  validate_fit_config(fit_config_);
  model_ = registry_->get(options_.model_id);
  if (!sequence_->frames.empty() && sequence_->n_landmarks() != model_->n_landmarks()) {
    throw DimensionMismatch("sequence and global model disagree on the landmark count");
  }
}

json Session::hello() const {
  return {{"type", "hello"},
          {"protocol", kProtocolVersion},
          {"n_frames", sequence_->frames.size()},
          {"image_size", {sequence_->image_width, sequence_->image_height}},
          {"options", to_json(options_)}};
}

json Session::ack(std::string_view request) const {
  return {{"type", "ack"},
          {"request", request},
          {"playing", playing_},
          {"cursor", cursor_},
          {"n_frames", sequence_->frames.size()}};
}

std::vector<json> Session::handle_text(std::string_view text) {
  json message;
  try {
    message = json::parse(text);
  } catch (const json::exception& e) {
    return {error_message("BAD_VALUE", std::string("malformed JSON: ") + e.what())};
  }
  return handle_message(message);
}

std::vector<json> Session::handle_message(const json& message) {
  if (!message.is_object()) {
    return {error_message("BAD_VALUE", "message must be a JSON object")};
  }
  const auto type_it = message.find("type");
  if (type_it == message.end() || !type_it->is_string()) {
    return {error_message("BAD_VALUE", "message needs a string 'type'", "type")};
  }
  const std::string type = type_it->get<std::string>();

  if (type == "set_options") {
    return set_options(message);
  }
  if (type == "play") {
    if (cursor_ >= sequence_->frames.size()) {
      cursor_ = 0;
      smoother_.reset();
    }
    playing_ = !sequence_->frames.empty();
    return {ack(type)};
  }
  if (type == "pause") {
    playing_ = false;
    return {ack(type)};
  }
  if (type == "seek") {
    const auto frame = message.find("frame");
    if (frame == message.end() || !frame->is_number_integer() || frame->get<std::int64_t>() < 0 ||
        frame->get<std::uint64_t>() >= sequence_->frames.size()) {
      return {error_message("BAD_VALUE",
                            "frame must be an integer in [0, " +
                                std::to_string(sequence_->frames.size()) + ")",
                            "frame")};
    }
    cursor_ = frame->get<std::size_t>();
    smoother_.reset();
    return {ack(type)};
  }
  if (type == "list_models") {
    return {{{"type", "models"}, {"ids", registry_->ids()}}};
  }
  return {error_message("UNKNOWN_TYPE", "unknown message type '" + type + "'", "type")};
}

std::vector<json> Session::set_options(const json& msg) {
  SessionOptions next = options_;
  ModelRegistry::ModelPtr next_model = model_;
  try {
    if (const auto it = msg.find("model_id"); it != msg.end()) {
      if (!it->is_string()) {
        throw RequestError{"BAD_VALUE", "model_id must be a string", "model_id"};
      }
      next.model_id = it->get<std::string>();
      if (!registry_->contains(next.model_id)) {
        throw RequestError{"UNKNOWN_MODEL", "no model '" + next.model_id + "'", "model_id"};
      }
      next_model = registry_->get(next.model_id);
      if (!sequence_->frames.empty() && next_model->n_landmarks() != sequence_->n_landmarks()) {
        throw RequestError{"BAD_VALUE", "model landmark count does not match the sequence",
                           "model_id"};
      }
    }
    if (const auto it = msg.find("exaggeration"); it != msg.end()) {
      if (!it->is_number() || !(it->get<double>() >= 0.0 && it->get<double>() <= kMaxExaggeration)) {
        throw RequestError{"BAD_VALUE", "exaggeration must be a number in [0, 4]", "exaggeration"};
      }
      next.exaggeration = it->get<double>();
    }
    if (const auto it = msg.find("playback_fps"); it != msg.end()) {
      if (!it->is_number() || !(it->get<double>() > 0.0) || !std::isfinite(it->get<double>())) {
        throw RequestError{"BAD_VALUE", "playback_fps must be positive", "playback_fps"};
      }
      next.playback_fps = it->get<double>();
    }
    next.show_landmarks = read_bool(msg, "show_landmarks", next.show_landmarks);
    next.show_bbox = read_bool(msg, "show_bbox", next.show_bbox);
    next.smoothing_enabled = read_bool(msg, "smoothing_enabled", next.smoothing_enabled);
  } catch (const RequestError& e) {
    return {error_message(e.code, e.message, e.field)};
  }

  const bool model_changed = next.model_id != options_.model_id;
  if (model_changed || next.smoothing_enabled != options_.smoothing_enabled) {
    smoother_.reset();
  }
  options_ = std::move(next);
  model_ = std::move(next_model);

  std::vector<json> out;
  out.push_back({{"type", "options_ack"}, {"options", to_json(options_)}});
  if (model_changed) {
    out.push_back(model_info_message(*model_));
  }
  return out;
}

json Session::emit_frame() {
  if (!playing_ || cursor_ >= sequence_->frames.size()) {
    throw std::logic_error("emit_frame requires active playback");
  }
  const std::size_t index = cursor_++;
  if (cursor_ >= sequence_->frames.size()) {
    playing_ = false;
  }
  const LandmarkFrame& frame = sequence_->frames[index];

  FitResult fit;
  try {
    fit = fit_frame(frame, *model_, fit_config_);
  } catch (const Error& e) {
    return {{"type", "dropped_frame"},
            {"frame", index},
            {"t", frame.timestamp_ms},
            {"dropped", true},
            {"reason", e.what()}};
  }
  if (options_.smoothing_enabled) {
    fit = smoother_.push_and_smooth(fit);
  }
  const Coefficients shown = exaggerate(fit.coeffs, options_.exaggeration, 1.0);

  json out = {{"type", "frame"},
              {"frame", index},
              {"t", frame.timestamp_ms},
              {"model_id", options_.model_id},
              {"pose", pose_message(fit.pose)},
              {"p", flat(shown.identity)},
              {"q", flat(shown.expression)},
              {"rmse", fit.reprojection_rmse}};

  if (options_.show_landmarks || options_.show_bbox) {
    const Eigen::VectorXd w = landmark_weights(frame, fit_config_);
    json points = json::array();
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector2d hi = -lo;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (w[i] <= 0.0) {
        continue;
      }
      const Eigen::Vector2d pt = frame.points.row(i).transpose();
      points.push_back({pt.x(), pt.y()});
      lo = lo.cwiseMin(pt);
      hi = hi.cwiseMax(pt);
    }
    if (options_.show_landmarks) {
      out["landmarks"] = std::move(points);
    }
    if (options_.show_bbox) {
      out["bbox"] = {lo.x(), lo.y(), hi.x(), hi.y()};
    }
  }
  return out;
}

}  // namespace m4d
