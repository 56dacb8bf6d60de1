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

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "m4d/error.hpp"
#include "m4d/number_format.hpp"
#include "m4d/sequence.hpp"

namespace m4d {
namespace {

using nlohmann::json;

constexpr int kSequenceVersion = 1;

double number_at(const json& value, std::size_t line, const char* what) {
  if (!value.is_number()) {
    throw SchemaError(line, std::string(what) + " must be a number");
  }
  return value.get<double>();
}

void parse_header(const json& header, std::size_t line, LandmarkSequence& seq, Eigen::Index& n_lm) {
  if (!header.is_object()) {
    throw SchemaError(line, "header must be a JSON object");
  }
  const auto version = header.find("version");
  if (version == header.end() || !version->is_number_integer() || version->get<int>() != kSequenceVersion) {
    throw SchemaError(line, "header version must be 1");
  }
  const auto count = header.find("n_landmarks");
  if (count == header.end() || !count->is_number_integer() || count->get<std::int64_t>() < 1) {
    throw SchemaError(line, "header n_landmarks must be a positive integer");
  }
  n_lm = count->get<Eigen::Index>();
  const auto size = header.find("image_size");
  if (size == header.end() || !size->is_array() || size->size() != 2 ||
      !(*size)[0].is_number_integer() || !(*size)[1].is_number_integer() ||
      (*size)[0].get<std::int64_t>() < 1 || (*size)[1].get<std::int64_t>() < 1) {
    throw SchemaError(line, "header image_size must be two positive integers");
  }
  seq.image_width = (*size)[0].get<int>();
  seq.image_height = (*size)[1].get<int>();
}

LandmarkFrame parse_frame(const json& obj, std::size_t line, Eigen::Index n_lm) {
  if (!obj.is_object()) {
    throw SchemaError(line, "frame must be a JSON object");
  }
  const auto t = obj.find("t");
  const auto pts = obj.find("pts");
  const auto conf = obj.find("conf");
  if (t == obj.end() || pts == obj.end() || conf == obj.end()) {
    throw SchemaError(line, "frame needs t, pts and conf");
  }
  LandmarkFrame frame;
  frame.timestamp_ms = number_at(*t, line, "t");
  if (frame.timestamp_ms < 0.0) {
    throw SchemaError(line, "timestamp must be non-negative");
  }
  if (!pts->is_array() || static_cast<Eigen::Index>(pts->size()) != n_lm) {
    throw SchemaError(line, "expected " + std::to_string(n_lm) + " points, got " +
                                (pts->is_array() ? std::to_string(pts->size()) : "none"));
  }
  if (!conf->is_array() || static_cast<Eigen::Index>(conf->size()) != n_lm) {
    throw SchemaError(line, "expected " + std::to_string(n_lm) + " confidences");
  }
  frame.points.resize(n_lm, 2);
  frame.confidence.resize(n_lm);
  for (Eigen::Index i = 0; i < n_lm; ++i) {
    const json& p = (*pts)[static_cast<std::size_t>(i)];
    if (!p.is_array() || p.size() != 2) {
      throw SchemaError(line, "point " + std::to_string(i) + " must be [x, y]");
    }
    frame.points(i, 0) = number_at(p[0], line, "x");
    frame.points(i, 1) = number_at(p[1], line, "y");
    const double c = number_at((*conf)[static_cast<std::size_t>(i)], line, "conf");
    if (!(c >= 0.0 && c <= 1.0)) {
      throw SchemaError(line, "confidence " + std::to_string(i) + " outside [0, 1]");
    }
    frame.confidence[i] = c;
  }
  return frame;
}

json pose_json(const Pose& pose) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r.push_back(pose.rotation(i, j));
    }
  }
  return {{"rho", pose.scale}, {"R", r}, {"t", {pose.translation.x(), pose.translation.y()}}};
}

Eigen::VectorXd vector_from(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

void write_sequence(const LandmarkSequence& sequence, std::ostream& out) {
  if (sequence.frames.empty()) {
    throw InvalidConfig("cannot write a sequence without frames");
  }
  const Eigen::Index n_lm = sequence.n_landmarks();
  std::string line = "{\"version\":1,\"n_landmarks\":" + std::to_string(n_lm) +
                     ",\"image_size\":[" + std::to_string(sequence.image_width) + "," +
                     std::to_string(sequence.image_height) + "]}\n";
  out << line;
  for (const auto& frame : sequence.frames) {
    if (frame.n_landmarks() != n_lm) {
      throw DimensionMismatch("frames disagree on the landmark count");
    }
    line.assign("{\"t\":");
    append_number(line, frame.timestamp_ms);
    line += ",\"pts\":[";
    for (Eigen::Index i = 0; i < n_lm; ++i) {
      line += i == 0 ? "[" : ",[";
      append_number(line, frame.points(i, 0));
      line += ',';
      append_number(line, frame.points(i, 1));
      line += ']';
    }
    line += "],\"conf\":[";
    for (Eigen::Index i = 0; i < n_lm; ++i) {
      if (i > 0) {
        line += ',';
      }
      append_number(line, frame.confidence[i]);
    }
    line += "]}\n";
    out << line;
  }
  if (!out) {
    throw Error("failed to write landmark sequence");
  }
}

LandmarkSequence read_sequence(std::istream& in) {
  LandmarkSequence seq;
  seq.source = "file";
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  Eigen::Index n_lm = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!have_header) {
      parse_header(obj, line, seq, n_lm);
      have_header = true;
      continue;
    }
    LandmarkFrame frame = parse_frame(obj, line, n_lm);
    if (!seq.frames.empty() && !(frame.timestamp_ms > seq.frames.back().timestamp_ms)) {
      throw SchemaError(line, "timestamps must be strictly increasing");
    }
    seq.frames.push_back(std::move(frame));
  }
  if (!have_header) {
    throw ParseError(line == 0 ? 1 : line, "no header");
  }
  return seq;
}

void write_sequence_file(const LandmarkSequence& sequence, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write_sequence(sequence, out);
}

LandmarkSequence read_sequence_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open sequence file " + path.string());
  }
  return read_sequence(in);
}

void write_ground_truth(const GroundTruth& truth, std::ostream& out) {
  if (truth.poses.size() != truth.coeffs.size()) {
    throw DimensionMismatch("ground truth poses and coefficients differ in length");
  }
  json frames = json::array();
  for (std::size_t f = 0; f < truth.poses.size(); ++f) {
    json entry = pose_json(truth.poses[f]);
    const auto& c = truth.coeffs[f];
    entry["p"] = std::vector<double>(c.identity.data(), c.identity.data() + c.identity.size());
    entry["q"] = std::vector<double>(c.expression.data(), c.expression.data() + c.expression.size());
    frames.push_back(std::move(entry));
  }
  out << json{{"version", 1}, {"frames", std::move(frames)}}.dump() << '\n';
  if (!out) {
    throw Error("failed to write ground truth");
  }
}

GroundTruth read_ground_truth(std::istream& in) {
  GroundTruth truth;
  try {
    const json doc = json::parse(in);
    for (const auto& entry : doc.at("frames")) {
      Pose pose;
      pose.scale = entry.at("rho").get<double>();
      const auto& r = entry.at("R");
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          pose.rotation(i, j) = r.at(static_cast<std::size_t>(3 * i + j)).get<double>();
        }
      }
      pose.translation = {entry.at("t").at(0).get<double>(), entry.at("t").at(1).get<double>()};
      truth.poses.push_back(pose);
      truth.coeffs.push_back({vector_from(entry.at("p")), vector_from(entry.at("q"))});
    }
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("invalid ground truth: ") + e.what());
  }
  return truth;
}

}  // namespace m4d
