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

#include "m4d/report.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "m4d/error.hpp"
#include "m4d/temporal.hpp"

namespace m4d {
namespace {

using nlohmann::json;

json to_json(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json frame_json(const FrameRecord& record) {
  if (record.dropped()) {
    return {{"timestamp", record.timestamp_ms}, {"dropped", true}, {"reason", record.drop_reason}};
  }
  const FitResult& fit = *record.output;
  json r = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r.push_back(fit.pose.rotation(i, j));
    }
  }
  return {{"timestamp", record.timestamp_ms},
          {"rho", fit.pose.scale},
          {"R", std::move(r)},
          {"t", {fit.pose.translation.x(), fit.pose.translation.y()}},
          {"p", to_std(fit.coeffs.identity)},
          {"q", to_std(fit.coeffs.expression)},
          {"reprojection_rmse", fit.reprojection_rmse},
          {"n_iterations", fit.n_iterations}};
}

const json& field(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(line, std::string("missing field '") + key + "'");
  }
  return *it;
}

double finite_number(const json& obj, const char* key, std::size_t line) {
  const json& v = field(obj, key, line);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    throw SchemaError(line, std::string("field '") + key + "' must be a finite number");
  }
  return v.get<double>();
}

Eigen::VectorXd finite_vector(const json& obj, const char* key, std::size_t line,
                              std::optional<std::size_t> expected = std::nullopt) {
  const json& v = field(obj, key, line);
  if (!v.is_array() || (expected && v.size() != *expected)) {
    throw SchemaError(line, std::string("field '") + key + "' has the wrong shape");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
      throw SchemaError(line, std::string("field '") + key + "' has a non-finite entry");
    }
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

std::optional<double> optional_number(const json& obj, const char* key, std::size_t line) {
  const json& v = field(obj, key, line);
  if (v.is_null()) {
    return std::nullopt;
  }
  return finite_number(obj, key, line);
}

}  // namespace

std::vector<FrameRecord> fit_sequence(const LandmarkSequence& sequence, const MorphableModel& model,
                                      const FitConfig& config, bool smoothing) {
  PoseSmoother smoother;
  std::vector<FrameRecord> records;
  records.reserve(sequence.frames.size());
  for (const auto& frame : sequence.frames) {
    FrameRecord record;
    record.timestamp_ms = frame.timestamp_ms;
    try {
      record.raw = fit_frame(frame, model, config);
      record.output = smoothing ? smoother.push_and_smooth(*record.raw) : *record.raw;
    } catch (const TooFewLandmarks& e) {
      record.drop_reason = std::string("TooFewLandmarks: ") + e.what();
    } catch (const RankDeficient& e) {
      record.drop_reason = std::string("RankDeficient: ") + e.what();
    }
    records.push_back(std::move(record));
  }
  return records;
}

ReportSummary summarize(std::span<const FrameRecord> records, bool smoothing) {
  ReportSummary summary;
  summary.smoothing = smoothing;
  summary.n_frames = records.size();
  std::vector<double> rmse;
  std::vector<Pose> raw;
  std::vector<Pose> smoothed;
  PoseSmoother smoother;
  for (const auto& record : records) {
    if (record.dropped()) {
      ++summary.n_dropped;
      continue;
    }
    rmse.push_back(record.raw->reprojection_rmse);
    raw.push_back(record.raw->pose);
    smoothed.push_back(smoother.push_and_smooth(*record.raw).pose);
  }
  if (!rmse.empty()) {
    double sum = 0.0;
    for (const double r : rmse) {
      sum += r;
    }
    summary.mean_rmse = sum / static_cast<double>(rmse.size());
    std::sort(rmse.begin(), rmse.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(rmse.size())));
    summary.p95_rmse = rmse[std::max<std::size_t>(rank, 1) - 1];
  }
  if (raw.size() >= 2) {
    summary.jitter_raw = jitter_metric(raw);
    summary.jitter_smoothed = jitter_metric(smoothed);
  }
  return summary;
}

void write_report(std::span<const FrameRecord> records, bool smoothing, std::ostream& out) {
  if (records.empty()) {
    throw EmptyInput("report needs at least one frame");
  }
  for (const auto& record : records) {
    out << frame_json(record).dump() << '\n';
  }
  const ReportSummary s = summarize(records, smoothing);
  const json summary = {{"n_frames", s.n_frames},       {"n_dropped", s.n_dropped},
                        {"mean_rmse", s.mean_rmse},     {"p95_rmse", s.p95_rmse},
                        {"jitter_raw", to_json(s.jitter_raw)},
                        {"jitter_smoothed", to_json(s.jitter_smoothed)},
                        {"smoothing", s.smoothing}};
  out << json{{"summary", summary}}.dump() << '\n';
  if (!out) {
    throw Error("failed to write fit report");
  }
}

Report read_report(std::istream& in) {
  Report report;
  std::string text;
  std::size_t line = 0;
  bool have_summary = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    if (have_summary) {
      throw SchemaError(line, "content after the summary line");
    }
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) {
      throw SchemaError(line, "report lines must be JSON objects");
    }
    try {
      if (const auto it = obj.find("summary"); it != obj.end()) {
        const json& s = *it;
        if (!s.is_object()) {
          throw SchemaError(line, "summary must be an object");
        }
        auto& out = report.summary;
        out.n_frames = field(s, "n_frames", line).get<std::size_t>();
        out.n_dropped = field(s, "n_dropped", line).get<std::size_t>();
        out.mean_rmse = finite_number(s, "mean_rmse", line);
        out.p95_rmse = finite_number(s, "p95_rmse", line);
        out.jitter_raw = optional_number(s, "jitter_raw", line);
        out.jitter_smoothed = optional_number(s, "jitter_smoothed", line);
        out.smoothing = field(s, "smoothing", line).get<bool>();
        have_summary = true;
        continue;
      }
      ReportFrame frame;
      frame.timestamp_ms = finite_number(obj, "timestamp", line);
      if (const auto d = obj.find("dropped"); d != obj.end() && d->is_boolean() && d->get<bool>()) {
        frame.dropped = true;
        frame.reason = field(obj, "reason", line).get<std::string>();
        report.frames.push_back(std::move(frame));
        continue;
      }
      frame.pose.scale = finite_number(obj, "rho", line);
      const Eigen::VectorXd r = finite_vector(obj, "R", line, 9);
      frame.pose.rotation = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(r.data());
      frame.pose.translation = finite_vector(obj, "t", line, 2);
      frame.coeffs.identity = finite_vector(obj, "p", line);
      frame.coeffs.expression = finite_vector(obj, "q", line);
      frame.rmse = finite_number(obj, "reprojection_rmse", line);
      const json& iters = field(obj, "n_iterations", line);
      if (!iters.is_number_integer() || iters.get<int>() < 1) {
        throw SchemaError(line, "n_iterations must be a positive integer");
      }
      frame.n_iterations = iters.get<int>();
      report.frames.push_back(std::move(frame));
    } catch (const json::exception& e) {
      throw SchemaError(line, std::string("wrong field type: ") + e.what());
    }
  }
  if (!have_summary) {
    throw ParseError(line == 0 ? 1 : line, "report has no summary line");
  }
  if (report.summary.n_frames != report.frames.size()) {
    throw SchemaError(line, "summary frame count does not match the frame lines");
  }
  return report;
}

}  // namespace m4d
