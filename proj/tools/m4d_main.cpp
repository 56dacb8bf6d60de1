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

// m4d: batch and serving entry points.
//
//   m4d gen-model    --seed S --out model.m4dm [--vertices --kid --kexp --landmarks --id]
//   m4d gen-sequence --model M --seed S --out seq.lmk.jsonl [--truth-out gt.json ...]
//   m4d fit          --model M --sequence seq.lmk.jsonl --out run.fit.jsonl
//   m4d serve        --model-dir DIR --sequence seq.lmk.jsonl [--port P]
//   m4d stats        run.fit.jsonl
//
// Exit status: 0 success, 1 usage error, 2 data or format error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "m4d/error.hpp"
#include "m4d/fitting.hpp"
#include "m4d/model_io.hpp"
#include "m4d/model_registry.hpp"
#include "m4d/report.hpp"
#include "m4d/sequence.hpp"
#include "m4d/server.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct GenModelArgs {
  std::uint64_t seed = 0;
  int vertices = 2000;
  int kid = 40;
  int kexp = 20;
  int landmarks = 68;
  std::string id = "global";
  std::string out;
};

struct GenSequenceArgs {
  std::string model;
  std::string out;
  std::string truth_out;
  m4d::SequenceGenConfig config;
};

struct FitArgs {
  std::string model;
  std::string sequence;
  std::string out;
  double lambda = m4d::FitConfig{}.lambda_id;
  int alternations = m4d::FitConfig{}.n_alternations;
  bool no_smoothing = false;
};

struct ServeArgs {
  std::string model_dir;
  std::string sequence;
  std::optional<std::uint16_t> port;
  std::string address = "127.0.0.1";
  std::string www;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw m4d::Error("cannot open " + path + " for writing");
  }
  return out;
}

int run_gen_model(const GenModelArgs& a) {
  if (!m4d::is_recognized_model_id(a.id)) {
    throw m4d::UnknownModel("unrecognized model id '" + a.id + "'");
  }
  const auto model = m4d::synthesize_model(a.seed, a.vertices, a.kid, a.kexp, a.landmarks, a.id);
  m4d::save_model_file(model, a.out);
  std::cout << "wrote " << a.out << " (" << model.model_id << ", N=" << model.n_vertices()
            << ", K_id=" << model.n_identity() << ", K_exp=" << model.n_expression()
            << ", L=" << model.n_landmarks() << ")\n";
  return 0;
}

int run_gen_sequence(const GenSequenceArgs& a) {
  const auto model = m4d::load_model_file(a.model);
  const auto [sequence, truth] = m4d::generate_sequence(model, a.config);
  m4d::write_sequence_file(sequence, a.out);
  if (!a.truth_out.empty()) {
    auto out = open_output(a.truth_out);
    m4d::write_ground_truth(truth, out);
  }
  std::cout << "wrote " << a.out << " (" << sequence.frames.size() << " frames)\n";
  return 0;
}

int run_fit(const FitArgs& a) {
  const auto model = m4d::load_model_file(a.model);
  const auto sequence = m4d::read_sequence_file(a.sequence);
  m4d::FitConfig config;
  config.lambda_id = a.lambda;
  config.lambda_exp = a.lambda;
  config.n_alternations = a.alternations;
  m4d::validate_fit_config(config);
  const bool smoothing = !a.no_smoothing;
  const auto records = m4d::fit_sequence(sequence, model, config, smoothing);
  auto out = open_output(a.out);
  m4d::write_report(records, smoothing, out);
  const auto summary = m4d::summarize(records, smoothing);
  std::cout << "fitted " << summary.n_frames - summary.n_dropped << "/" << summary.n_frames
            << " frames, mean RMSE " << summary.mean_rmse << " px\n";
  return 0;
}

int run_serve(const ServeArgs& a) {
  auto registry =
      std::make_shared<const m4d::ModelRegistry>(m4d::ModelRegistry::load_directory(a.model_dir));
  auto sequence = std::make_shared<const m4d::LandmarkSequence>(m4d::read_sequence_file(a.sequence));
  m4d::ServerConfig config;
  config.address = a.address;
  config.port = a.port ? *a.port : m4d::port_from_env();
  config.static_dir = a.www;
  config.handle_signals = true;
  m4d::Server server(config, registry, sequence);
  std::cout << "serving " << registry->size() << " model(s), " << sequence->frames.size()
            << " frames on ws://" << a.address << ":" << server.port() << "/" << std::endl;
  server.run();
  return 0;
}

void print_optional(const char* label, std::optional<double> value) {
  std::cout << label;
  if (value) {
    std::cout << *value << '\n';
  } else {
    std::cout << "n/a\n";
  }
}

int run_stats(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw m4d::Error("cannot open report " + path);
  }
  const auto report = m4d::read_report(in);
  const auto& s = report.summary;
  std::cout << "frames:            " << s.n_frames << " (" << s.n_dropped << " dropped)\n"
            << "mean RMSE:         " << s.mean_rmse << " px\n"
            << "p95 RMSE:          " << s.p95_rmse << " px\n";
  print_optional("jitter raw:        ", s.jitter_raw);
  print_optional("jitter smoothed:   ", s.jitter_smoothed);
  std::cout << "smoothing:         " << (s.smoothing ? "on" : "off") << '\n';
  print_optional("jitter:            ", s.jitter_output());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"m4d: landmark-driven 4D face reconstruction"};
  app.require_subcommand(1);

  GenModelArgs gm;
  auto* gen_model = app.add_subcommand("gen-model", "write a synthetic M4DM model");
  gen_model->add_option("--seed", gm.seed, "random seed")->required();
  gen_model->add_option("--vertices", gm.vertices, "vertex count N");
  gen_model->add_option("--kid", gm.kid, "identity components");
  gen_model->add_option("--kexp", gm.kexp, "expression components");
  gen_model->add_option("--landmarks", gm.landmarks, "landmark count L");
  gen_model->add_option("--id", gm.id, "model id (global or a bespoke id)");
  gen_model->add_option("--out", gm.out, "output .m4dm path")->required();

  GenSequenceArgs gs;
  auto& c = gs.config;
  auto* gen_seq = app.add_subcommand("gen-sequence", "write a synthetic landmark sequence");
  gen_seq->add_option("--model", gs.model, "M4DM model path")->required();
  gen_seq->add_option("--seed", c.seed, "random seed")->required();
  gen_seq->add_option("--frames", c.n_frames, "frame count");
  gen_seq->add_option("--fps", c.fps, "frame rate for timestamps");
  gen_seq->add_option("--width", c.image_width, "image width in pixels");
  gen_seq->add_option("--height", c.image_height, "image height in pixels");
  gen_seq->add_option("--yaw", c.yaw_deg, "yaw amplitude, degrees");
  gen_seq->add_option("--pitch", c.pitch_deg, "pitch amplitude, degrees");
  gen_seq->add_option("--roll", c.roll_deg, "roll amplitude, degrees");
  gen_seq->add_option("--translation", c.translation_px, "translation amplitude, pixels");
  gen_seq->add_option("--scale", c.scale, "base scale, pixels per model unit");
  gen_seq->add_option("--scale-range", c.scale_range, "relative scale amplitude");
  gen_seq->add_option("--period", c.period_frames, "head motion period, frames");
  gen_seq->add_option("--noise", c.noise_sigma_px, "landmark noise sigma, pixels");
  gen_seq->add_option("--occlusion", c.occlusion_rate, "fraction of occluded landmarks");
  gen_seq->add_option("--out", gs.out, "output .lmk.jsonl path")->required();
  gen_seq->add_option("--truth-out", gs.truth_out, "ground-truth JSON path");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit a model to a landmark sequence");
  fit->add_option("--model", fa.model, "M4DM model path")->required();
  fit->add_option("--sequence", fa.sequence, "landmark sequence path")->required();
  fit->add_option("--out", fa.out, "output .fit.jsonl path")->required();
  fit->add_option("--lambda", fa.lambda, "regularisation weight for identity and expression");
  fit->add_option("--alternations", fa.alternations, "pose/shape alternations");
  fit->add_flag("--no-smoothing", fa.no_smoothing, "disable 3-frame pose smoothing");

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "run the live session server");
  serve->add_option("--model-dir", sa.model_dir, "directory of .m4dm models")->required();
  serve->add_option("--sequence", sa.sequence, "landmark sequence to replay")->required();
  serve->add_option("--port", sa.port, "listen port (default $M4D_PORT or 7464)");
  serve->add_option("--address", sa.address, "listen address");
  serve->add_option("--www", sa.www, "directory of static viewer assets");

  std::string report_path;
  auto* stats = app.add_subcommand("stats", "summarise a fit report");
  stats->add_option("report", report_path, "fit report path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_model) return run_gen_model(gm);
    if (*gen_seq) return run_gen_sequence(gs);
    if (*fit) return run_fit(fa);
    if (*serve) return run_serve(sa);
    if (*stats) return run_stats(report_path);
  } catch (const std::exception& e) {
    std::cerr << "m4d: error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
