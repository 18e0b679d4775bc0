// Copyright 2026 The sigverify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// sigverify: command-line front end.
//
//   sigverify inspect <file>
//   sigverify features <file> [--no-pressure] [--rate 100]
//   sigverify train --enroll f1 .. f5 --out model [--no-pressure]
//   sigverify score --model m --input f [--no-pressure]
//   sigverify eval --dataset <root> [--no-pressure | --ablation] [--seed N] --out <dir>
//   sigverify synth --users N --seed S --out <root>
//   sigverify serve --listen host:port --store <dir> [--threshold t] [--static <dir>]
//   sigverify calibrate [--scratch <dir>]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sigverify/error.hpp"
#include "sigverify/eval.hpp"
#include "sigverify/hmm.hpp"
#include "sigverify/http_api.hpp"
#include "sigverify/io.hpp"
#include "sigverify/service.hpp"
#include "sigverify/signal.hpp"
#include "sigverify/synth.hpp"

namespace fs = std::filesystem;
using namespace sigverify;

namespace {

struct ModelOptions {
  bool no_pressure = false;
  double rate = 100.0;
  std::size_t states = 2;
  std::size_t mixtures = 32;
  std::size_t iterations = 20;
  std::uint64_t seed = 1;
};

void add_model_options(CLI::App* cmd, ModelOptions& opt, bool training) {
  cmd->add_flag("--no-pressure", opt.no_pressure, "Drop the pressure channel (12 features)");
  cmd->add_option("--rate", opt.rate, "Resampling rate in Hz")->check(CLI::PositiveNumber);
  if (training) {
    cmd->add_option("--states", opt.states, "HMM states")->check(CLI::PositiveNumber);
    cmd->add_option("--mixtures", opt.mixtures, "Gaussian mixtures per state")->check(CLI::PositiveNumber);
    cmd->add_option("--iterations", opt.iterations, "Maximum Baum-Welch iterations")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opt.seed, "Mixture initialization seed");
  }
}

signal::SignalConfig signal_config(const ModelOptions& opt) {
  signal::SignalConfig config;
  config.rate_hz = opt.rate;
  config.use_pressure = !opt.no_pressure;
  return config;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_inspect(const std::string& file) {
  const auto sig = io::read_svc_file(file);
  const auto st = io::signature_stats(sig);
  std::cout << "file " << file << "\n"
            << "samples " << st.samples << "\n"
            << "pen_down_samples " << st.pen_down << "\n"
            << "duration_ms " << fixed(st.duration_ms, 4) << "\n"
            << "mean_period_ms " << fixed(st.mean_period_ms, 4) << "\n"
            << "mean_rate_hz " << fixed(st.mean_period_ms > 0 ? 1000.0 / st.mean_period_ms : 0.0, 2) << "\n"
            << "period_range_ms " << fixed(st.min_period_ms, 4) << " " << fixed(st.max_period_ms, 4) << "\n"
            << "pressure_range " << st.pressure_min << " " << st.pressure_max << "\n"
            << "pressure_mean " << fixed(st.pressure_mean, 2) << "\n"
            << "pressure_window60 " << st.pressure_window_lo << "-" << st.pressure_window_lo + 59 << " "
            << fixed(100.0 * st.pressure_window_fraction, 1) << "%\n"
            << "pressure_histogram";
  for (auto c : st.pressure_histogram) std::cout << ' ' << c;
  std::cout << "\n";
  return 0;
}

int cmd_features(const std::string& file, const ModelOptions& opt) {
  const auto fs_ = signal::pipeline(io::read_svc_file(file), signal_config(opt));
  const auto& names = fs_.names();
  for (std::size_t c = 0; c < names.size(); ++c) std::cout << (c ? "," : "") << names[c];
  std::cout << "\n";
  char buf[40];
  for (std::size_t n = 0; n < fs_.n_samples(); ++n) {
    for (std::size_t c = 0; c < fs_.dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", fs_.at(n, c));
      std::cout << (c ? "," : "") << buf;
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_train(const std::vector<std::string>& files, const std::string& out, const ModelOptions& opt) {
  std::vector<signal::FeatureSequence> enroll;
  for (const auto& f : files) enroll.push_back(signal::pipeline(io::read_svc_file(f), signal_config(opt)));
  hmm::TrainConfig train;
  train.max_iterations = opt.iterations;
  train.seed = opt.seed;
  const auto result = hmm::train(enroll, {opt.states, opt.mixtures}, train);
  hmm::save_model(out, result.model);
  std::cerr << "trained " << result.model.n_states << "-state model, " << result.model.n_mixtures
            << " mixtures, dim " << result.model.dim << ", " << result.model.info.iterations
            << " iterations, log-likelihood " << result.model.info.final_loglik << "\n";
  return 0;
}

int cmd_score(const std::string& model_path, const std::string& input, const ModelOptions& opt) {
  const auto model = hmm::load_model(model_path);
  const auto features = signal::pipeline(io::read_svc_file(input), signal_config(opt));
  if (features.dim() != model.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "model has dim " + std::to_string(model.dim) + " but features have " +
                    std::to_string(features.dim()) + " (check --no-pressure)");
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", hmm::score(model, features));
  std::cout << buf << "\n";
  return 0;
}

int cmd_eval(const std::string& dataset, const std::string& out, const ModelOptions& opt, bool ablation,
             std::size_t threads) {
  const auto index = io::scan_dataset(dataset);
  for (const auto& w : index.warnings) std::cerr << "warning: " << w << "\n";

  eval::EvalConfig config;
  config.signal = signal_config(opt);
  config.topology = {opt.states, opt.mixtures};
  config.train.max_iterations = opt.iterations;
  config.train.seed = opt.seed;
  config.threads = threads;

  std::vector<bool> settings = {!opt.no_pressure};
  if (ablation) settings = {true, false};
  std::vector<eval::ScoreSet> runs;
  for (bool pressure : settings) {
    config.signal.use_pressure = pressure;
    const auto start = std::chrono::steady_clock::now();
    runs.push_back(eval::run_protocol(index, config));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << (pressure ? "pressure" : "no_pressure") << ": " << runs.back().trials.trials.size()
              << " trials, " << runs.back().failures.size() << " failed, " << fixed(secs, 1) << " s\n";
  }
  eval::report(runs, out);
  std::ifstream summary(fs::path(out) / "eer.txt");
  std::cout << summary.rdbuf();
  return 0;
}

int cmd_synth(std::size_t users, std::uint64_t seed, const std::string& out) {
  synth::GenerationConfig config;
  config.n_users = users;
  config.master_seed = seed;
  const auto index = synth::generate_dataset(config, out);
  std::cout << "users " << index.users.size() << "\n"
            << "genuine " << index.genuine_count() << "\n"
            << "forgeries " << index.forgery_count() << "\n"
            << "conformant " << (index.conformant() ? "yes" : "no") << "\n";
  return 0;
}

int cmd_serve(const std::string& listen, const std::string& store, std::optional<double> threshold,
              const std::string& static_dir) {
  service::HttpConfig http;
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--listen expects host:port");
  http.host = listen.substr(0, colon);
  http.port = std::stoi(listen.substr(colon + 1));
  http.static_dir = static_dir;

  service::ServiceConfig config;
  config.store = store;
  config.threshold = threshold;
  service::VerificationService svc(config);
  service::HttpServer server(svc, http);
  const int port = server.bind();
  std::cerr << "listening on " << http.host << ":" << port << " (store " << store << ", threshold "
            << svc.default_threshold() << ")\n";
  server.listen();
  return 0;
}

int cmd_calibrate(const std::string& scratch) {
  const auto result = service::calibrate_threshold(scratch);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", result.threshold);
  std::cout << "threshold " << buf << "\n"
            << "random_eer " << fixed(100.0 * result.eer, 4) << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"On-line signature verification toolkit"};
  app.require_subcommand(1);

  std::string file, out, model_path, input, dataset, listen = "127.0.0.1:8080", store = "store",
                                                     static_dir, scratch = "calibration-data";
  std::vector<std::string> enroll;
  ModelOptions opt;
  bool ablation = false;
  std::size_t threads = 0, users = 53;
  std::uint64_t synth_seed = 2005;
  std::optional<double> threshold;

  auto* inspect = app.add_subcommand("inspect", "Print acquisition statistics of an SVC file");
  inspect->add_option("file", file, "SVC file")->required()->check(CLI::ExistingFile);

  auto* features = app.add_subcommand("features", "Emit the whitened feature matrix as CSV");
  features->add_option("file", file, "SVC file")->required()->check(CLI::ExistingFile);
  add_model_options(features, opt, false);

  auto* train = app.add_subcommand("train", "Train a signature model from enrollment files");
  train->add_option("--enroll", enroll, "Enrollment SVC files")->required()->expected(1, -1);
  train->add_option("--out", out, "Output model file")->required();
  add_model_options(train, opt, true);

  auto* score = app.add_subcommand("score", "Score a signature against a model");
  score->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  score->add_option("--input", input, "SVC file")->required()->check(CLI::ExistingFile);
  add_model_options(score, opt, false);

  auto* evaluate = app.add_subcommand("eval", "Run the full enrollment/trial protocol on a dataset");
  evaluate->add_option("--dataset", dataset, "Dataset root")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--out", out, "Output directory")->required();
  evaluate->add_flag("--ablation", ablation, "Run with and without pressure");
  evaluate->add_option("--threads", threads, "Worker threads (0: all cores)");
  add_model_options(evaluate, opt, true);

  auto* synthesize = app.add_subcommand("synth", "Generate a synthetic dataset");
  synthesize->add_option("--users", users, "Number of users")->check(CLI::PositiveNumber);
  synthesize->add_option("--seed", synth_seed, "Master seed");
  synthesize->add_option("--out", out, "Dataset root")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP verification service");
  serve->add_option("--listen", listen, "host:port")->envname("SIGVERIFY_LISTEN");
  serve->add_option("--store", store, "Store directory")->envname("SIGVERIFY_STORE");
  serve->add_option("--threshold", threshold, "Decision threshold override")->envname("SIGVERIFY_THRESHOLD");
  serve->add_option("--static", static_dir, "Static asset directory served at /")->envname("SIGVERIFY_STATIC");

  auto* calibrate = app.add_subcommand("calibrate", "Recompute the default service threshold");
  calibrate->add_option("--scratch", scratch, "Directory for the calibration dataset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*inspect) return cmd_inspect(file);
    if (*features) return cmd_features(file, opt);
    if (*train) return cmd_train(enroll, out, opt);
    if (*score) return cmd_score(model_path, input, opt);
    if (*evaluate) return cmd_eval(dataset, out, opt, ablation, threads);
    if (*synthesize) return cmd_synth(users, synth_seed, out);
    if (*serve) return cmd_serve(listen, store, threshold, static_dir);
    if (*calibrate) return cmd_calibrate(scratch);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
