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

// Acceptance run: one PASS/FAIL line per primary criterion, exit status 1 if
// any criterion fails. Usage: sigverify_acceptance [--scratch <dir>]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "sigverify/eval.hpp"
#include "sigverify/hmm.hpp"
#include "sigverify/io.hpp"
#include "sigverify/random.hpp"
#include "sigverify/signal.hpp"
#include "sigverify/synth.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace sigverify;
namespace st = sigverify::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Context {
  fs::path scratch;
  io::DatasetIndex paper_shaped;  // 53 users
  io::DatasetIndex default20;     // seeded default 20-user set
  std::vector<eval::ScoreSet> runs;  // criterion 9: pressure, no pressure
  double eval_seconds = 0.0;
};

Outcome protocol_combinatorics(Context& ctx) {
  const auto start = Clock::now();
  const auto set = eval::build_trials(ctx.paper_shaped);
  const double secs = seconds_since(start);
  const auto g = set.count(eval::TrialLabel::Genuine), s = set.count(eval::TrialLabel::Skilled),
             r = set.count(eval::TrialLabel::Random);
  return {g == 3180 && s == 9540 && r == 496080 && secs < 5.0,
          fmt("genuine=%zu skilled=%zu random=%zu enumeration=%.3fs", g, s, r, secs)};
}

Outcome enrollment_combinatorics(Context& ctx) {
  bool ok = true;
  for (std::size_t u = 0; u < ctx.paper_shaped.users.size(); ++u) {
    const auto combos = eval::enumerate_combinations(ctx.paper_shaped.users[u], u);
    ok = ok && combos.size() == 12;
    std::size_t k = 0;
    for (std::size_t triple = 0; triple < 3; ++triple)
      for (std::size_t pair = 0; pair < 4; ++pair, ++k)
        ok = ok && k < combos.size() && combos[k].triple_start == triple && combos[k].pair_start == pair;
  }
  return {ok, fmt("%zu users x 12 = {1-3,2-4,3-5} x {1-2,2-3,3-4,4-5}", ctx.paper_shaped.users.size())};
}

Outcome hmm_oracle(Context&) {
  const auto start = Clock::now();
  Rng rng(20050);
  const int cases = 200;
  int bad = 0;
  double worst = 0.0;
  for (int k = 0; k < cases; ++k) {
    const std::size_t S = 1 + rng.below(3), M = 1 + rng.below(2), T = 1 + rng.below(8), D = 1 + rng.below(3);
    const auto model = st::random_toy_model(rng, S, M, D);
    const auto seq = st::random_frames(rng, T, D);
    const auto oracle = st::enumerate_paths(model, seq);
    const double fwd = hmm::forward_loglik(model, seq);
    const double vit = hmm::viterbi(model, seq).log_prob;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); };
    worst = std::max({worst, rel(fwd, oracle.total), rel(vit, oracle.best)});
    bad += !(st::close_relative(fwd, oracle.total, 1e-9) && st::close_relative(vit, oracle.best, 1e-9));
  }
  const double secs = seconds_since(start);
  return {bad == 0 && secs < 10.0, fmt("%d toy models, %d mismatches, max rel err %.2e, %.3fs", cases, bad, worst, secs)};
}

bool monotone(const std::vector<double>& trace, double& min_gain) {
  bool ok = true;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    min_gain = std::min(min_gain, trace[i] - trace[i - 1]);
    ok = ok && trace[i] >= trace[i - 1] - 1e-6;
  }
  return ok;
}

Outcome em_monotonicity(Context& ctx) {
  hmm::TrainConfig config;
  config.max_iterations = 20;
  config.loglik_relative_tolerance = 1e-300;  // run all 20 iterations
  bool ok = true;
  double min_gain = std::numeric_limits<double>::infinity();
  std::size_t runs = 0;
  Rng rng(4);
  for (int k = 0; k < 10; ++k) {
    std::vector<signal::FeatureSequence> seqs;
    for (int q = 0; q < 4; ++q) seqs.push_back(st::random_frames(rng, 30, 2));
    config.seed = static_cast<std::uint64_t>(k);
    const auto r = hmm::train(seqs, {2, 2}, config);
    ok = ok && r.loglik_trace.size() == 21 && monotone(r.loglik_trace, min_gain);
    ++runs;
  }
  for (std::size_t u = 0; u < 5; ++u) {
    const auto& user = ctx.default20.users[u];
    std::vector<signal::FeatureSequence> seqs;
    for (std::size_t i = 0; i < 3; ++i) seqs.push_back(signal::pipeline(io::read_svc_file(user.sessions[0].genuine[i])));
    for (std::size_t i = 0; i < 2; ++i) seqs.push_back(signal::pipeline(io::read_svc_file(user.sessions[1].genuine[i])));
    const auto r = hmm::train(seqs, {}, config);
    ok = ok && r.loglik_trace.size() == 21 && monotone(r.loglik_trace, min_gain);
    ++runs;
  }
  return {ok, fmt("%zu trainings x 20 iterations, smallest step gain %.3e", runs, min_gain)};
}

Outcome whitening(Context& ctx) {
  std::size_t sigs = 0, bad = 0;
  double worst_mean = 0.0, worst_std = 0.0;
  for (const auto& user : ctx.default20.users) {
    std::vector<fs::path> files = user.forgeries;
    for (const auto& s : user.sessions) files.insert(files.end(), s.genuine.begin(), s.genuine.end());
    for (const auto& f : files) {
      const auto raw = io::read_svc_file(f);
      for (bool pressure : {true, false}) {
        signal::SignalConfig config;
        config.use_pressure = pressure;
        const auto fs_ = signal::pipeline(raw, config);
        ++sigs;
        for (std::size_t c = 0; c < fs_.dim(); ++c) {
          const auto ch = fs_.channel(c);
          const double n = static_cast<double>(ch.size());
          const double mean = std::accumulate(ch.begin(), ch.end(), 0.0) / n;
          double var = 0.0;
          for (double v : ch) var += (v - mean) * (v - mean);
          const double sd = std::sqrt(var / n);
          worst_mean = std::max(worst_mean, std::abs(mean));
          worst_std = std::max(worst_std, std::abs(sd - 1.0));
          bad += !(std::abs(mean) < 1e-9 && std::abs(sd - 1.0) < 1e-9);
        }
      }
    }
  }
  return {bad == 0, fmt("%zu feature matrices, max |mean| %.2e, max |std-1| %.2e", sigs, worst_mean, worst_std)};
}

Outcome rigid_motion(Context& ctx) {
  Rng rng(606);
  double worst = 0.0;
  std::size_t checks = 0;
  for (std::size_t u = 0; u < 20; ++u) {
    const auto& user = ctx.default20.users[u];
    std::vector<signal::FeatureSequence> enroll;
    for (std::size_t i = 0; i < 3; ++i) enroll.push_back(signal::pipeline(io::read_svc_file(user.sessions[0].genuine[i])));
    for (std::size_t i = 0; i < 2; ++i) enroll.push_back(signal::pipeline(io::read_svc_file(user.sessions[1].genuine[i])));
    const auto model = hmm::train(enroll).model;
    const auto probe = signal::PenTrajectory::from_raw(io::read_svc_file(user.sessions[2].genuine[u % 5]));
    const double ref = hmm::score(model, signal::pipeline(probe));
    for (int k = 0; k < 10; ++k) {
      const auto moved = st::move_rigidly(probe, rng.uniform(-5000, 5000), rng.uniform(-5000, 5000),
                                          rng.uniform(-std::numbers::pi, std::numbers::pi));
      worst = std::max(worst, std::abs(hmm::score(model, signal::pipeline(moved)) - ref));
      ++checks;
    }
  }
  return {worst < 1e-6, fmt("%zu moved probes, max |dt| %.3e", checks, worst)};
}

Outcome resampler(Context&) {
  const auto hp = signal::resample_uniform(st::table1_hp(), 100.0);
  const double x10 = hp.x.size() > 1 ? hp.x[1] : std::nan("");
  bool ok = std::abs(x10 - 2264.134) < 1e-3 && hp.period == 0.01;

  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    signal::PenTrajectory traj;
    double t = rng.uniform(0.0, 10.0);
    for (int i = 0; i < 80; ++i) {
      traj.t.push_back(t);
      traj.x.push_back(rng.uniform(-2000, 2000));
      traj.y.push_back(rng.uniform(-2000, 2000));
      traj.p.push_back(rng.uniform(0, 255));
      traj.button.push_back(1);
      t += rng.uniform(1.0, 15.0);
    }
    const auto out = signal::resample_uniform(traj, 100.0);
    ok = ok && out.period == 0.01;
    std::size_t seg = 0;
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double tk = traj.t.front() + 10.0 * static_cast<double>(k);
      ok = ok && tk <= traj.t.back() + 1e-9;
      while (seg + 2 < traj.size() && traj.t[seg + 1] <= tk) ++seg;
      const double w = (tk - traj.t[seg]) / (traj.t[seg + 1] - traj.t[seg]);
      for (const auto* ch : {&traj.x, &traj.y, &traj.p}) {
        const auto& got = ch == &traj.x ? out.x : ch == &traj.y ? out.y : out.p;
        const double want = (*ch)[seg] * (1.0 - w) + (*ch)[seg + 1] * w;
        worst = std::max(worst, std::abs(got[k] - want));
      }
    }
    ok = ok && traj.t.front() + 10.0 * static_cast<double>(out.size()) > traj.t.back();
  }
  ok = ok && worst < 1e-9;
  return {ok, fmt("x(10 ms)=%.6f, grid 10 ms, max interpolation error %.2e", x10, worst)};
}

Outcome eer_oracle(Context&) {
  Rng rng(88);
  int mismatches = 0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> gen, imp;
    const std::size_t ng = 1 + rng.below(60), ni = 1 + rng.below(200);
    const bool coarse = k % 2 == 0;
    for (std::size_t i = 0; i < ng; ++i) gen.push_back(coarse ? std::round(rng.normal(1.0, 1.0) * 3) : rng.normal(1.0, 1.0));
    for (std::size_t i = 0; i < ni; ++i) imp.push_back(coarse ? std::round(rng.normal(0.0, 1.0) * 3) : rng.normal(0.0, 1.0));
    const auto got = eval::compute_eer(gen, imp);
    const auto want = st::brute_force_eer(gen, imp);
    mismatches += !(got.eer == want.eer && got.threshold == want.threshold);
  }
  const double separated = eval::compute_eer(std::vector<double>{0.9, 0.8, 0.7}, std::vector<double>{0.4, 0.3, 0.2}).eer;
  const std::vector<double> same = {0.2, 0.4, 0.6, 0.8};
  const double identical = eval::compute_eer(same, same).eer;
  return {mismatches == 0 && separated == 0.0 && identical == 0.5,
          fmt("100 score sets, %d mismatches; separated=%.3f identical=%.3f", mismatches, separated, identical)};
}

Outcome separability(Context& ctx) {
  const auto start = Clock::now();
  for (bool pressure : {true, false}) {
    eval::EvalConfig config;
    config.signal.use_pressure = pressure;
    ctx.runs.push_back(eval::run_protocol(ctx.default20, config));
  }
  ctx.eval_seconds = seconds_since(start);
  bool ok = ctx.eval_seconds < 600.0;
  std::string detail;
  for (const auto& run : ctx.runs) {
    const auto gen = run.scores_for(eval::TrialLabel::Genuine);
    const double skilled = eval::compute_eer(gen, run.scores_for(eval::TrialLabel::Skilled)).eer;
    const double random = eval::compute_eer(gen, run.scores_for(eval::TrialLabel::Random)).eer;
    ok = ok && run.failures.empty() && random <= 0.05 && skilled >= random;
    detail += fmt("%s: skilled=%.2f%% random=%.2f%%; ", run.use_pressure ? "pressure" : "no_pressure",
                  100.0 * skilled, 100.0 * random);
  }
  detail += fmt("both settings %.1fs", ctx.eval_seconds);
  return {ok, detail};
}

Outcome determinism(Context& ctx) {
  // Second full run: regenerate the dataset from the same seed, evaluate, report.
  synth::GenerationConfig gen;
  const auto index = synth::generate_dataset(gen, ctx.scratch / "default20_rerun");
  eval::EvalConfig config;
  const eval::ScoreSet rerun[] = {eval::run_protocol(index, config)};
  const eval::ScoreSet first[] = {ctx.runs.at(0)};
  eval::report(first, ctx.scratch / "report_a");
  eval::report(rerun, ctx.scratch / "report_b");
  const auto a = slurp(ctx.scratch / "report_a" / "scores.csv");
  const auto b = slurp(ctx.scratch / "report_b" / "scores.csv");
  return {!a.empty() && a == b, fmt("scores.csv %zu bytes, identical=%s", a.size(), a == b ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path scratch = fs::temp_directory_path() / "sigverify-acceptance";
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--scratch") scratch = argv[i + 1];
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  Context ctx;
  ctx.scratch = scratch;
  synth::GenerationConfig paper;
  paper.n_users = 53;
  ctx.paper_shaped = synth::generate_dataset(paper, scratch / "paper53");
  ctx.default20 = synth::generate_dataset(synth::GenerationConfig{}, scratch / "default20");

  const std::vector<std::pair<const char*, std::function<Outcome(Context&)>>> criteria = {
      {"protocol combinatorics", protocol_combinatorics},
      {"enrollment combinatorics", enrollment_combinatorics},
      {"HMM oracle equivalence", hmm_oracle},
      {"EM monotonicity", em_monotonicity},
      {"whitening contract", whitening},
      {"rigid-motion invariance", rigid_motion},
      {"resampler exactness", resampler},
      {"EER oracle", eer_oracle},
      {"end-to-end separability", separability},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %zu %s %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(scratch, ec);
  return failures == 0 ? 0 : 1;
}
