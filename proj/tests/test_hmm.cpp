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

#include "doctest.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sigverify/error.hpp"
#include "sigverify/hmm.hpp"
#include "sigverify/random.hpp"
#include "sigverify/signal.hpp"
#include "sigverify/synth.hpp"
#include "support/doctest_ext.hpp"
#include "support/oracles.hpp"

using namespace sigverify;
using namespace sigverify::hmm;
using sigverify::testing::close_relative;
using sigverify::testing::enumerate_paths;
using sigverify::testing::kNegInf;
using sigverify::testing::mixture_log_density;
using sigverify::testing::random_frames;
using sigverify::testing::random_toy_model;

namespace {

std::vector<FeatureSequence> enrollment_features(std::uint64_t user_seed, bool pressure = true) {
  const auto user = synth::generate_user(user_seed);
  signal::SignalConfig config;
  config.use_pressure = pressure;
  std::vector<FeatureSequence> out;
  for (int i = 1; i <= 3; ++i) out.push_back(signal::pipeline(synth::sample_genuine(user, 1, i), config));
  for (int i = 1; i <= 2; ++i) out.push_back(signal::pipeline(synth::sample_genuine(user, 2, i), config));
  return out;
}

FeatureSequence column(const std::vector<double>& v) {
  std::vector<std::vector<double>> frames;
  for (double x : v) frames.push_back({x});
  return FeatureSequence::from_frames(frames);
}

// Two-regime 1-D sequences: low values then high values.
std::vector<FeatureSequence> two_regime_sequences(Rng& rng, std::size_t count) {
  std::vector<FeatureSequence> seqs;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> v;
    const int split = 10 + static_cast<int>(rng.below(10));
    for (int t = 0; t < 30; ++t) v.push_back((t < split ? -2.0 : 2.0) + rng.normal(0.0, 0.7));
    seqs.push_back(column(v));
  }
  return seqs;
}

double total_forward(const SignatureModel& m, const std::vector<FeatureSequence>& seqs) {
  double s = 0.0;
  for (const auto& q : seqs) s += forward_loglik(m, q);
  return s;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL_CHECK("no error raised");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("LogSumExp.Basics") {
  const std::vector<double> v = {std::log(1.0), std::log(2.0), std::log(3.0)};
  CHECK_NEAR(log_sum_exp(v), std::log(6.0), 1e-15);
  const std::vector<double> big = {1000.0, 1000.0};
  CHECK_NEAR(log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
  CHECK_EQ(log_sum_exp(std::vector<double>{}), kNegInf);
  CHECK_EQ(log_sum_exp(std::vector<double>{kNegInf, kNegInf}), kNegInf);
}

TEST_CASE("EffectiveMixtures.HalvingRule") {
  CHECK_EQ(effective_mixtures(200, 2, 64), 16u);
  CHECK_EQ(effective_mixtures(256, 2, 32), 32u);
  CHECK_EQ(effective_mixtures(255, 2, 32), 16u);
  CHECK_EQ(effective_mixtures(3, 2, 32), 1u);
}

TEST_CASE("InitModel.SingleGaussianOnThreePoints") {
  const std::vector<FeatureSequence> seqs = {column({1.0, 2.0, 3.0})};
  const auto m = init_model(seqs, 1, 1);
  CHECK_NEAR(m.states[0].means[0], 2.0, 1e-15);
  CHECK_NEAR(m.states[0].variances[0], 2.0 / 3.0, 1e-15);
  CHECK_NEAR(m.info.variance_floor[0], 0.01 * 2.0 / 3.0, 1e-15);
  CHECK_EQ(m.log_transition(0, 0), 0.0);
  m.check_invariants();
}

TEST_CASE("InitModel.TopologyAndFallback") {
  Rng rng(5);
  std::vector<FeatureSequence> seqs;
  for (int k = 0; k < 5; ++k) seqs.push_back(random_frames(rng, 40, 3));
  const auto m = init_model(seqs, 2, 64);
  CHECK_EQ(m.n_mixtures, 16u);
  CHECK_EQ(m.info.requested_mixtures, 64u);
  CHECK_NEAR(std::exp(m.log_transition(0, 0)), 0.5, 1e-15);
  CHECK_NEAR(std::exp(m.log_transition(0, 1)), 0.5, 1e-15);
  CHECK_EQ(m.log_transition(1, 0), kNegInf);
  CHECK_EQ(m.log_transition(1, 1), 0.0);
  CHECK_EQ(m.log_initial[0], 0.0);
  CHECK_EQ(m.log_initial[1], kNegInf);
  m.check_invariants();
}

TEST_CASE("InitModel.Errors") {
  CHECK_EQ(code_of([] { init_model(std::vector<FeatureSequence>{}, 2, 2); }), ErrorCode::EmptyEnrollment);
  const std::vector<FeatureSequence> mixed = {FeatureSequence::from_frames({{1.0, 2.0}, {2.0, 1.0}}),
                                              column({1.0, 2.0})};
  CHECK_EQ(code_of([&] { init_model(mixed, 1, 1); }), ErrorCode::DimensionMismatch);
}

TEST_CASE("EmissionScorer.MatchesTermByTermDensity") {
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    const auto model = random_toy_model(rng, 2, 3, 4);
    const EmissionScorer scorer(model);
    const auto frames = random_frames(rng, 5, 4);
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t s = 0; s < 2; ++s)
        CHECK_NEAR(scorer.log_density(s, frames.frame(t)),
                    mixture_log_density(model.states[s], 4, frames.frame(t)), 1e-11);
  }
}

TEST_CASE("PathOracle.ForwardAndViterbiMatchEnumeration") {
  Rng rng(2024);
  for (int k = 0; k < 150; ++k) {
    const std::size_t S = 1 + rng.below(3), M = 1 + rng.below(2), T = 1 + rng.below(8), D = 1 + rng.below(3);
    const auto model = random_toy_model(rng, S, M, D);
    const auto seq = random_frames(rng, T, D);
    const auto oracle = enumerate_paths(model, seq);
    const double fwd = forward_loglik(model, seq);
    const auto vit = viterbi(model, seq);
    { INFO(fwd, " vs ", oracle.total); CHECK((close_relative(fwd, oracle.total, 1e-9))); }
    { INFO(vit.log_prob, " vs ", oracle.best); CHECK((close_relative(vit.log_prob, oracle.best, 1e-9))); }
    CHECK((close_relative(sigverify::testing::path_log_prob(model, seq, vit.path), oracle.best, 1e-9)));
    CHECK_GE(fwd, vit.log_prob - 1e-12);
  }
}

TEST_CASE("Viterbi.PathIsLeftToRight") {
  Rng rng(99);
  for (int k = 0; k < 100; ++k) {
    const auto model = random_toy_model(rng, 1 + rng.below(4), 2, 2);
    const auto seq = random_frames(rng, 5 + rng.below(30), 2);
    const auto vit = viterbi(model, seq);
    REQUIRE_EQ(vit.path.size(), seq.n_samples());
    CHECK_EQ(vit.path.front(), 0u);
    for (std::size_t t = 1; t < vit.path.size(); ++t) {
      CHECK_GE(vit.path[t], vit.path[t - 1]);
      CHECK_LE(vit.path[t], vit.path[t - 1] + 1);
    }
  }
}

TEST_CASE("Viterbi.TiesGoToLowerState") {
  // Identical emissions and a 0.5/0.5 split make both one-step paths equal.
  Rng rng(1);
  auto model = random_toy_model(rng, 2, 1, 1);
  model.states[1] = model.states[0];
  model.log_transitions = {std::log(0.5), std::log(0.5), kNegInf, 0.0};
  const auto vit = viterbi(model, column({0.3, 0.3}));
  CHECK_EQ(vit.path, (std::vector<std::size_t>{0, 0}));
}

TEST_CASE("SingleState.ForwardEqualsViterbiEqualsEmissionSum") {
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const auto model = random_toy_model(rng, 1, 2, 3);
    const auto seq = random_frames(rng, 12, 3);
    double sum = 0.0;
    for (std::size_t t = 0; t < 12; ++t) sum += mixture_log_density(model.states[0], 3, seq.frame(t));
    const auto vit = viterbi(model, seq);
    CHECK_NEAR(forward_loglik(model, seq), sum, 1e-10);
    CHECK_NEAR(vit.log_prob, sum, 1e-10);
    CHECK_EQ(vit.path, std::vector<std::size_t>(12, 0));
  }
}

TEST_CASE("Score.IsViterbiPerFrame") {
  Rng rng(6);
  const auto model = random_toy_model(rng, 2, 2, 2);
  const auto seq = random_frames(rng, 100, 2);
  CHECK_DOUBLE_EQ(score(model, seq), viterbi(model, seq).log_prob / 100.0);
  const auto wrong = random_frames(rng, 10, 3);
  CHECK_EQ(code_of([&] { score(model, wrong); }), ErrorCode::DimensionMismatch);
  CHECK_EQ(code_of([&] { forward_loglik(model, wrong); }), ErrorCode::DimensionMismatch);
}

TEST_CASE("BaumWelch.SingleGaussianClosedForm") {
  const std::vector<FeatureSequence> seqs = {column({1.0, 2.0, 4.0}), column({0.0, 3.0})};
  const auto result = train(seqs, {1, 1});
  const double mean = 2.0, var = (1.0 + 0.0 + 4.0 + 4.0 + 1.0) / 5.0;
  CHECK_NEAR(result.model.states[0].means[0], mean, 1e-12);
  CHECK_NEAR(result.model.states[0].variances[0], var, 1e-12);
}

TEST_CASE("BaumWelch.MonotoneOnToyData") {
  Rng rng(12);
  for (int k = 0; k < 10; ++k) {
    const auto seqs = two_regime_sequences(rng, 4);
    TrainConfig config;
    config.max_iterations = 10;
    config.loglik_relative_tolerance = 1e-300;
    config.seed = k;
    const auto result = train(seqs, {2, 1}, config);
    REQUIRE_EQ(result.loglik_trace.size(), result.model.info.iterations + 1);
    for (std::size_t i = 1; i < result.loglik_trace.size(); ++i)
      { INFO("step ", i); CHECK_GE(result.loglik_trace[i], result.loglik_trace[i - 1] - 1e-6); }
    CHECK_NEAR(result.loglik_trace.back(), total_forward(result.model, seqs), 1e-8);
    CHECK_DOUBLE_EQ(result.model.info.final_loglik, result.loglik_trace.back());
    result.model.check_invariants();
  }
}

TEST_CASE("BaumWelch.TraceMatchesEnumerationOracle") {
  Rng rng(31);
  std::vector<FeatureSequence> seqs;
  for (int k = 0; k < 3; ++k) seqs.push_back(random_frames(rng, 6, 2));
  TrainConfig config;
  config.max_iterations = 5;
  config.loglik_relative_tolerance = 1e-300;
  const auto result = train(seqs, {2, 2}, config);
  double oracle = 0.0;
  for (const auto& q : seqs) oracle += enumerate_paths(result.model, q).total;
  CHECK((close_relative(result.loglik_trace.back(), oracle, 1e-9)));
}

TEST_CASE("BaumWelch.SyntheticSignaturesDefaults") {
  const auto seqs = enrollment_features(101);
  TrainConfig config;
  config.loglik_relative_tolerance = 1e-300;
  const auto result = train(seqs, {}, config);
  const auto& m = result.model;
  CHECK_EQ(m.n_states, 2u);
  CHECK_EQ(m.dim, 14u);
  CHECK_EQ(m.info.requested_mixtures, 32u);
  CHECK_EQ(m.info.iterations, 20u);
  m.check_invariants();
  for (std::size_t i = 1; i < result.loglik_trace.size(); ++i)
    CHECK_GE(result.loglik_trace[i], result.loglik_trace[i - 1] - 1e-6);
  for (double f : m.info.variance_floor) CHECK_GT(f, 0.0);
}

TEST_CASE("BaumWelch.StopsOnRelativeTolerance") {
  const auto seqs = enrollment_features(102);
  TrainConfig config;
  config.loglik_relative_tolerance = 1e-2;
  const auto result = train(seqs, {2, 4}, config);
  CHECK_LT(result.model.info.iterations, 20u);
  const auto& tr = result.loglik_trace;
  REQUIRE_GE(tr.size(), 2u);
  CHECK_LT((tr.back() - tr[tr.size() - 2]) / std::abs(tr[tr.size() - 2]), 1e-2);
}

TEST_CASE("BaumWelch.Deterministic") {
  const auto seqs = enrollment_features(103);
  const auto a = train(seqs);
  const auto b = train(seqs);
  CHECK_EQ(a.model, b.model);
  CHECK_EQ(a.loglik_trace, b.loglik_trace);
}

TEST_CASE("Serialization.RoundTripIsExact") {
  const auto seqs = enrollment_features(104);
  const auto model = train(seqs, {2, 8}).model;
  const auto text = serialize_model(model);
  const auto back = deserialize_model(text);
  CHECK_EQ(back, model);
  CHECK_EQ(serialize_model(back), text);
  for (const auto& q : seqs) CHECK_EQ(score(back, q), score(model, q));
}

TEST_CASE("Serialization.ToyModelWithInfinities") {
  Rng rng(3);
  auto model = random_toy_model(rng, 3, 2, 2);
  const auto back = deserialize_model(serialize_model(model));
  CHECK_EQ(back, model);
  CHECK_EQ(back.log_transition(2, 0), kNegInf);
}

TEST_CASE("Serialization.Errors") {
  Rng rng(3);
  const auto text = serialize_model(random_toy_model(rng, 2, 2, 2));
  CHECK_EQ(code_of([&] { deserialize_model(text.substr(0, text.size() / 2)); }), ErrorCode::SchemaViolation);
  CHECK_EQ(code_of([&] { deserialize_model(""); }), ErrorCode::SchemaViolation);
  std::string bumped = text;
  bumped.replace(bumped.find("sigverify-hmm 1"), 15, "sigverify-hmm 2");
  CHECK_EQ(code_of([&] { deserialize_model(bumped); }), ErrorCode::VersionMismatch);
  std::string garbage = text;
  garbage.replace(garbage.find("weights"), 7, "weigh7s");
  CHECK_EQ(code_of([&] { deserialize_model(garbage); }), ErrorCode::SchemaViolation);
}

TEST_CASE("Serialization.FileRoundTrip") {
  sigverify::testing::ScratchDir dir("hmm");
  Rng rng(9);
  const auto model = random_toy_model(rng, 2, 2, 3);
  const auto path = (dir.path() / "m.hmm").string();
  save_model(path, model);
  CHECK_EQ(load_model(path), model);
}

TEST_CASE("Invariants.DetectViolations") {
  Rng rng(10);
  const auto good = random_toy_model(rng, 2, 2, 2);
  good.check_invariants();
  auto skip = random_toy_model(rng, 3, 1, 1);
  skip.log_transitions[0 * 3 + 2] = std::log(0.1);
  CHECK_EQ(code_of([&] { skip.check_invariants(); }), ErrorCode::SchemaViolation);
  auto weights = good;
  weights.states[0].weights[0] += 0.01;
  CHECK_EQ(code_of([&] { weights.check_invariants(); }), ErrorCode::SchemaViolation);
  auto floor = good;
  floor.states[1].variances[0] = 1e-4;
  CHECK_EQ(code_of([&] { floor.check_invariants(); }), ErrorCode::SchemaViolation);
}

TEST_CASE("Score.RigidMotionInvariance") {
  const auto user = synth::generate_user(55);
  const auto model = train(enrollment_features(55), {2, 8}).model;
  Rng rng(77);
  const auto probe = signal::PenTrajectory::from_raw(synth::sample_genuine(user, 3, 1));
  const double ref = score(model, signal::pipeline(probe));
  for (int k = 0; k < 5; ++k) {
    const auto moved = sigverify::testing::move_rigidly(probe, rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3),
                                                        rng.uniform(-3.0, 3.0));
    CHECK_NEAR(score(model, signal::pipeline(moved)), ref, 1e-6);
  }
}

TEST_CASE("Score.GenuineAboveRandomForWellSeparatedUser") {
  const auto model = train(enrollment_features(61)).model;
  const auto owner = synth::generate_user(61);
  const auto other = synth::generate_user(62);
  double genuine = 0.0, random = 0.0;
  for (int i = 1; i <= 5; ++i) {
    genuine += score(model, signal::pipeline(synth::sample_genuine(owner, 3, i)));
    random += score(model, signal::pipeline(synth::sample_genuine(other, 3, i)));
  }
  CHECK_GT(genuine, random);
}
