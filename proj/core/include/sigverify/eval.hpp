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

#pragma once

// Evaluation protocol: per user, 12 enrollment models (3 consecutive
// session-1 signatures x 2 consecutive session-2 signatures), tested against
// the 5 session-3 genuine signatures, the user's 15 skilled forgeries and the
// skilled forgeries of every other user (random / casual impostors).
// Metrics: EER and DET points.
//
// Threshold convention: a trial is accepted when t >= threshold, so
// FAR(th) = #{impostor >= th} / n_impostor and FRR(th) = #{genuine < th} / n_genuine.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigverify/hmm.hpp"
#include "sigverify/io.hpp"
#include "sigverify/signal.hpp"

namespace sigverify::eval {

enum class TrialLabel { Genuine, Skilled, Random };

std::string_view to_string(TrialLabel label);

struct EnrollmentCombination {
  std::size_t user = 0;          // index into DatasetIndex::users
  std::size_t triple_start = 0;  // session-1 signatures [triple_start, triple_start + 3)
  std::size_t pair_start = 0;    // session-2 signatures [pair_start, pair_start + 2)

  /// e.g. "s1:1-3/s2:1-2" (1-based, inclusive).
  std::string label() const;

  friend bool operator==(const EnrollmentCombination&, const EnrollmentCombination&) = default;
};

/// The 12 combinations for one user, triple index major, pair index minor.
/// Throws InsufficientEnrollment unless sessions 1 and 2 hold >= 5 signatures.
std::vector<EnrollmentCombination> enumerate_combinations(const io::UserEntry& user,
                                                          std::size_t user_index = 0);

struct TestRef {
  std::size_t owner = 0;  // user owning the file
  bool forgery = false;   // false: session-3 genuine signature
  std::size_t file = 0;   // index within session 3 or within forgeries

  friend bool operator==(const TestRef&, const TestRef&) = default;
};

struct Trial {
  std::size_t model = 0;  // index into TrialSet::models
  TestRef test;
  TrialLabel label = TrialLabel::Genuine;
};

struct TrialSet {
  std::vector<EnrollmentCombination> models;
  std::vector<Trial> trials;

  std::size_t count(TrialLabel label) const;
};

/// Throws NonConformantDataset unless every user has 3 sessions x 5 genuine
/// and 15 skilled forgeries.
TrialSet build_trials(const io::DatasetIndex& index);

struct EvalConfig {
  signal::SignalConfig signal;
  hmm::Topology topology;
  hmm::TrainConfig train;
  std::size_t threads = 0;  // 0: hardware concurrency
};

struct TrialFailure {
  std::size_t trial = 0;
  std::string message;
};

struct ScoreSet {
  io::DatasetIndex index;
  TrialSet trials;
  std::vector<std::optional<double>> scores;  // parallel to trials.trials
  std::vector<TrialFailure> failures;
  bool use_pressure = true;
  std::uint64_t config_hash = 0;
  std::uint64_t dataset_hash = 0;

  std::vector<double> scores_for(TrialLabel label) const;
};

/// Trains all 12*U models, scores every trial. Failures are isolated per
/// trial and recorded in ScoreSet::failures.
ScoreSet run_protocol(const io::DatasetIndex& index, const EvalConfig& config = {});

std::uint64_t hash_config(const EvalConfig& config);
std::uint64_t hash_dataset(const io::DatasetIndex& index);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Sweeps every distinct pooled score as threshold and picks the one
/// minimizing |FAR - FRR|; ties prefer the smaller (FAR + FRR) / 2, then the
/// lower threshold. Reports (FAR + FRR) / 2 at that threshold.
EerResult compute_eer(std::span<const double> genuine, std::span<const double> impostor);

/// Standard normal quantile: Acklam's rational approximation refined by one
/// Halley step. p must lie in (0, 1).
double probit(double p);

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  double probit_far = 0.0;
  double probit_frr = 0.0;
};

/// One point per threshold of `grid` (default: all distinct pooled scores,
/// ascending). Rates are clamped to [1/(2n), 1 - 1/(2n)] before probit.
std::vector<DetPoint> det_points(std::span<const double> genuine, std::span<const double> impostor,
                                 std::span<const double> grid = {});

/// At most `max_points` thresholds taken evenly from the sorted distinct pooled scores.
std::vector<double> det_grid(std::span<const double> genuine, std::span<const double> impostor,
                             std::size_t max_points);

/// Writes scores.csv, det_skilled.csv, det_random.csv for the first run and
/// the same files suffixed "_no_pressure" / "_pressure" for a second run with
/// the other pressure setting, plus eer.txt summarizing every
/// (forgery type x pressure setting) cell.
void report(std::span<const ScoreSet> runs, const std::filesystem::path& out_dir);

}  // namespace sigverify::eval
