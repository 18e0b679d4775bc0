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

// Left-to-right continuous-density HMM with diagonal-covariance Gaussian
// mixture emissions. All probability arithmetic is done in the log domain.
//
// Topology: the chain always starts in state 0; state i may only stay in i
// or advance to i+1 (no skips); the last state is absorbing.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigverify/signal.hpp"

namespace sigverify::hmm {

using signal::FeatureSequence;

struct GaussianMixture {
  std::vector<double> weights;    // n_mixtures
  std::vector<double> means;      // n_mixtures x dim, row-major
  std::vector<double> variances;  // n_mixtures x dim, row-major (diagonal)

  friend bool operator==(const GaussianMixture&, const GaussianMixture&) = default;
};

struct TrainingInfo {
  std::size_t iterations = 0;          // re-estimation steps applied
  double final_loglik = 0.0;           // total log-likelihood of the returned model
  std::size_t requested_mixtures = 0;  // before the small-data fallback
  std::vector<double> variance_floor;  // per dimension

  friend bool operator==(const TrainingInfo&, const TrainingInfo&) = default;
};

struct SignatureModel {
  std::size_t n_states = 0;
  std::size_t n_mixtures = 0;
  std::size_t dim = 0;
  std::vector<double> log_initial;      // n_states
  std::vector<double> log_transitions;  // n_states x n_states, row-major
  std::vector<GaussianMixture> states;
  TrainingInfo info;

  double log_transition(std::size_t from, std::size_t to) const {
    return log_transitions[from * n_states + to];
  }

  /// Throws SchemaViolation when any structural invariant is broken:
  /// sizes, left-to-right zeros, row-stochastic transitions, normalized
  /// weights, variances at or above the floor.
  void check_invariants(double tolerance = 1e-12) const;

  friend bool operator==(const SignatureModel&, const SignatureModel&) = default;
};

struct TrainConfig {
  std::size_t max_iterations = 20;
  double loglik_relative_tolerance = 1e-5;
  // Variance floor = factor * pooled per-dimension variance of the training frames.
  double variance_floor_factor = 1e-2;
  std::uint64_t seed = 1;
  std::size_t kmeans_iterations = 10;
};

struct Topology {
  std::size_t n_states = 2;
  std::size_t n_mixtures = 32;
};

/// Mixture count actually used for `total_frames` of enrollment data: the
/// requested count is halved until total_frames >= 4 * n_states * mixtures.
std::size_t effective_mixtures(std::size_t total_frames, std::size_t n_states,
                               std::size_t requested);

/// log(sum(exp(v))) without overflow; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

/// Per-state emission densities with the normalization constants and inverse
/// variances precomputed once per model.
class EmissionScorer {
 public:
  explicit EmissionScorer(const SignatureModel& model);

  /// log b_s(o); also writes the per-component log terms
  /// log(w_m N(o; mu_m, var_m)) into `components` if it is non-empty.
  double log_density(std::size_t state, std::span<const double> frame,
                     std::span<double> components = {}) const;

  std::size_t n_states() const { return n_states_; }
  std::size_t n_mixtures() const { return n_mixtures_; }
  std::size_t dim() const { return dim_; }

 private:
  std::size_t n_states_, n_mixtures_, dim_;
  std::vector<double> log_const_;  // states x mixtures
  std::vector<double> means_;      // states x mixtures x dim
  std::vector<double> inv_var_;    // states x mixtures x dim
};

/// Uniform left-to-right segmentation + seeded k-means++ per state.
SignatureModel init_model(std::span<const FeatureSequence> seqs, std::size_t n_states,
                          std::size_t n_mixtures, const TrainConfig& config = {});

struct TrainResult {
  SignatureModel model;
  // Total log-likelihood of the training data before the first re-estimation
  // and after each one; back() belongs to the returned model.
  std::vector<double> loglik_trace;
};

/// Multi-sequence Baum-Welch re-estimation.
TrainResult baum_welch(SignatureModel model, std::span<const FeatureSequence> seqs,
                       const TrainConfig& config = {});

/// init_model followed by baum_welch.
TrainResult train(std::span<const FeatureSequence> seqs, const Topology& topology = {},
                  const TrainConfig& config = {});

double forward_loglik(const SignatureModel& model, const FeatureSequence& seq);

struct ViterbiResult {
  double log_prob = 0.0;
  std::vector<std::size_t> path;
};

/// Best state path; ties go to the lower state index.
ViterbiResult viterbi(const SignatureModel& model, const FeatureSequence& seq);

/// Matching score: Viterbi log-likelihood divided by the number of frames.
double score(const SignatureModel& model, const FeatureSequence& seq);

/// Text format, version 1 (numbers with 17 significant digits):
///
///   sigverify-hmm 1
///   n_states S
///   n_mixtures M
///   dim D
///   requested_mixtures R
///   iterations I
///   final_loglik L
///   variance_floor f_1 .. f_D
///   log_initial pi_1 .. pi_S
///   log_transitions a_11 a_12 .. a_SS
///   state s                  (repeated S times)
///   weights w_1 .. w_M
///   mean m mu_1 .. mu_D      (repeated M times)
///   var m v_1 .. v_D         (repeated M times)
///   end
std::string serialize_model(const SignatureModel& model);
SignatureModel deserialize_model(std::string_view text);

SignatureModel load_model(const std::string& path);
void save_model(const std::string& path, const SignatureModel& model);

}  // namespace sigverify::hmm
