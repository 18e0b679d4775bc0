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

// Enrollment / verification service. A user enrolls with 3 signatures
// tagged session 1 and 2 tagged session 2; the fifth accepted signature
// trains the user's model. Verification accepts when t >= threshold.
//
// Store layout, one directory per user:
//
//   <store>/<user>/record.json       created/updated timestamps, threshold override
//   <store>/<user>/enroll/s<k>_<i>.svc
//   <store>/<user>/model.hmm         serialized SignatureModel (once trained)
//   <store>/<user>/decisions.log     one JSON object per verification, append-only

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "sigverify/eval.hpp"
#include "sigverify/hmm.hpp"
#include "sigverify/signal.hpp"
#include "sigverify/synth.hpp"

namespace sigverify::service {

inline constexpr std::size_t kSession1Quota = 3;
inline constexpr std::size_t kSession2Quota = 2;

/// Random-forgery EER threshold of the bundled calibration set (see
/// calibration_dataset_config()); regenerate with `sigverify calibrate`.
inline constexpr double kDefaultThreshold = -17.660000185403582;

enum class EnrollmentState { Collecting, Trained };

std::string_view to_string(EnrollmentState state);

struct SessionCounts {
  std::size_t session1 = 0;
  std::size_t session2 = 0;
};

struct ModelSummary {
  std::size_t n_states = 0;
  std::size_t n_mixtures = 0;
  std::size_t dim = 0;
  std::size_t iterations = 0;
  double final_loglik = 0.0;
};

struct UserStatus {
  std::string user;
  EnrollmentState state = EnrollmentState::Collecting;
  SessionCounts counts;
  std::optional<ModelSummary> model;
  double threshold = kDefaultThreshold;
  std::string created;
  std::string updated;
};

struct VerifyDecision {
  std::string user;
  double score = 0.0;
  double threshold = 0.0;
  bool accept = false;
  std::string timestamp;
};

struct ServiceConfig {
  std::filesystem::path store;
  std::optional<double> threshold;  // deployment-wide override of kDefaultThreshold
  signal::SignalConfig signal;
  hmm::Topology topology;
  hmm::TrainConfig train;
};

class VerificationService {
 public:
  /// Opens (creating if needed) the store and loads every user found there.
  explicit VerificationService(ServiceConfig config);
  ~VerificationService();

  VerificationService(const VerificationService&) = delete;
  VerificationService& operator=(const VerificationService&) = delete;

  UserStatus enroll_submit(const std::string& user, int session, std::string_view svc);
  VerifyDecision verify(const std::string& user, std::string_view svc);
  UserStatus user_status(const std::string& user) const;

  /// Deletes the user's enrollment, model and decision log.
  void reset(const std::string& user);

  void set_user_threshold(const std::string& user, std::optional<double> threshold);

  double default_threshold() const;
  const ServiceConfig& config() const { return config_; }

 private:
  struct UserRecord;

  std::shared_ptr<UserRecord> find(const std::string& user) const;
  std::shared_ptr<UserRecord> find_or_create(const std::string& user);
  UserStatus status_of(const UserRecord& record) const;
  void load_store();

  ServiceConfig config_;
  mutable std::mutex table_mutex_;
  std::map<std::string, std::shared_ptr<UserRecord>> users_;
};

/// User ids must be 1-64 characters of [A-Za-z0-9_-].
bool valid_user_id(std::string_view user);

/// Synthetic dataset used to derive kDefaultThreshold.
synth::GenerationConfig calibration_dataset_config();

/// Generates the calibration dataset under `scratch`, runs the evaluation
/// protocol (pressure on, default model) and returns the random-forgery EER
/// operating point.
eval::EerResult calibrate_threshold(const std::filesystem::path& scratch,
                                    const synth::GenerationConfig& dataset = calibration_dataset_config(),
                                    const eval::EvalConfig& config = {});

}  // namespace sigverify::service
