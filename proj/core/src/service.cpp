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

#include "sigverify/service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <shared_mutex>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "sigverify/error.hpp"
#include "sigverify/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sigverify::service {

struct VerificationService::UserRecord {
  std::string id;
  fs::path dir;
  // Readers (verify, status) share; enrollment and reset are exclusive.
  mutable std::shared_mutex mutex;
  std::mutex log_mutex;
  std::vector<std::string> session1;  // raw SVC payloads
  std::vector<std::string> session2;
  std::optional<hmm::SignatureModel> model;
  std::optional<double> threshold;
  std::string created;
  std::string updated;
};

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

signal::FeatureSequence features_of(std::string_view svc, const signal::SignalConfig& config) {
  try {
    return signal::pipeline(io::parse_svc(svc), config);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

fs::path enroll_path(const fs::path& dir, int session, std::size_t index) {
  return dir / "enroll" / ("s" + std::to_string(session) + "_" + std::to_string(index) + ".svc");
}

void save_record(const std::string& id, const fs::path& dir, const std::string& created,
                 const std::string& updated, const std::optional<double>& threshold) {
  json j = {{"user", id}, {"created", created}, {"updated", updated}};
  j["threshold"] = threshold ? json(*threshold) : json(nullptr);
  write_file(dir / "record.json", j.dump(2) + "\n");
}

}  // namespace

std::string_view to_string(EnrollmentState state) {
  return state == EnrollmentState::Trained ? "trained" : "collecting";
}

bool valid_user_id(std::string_view user) {
  if (user.empty() || user.size() > 64) return false;
  return std::all_of(user.begin(), user.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-';
  });
}

VerificationService::VerificationService(ServiceConfig config) : config_(std::move(config)) {
  if (config_.store.empty()) throw Error(ErrorCode::InvalidArgument, "store path required");
  std::error_code ec;
  fs::create_directories(config_.store, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create store " + config_.store.string());
  load_store();
}

VerificationService::~VerificationService() = default;

void VerificationService::load_store() {
  for (const auto& entry : fs::directory_iterator(config_.store)) {
    if (!entry.is_directory()) continue;
    const std::string id = entry.path().filename().string();
    if (!valid_user_id(id) || !fs::exists(entry.path() / "record.json")) continue;
    auto record = std::make_shared<UserRecord>();
    record->id = id;
    record->dir = entry.path();
    const json j = json::parse(read_file(entry.path() / "record.json"));
    record->created = j.value("created", "");
    record->updated = j.value("updated", "");
    if (j.contains("threshold") && j["threshold"].is_number()) record->threshold = j["threshold"].get<double>();
    for (std::size_t i = 1; i <= kSession1Quota; ++i) {
      const fs::path p = enroll_path(record->dir, 1, i);
      if (fs::exists(p)) record->session1.push_back(read_file(p));
    }
    for (std::size_t i = 1; i <= kSession2Quota; ++i) {
      const fs::path p = enroll_path(record->dir, 2, i);
      if (fs::exists(p)) record->session2.push_back(read_file(p));
    }
    if (fs::exists(record->dir / "model.hmm")) {
      record->model = hmm::load_model((record->dir / "model.hmm").string());
    }
    users_.emplace(id, std::move(record));
  }
}

std::shared_ptr<VerificationService::UserRecord> VerificationService::find(const std::string& user) const {
  std::lock_guard lock(table_mutex_);
  const auto it = users_.find(user);
  if (it == users_.end()) throw Error(ErrorCode::UnknownUser, user);
  return it->second;
}

std::shared_ptr<VerificationService::UserRecord> VerificationService::find_or_create(
    const std::string& user) {
  if (!valid_user_id(user)) throw Error(ErrorCode::InvalidArgument, "invalid user id '" + user + "'");
  std::lock_guard lock(table_mutex_);
  auto& slot = users_[user];
  if (!slot) {
    auto record = std::make_shared<UserRecord>();
    record->id = user;
    record->dir = config_.store / user;
    std::error_code ec;
    fs::create_directories(record->dir / "enroll", ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + record->dir.string());
    record->created = record->updated = now_iso8601();
    save_record(record->id, record->dir, record->created, record->updated, record->threshold);
    slot = std::move(record);
  }
  return slot;
}

double VerificationService::default_threshold() const {
  return config_.threshold.value_or(kDefaultThreshold);
}

UserStatus VerificationService::status_of(const UserRecord& record) const {
  UserStatus status;
  status.user = record.id;
  status.state = record.model ? EnrollmentState::Trained : EnrollmentState::Collecting;
  status.counts = {record.session1.size(), record.session2.size()};
  if (record.model) {
    const auto& m = *record.model;
    status.model = ModelSummary{m.n_states, m.n_mixtures, m.dim, m.info.iterations, m.info.final_loglik};
  }
  status.threshold = record.threshold.value_or(default_threshold());
  status.created = record.created;
  status.updated = record.updated;
  return status;
}

UserStatus VerificationService::enroll_submit(const std::string& user, int session,
                                              std::string_view svc) {
  if (session != 1 && session != 2) throw Error(ErrorCode::InvalidArgument, "session must be 1 or 2");
  auto record = find_or_create(user);
  std::unique_lock lock(record->mutex);
  if (record->model) throw Error(ErrorCode::AlreadyTrained, user);
  auto& bucket = session == 1 ? record->session1 : record->session2;
  const std::size_t quota = session == 1 ? kSession1Quota : kSession2Quota;
  if (bucket.size() >= quota) {
    throw Error(ErrorCode::QuotaExceeded, "session " + std::to_string(session) + " already has " +
                                              std::to_string(quota) + " signatures");
  }
  features_of(svc, config_.signal);  // reject unusable signatures up front

  bucket.emplace_back(svc);
  const fs::path file = enroll_path(record->dir, session, bucket.size());
  write_file(file, std::string(svc));

  if (record->session1.size() == kSession1Quota && record->session2.size() == kSession2Quota) {
    try {
      std::vector<signal::FeatureSequence> enroll;
      for (const auto& s : record->session1) enroll.push_back(features_of(s, config_.signal));
      for (const auto& s : record->session2) enroll.push_back(features_of(s, config_.signal));
      auto model = hmm::train(enroll, config_.topology, config_.train).model;
      hmm::save_model((record->dir / "model.hmm").string(), model);
      record->model = std::move(model);
    } catch (...) {
      // Drop the signature that triggered the failed training so the client can retry.
      bucket.pop_back();
      std::error_code ec;
      fs::remove(file, ec);
      throw;
    }
  }
  record->updated = now_iso8601();
  save_record(record->id, record->dir, record->created, record->updated, record->threshold);
  return status_of(*record);
}

VerifyDecision VerificationService::verify(const std::string& user, std::string_view svc) {
  auto record = find(user);
  std::shared_lock lock(record->mutex);
  if (!record->model) throw Error(ErrorCode::NotTrained, user);
  const auto features = features_of(svc, config_.signal);

  VerifyDecision decision;
  decision.user = user;
  decision.score = hmm::score(*record->model, features);
  decision.threshold = record->threshold.value_or(default_threshold());
  decision.accept = decision.score >= decision.threshold;
  decision.timestamp = now_iso8601();

  const json line = {{"user", user},
                     {"score", decision.score},
                     {"threshold", decision.threshold},
                     {"decision", decision.accept ? "accept" : "reject"},
                     {"timestamp", decision.timestamp}};
  std::lock_guard log_lock(record->log_mutex);
  std::ofstream log(record->dir / "decisions.log", std::ios::app | std::ios::binary);
  if (!log) throw Error(ErrorCode::Io, "cannot append decision log for " + user);
  log << line.dump() << '\n';
  return decision;
}

UserStatus VerificationService::user_status(const std::string& user) const {
  auto record = find(user);
  std::shared_lock lock(record->mutex);
  return status_of(*record);
}

void VerificationService::reset(const std::string& user) {
  auto record = find(user);
  std::unique_lock lock(record->mutex);
  std::error_code ec;
  fs::remove_all(record->dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot remove " + record->dir.string());
  record->session1.clear();
  record->session2.clear();
  record->model.reset();
  std::lock_guard table_lock(table_mutex_);
  users_.erase(user);
}

void VerificationService::set_user_threshold(const std::string& user, std::optional<double> threshold) {
  auto record = find(user);
  std::unique_lock lock(record->mutex);
  record->threshold = threshold;
  record->updated = now_iso8601();
  save_record(record->id, record->dir, record->created, record->updated, record->threshold);
}

synth::GenerationConfig calibration_dataset_config() {
  synth::GenerationConfig config;
  config.n_users = 8;
  config.master_seed = 0x5157;
  return config;
}

eval::EerResult calibrate_threshold(const fs::path& scratch, const synth::GenerationConfig& dataset,
                                    const eval::EvalConfig& config) {
  const auto index = synth::generate_dataset(dataset, scratch);
  const auto scores = eval::run_protocol(index, config);
  return eval::compute_eer(scores.scores_for(eval::TrialLabel::Genuine),
                           scores.scores_for(eval::TrialLabel::Random));
}

}  // namespace sigverify::service
