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

// Reading and writing of SVC2004-style signature text files and the
// session-structured dataset directory layout:
//
//   <root>/user<id>/session<k>/g<i>.svc     genuine signatures
//   <root>/user<id>/forgeries/f<j>.svc      skilled forgeries of user<id>
//
// File format: first line is the number of samples; each following line is
// "x y t button azimuth altitude pressure". Reading accepts any run of spaces
// or tabs between fields, fractional timestamps and CRLF line endings.
// Writing emits single spaces, '\n' line endings and integer milliseconds.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sigverify::io {

struct RawSample {
  int x = 0;
  int y = 0;
  double t = 0.0;  // milliseconds
  int button = 1;  // 0 pen-up, 1 pen-down
  int azimuth = 0;
  int altitude = 0;
  int pressure = 0;  // [0, 255]

  friend bool operator==(const RawSample&, const RawSample&) = default;
};

struct RawSignature {
  std::vector<RawSample> samples;
  std::string source;  // device tag; not serialized

  std::size_t size() const { return samples.size(); }
  double duration_ms() const;
  double mean_period_ms() const;
};

/// Throws Error unless `sig` satisfies the RawSignature invariants
/// (>= 2 samples, strictly increasing t, pressure in [0,255], button 0/1).
void validate(const RawSignature& sig);

RawSignature parse_svc(std::string_view text);
std::string write_svc(const RawSignature& sig);

RawSignature read_svc_file(const std::filesystem::path& path);
void write_svc_file(const std::filesystem::path& path, const RawSignature& sig);

/// Acquisition statistics of one capture (what `sigverify inspect` prints).
struct SignatureStats {
  std::size_t samples = 0;
  std::size_t pen_down = 0;
  double duration_ms = 0.0;
  double mean_period_ms = 0.0;
  double min_period_ms = 0.0;
  double max_period_ms = 0.0;
  int pressure_min = 0;
  int pressure_max = 0;
  double pressure_mean = 0.0;  // over pen-down samples
  // Densest 60-value pressure window [lo, lo + 59] and the fraction of
  // pen-down samples inside it.
  int pressure_window_lo = 0;
  double pressure_window_fraction = 0.0;
  std::vector<std::size_t> pressure_histogram;  // 16 bins of 16 values over [0, 255]
};

SignatureStats signature_stats(const RawSignature& sig);

struct SessionEntry {
  std::string id;  // e.g. "session1"
  std::vector<std::filesystem::path> genuine;
};

struct UserEntry {
  std::string id;  // e.g. "user7"
  std::vector<SessionEntry> sessions;
  std::vector<std::filesystem::path> forgeries;
  bool conformant = false;  // 3 sessions x 5 genuine + 15 forgeries
};

struct DatasetIndex {
  std::filesystem::path root;
  std::vector<UserEntry> users;
  std::vector<std::string> warnings;
  std::vector<std::string> unreadable;  // per-file failures, collected

  std::size_t genuine_count() const;
  std::size_t forgery_count() const;
  bool conformant() const;
};

/// Lists every signature file under `root`. Deviations from the 3x5 + 15
/// pattern are reported in `warnings` and the per-user `conformant` flag;
/// only a missing root is fatal (MissingRoot).
DatasetIndex scan_dataset(const std::filesystem::path& root);

/// Orders names like "user2" before "user10" (numeric suffix aware).
bool natural_less(std::string_view a, std::string_view b);

}  // namespace sigverify::io
