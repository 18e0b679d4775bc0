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

// Seeded synthetic signature datasets. A user template is a Catmull-Rom
// path through random anchors traversed with a smooth, monotone time warp,
// plus a slowly modulated pressure profile. Genuine samples jitter the
// template; skilled forgeries keep the shape but distort the dynamics
// (slower, different velocity profile, shakier, different pressure).
// Timestamps follow a ~131 Hz tablet clock, either steady or oscillating
// between short and long periods, and are integer milliseconds.

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sigverify/io.hpp"

namespace sigverify::synth {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct TimeWarp {
  // w(u) = u + sum_i amp_i / (2 pi f_i) (sin(2 pi f_i u + phase_i) - sin(phase_i)),
  // monotone because sum |amp_i| < 1.
  static constexpr std::size_t kTerms = 4;
  std::array<double, kTerms> amplitude{};
  std::array<int, kTerms> frequency{1, 1, 1, 1};
  std::array<double, kTerms> phase{};

  double operator()(double u) const;
  friend bool operator==(const TimeWarp&, const TimeWarp&) = default;
};

enum class ClockStyle { Steady, Oscillating };

struct UserTemplate {
  std::uint64_t seed = 0;
  std::vector<Point> anchors;  // relative to origin, tablet units
  Point origin;
  double duration_s = 2.5;
  double pressure_mean = 120.0;
  double pressure_amplitude = 12.0;
  double pressure_cycles = 2.5;  // modulation periods per signature
  double pressure_phase = 0.0;
  TimeWarp warp;
  bool has_pen_up = false;
  double pen_up_start = 0.0;  // fraction of the signature duration
  double pen_up_length = 0.0;
  ClockStyle clock = ClockStyle::Steady;

  double anchor_spacing() const;
  friend bool operator==(const UserTemplate&, const UserTemplate&) = default;
};

struct GenerationConfig {
  std::size_t n_users = 20;
  std::uint64_t master_seed = 2005;
  // Intra-user jitter. Spatial is a fraction of the anchor spacing, temporal
  // a relative duration / warp perturbation, pressure in pressure units.
  double spatial_jitter = 0.06;
  double temporal_jitter = 0.06;
  double pressure_jitter = 4.0;
  double session_variability = 1.2;  // session drift, in units of the jitters above
  double forgery_degradation = 0.5;
  // Tablet clock.
  double mean_period_ms = 7.63;
  double period_oscillation_ms = 4.3;
  double period_jitter_ms = 0.4;
};

UserTemplate generate_user(std::uint64_t seed);

/// Genuine sample `index` (1-based) of `session` (1-based).
io::RawSignature sample_genuine(const UserTemplate& user, int session, int index,
                                const GenerationConfig& config = {});

/// Skilled imitation of `target`; the forger's habits come from forger_seed,
/// attempt-to-attempt variation from `attempt`.
io::RawSignature sample_forgery(const UserTemplate& target, std::uint64_t forger_seed, int attempt,
                                const GenerationConfig& config = {});

/// Users forging target `target` (0-based): target+1, target+2, target+3
/// modulo n_users, each providing 5 forgeries.
std::array<std::size_t, 3> forgers_of(std::size_t target, std::size_t n_users);

std::uint64_t user_seed(std::uint64_t master_seed, std::size_t user);

/// Writes user<i>/session<k>/g<j>.svc, user<i>/forgeries/f<j>.svc and a
/// manifest.txt naming the forger of every forgery; returns scan_dataset(root).
io::DatasetIndex generate_dataset(const GenerationConfig& config, const std::filesystem::path& root);

}  // namespace sigverify::synth
