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

#include "sigverify/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "sigverify/error.hpp"
#include "sigverify/random.hpp"

namespace fs = std::filesystem;

namespace sigverify::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxWarp = 0.9;  // bound on sum |amplitude|

struct RenderParams {
  std::vector<Point> anchors;
  double scale = 1.0;
  double rotation = 0.0;
  Point offset;
  double duration_s = 2.5;
  TimeWarp warp;
  double pressure_mean = 120.0;
  double pressure_amplitude = 12.0;
  double pressure_cycles = 2.5;
  double pressure_phase = 0.0;
  bool has_pen_up = false;
  double pen_up_start = 0.0;
  double pen_up_length = 0.0;
  ClockStyle clock = ClockStyle::Steady;
  std::uint64_t clock_seed = 0;
  // Shakiness of imitations: a low-frequency tremor (well below 20 Hz).
  double wobble_amplitude = 0.0;
  double wobble_hz = 8.0;
  double wobble_phase = 0.0;
};

RenderParams from_template(const UserTemplate& user) {
  RenderParams p;
  p.anchors = user.anchors;
  p.duration_s = user.duration_s;
  p.warp = user.warp;
  p.pressure_mean = user.pressure_mean;
  p.pressure_amplitude = user.pressure_amplitude;
  p.pressure_cycles = user.pressure_cycles;
  p.pressure_phase = user.pressure_phase;
  p.has_pen_up = user.has_pen_up;
  p.pen_up_start = user.pen_up_start;
  p.pen_up_length = user.pen_up_length;
  p.clock = user.clock;
  p.offset = user.origin;
  return p;
}

void limit_warp(TimeWarp& warp) {
  double total = 0.0;
  for (double a : warp.amplitude) total += std::abs(a);
  if (total > kMaxWarp) {
    for (double& a : warp.amplitude) a *= kMaxWarp / total;
  }
}

// Intra-user variability; `level` scales all jitters (session drift uses
// session_variability, individual samples use 1).
void perturb(RenderParams& p, const UserTemplate& user, Rng& rng, double level,
             const GenerationConfig& config) {
  const double spacing = user.anchor_spacing();
  const double spatial = level * config.spatial_jitter;
  const double temporal = level * config.temporal_jitter;
  const double pressure = level * config.pressure_jitter;
  for (auto& a : p.anchors) {
    a.x += rng.normal(0.0, spatial * spacing);
    a.y += rng.normal(0.0, spatial * spacing);
  }
  p.scale *= 1.0 + rng.normal(0.0, 0.5 * spatial);
  p.rotation += rng.normal(0.0, 0.8 * spatial);
  p.offset.x += rng.normal(0.0, 2500.0 * spatial);
  p.offset.y += rng.normal(0.0, 2500.0 * spatial);
  p.duration_s *= std::max(0.5, 1.0 + rng.normal(0.0, temporal));
  for (std::size_t i = 0; i < TimeWarp::kTerms; ++i) {
    p.warp.amplitude[i] += rng.normal(0.0, 0.5 * temporal) * (p.warp.amplitude[i] != 0.0 ? 1.0 : 0.0);
    p.warp.phase[i] += rng.normal(0.0, 2.0 * temporal);
  }
  limit_warp(p.warp);
  p.pressure_mean += rng.normal(0.0, pressure);
  p.pressure_amplitude = std::max(0.0, p.pressure_amplitude + rng.normal(0.0, 0.3 * pressure));
  p.pressure_phase += rng.normal(0.0, 0.05 * pressure);
  p.pen_up_start += rng.normal(0.0, 0.2 * temporal);
}

Point catmull_rom(const std::vector<Point>& pts, double s) {
  const std::size_t k = pts.size();
  const double max_s = static_cast<double>(k - 1);
  s = std::clamp(s, 0.0, max_s);
  std::size_t i = std::min(static_cast<std::size_t>(s), k - 2);
  const double tau = s - static_cast<double>(i);
  const Point& p1 = pts[i];
  const Point& p2 = pts[i + 1];
  const Point& p0 = i == 0 ? p1 : pts[i - 1];
  const Point& p3 = i + 2 < k ? pts[i + 2] : p2;
  const double t2 = tau * tau, t3 = t2 * tau;
  auto blend = [&](double a, double b, double c, double d) {
    return 0.5 * (2.0 * b + (-a + c) * tau + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 +
                  (-a + 3.0 * b - 3.0 * c + d) * t3);
  };
  return {blend(p0.x, p1.x, p2.x, p3.x), blend(p0.y, p1.y, p2.y, p3.y)};
}

std::vector<long long> clock_ticks(const RenderParams& p, const GenerationConfig& config) {
  Rng rng(p.clock_seed);
  const double total_ms = 1000.0 * p.duration_s;
  std::vector<long long> ticks;
  double t = 0.0;
  long long previous = -1;
  for (std::size_t n = 0; t <= total_ms; ++n) {
    long long tick = std::llround(t);
    if (tick <= previous) tick = previous + 1;
    ticks.push_back(tick);
    previous = tick;
    double gap = config.mean_period_ms + rng.normal(0.0, config.period_jitter_ms);
    if (p.clock == ClockStyle::Oscillating) {
      gap += (n % 2 == 0 ? -1.0 : 1.0) * config.period_oscillation_ms;
    }
    t += std::max(gap, 1.5);
  }
  return ticks;
}

io::RawSignature render(const RenderParams& p, const GenerationConfig& config) {
  const auto ticks = clock_ticks(p, config);
  const double total_ms = 1000.0 * p.duration_s;
  const double max_s = static_cast<double>(p.anchors.size() - 1);

  Point centroid;
  for (const auto& a : p.anchors) {
    centroid.x += a.x;
    centroid.y += a.y;
  }
  centroid.x /= static_cast<double>(p.anchors.size());
  centroid.y /= static_cast<double>(p.anchors.size());
  const double c = std::cos(p.rotation), s = std::sin(p.rotation);

  io::RawSignature sig;
  sig.source = "synth";
  sig.samples.reserve(ticks.size());
  for (long long tick : ticks) {
    const double t_ms = static_cast<double>(tick);
    const double u = std::min(1.0, t_ms / total_ms);
    Point q = catmull_rom(p.anchors, max_s * p.warp(u));
    const double t_s = t_ms / 1000.0;
    q.x += p.wobble_amplitude * std::sin(kTwoPi * p.wobble_hz * t_s + p.wobble_phase);
    q.y += p.wobble_amplitude * std::cos(kTwoPi * 1.3 * p.wobble_hz * t_s + 2.0 * p.wobble_phase);
    const double dx = q.x - centroid.x, dy = q.y - centroid.y;
    const double x = p.scale * (c * dx - s * dy) + centroid.x + p.offset.x;
    const double y = p.scale * (s * dx + c * dy) + centroid.y + p.offset.y;

    io::RawSample sample;
    sample.x = static_cast<int>(std::lround(x));
    sample.y = static_cast<int>(std::lround(y));
    sample.t = t_ms;
    const bool pen_up =
        p.has_pen_up && u >= p.pen_up_start && u < p.pen_up_start + p.pen_up_length;
    if (pen_up) {
      sample.button = 0;
      sample.pressure = 0;
    } else {
      const double pressure =
          p.pressure_mean + p.pressure_amplitude * std::sin(kTwoPi * p.pressure_cycles * u + p.pressure_phase);
      sample.button = 1;
      sample.pressure = static_cast<int>(std::clamp<long>(std::lround(pressure), 1, 255));
    }
    sig.samples.push_back(sample);
  }
  return sig;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace

double TimeWarp::operator()(double u) const {
  double w = u;
  for (std::size_t i = 0; i < kTerms; ++i) {
    if (amplitude[i] == 0.0) continue;
    const double f = kTwoPi * frequency[i];
    w += amplitude[i] / f * (std::sin(f * u + phase[i]) - std::sin(phase[i]));
  }
  return w;
}

double UserTemplate::anchor_spacing() const {
  if (anchors.size() < 2) return 1.0;
  return (anchors.back().x - anchors.front().x) / static_cast<double>(anchors.size() - 1);
}

UserTemplate generate_user(std::uint64_t seed) {
  Rng rng(seed);
  UserTemplate user;
  user.seed = seed;
  const std::size_t k = 8 + static_cast<std::size_t>(rng.below(7));
  const double width = rng.uniform(2200.0, 3600.0);
  const double height = rng.uniform(700.0, 1300.0);
  const double spacing = width / static_cast<double>(k - 1);
  for (std::size_t i = 0; i < k; ++i) {
    const double x = spacing * static_cast<double>(i) +
                     (i == 0 || i + 1 == k ? 0.0 : rng.normal(0.0, 0.15 * spacing));
    user.anchors.push_back({x, rng.uniform(-0.5 * height, 0.5 * height)});
  }
  user.origin = {rng.uniform(1500.0, 3000.0), rng.uniform(3500.0, 4500.0)};
  user.duration_s = rng.uniform(1.8, 3.2);
  user.warp.amplitude[0] = rng.uniform(0.15, 0.35) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  user.warp.frequency[0] = 2 + static_cast<int>(rng.below(4));
  user.warp.phase[0] = rng.uniform(0.0, kTwoPi);
  user.warp.amplitude[1] = rng.uniform(0.05, 0.2) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  user.warp.frequency[1] = 3 + static_cast<int>(rng.below(5));
  user.warp.phase[1] = rng.uniform(0.0, kTwoPi);
  user.pressure_mean = rng.uniform(90.0, 160.0);
  user.pressure_amplitude = rng.uniform(8.0, 18.0);
  user.pressure_cycles = rng.uniform(1.5, 4.0);
  user.pressure_phase = rng.uniform(0.0, kTwoPi);
  user.has_pen_up = rng.uniform() < 0.6;
  user.pen_up_start = rng.uniform(0.3, 0.7);
  user.pen_up_length = rng.uniform(0.02, 0.05);
  user.clock = rng.uniform() < 0.5 ? ClockStyle::Steady : ClockStyle::Oscillating;
  return user;
}

io::RawSignature sample_genuine(const UserTemplate& user, int session, int index,
                                const GenerationConfig& config) {
  RenderParams p = from_template(user);
  Rng session_rng(derive_seed(user.seed, 7000 + static_cast<std::uint64_t>(session)));
  perturb(p, user, session_rng, config.session_variability, config);
  Rng sample_rng(derive_seed(user.seed, 1000 * static_cast<std::uint64_t>(session) +
                                            static_cast<std::uint64_t>(index)));
  perturb(p, user, sample_rng, 1.0, config);
  p.clock_seed = derive_seed(user.seed, 900000 + 1000 * static_cast<std::uint64_t>(session) +
                                            static_cast<std::uint64_t>(index));
  return render(p, config);
}

io::RawSignature sample_forgery(const UserTemplate& target, std::uint64_t forger_seed, int attempt,
                                const GenerationConfig& config) {
  RenderParams p = from_template(target);
  Rng attempt_rng(derive_seed(forger_seed, static_cast<std::uint64_t>(attempt)));
  perturb(p, target, attempt_rng, 1.0, config);
  p.clock_seed = derive_seed(forger_seed, 500000 + static_cast<std::uint64_t>(attempt));

  const double g = config.forgery_degradation;
  Rng habit(forger_seed);
  const double slowdown = habit.uniform(0.3, 0.8);
  const double own_tempo = habit.uniform(0.5, 0.9);
  const double distortion = habit.uniform(0.05, 0.10);
  const double wobble = habit.uniform(2.0, 6.0);
  p.wobble_hz = habit.uniform(6.0, 12.0);

  p.duration_s *= 1.0 + g * (slowdown + attempt_rng.normal(0.0, 0.05));
  // The imitator's own velocity profile partly replaces the target's.
  const double kappa = std::min(1.0, g * own_tempo);
  for (std::size_t i = 0; i < 2; ++i) {
    p.warp.amplitude[i] *= 1.0 - kappa;
    p.warp.amplitude[i + 2] = kappa * habit.uniform(0.1, 0.35) * (habit.uniform() < 0.5 ? -1.0 : 1.0);
    p.warp.frequency[i + 2] = 1 + static_cast<int>(habit.below(5));
    p.warp.phase[i + 2] = habit.uniform(0.0, kTwoPi);
  }
  limit_warp(p.warp);
  const double spacing = target.anchor_spacing();
  for (auto& a : p.anchors) {
    a.x += attempt_rng.normal(0.0, g * distortion * spacing);
    a.y += attempt_rng.normal(0.0, g * distortion * spacing);
  }
  p.wobble_amplitude = g * wobble;
  p.wobble_phase = attempt_rng.uniform(0.0, kTwoPi);
  p.pressure_mean += g * habit.normal(0.0, 20.0);
  p.pressure_amplitude *= std::max(0.0, 1.0 + g * habit.uniform(-0.5, 0.5));
  p.pressure_cycles += g * habit.normal(0.0, 0.8);
  p.pressure_phase += g * habit.normal(0.0, 1.0);
  return render(p, config);
}

std::array<std::size_t, 3> forgers_of(std::size_t target, std::size_t n_users) {
  if (n_users == 0) throw Error(ErrorCode::InvalidArgument, "n_users must be positive");
  return {(target + 1) % n_users, (target + 2) % n_users, (target + 3) % n_users};
}

std::uint64_t user_seed(std::uint64_t master_seed, std::size_t user) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(user));
}

io::DatasetIndex generate_dataset(const GenerationConfig& config, const fs::path& root) {
  if (config.n_users == 0) throw Error(ErrorCode::InvalidArgument, "n_users must be positive");
  for (double v : {config.spatial_jitter, config.temporal_jitter, config.pressure_jitter,
                   config.session_variability, config.forgery_degradation, config.period_jitter_ms,
                   config.period_oscillation_ms}) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "generation scales must be >= 0");
  }
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + root.string());

  std::vector<UserTemplate> users;
  for (std::size_t u = 0; u < config.n_users; ++u) users.push_back(generate_user(user_seed(config.master_seed, u)));

  std::string manifest = "# target forgeries forger\n";
  for (std::size_t u = 0; u < config.n_users; ++u) {
    const fs::path user_dir = root / ("user" + std::to_string(u + 1));
    for (int session = 1; session <= 3; ++session) {
      const fs::path dir = user_dir / ("session" + std::to_string(session));
      fs::create_directories(dir, ec);
      if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string());
      for (int i = 1; i <= 5; ++i) {
        write_file(dir / ("g" + std::to_string(i) + ".svc"),
                   io::write_svc(sample_genuine(users[u], session, i, config)));
      }
    }
    const fs::path forgery_dir = user_dir / "forgeries";
    fs::create_directories(forgery_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + forgery_dir.string());
    const auto forgers = forgers_of(u, config.n_users);
    for (std::size_t k = 0; k < forgers.size(); ++k) {
      // A forger's habits depend on who they are and whom they imitate.
      const std::uint64_t forger_seed = derive_seed(users[forgers[k]].seed, 31 * (u + 1) + k);
      for (int j = 0; j < 5; ++j) {
        const int file = static_cast<int>(k) * 5 + j + 1;
        write_file(forgery_dir / ("f" + std::to_string(file) + ".svc"),
                   io::write_svc(sample_forgery(users[u], forger_seed, j + 1, config)));
      }
      manifest += "user" + std::to_string(u + 1) + " f" + std::to_string(k * 5 + 1) + "-f" +
                  std::to_string(k * 5 + 5) + " user" + std::to_string(forgers[k] + 1) + "\n";
    }
  }
  write_file(root / "manifest.txt", manifest);
  return io::scan_dataset(root);
}

}  // namespace sigverify::synth
