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

#include "sigverify/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sigverify/error.hpp"

namespace sigverify::signal {
namespace {

// Relative speed below which a sample is treated as stationary (no tangent).
constexpr double kStationarySpeed = 1e-9;

struct Kinematics {
  std::vector<double> dx, dy, speed;
  std::vector<bool> moving;
};

Kinematics kinematics(const UniformSignature& sig) {
  Kinematics k;
  k.dx = derivative(sig.x, sig.period);
  k.dy = derivative(sig.y, sig.period);
  k.speed.resize(k.dx.size());
  double max_speed = 0.0;
  for (std::size_t n = 0; n < k.dx.size(); ++n) {
    k.speed[n] = std::hypot(k.dx[n], k.dy[n]);
    max_speed = std::max(max_speed, k.speed[n]);
  }
  k.moving.resize(k.speed.size());
  for (std::size_t n = 0; n < k.speed.size(); ++n) {
    k.moving[n] = max_speed > 0.0 && k.speed[n] > kStationarySpeed * max_speed;
  }
  return k;
}

}  // namespace

PenTrajectory PenTrajectory::from_raw(const io::RawSignature& sig) {
  PenTrajectory traj;
  const std::size_t n = sig.samples.size();
  traj.t.reserve(n);
  traj.x.reserve(n);
  traj.y.reserve(n);
  traj.p.reserve(n);
  traj.button.reserve(n);
  for (const auto& s : sig.samples) {
    traj.t.push_back(s.t);
    traj.x.push_back(s.x);
    traj.y.push_back(s.y);
    traj.p.push_back(s.pressure);
    traj.button.push_back(s.button);
  }
  return traj;
}

FeatureSequence::FeatureSequence(std::size_t n_samples, std::size_t dim,
                                 std::vector<std::string> names)
    : n_samples_(n_samples), dim_(dim), data_(n_samples * dim, 0.0), names_(std::move(names)) {
  if (!names_.empty() && names_.size() != dim_) {
    throw Error(ErrorCode::InvalidArgument, "channel name count does not match dimension");
  }
}

std::vector<double> FeatureSequence::channel(std::size_t c) const {
  std::vector<double> out(n_samples_);
  for (std::size_t n = 0; n < n_samples_; ++n) out[n] = at(n, c);
  return out;
}

void FeatureSequence::set_channel(std::size_t c, std::span<const double> values) {
  if (values.size() != n_samples_) throw Error(ErrorCode::DimensionMismatch, "channel length");
  for (std::size_t n = 0; n < n_samples_; ++n) at(n, c) = values[n];
}

FeatureSequence FeatureSequence::from_frames(const std::vector<std::vector<double>>& frames) {
  const std::size_t dim = frames.empty() ? 0 : frames.front().size();
  FeatureSequence fs(frames.size(), dim);
  for (std::size_t n = 0; n < frames.size(); ++n) {
    if (frames[n].size() != dim) throw Error(ErrorCode::DimensionMismatch, "ragged frames");
    std::copy(frames[n].begin(), frames[n].end(), fs.data_.begin() + static_cast<std::ptrdiff_t>(n * dim));
  }
  return fs;
}

std::vector<std::string> channel_names(bool use_pressure) {
  std::vector<std::string> base = {"x", "y", "p", "theta", "v", "rho", "a"};
  if (!use_pressure) base.erase(base.begin() + 2);
  std::vector<std::string> names = base;
  for (const auto& b : base) names.push_back("d" + b);
  return names;
}

std::vector<double> derivative(std::span<const double> u, double dt) {
  const std::size_t n = u.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "derivative needs at least 2 samples");
  std::vector<double> d(n);
  d[0] = (u[1] - u[0]) / dt;
  d[n - 1] = (u[n - 1] - u[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i - 1]) / (2.0 * dt);
  return d;
}

std::vector<double> unwrap(std::span<const double> angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<double> out(angle.begin(), angle.end());
  double offset = 0.0;
  for (std::size_t i = 1; i < angle.size(); ++i) {
    const double step = angle[i] - angle[i - 1];
    if (std::abs(step) > std::numbers::pi) offset -= kTwoPi * std::round(step / kTwoPi);
    out[i] = angle[i] + offset;
  }
  return out;
}

UniformSignature resample_uniform(const PenTrajectory& traj, double rate_hz) {
  if (!(rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "rate must be positive");
  const std::size_t n_in = traj.size();
  if (n_in < 2) throw Error(ErrorCode::TooShort, "resampling needs at least 2 samples");
  if (traj.x.size() != n_in || traj.y.size() != n_in || traj.p.size() != n_in ||
      traj.button.size() != n_in) {
    throw Error(ErrorCode::DimensionMismatch, "trajectory channels differ in length");
  }
  for (std::size_t i = 1; i < n_in; ++i) {
    if (!(traj.t[i] > traj.t[i - 1])) throw Error(ErrorCode::NonMonotonicTime, "trajectory time");
  }

  const double step_ms = 1000.0 / rate_hz;
  const double t0 = traj.t.front();
  const double span = traj.t.back() - t0;
  if (span < step_ms * (1.0 - 1e-12)) {
    throw Error(ErrorCode::DegenerateDuration, "signature shorter than one sampling period");
  }
  const auto n_out = static_cast<std::size_t>(std::floor(span / step_ms * (1.0 + 1e-12))) + 1;

  UniformSignature out;
  out.period = 1.0 / rate_hz;
  out.x.resize(n_out);
  out.y.resize(n_out);
  out.p.resize(n_out);
  out.button.resize(n_out);

  std::size_t j = 0;
  for (std::size_t k = 0; k < n_out; ++k) {
    const double tk = t0 + static_cast<double>(k) * step_ms;
    while (j + 2 < n_in && traj.t[j + 1] <= tk) ++j;
    // Bracket [j, j+1]; past the final knot (rounding slack) clamp to it.
    if (tk >= traj.t[n_in - 1]) {
      out.x[k] = traj.x[n_in - 1];
      out.y[k] = traj.y[n_in - 1];
      out.p[k] = traj.p[n_in - 1];
      out.button[k] = traj.button[n_in - 1];
      continue;
    }
    const double ta = traj.t[j], tb = traj.t[j + 1];
    const double w = (tk - ta) / (tb - ta);
    const auto lerp = [w](double a, double b) { return w == 0.0 ? a : a + (b - a) * w; };
    out.x[k] = lerp(traj.x[j], traj.x[j + 1]);
    out.y[k] = lerp(traj.y[j], traj.y[j + 1]);
    out.p[k] = lerp(traj.p[j], traj.p[j + 1]);
    out.button[k] = traj.button[j];
  }
  return out;
}

UniformSignature resample_uniform(const io::RawSignature& sig, double rate_hz) {
  return resample_uniform(PenTrajectory::from_raw(sig), rate_hz);
}

double mean_tangent_angle(const UniformSignature& sig) {
  const Kinematics k = kinematics(sig);
  double sum_sin = 0.0, sum_cos = 0.0;
  bool any = false;
  for (std::size_t n = 0; n < k.speed.size(); ++n) {
    if (!k.moving[n]) continue;
    sum_sin += k.dy[n] / k.speed[n];
    sum_cos += k.dx[n] / k.speed[n];
    any = true;
  }
  if (!any) throw Error(ErrorCode::DegenerateTrajectory, "all points coincide");
  return std::atan2(sum_sin, sum_cos);
}

UniformSignature center_and_rotate(const UniformSignature& sig) {
  const std::size_t n = sig.size();
  if (n < 3) throw Error(ErrorCode::TooShort, "centering needs at least 3 samples");

  UniformSignature out = sig;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += sig.x[i];
    my += sig.y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.x[i] = sig.x[i] - mx;
    out.y[i] = sig.y[i] - my;
  }

  const double angle = mean_tangent_angle(out);
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = out.x[i], y = out.y[i];
    out.x[i] = c * x + s * y;
    out.y[i] = -s * x + c * y;
  }
  return out;
}

FeatureSequence extract_functions(const UniformSignature& sig, const SignalConfig& config) {
  const std::size_t n = sig.size();
  if (n < 3) throw Error(ErrorCode::TooShort, "feature extraction needs at least 3 samples");
  const double dt = sig.period;
  const Kinematics k = kinematics(sig);

  // Stationary samples inherit the nearest preceding tangent (the first
  // moving sample's tangent for a leading stationary run).
  std::vector<double> theta(n, 0.0);
  {
    std::size_t first_moving = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (k.moving[i]) {
        first_moving = i;
        break;
      }
    }
    double held = first_moving < n ? std::atan2(k.dy[first_moving], k.dx[first_moving]) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (k.moving[i]) held = std::atan2(k.dy[i], k.dx[i]);
      theta[i] = held;
    }
    theta = unwrap(theta);
  }

  const std::vector<double> dtheta = derivative(theta, dt);
  const std::vector<double> dspeed = derivative(k.speed, dt);

  std::vector<double> rho(n), accel(n);
  const double log_min = std::log(config.min_radius), log_max = std::log(config.max_radius);
  for (std::size_t i = 0; i < n; ++i) {
    const double turn = std::abs(dtheta[i]);
    if (turn == 0.0) {
      rho[i] = log_max;
    } else {
      const double radius = k.speed[i] / turn;
      rho[i] = radius >= config.max_radius ? log_max
               : radius <= config.min_radius ? log_min
                                             : std::log(radius);
    }
    const double normal = k.speed[i] * dtheta[i];
    accel[i] = std::sqrt(dspeed[i] * dspeed[i] + normal * normal);
  }

  std::vector<const std::vector<double>*> base = {&sig.x, &sig.y, &sig.p, &theta,
                                                  &k.speed, &rho, &accel};
  if (!config.use_pressure) base.erase(base.begin() + 2);

  const std::size_t n_base = base.size();
  FeatureSequence fs(n, 2 * n_base, channel_names(config.use_pressure));
  for (std::size_t c = 0; c < n_base; ++c) {
    fs.set_channel(c, *base[c]);
    fs.set_channel(n_base + c, derivative(*base[c], dt));
  }
  return fs;
}

FeatureSequence whiten(const FeatureSequence& fs, double std_guard) {
  FeatureSequence out = fs;
  const std::size_t n = fs.n_samples();
  if (n == 0) return out;
  for (std::size_t c = 0; c < fs.dim(); ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += fs.at(i, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = fs.at(i, c) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      out.at(i, c) = sd < std_guard ? 0.0 : (fs.at(i, c) - mean) / sd;
    }
  }
  return out;
}

FeatureSequence pipeline(const PenTrajectory& traj, const SignalConfig& config) {
  const UniformSignature uniform = resample_uniform(traj, config.rate_hz);
  const UniformSignature aligned = center_and_rotate(uniform);
  return whiten(extract_functions(aligned, config), config.whiten_std_guard);
}

FeatureSequence pipeline(const io::RawSignature& sig, const SignalConfig& config) {
  return pipeline(PenTrajectory::from_raw(sig), config);
}

}  // namespace sigverify::signal
