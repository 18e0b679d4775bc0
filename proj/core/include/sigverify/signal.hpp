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

// Feature extraction: RawSignature -> whitened FeatureSequence.
//
//   resample_uniform -> center_and_rotate -> extract_functions -> whiten
//
// Base functions per sample: x, y, p, theta (path tangent angle, unwrapped),
// v (path velocity magnitude), rho (log curvature radius) and a (total
// acceleration magnitude), followed by the first derivative of each. With
// pressure disabled p and dp are dropped (12 channels instead of 14).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sigverify/io.hpp"

namespace sigverify::signal {

struct SignalConfig {
  double rate_hz = 100.0;
  bool use_pressure = true;
  // rho = ln(v / |dtheta/dt|), with the radius clamped to [min, max].
  double min_radius = 1e-6;
  double max_radius = 1e6;
  // Channels whose standard deviation is below this whiten to all zeros.
  double whiten_std_guard = 1e-12;
};

/// Real-valued pen trajectory (time in ms). This is what the resampler
/// consumes; RawSignature converts to it losslessly.
struct PenTrajectory {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> p;
  std::vector<int> button;

  static PenTrajectory from_raw(const io::RawSignature& sig);
  std::size_t size() const { return t.size(); }
};

struct UniformSignature {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> p;
  std::vector<int> button;
  double period = 0.01;  // seconds

  std::size_t size() const { return x.size(); }
};

/// Row-major n_samples x dim matrix.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(std::size_t n_samples, std::size_t dim, std::vector<std::string> names = {});

  std::size_t n_samples() const { return n_samples_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return n_samples_ == 0; }

  double& at(std::size_t n, std::size_t c) { return data_[n * dim_ + c]; }
  double at(std::size_t n, std::size_t c) const { return data_[n * dim_ + c]; }

  std::span<const double> frame(std::size_t n) const {
    return {data_.data() + n * dim_, dim_};
  }
  std::vector<double> channel(std::size_t c) const;
  void set_channel(std::size_t c, std::span<const double> values);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& data() const { return data_; }

  /// Builds a sequence from explicit frames (tests, toy models).
  static FeatureSequence from_frames(const std::vector<std::vector<double>>& frames);

  friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;

 private:
  std::size_t n_samples_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::vector<std::string> names_;
};

std::vector<std::string> channel_names(bool use_pressure);

/// Central difference (u[n+1] - u[n-1]) / (2 dt) with one-sided differences
/// at both ends. Requires at least 2 samples.
std::vector<double> derivative(std::span<const double> u, double dt);

/// Unwraps an angle sequence so consecutive values differ by at most pi.
std::vector<double> unwrap(std::span<const double> angle);

UniformSignature resample_uniform(const PenTrajectory& traj, double rate_hz = 100.0);
UniformSignature resample_uniform(const io::RawSignature& sig, double rate_hz = 100.0);

/// Circular mean of the path tangent angle, atan2(sum sin, sum cos), over
/// samples with non-negligible speed. Throws DegenerateTrajectory when the
/// pen never moves.
double mean_tangent_angle(const UniformSignature& sig);

UniformSignature center_and_rotate(const UniformSignature& sig);

FeatureSequence extract_functions(const UniformSignature& sig, const SignalConfig& config = {});

FeatureSequence whiten(const FeatureSequence& fs, double std_guard = 1e-12);

FeatureSequence pipeline(const PenTrajectory& traj, const SignalConfig& config = {});
FeatureSequence pipeline(const io::RawSignature& sig, const SignalConfig& config = {});

}  // namespace sigverify::signal
