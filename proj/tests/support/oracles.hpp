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

// Independent reference implementations used to freeze expected values.
// Nothing here shares code with the library beyond the data types.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sigverify/hmm.hpp"
#include "sigverify/io.hpp"
#include "sigverify/random.hpp"
#include "sigverify/signal.hpp"

namespace sigverify::testing {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// First nine HP TC 1100 rows of the published acquisition example:
// x, y, pressure, time in ms.
inline io::RawSignature table1_hp() {
  static constexpr double rows[9][4] = {
      {2262, 4126, 19, 0.0},       {2256, 4126, 34, 2.7682},    {2269, 4118, 51, 14.3258},
      {2267, 4113, 66, 17.8017},   {2281, 4092, 80, 29.3914},   {2284, 4069, 93, 32.9374},
      {2305, 4026, 104, 46.2131},  {2330, 3971, 113, 48.8942},  {2358, 3896, 122, 61.1508},
  };
  io::RawSignature sig;
  for (const auto& r : rows) {
    io::RawSample s;
    s.x = static_cast<int>(r[0]);
    s.y = static_cast<int>(r[1]);
    s.pressure = static_cast<int>(r[2]);
    s.t = r[3];
    sig.samples.push_back(s);
  }
  return sig;
}

// Diagonal Gaussian mixture log density written out term by term.
inline double mixture_log_density(const hmm::GaussianMixture& g, std::size_t dim,
                                  std::span<const double> o) {
  double total = 0.0;
  for (std::size_t m = 0; m < g.weights.size(); ++m) {
    double logp = std::log(g.weights[m]);
    for (std::size_t d = 0; d < dim; ++d) {
      const double var = g.variances[m * dim + d];
      const double diff = o[d] - g.means[m * dim + d];
      logp += -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * diff * diff / var;
    }
    total += std::exp(logp);
  }
  return std::log(total);
}

struct PathOracle {
  double total = kNegInf;  // log of the sum over all state paths
  double best = kNegInf;   // log of the best path
};

// Enumerates all n_states^T state sequences.
inline PathOracle enumerate_paths(const hmm::SignatureModel& model, const signal::FeatureSequence& seq) {
  const std::size_t S = model.n_states, T = seq.n_samples();
  std::vector<std::vector<double>> emit(T, std::vector<double>(S));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s < S; ++s) emit[t][s] = mixture_log_density(model.states[s], model.dim, seq.frame(t));

  std::size_t n_paths = 1;
  for (std::size_t t = 0; t < T; ++t) n_paths *= S;
  std::vector<double> finite;
  PathOracle out;
  std::vector<std::size_t> path(T);
  for (std::size_t code = 0; code < n_paths; ++code) {
    std::size_t c = code;
    for (std::size_t t = 0; t < T; ++t) {
      path[t] = c % S;
      c /= S;
    }
    double lp = model.log_initial[path[0]] + emit[0][path[0]];
    for (std::size_t t = 1; t < T && lp > kNegInf; ++t)
      lp += model.log_transition(path[t - 1], path[t]) + emit[t][path[t]];
    if (lp == kNegInf) continue;
    finite.push_back(lp);
    out.best = std::max(out.best, lp);
  }
  if (!finite.empty()) {
    double acc = 0.0;
    for (double v : finite) acc += std::exp(v - out.best);
    out.total = out.best + std::log(acc);
  }
  return out;
}

inline double path_log_prob(const hmm::SignatureModel& model, const signal::FeatureSequence& seq,
                            const std::vector<std::size_t>& path) {
  double lp = model.log_initial[path[0]] + mixture_log_density(model.states[path[0]], model.dim, seq.frame(0));
  for (std::size_t t = 1; t < path.size(); ++t)
    lp += model.log_transition(path[t - 1], path[t]) +
          mixture_log_density(model.states[path[t]], model.dim, seq.frame(t));
  return lp;
}

// Random valid left-to-right model. Variances stay well above the recorded floor.
inline hmm::SignatureModel random_toy_model(Rng& rng, std::size_t S, std::size_t M, std::size_t D) {
  hmm::SignatureModel model;
  model.n_states = S;
  model.n_mixtures = M;
  model.dim = D;
  model.info.requested_mixtures = M;
  model.info.variance_floor.assign(D, 1e-3);
  model.log_initial.assign(S, kNegInf);
  model.log_initial[0] = 0.0;
  model.log_transitions.assign(S * S, kNegInf);
  for (std::size_t i = 0; i < S; ++i) {
    if (i + 1 == S) {
      model.log_transitions[i * S + i] = 0.0;
    } else {
      const double stay = rng.uniform(0.05, 0.95);
      model.log_transitions[i * S + i] = std::log(stay);
      model.log_transitions[i * S + i + 1] = std::log1p(-stay);
    }
  }
  for (std::size_t s = 0; s < S; ++s) {
    hmm::GaussianMixture g;
    double total = 0.0;
    for (std::size_t m = 0; m < M; ++m) total += g.weights.emplace_back(rng.uniform(0.1, 1.0));
    for (double& w : g.weights) w /= total;
    for (std::size_t k = 0; k < M * D; ++k) {
      g.means.push_back(rng.uniform(-2.0, 2.0));
      g.variances.push_back(rng.uniform(0.2, 2.0));
    }
    model.states.push_back(std::move(g));
  }
  return model;
}

inline signal::FeatureSequence random_frames(Rng& rng, std::size_t T, std::size_t D) {
  std::vector<std::vector<double>> frames(T, std::vector<double>(D));
  for (auto& f : frames)
    for (double& v : f) v = rng.normal(0.0, 1.5);
  return signal::FeatureSequence::from_frames(frames);
}

inline bool close_relative(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

struct EerOracle {
  double eer = 0.0;
  double threshold = 0.0;
};

// O(n^2) sweep: every distinct score is tried, rates counted from scratch.
// Selection: smallest |FAR - FRR|, then smallest FAR + FRR, then lowest threshold,
// all compared on the common denominator n_gen * n_imp.
inline EerOracle brute_force_eer(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  std::vector<double> candidates = genuine;
  candidates.insert(candidates.end(), impostor.begin(), impostor.end());
  const auto ng = static_cast<long long>(genuine.size()), ni = static_cast<long long>(impostor.size());
  bool have = false;
  long long best_gap = 0, best_sum = 0, best_fa = 0, best_fr = 0;
  double best_th = 0.0;
  for (double th : candidates) {
    long long fa = 0, fr = 0;
    for (double s : impostor) fa += s >= th;
    for (double s : genuine) fr += s < th;
    const long long gap = std::llabs(fa * ng - fr * ni), sum = fa * ng + fr * ni;
    const bool better = !have || gap < best_gap || (gap == best_gap && sum < best_sum) ||
                        (gap == best_gap && sum == best_sum && th < best_th);
    if (better) {
      have = true;
      best_gap = gap;
      best_sum = sum;
      best_fa = fa;
      best_fr = fr;
      best_th = th;
    }
  }
  return {(static_cast<double>(best_fa) / static_cast<double>(ni) +
           static_cast<double>(best_fr) / static_cast<double>(ng)) / 2.0,
          best_th};
}

// Standard normal quantile by bisection on 0.5 * erfc(-z / sqrt 2).
inline double probit_by_bisection(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::numbers::sqrt2) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Rigid motion of a real-valued trajectory about the origin.
inline signal::PenTrajectory move_rigidly(const signal::PenTrajectory& traj, double dx, double dy, double phi) {
  signal::PenTrajectory out = traj;
  const double c = std::cos(phi), s = std::sin(phi);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out.x[i] = c * traj.x[i] - s * traj.y[i] + dx;
    out.y[i] = s * traj.x[i] + c * traj.y[i] + dy;
  }
  return out;
}

// Unique scratch directory removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("sigverify-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace sigverify::testing
