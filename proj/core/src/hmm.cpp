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

#include "sigverify/hmm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "sigverify/error.hpp"
#include "sigverify/random.hpp"

namespace sigverify::hmm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Components with less total occupancy than this keep their parameters.
constexpr double kMinOccupancy = 1e-8;

void check_sequences(std::span<const FeatureSequence> seqs, std::size_t dim) {
  if (seqs.empty()) throw Error(ErrorCode::EmptyEnrollment, "no training sequences");
  for (const auto& s : seqs) {
    if (s.empty()) throw Error(ErrorCode::EmptyEnrollment, "empty training sequence");
    if (s.dim() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "sequence dimension " + std::to_string(s.dim()) +
                                                    " != " + std::to_string(dim));
    }
  }
}

std::vector<double> pooled_variance(std::span<const FeatureSequence> seqs, std::size_t dim) {
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  std::size_t total = 0;
  for (const auto& s : seqs) {
    for (std::size_t n = 0; n < s.n_samples(); ++n) {
      for (std::size_t d = 0; d < dim; ++d) mean[d] += s.at(n, d);
    }
    total += s.n_samples();
  }
  for (auto& m : mean) m /= static_cast<double>(total);
  for (const auto& s : seqs) {
    for (std::size_t n = 0; n < s.n_samples(); ++n) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double e = s.at(n, d) - mean[d];
        var[d] += e * e;
      }
    }
  }
  for (auto& v : var) v /= static_cast<double>(total);
  return var;
}

double squared_distance(std::span<const double> a, const double* b) {
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double e = a[d] - b[d];
    sum += e * e;
  }
  return sum;
}

// Seeded k-means++ followed by Lloyd iterations; returns one mixture.
GaussianMixture fit_mixture(const std::vector<std::span<const double>>& points, std::size_t k,
                            std::size_t dim, const std::vector<double>& floor, Rng& rng,
                            std::size_t iterations) {
  const std::size_t n = points.size();
  GaussianMixture mix;
  mix.weights.assign(k, 0.0);
  mix.means.assign(k * dim, 0.0);
  mix.variances.assign(k * dim, 0.0);

  auto set_center = [&](std::size_t c, std::span<const double> p) {
    std::copy(p.begin(), p.end(), mix.means.begin() + static_cast<std::ptrdiff_t>(c * dim));
  };

  set_center(0, points[rng.below(n)]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], &mix.means[(c - 1) * dim]));
      total += nearest[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = rng.below(n);
    }
    set_center(c, points[chosen]);
  }

  std::vector<std::size_t> assign(n, 0);
  std::vector<double> counts(k, 0.0);
  for (std::size_t it = 0; it <= iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], &mix.means[c * dim]);
        if (d < best) {
          best = d;
          assign[i] = c;
        }
      }
    }
    if (it == iterations) break;
    std::vector<double> sums(k * dim, 0.0);
    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[assign[i]] += 1.0;
      for (std::size_t d = 0; d < dim; ++d) sums[assign[i] * dim + d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0.0) continue;  // empty cluster keeps its center
      for (std::size_t d = 0; d < dim; ++d) mix.means[c * dim + d] = sums[c * dim + d] / counts[c];
    }
  }

  std::fill(counts.begin(), counts.end(), 0.0);
  std::vector<double> sums(k * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    counts[assign[i]] += 1.0;
    for (std::size_t d = 0; d < dim; ++d) sums[assign[i] * dim + d] += points[i][d];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0.0) {
      for (std::size_t d = 0; d < dim; ++d) mix.means[c * dim + d] = sums[c * dim + d] / counts[c];
    }
  }
  std::vector<double> sq(k * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = assign[i];
    for (std::size_t d = 0; d < dim; ++d) {
      const double e = points[i][d] - mix.means[c * dim + d];
      sq[c * dim + d] += e * e;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    mix.weights[c] = counts[c] / static_cast<double>(n);
    for (std::size_t d = 0; d < dim; ++d) {
      const double v = counts[c] > 0.0 ? sq[c * dim + d] / counts[c] : 0.0;
      mix.variances[c * dim + d] = std::max(v, floor[d]);
    }
  }
  return mix;
}

// Forward-backward statistics accumulated over all training sequences.
struct Accumulators {
  Accumulators(std::size_t s, std::size_t m, std::size_t d)
      : occupancy(s * m, 0.0), first(s * m * d, 0.0), second(s * m * d, 0.0), xi(s * s, 0.0) {}
  std::vector<double> occupancy;  // states x mixtures
  std::vector<double> first;      // states x mixtures x dim
  std::vector<double> second;
  std::vector<double> xi;  // states x states
};

// Returns log p(seq | model) and adds the sequence's sufficient statistics to acc.
double accumulate(const SignatureModel& model, const EmissionScorer& scorer,
                  const FeatureSequence& seq, Accumulators& acc) {
  const std::size_t T = seq.n_samples(), S = model.n_states, M = model.n_mixtures, D = model.dim;
  std::vector<double> comp(T * S * M), logb(T * S), alpha(T * S), beta(T * S);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      logb[t * S + s] = scorer.log_density(s, seq.frame(t), {comp.data() + (t * S + s) * M, M});
    }
  }

  std::vector<double> terms(S);
  for (std::size_t s = 0; s < S; ++s) alpha[s] = model.log_initial[s] + logb[s];
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < S; ++j) {
      for (std::size_t i = 0; i < S; ++i) terms[i] = alpha[(t - 1) * S + i] + model.log_transition(i, j);
      alpha[t * S + j] = log_sum_exp(terms) + logb[t * S + j];
    }
  }
  const double log_p = log_sum_exp({alpha.data() + (T - 1) * S, S});
  if (!std::isfinite(log_p)) return log_p;

  for (std::size_t s = 0; s < S; ++s) beta[(T - 1) * S + s] = 0.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < S; ++i) {
      for (std::size_t j = 0; j < S; ++j) {
        terms[j] = model.log_transition(i, j) + logb[(t + 1) * S + j] + beta[(t + 1) * S + j];
      }
      beta[t * S + i] = log_sum_exp(terms);
    }
  }

  for (std::size_t t = 0; t < T; ++t) {
    const auto frame = seq.frame(t);
    for (std::size_t s = 0; s < S; ++s) {
      const double log_gamma = alpha[t * S + s] + beta[t * S + s] - log_p;
      if (log_gamma == kNegInf) continue;
      const double* c = comp.data() + (t * S + s) * M;
      for (std::size_t m = 0; m < M; ++m) {
        const double post = std::exp(log_gamma + c[m] - logb[t * S + s]);
        if (post == 0.0) continue;
        acc.occupancy[s * M + m] += post;
        double* f = acc.first.data() + (s * M + m) * D;
        double* q = acc.second.data() + (s * M + m) * D;
        for (std::size_t d = 0; d < D; ++d) {
          f[d] += post * frame[d];
          q[d] += post * frame[d] * frame[d];
        }
      }
    }
    if (t + 1 < T) {
      for (std::size_t i = 0; i < S; ++i) {
        for (std::size_t j = 0; j < S; ++j) {
          const double la = model.log_transition(i, j);
          if (la == kNegInf) continue;
          acc.xi[i * S + j] += std::exp(alpha[t * S + i] + la + logb[(t + 1) * S + j] +
                                        beta[(t + 1) * S + j] - log_p);
        }
      }
    }
  }
  return log_p;
}

void reestimate(SignatureModel& model, const Accumulators& acc) {
  const std::size_t S = model.n_states, M = model.n_mixtures, D = model.dim;
  const auto& floor = model.info.variance_floor;

  for (std::size_t i = 0; i < S; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < S; ++j) row += acc.xi[i * S + j];
    if (!(row > 0.0)) continue;
    for (std::size_t j = 0; j < S; ++j) {
      if (model.log_transition(i, j) == kNegInf) continue;
      model.log_transitions[i * S + j] = std::log(acc.xi[i * S + j] / row);
    }
  }

  for (std::size_t s = 0; s < S; ++s) {
    GaussianMixture& mix = model.states[s];
    double total = 0.0;
    for (std::size_t m = 0; m < M; ++m) total += acc.occupancy[s * M + m];
    if (!(total > 0.0)) continue;
    for (std::size_t m = 0; m < M; ++m) {
      const double occ = acc.occupancy[s * M + m];
      mix.weights[m] = occ / total;
      if (occ < kMinOccupancy) continue;
      for (std::size_t d = 0; d < D; ++d) {
        const double mean = acc.first[(s * M + m) * D + d] / occ;
        const double var = acc.second[(s * M + m) * D + d] / occ - mean * mean;
        mix.means[m * D + d] = mean;
        mix.variances[m * D + d] = std::max(var, floor[d]);
      }
    }
  }
}

}  // namespace

std::size_t effective_mixtures(std::size_t total_frames, std::size_t n_states,
                               std::size_t requested) {
  std::size_t m = std::max<std::size_t>(requested, 1);
  while (m > 1 && total_frames < 4 * n_states * m) m /= 2;
  return m;
}

double log_sum_exp(std::span<const double> v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

void SignatureModel::check_invariants(double tolerance) const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::SchemaViolation, what); };
  if (n_states == 0 || n_mixtures == 0 || dim == 0) fail("empty model dimensions");
  if (log_initial.size() != n_states) fail("initial distribution size");
  if (log_transitions.size() != n_states * n_states) fail("transition matrix size");
  if (states.size() != n_states) fail("state count");
  if (info.variance_floor.size() != dim) fail("variance floor size");
  if (log_initial[0] != 0.0) fail("chain must start in state 0");
  for (std::size_t s = 1; s < n_states; ++s) {
    if (log_initial[s] != kNegInf) fail("chain must start in state 0");
  }
  for (std::size_t i = 0; i < n_states; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n_states; ++j) {
      const double la = log_transition(i, j);
      if (j != i && j != i + 1 && la != kNegInf) fail("transition skips or goes backwards");
      if (std::isnan(la) || la > 0.0) fail("invalid transition probability");
      row += std::exp(la);
    }
    if (std::abs(row - 1.0) > tolerance) fail("transition row " + std::to_string(i) + " not stochastic");
  }
  for (const auto& floor_d : info.variance_floor) {
    if (!(floor_d > 0.0)) fail("variance floor must be positive");
  }
  for (const auto& mix : states) {
    if (mix.weights.size() != n_mixtures || mix.means.size() != n_mixtures * dim ||
        mix.variances.size() != n_mixtures * dim) {
      fail("mixture parameter sizes");
    }
    double total = 0.0;
    for (double w : mix.weights) {
      if (!(w >= 0.0)) fail("negative mixture weight");
      total += w;
    }
    if (std::abs(total - 1.0) > tolerance) fail("mixture weights not normalized");
    for (double mu : mix.means) {
      if (!std::isfinite(mu)) fail("non-finite mean");
    }
    for (std::size_t k = 0; k < mix.variances.size(); ++k) {
      const double v = mix.variances[k];
      if (!std::isfinite(v) || v < info.variance_floor[k % dim]) fail("variance below floor");
    }
  }
}

EmissionScorer::EmissionScorer(const SignatureModel& model)
    : n_states_(model.n_states), n_mixtures_(model.n_mixtures), dim_(model.dim) {
  const std::size_t S = n_states_, M = n_mixtures_, D = dim_;
  log_const_.resize(S * M);
  means_.resize(S * M * D);
  inv_var_.resize(S * M * D);
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t s = 0; s < S; ++s) {
    const auto& mix = model.states[s];
    for (std::size_t m = 0; m < M; ++m) {
      double log_det = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        const double v = mix.variances[m * D + d];
        log_det += std::log(v);
        means_[(s * M + m) * D + d] = mix.means[m * D + d];
        inv_var_[(s * M + m) * D + d] = 1.0 / v;
      }
      const double w = mix.weights[m];
      log_const_[s * M + m] =
          (w > 0.0 ? std::log(w) : kNegInf) - 0.5 * (static_cast<double>(D) * log_two_pi + log_det);
    }
  }
}

double EmissionScorer::log_density(std::size_t state, std::span<const double> frame,
                                   std::span<double> components) const {
  const std::size_t M = n_mixtures_, D = dim_;
  double local[64];
  std::vector<double> heap;
  double* out = components.empty() ? (M <= 64 ? local : (heap.resize(M), heap.data()))
                                   : components.data();
  double mx = kNegInf;
  for (std::size_t m = 0; m < M; ++m) {
    const double c = log_const_[state * M + m];
    if (c == kNegInf) {
      out[m] = kNegInf;
      continue;
    }
    const double* mu = means_.data() + (state * M + m) * D;
    const double* iv = inv_var_.data() + (state * M + m) * D;
    double q = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double e = frame[d] - mu[d];
      q += e * e * iv[d];
    }
    out[m] = c - 0.5 * q;
    mx = std::max(mx, out[m]);
  }
  if (mx == kNegInf) return kNegInf;
  double sum = 0.0;
  for (std::size_t m = 0; m < M; ++m) sum += std::exp(out[m] - mx);
  return mx + std::log(sum);
}

SignatureModel init_model(std::span<const FeatureSequence> seqs, std::size_t n_states,
                          std::size_t n_mixtures, const TrainConfig& config) {
  if (seqs.empty()) throw Error(ErrorCode::EmptyEnrollment, "no enrollment sequences");
  if (n_states == 0 || n_mixtures == 0) {
    throw Error(ErrorCode::InvalidArgument, "n_states and n_mixtures must be positive");
  }
  const std::size_t dim = seqs.front().dim();
  check_sequences(seqs, dim);

  std::size_t total_frames = 0;
  for (const auto& s : seqs) total_frames += s.n_samples();

  SignatureModel model;
  model.n_states = n_states;
  model.dim = dim;
  model.n_mixtures = effective_mixtures(total_frames, n_states, n_mixtures);
  model.info.requested_mixtures = n_mixtures;

  const std::vector<double> global_var = pooled_variance(seqs, dim);
  model.info.variance_floor.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    // A constant dimension has no scale of its own; fall back to unit variance.
    const double scale = global_var[d] > 1e-12 ? global_var[d] : 1.0;
    model.info.variance_floor[d] = config.variance_floor_factor * scale;
  }

  model.log_initial.assign(n_states, kNegInf);
  model.log_initial[0] = 0.0;
  model.log_transitions.assign(n_states * n_states, kNegInf);
  for (std::size_t i = 0; i < n_states; ++i) {
    if (i + 1 < n_states) {
      model.log_transitions[i * n_states + i] = std::log(0.5);
      model.log_transitions[i * n_states + i + 1] = std::log(0.5);
    } else {
      model.log_transitions[i * n_states + i] = 0.0;
    }
  }

  Rng rng(config.seed);
  for (std::size_t s = 0; s < n_states; ++s) {
    std::vector<std::span<const double>> points;
    for (const auto& seq : seqs) {
      const std::size_t T = seq.n_samples();
      const std::size_t begin = s * T / n_states, end = (s + 1) * T / n_states;
      for (std::size_t t = begin; t < end; ++t) points.push_back(seq.frame(t));
    }
    if (points.empty()) {
      for (const auto& seq : seqs)
        for (std::size_t t = 0; t < seq.n_samples(); ++t) points.push_back(seq.frame(t));
    }
    model.states.push_back(fit_mixture(points, model.n_mixtures, dim, model.info.variance_floor,
                                       rng, config.kmeans_iterations));
  }
  return model;
}

TrainResult baum_welch(SignatureModel model, std::span<const FeatureSequence> seqs,
                       const TrainConfig& config) {
  if (config.max_iterations < 1 || !(config.loglik_relative_tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "max_iterations >= 1 and tolerance > 0 required");
  }
  check_sequences(seqs, model.dim);
  if (model.info.variance_floor.size() != model.dim) {
    const auto var = pooled_variance(seqs, model.dim);
    model.info.variance_floor.resize(model.dim);
    for (std::size_t d = 0; d < model.dim; ++d) {
      const double scale = var[d] > 1e-12 ? var[d] : 1.0;
      model.info.variance_floor[d] = config.variance_floor_factor * scale;
    }
  }
  model.check_invariants(1e-9);

  TrainResult result;
  for (std::size_t it = 0;; ++it) {
    Accumulators acc(model.n_states, model.n_mixtures, model.dim);
    const EmissionScorer scorer(model);
    double total = 0.0;
    for (const auto& seq : seqs) total += accumulate(model, scorer, seq, acc);
    if (!std::isfinite(total)) {
      throw Error(ErrorCode::NumericalFailure, "non-finite training log-likelihood at iteration " +
                                                   std::to_string(it));
    }
    const bool converged =
        !result.loglik_trace.empty() &&
        total - result.loglik_trace.back() <
            config.loglik_relative_tolerance * std::abs(result.loglik_trace.back());
    result.loglik_trace.push_back(total);
    if (converged || it == config.max_iterations) break;
    reestimate(model, acc);
    model.info.iterations = it + 1;
  }
  model.info.final_loglik = result.loglik_trace.back();
  result.model = std::move(model);
  return result;
}

TrainResult train(std::span<const FeatureSequence> seqs, const Topology& topology,
                  const TrainConfig& config) {
  return baum_welch(init_model(seqs, topology.n_states, topology.n_mixtures, config), seqs, config);
}

double forward_loglik(const SignatureModel& model, const FeatureSequence& seq) {
  if (seq.dim() != model.dim) throw Error(ErrorCode::DimensionMismatch, "sequence vs model dim");
  if (seq.empty()) throw Error(ErrorCode::TooShort, "empty sequence");
  const std::size_t S = model.n_states;
  const EmissionScorer scorer(model);
  std::vector<double> alpha(S), next(S), terms(S);
  for (std::size_t s = 0; s < S; ++s) alpha[s] = model.log_initial[s] + scorer.log_density(s, seq.frame(0));
  for (std::size_t t = 1; t < seq.n_samples(); ++t) {
    for (std::size_t j = 0; j < S; ++j) {
      for (std::size_t i = 0; i < S; ++i) terms[i] = alpha[i] + model.log_transition(i, j);
      const double reach = log_sum_exp(terms);
      next[j] = reach == kNegInf ? kNegInf : reach + scorer.log_density(j, seq.frame(t));
    }
    alpha.swap(next);
  }
  return log_sum_exp(alpha);
}

ViterbiResult viterbi(const SignatureModel& model, const FeatureSequence& seq) {
  if (seq.dim() != model.dim) throw Error(ErrorCode::DimensionMismatch, "sequence vs model dim");
  if (seq.empty()) throw Error(ErrorCode::TooShort, "empty sequence");
  const std::size_t S = model.n_states, T = seq.n_samples();
  const EmissionScorer scorer(model);
  std::vector<double> delta(S), next(S);
  std::vector<std::size_t> back(T * S, 0);
  for (std::size_t s = 0; s < S; ++s) {
    delta[s] = model.log_initial[s] == kNegInf
                   ? kNegInf
                   : model.log_initial[s] + scorer.log_density(s, seq.frame(0));
  }
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < S; ++j) {
      double best = kNegInf;
      std::size_t arg = 0;
      bool found = false;
      for (std::size_t i = 0; i < S; ++i) {
        const double cand = delta[i] + model.log_transition(i, j);
        if (cand == kNegInf) continue;
        if (!found || cand > best) {
          best = cand;
          arg = i;
          found = true;
        }
      }
      back[t * S + j] = arg;
      next[j] = found ? best + scorer.log_density(j, seq.frame(t)) : kNegInf;
    }
    delta.swap(next);
  }
  ViterbiResult result;
  std::size_t last = 0;
  result.log_prob = delta[0];
  for (std::size_t s = 1; s < S; ++s) {
    if (delta[s] > result.log_prob) {
      result.log_prob = delta[s];
      last = s;
    }
  }
  result.path.resize(T);
  result.path[T - 1] = last;
  for (std::size_t t = T - 1; t > 0; --t) result.path[t - 1] = back[t * S + result.path[t]];
  return result;
}

double score(const SignatureModel& model, const FeatureSequence& seq) {
  return viterbi(model, seq).log_prob / static_cast<double>(seq.n_samples());
}

namespace {

void put_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void put_row(std::string& out, std::string_view key, std::span<const double> values) {
  out += key;
  for (double v : values) {
    out += ' ';
    put_number(out, v);
  }
  out += '\n';
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<std::string_view> line() {
    while (pos_ < text_.size()) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      std::string_view l = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      std::vector<std::string_view> tokens;
      std::size_t i = 0;
      while (i < l.size()) {
        while (i < l.size() && (l[i] == ' ' || l[i] == '\t' || l[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < l.size() && l[j] != ' ' && l[j] != '\t' && l[j] != '\r') ++j;
        if (j > i) tokens.push_back(l.substr(i, j - i));
        i = j;
      }
      if (!tokens.empty()) return tokens;
    }
    throw Error(ErrorCode::SchemaViolation, "unexpected end of model data");
  }

  std::vector<std::string_view> expect(std::string_view key, std::size_t n_values) {
    auto tokens = line();
    if (tokens.front() != key || tokens.size() != n_values + 1) {
      throw Error(ErrorCode::SchemaViolation, "expected '" + std::string(key) + "' with " +
                                                  std::to_string(n_values) + " values");
    }
    tokens.erase(tokens.begin());
    return tokens;
  }

  static double number(std::string_view tok) {
    double v = 0.0;
    if (tok == "-inf") return kNegInf;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || std::isnan(v)) {
      throw Error(ErrorCode::SchemaViolation, "bad number '" + std::string(tok) + "'");
    }
    return v;
  }

  static std::size_t count(std::string_view tok) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw Error(ErrorCode::SchemaViolation, "bad count '" + std::string(tok) + "'");
    }
    return v;
  }

  std::size_t scalar_count(std::string_view key) { return count(expect(key, 1)[0]); }

  std::vector<double> numbers(std::string_view key, std::size_t n) {
    std::vector<double> out;
    for (auto tok : expect(key, n)) out.push_back(number(tok));
    return out;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kMagic = "sigverify-hmm";
constexpr std::size_t kFormatVersion = 1;

}  // namespace

std::string serialize_model(const SignatureModel& model) {
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(kFormatVersion) + "\n";
  out += "n_states " + std::to_string(model.n_states) + "\n";
  out += "n_mixtures " + std::to_string(model.n_mixtures) + "\n";
  out += "dim " + std::to_string(model.dim) + "\n";
  out += "requested_mixtures " + std::to_string(model.info.requested_mixtures) + "\n";
  out += "iterations " + std::to_string(model.info.iterations) + "\n";
  out += "final_loglik ";
  put_number(out, model.info.final_loglik);
  out += '\n';
  put_row(out, "variance_floor", model.info.variance_floor);
  put_row(out, "log_initial", model.log_initial);
  put_row(out, "log_transitions", model.log_transitions);
  const std::size_t D = model.dim;
  for (std::size_t s = 0; s < model.states.size(); ++s) {
    const auto& mix = model.states[s];
    out += "state " + std::to_string(s) + "\n";
    put_row(out, "weights", mix.weights);
    for (std::size_t m = 0; m < model.n_mixtures; ++m) {
      put_row(out, "mean " + std::to_string(m), {mix.means.data() + m * D, D});
    }
    for (std::size_t m = 0; m < model.n_mixtures; ++m) {
      put_row(out, "var " + std::to_string(m), {mix.variances.data() + m * D, D});
    }
  }
  out += "end\n";
  return out;
}

SignatureModel deserialize_model(std::string_view text) {
  Reader in(text);
  {
    const auto header = in.line();
    if (header.size() != 2 || header[0] != kMagic) {
      throw Error(ErrorCode::SchemaViolation, "not a sigverify model");
    }
    if (Reader::count(header[1]) != kFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "model format version " + std::string(header[1]) +
                                                  ", expected " + std::to_string(kFormatVersion));
    }
  }
  SignatureModel model;
  model.n_states = in.scalar_count("n_states");
  model.n_mixtures = in.scalar_count("n_mixtures");
  model.dim = in.scalar_count("dim");
  if (model.n_states == 0 || model.n_mixtures == 0 || model.dim == 0 || model.n_states > 1000 ||
      model.n_mixtures > 100000 || model.dim > 10000) {
    throw Error(ErrorCode::SchemaViolation, "implausible model dimensions");
  }
  model.info.requested_mixtures = in.scalar_count("requested_mixtures");
  model.info.iterations = in.scalar_count("iterations");
  model.info.final_loglik = in.numbers("final_loglik", 1)[0];
  model.info.variance_floor = in.numbers("variance_floor", model.dim);
  model.log_initial = in.numbers("log_initial", model.n_states);
  model.log_transitions = in.numbers("log_transitions", model.n_states * model.n_states);
  const std::size_t D = model.dim, M = model.n_mixtures;
  for (std::size_t s = 0; s < model.n_states; ++s) {
    if (in.scalar_count("state") != s) throw Error(ErrorCode::SchemaViolation, "state order");
    GaussianMixture mix;
    mix.weights = in.numbers("weights", M);
    for (const char* key : {"mean", "var"}) {
      auto& target = std::string_view(key) == "mean" ? mix.means : mix.variances;
      target.reserve(M * D);
      for (std::size_t m = 0; m < M; ++m) {
        auto tokens = in.expect(key, D + 1);
        if (Reader::count(tokens[0]) != m) throw Error(ErrorCode::SchemaViolation, "mixture order");
        for (std::size_t d = 0; d < D; ++d) target.push_back(Reader::number(tokens[d + 1]));
      }
    }
    model.states.push_back(std::move(mix));
  }
  if (in.line().front() != "end") throw Error(ErrorCode::SchemaViolation, "missing end marker");
  model.check_invariants(1e-9);
  return model;
}

SignatureModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open model " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

void save_model(const std::string& path, const SignatureModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write model " + path);
  const std::string text = serialize_model(model);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

}  // namespace sigverify::hmm
