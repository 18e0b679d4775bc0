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

#include "sigverify/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "parallel.hpp"
#include "sigverify/error.hpp"

namespace fs = std::filesystem;

namespace sigverify::eval {
namespace {

constexpr std::size_t kSession1Size = 5, kSession2Size = 5;
constexpr std::size_t kTripleCount = 3, kPairCount = 4;

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const fs::path& test_path(const io::DatasetIndex& index, const TestRef& ref) {
  const auto& user = index.users[ref.owner];
  return ref.forgery ? user.forgeries[ref.file] : user.sessions[2].genuine[ref.file];
}

std::string relative_name(const io::DatasetIndex& index, const fs::path& p) {
  return p.lexically_relative(index.root).generic_string();
}

}  // namespace

std::string_view to_string(TrialLabel label) {
  switch (label) {
    case TrialLabel::Genuine: return "genuine";
    case TrialLabel::Skilled: return "skilled";
    case TrialLabel::Random: return "random";
  }
  return "unknown";
}

std::string EnrollmentCombination::label() const {
  return "s1:" + std::to_string(triple_start + 1) + "-" + std::to_string(triple_start + 3) +
         "/s2:" + std::to_string(pair_start + 1) + "-" + std::to_string(pair_start + 2);
}

std::vector<EnrollmentCombination> enumerate_combinations(const io::UserEntry& user,
                                                          std::size_t user_index) {
  if (user.sessions.size() < 2 || user.sessions[0].genuine.size() < kSession1Size ||
      user.sessions[1].genuine.size() < kSession2Size) {
    throw Error(ErrorCode::InsufficientEnrollment,
                user.id + " needs 5 signatures in each of sessions 1 and 2");
  }
  std::vector<EnrollmentCombination> out;
  for (std::size_t triple = 0; triple < kTripleCount; ++triple) {
    for (std::size_t pair = 0; pair < kPairCount; ++pair) out.push_back({user_index, triple, pair});
  }
  return out;
}

std::size_t TrialSet::count(TrialLabel label) const {
  return static_cast<std::size_t>(std::count_if(
      trials.begin(), trials.end(), [label](const Trial& t) { return t.label == label; }));
}

TrialSet build_trials(const io::DatasetIndex& index) {
  for (const auto& user : index.users) {
    if (!user.conformant) {
      throw Error(ErrorCode::NonConformantDataset, user.id + " is not 3 sessions x 5 + 15 forgeries");
    }
  }
  TrialSet set;
  const std::size_t n_users = index.users.size();
  for (std::size_t u = 0; u < n_users; ++u) {
    for (const auto& c : enumerate_combinations(index.users[u], u)) set.models.push_back(c);
  }
  set.trials.reserve(set.models.size() * (5 + 15 + 15 * (n_users ? n_users - 1 : 0)));
  for (std::size_t m = 0; m < set.models.size(); ++m) {
    const std::size_t u = set.models[m].user;
    for (std::size_t g = 0; g < 5; ++g) set.trials.push_back({m, {u, false, g}, TrialLabel::Genuine});
    for (std::size_t f = 0; f < 15; ++f) set.trials.push_back({m, {u, true, f}, TrialLabel::Skilled});
    for (std::size_t other = 0; other < n_users; ++other) {
      if (other == u) continue;
      for (std::size_t f = 0; f < 15; ++f) {
        set.trials.push_back({m, {other, true, f}, TrialLabel::Random});
      }
    }
  }
  return set;
}

std::vector<double> ScoreSet::scores_for(TrialLabel label) const {
  std::vector<double> out;
  for (std::size_t i = 0; i < trials.trials.size(); ++i) {
    if (trials.trials[i].label == label && scores[i]) out.push_back(*scores[i]);
  }
  return out;
}

std::uint64_t hash_config(const EvalConfig& config) {
  Fnv1a h;
  const auto& s = config.signal;
  const auto& t = config.train;
  h.add("rate=" + format_double(s.rate_hz) + ";pressure=" + (s.use_pressure ? "1" : "0") +
        ";rmin=" + format_double(s.min_radius) + ";rmax=" + format_double(s.max_radius) +
        ";guard=" + format_double(s.whiten_std_guard) +
        ";states=" + std::to_string(config.topology.n_states) +
        ";mixtures=" + std::to_string(config.topology.n_mixtures) +
        ";iters=" + std::to_string(t.max_iterations) +
        ";tol=" + format_double(t.loglik_relative_tolerance) +
        ";floor=" + format_double(t.variance_floor_factor) + ";seed=" + std::to_string(t.seed) +
        ";kmeans=" + std::to_string(t.kmeans_iterations));
  return h.h;
}

std::uint64_t hash_dataset(const io::DatasetIndex& index) {
  Fnv1a h;
  auto add_file = [&](const fs::path& p) {
    h.add(relative_name(index, p));
    h.add(std::string_view("\0", 1));
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    h.add(buf.str());
  };
  for (const auto& user : index.users) {
    for (const auto& session : user.sessions)
      for (const auto& f : session.genuine) add_file(f);
    for (const auto& f : user.forgeries) add_file(f);
  }
  return h.h;
}

ScoreSet run_protocol(const io::DatasetIndex& index, const EvalConfig& config) {
  ScoreSet result;
  result.index = index;
  result.trials = build_trials(index);
  result.use_pressure = config.signal.use_pressure;
  result.config_hash = hash_config(config);
  result.dataset_hash = hash_dataset(index);

  // Feature extraction, once per file.
  struct FileJob {
    fs::path path;
    std::optional<signal::FeatureSequence> features;
    std::string error;
  };
  std::vector<FileJob> files;
  std::map<fs::path, std::size_t> file_slot;
  auto slot_of = [&](const fs::path& p) {
    auto [it, inserted] = file_slot.emplace(p, files.size());
    if (inserted) files.push_back({p, std::nullopt, {}});
    return it->second;
  };
  for (const auto& user : index.users) {
    for (const auto& session : user.sessions)
      for (const auto& f : session.genuine) slot_of(f);
    for (const auto& f : user.forgeries) slot_of(f);
  }
  detail::parallel_for(files.size(), config.threads, [&](std::size_t i) {
    try {
      files[i].features = signal::pipeline(io::read_svc_file(files[i].path), config.signal);
    } catch (const std::exception& e) {
      files[i].error = e.what();
    }
  });

  // One model per enrollment combination.
  const auto& models_spec = result.trials.models;
  std::vector<std::optional<hmm::SignatureModel>> models(models_spec.size());
  std::vector<std::string> model_errors(models_spec.size());
  detail::parallel_for(models_spec.size(), config.threads, [&](std::size_t m) {
    const auto& c = models_spec[m];
    const auto& user = index.users[c.user];
    std::vector<signal::FeatureSequence> enroll;
    try {
      std::vector<fs::path> paths;
      for (std::size_t k = 0; k < 3; ++k) paths.push_back(user.sessions[0].genuine[c.triple_start + k]);
      for (std::size_t k = 0; k < 2; ++k) paths.push_back(user.sessions[1].genuine[c.pair_start + k]);
      for (const auto& p : paths) {
        const auto& job = files[file_slot.at(p)];
        if (!job.features) throw Error(ErrorCode::ParseError, relative_name(index, p) + ": " + job.error);
        enroll.push_back(*job.features);
      }
      models[m] = hmm::train(enroll, config.topology, config.train).model;
    } catch (const std::exception& e) {
      model_errors[m] = e.what();
    }
  });

  const auto& trials = result.trials.trials;
  result.scores.assign(trials.size(), std::nullopt);
  std::vector<std::string> trial_errors(trials.size());
  detail::parallel_for(trials.size(), config.threads, [&](std::size_t i) {
    const Trial& trial = trials[i];
    const auto& model = models[trial.model];
    if (!model) {
      trial_errors[i] = "model unavailable: " + model_errors[trial.model];
      return;
    }
    const auto& job = files[file_slot.at(test_path(index, trial.test))];
    if (!job.features) {
      trial_errors[i] = "test features unavailable: " + job.error;
      return;
    }
    try {
      const double t = hmm::score(*model, *job.features);
      if (!std::isfinite(t)) throw Error(ErrorCode::NumericalFailure, "non-finite score");
      result.scores[i] = t;
    } catch (const std::exception& e) {
      trial_errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!trial_errors[i].empty()) result.failures.push_back({i, trial_errors[i]});
  }
  return result;
}

EerResult compute_eer(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) {
    throw Error(ErrorCode::EmptyScoreList, "EER needs genuine and impostor scores");
  }
  std::vector<double> gen(genuine.begin(), genuine.end()), imp(impostor.begin(), impostor.end());
  for (double v : gen)
    if (std::isnan(v)) throw Error(ErrorCode::InvalidArgument, "NaN score");
  for (double v : imp)
    if (std::isnan(v)) throw Error(ErrorCode::InvalidArgument, "NaN score");
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> thresholds;
  thresholds.reserve(gen.size() + imp.size());
  std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const auto n_gen = static_cast<std::int64_t>(gen.size());
  const auto n_imp = static_cast<std::int64_t>(imp.size());
  std::size_t gi = 0, ii = 0;
  bool have = false;
  std::int64_t best_gap = 0, best_sum = 0, best_fa = 0, best_fr = 0;
  double best_threshold = 0.0;
  for (double th : thresholds) {
    while (gi < gen.size() && gen[gi] < th) ++gi;
    while (ii < imp.size() && imp[ii] < th) ++ii;
    const std::int64_t fr = static_cast<std::int64_t>(gi);         // genuine rejected
    const std::int64_t fa = n_imp - static_cast<std::int64_t>(ii);  // impostors accepted
    // Compare fa/n_imp and fr/n_gen exactly on the common denominator.
    const std::int64_t gap = std::abs(fa * n_gen - fr * n_imp);
    const std::int64_t sum = fa * n_gen + fr * n_imp;
    if (!have || gap < best_gap || (gap == best_gap && sum < best_sum)) {
      have = true;
      best_gap = gap;
      best_sum = sum;
      best_fa = fa;
      best_fr = fr;
      best_threshold = th;
    }
  }
  const double far = static_cast<double>(best_fa) / static_cast<double>(n_imp);
  const double frr = static_cast<double>(best_fr) / static_cast<double>(n_gen);
  return {(far + frr) / 2.0, best_threshold};
}

double probit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "probit argument outside (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425, p_high = 1.0 - p_low;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= p_high) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against the exact CDF.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

std::vector<double> det_grid(std::span<const double> genuine, std::span<const double> impostor,
                             std::size_t max_points) {
  std::vector<double> pooled(genuine.begin(), genuine.end());
  pooled.insert(pooled.end(), impostor.begin(), impostor.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
  if (max_points == 0 || pooled.size() <= max_points) return pooled;
  std::vector<double> grid;
  grid.reserve(max_points);
  for (std::size_t k = 0; k < max_points; ++k) {
    const std::size_t idx = max_points == 1 ? 0 : k * (pooled.size() - 1) / (max_points - 1);
    grid.push_back(pooled[idx]);
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<DetPoint> det_points(std::span<const double> genuine, std::span<const double> impostor,
                                 std::span<const double> grid) {
  if (genuine.empty() || impostor.empty()) {
    throw Error(ErrorCode::EmptyScoreList, "DET needs genuine and impostor scores");
  }
  std::vector<double> gen(genuine.begin(), genuine.end()), imp(impostor.begin(), impostor.end());
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> thresholds =
      grid.empty() ? det_grid(genuine, impostor, 0) : std::vector<double>(grid.begin(), grid.end());
  std::sort(thresholds.begin(), thresholds.end());

  const double n_gen = static_cast<double>(gen.size()), n_imp = static_cast<double>(imp.size());
  const auto clamp_rate = [](double rate, double n) {
    const double lo = 1.0 / (2.0 * n);
    return std::clamp(rate, lo, 1.0 - lo);
  };
  std::vector<DetPoint> points;
  points.reserve(thresholds.size());
  for (double th : thresholds) {
    const auto below_gen = std::lower_bound(gen.begin(), gen.end(), th) - gen.begin();
    const auto below_imp = std::lower_bound(imp.begin(), imp.end(), th) - imp.begin();
    DetPoint pt;
    pt.threshold = th;
    pt.frr = static_cast<double>(below_gen) / n_gen;
    pt.far = (n_imp - static_cast<double>(below_imp)) / n_imp;
    pt.probit_far = probit(clamp_rate(pt.far, n_imp));
    pt.probit_frr = probit(clamp_rate(pt.frr, n_gen));
    points.push_back(pt);
  }
  return points;
}

namespace {

constexpr std::size_t kDetCsvPoints = 2000;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::string scores_csv(const ScoreSet& run) {
  std::string out = "user,combination,test_file,label,t\n";
  const auto& trials = run.trials.trials;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& trial = trials[i];
    const auto& model = run.trials.models[trial.model];
    out += run.index.users[model.user].id;
    out += ',';
    out += model.label();
    out += ',';
    out += relative_name(run.index, test_path(run.index, trial.test));
    out += ',';
    out += to_string(trial.label);
    out += ',';
    out += run.scores[i] ? format_double(*run.scores[i]) : std::string("nan");
    out += '\n';
  }
  return out;
}

std::string det_csv(const ScoreSet& run, TrialLabel impostor_label) {
  const auto gen = run.scores_for(TrialLabel::Genuine);
  const auto imp = run.scores_for(impostor_label);
  std::string out = "threshold,far,frr,probit_far,probit_frr\n";
  if (gen.empty() || imp.empty()) return out;
  const auto grid = det_grid(gen, imp, kDetCsvPoints);
  for (const auto& pt : det_points(gen, imp, grid)) {
    out += format_double(pt.threshold) + ',' + format_double(pt.far) + ',' + format_double(pt.frr) +
           ',' + format_double(pt.probit_far) + ',' + format_double(pt.probit_frr) + '\n';
  }
  return out;
}

std::optional<EerResult> eer_for(const ScoreSet& run, TrialLabel impostor_label) {
  const auto gen = run.scores_for(TrialLabel::Genuine);
  const auto imp = run.scores_for(impostor_label);
  if (gen.empty() || imp.empty()) return std::nullopt;
  return compute_eer(gen, imp);
}

std::string percent_cell(const std::optional<EerResult>& r) {
  if (!r) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", 100.0 * r->eer);
  return buf;
}

}  // namespace

void report(std::span<const ScoreSet> runs, const fs::path& out_dir) {
  if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "report needs at least one run");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string());

  const ScoreSet* with_pressure = nullptr;
  const ScoreSet* without_pressure = nullptr;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const ScoreSet& run = runs[r];
    std::string suffix;
    if (r > 0) suffix = run.use_pressure ? "_pressure" : "_no_pressure";
    write_text(out_dir / ("scores" + suffix + ".csv"), scores_csv(run));
    write_text(out_dir / ("det_skilled" + suffix + ".csv"), det_csv(run, TrialLabel::Skilled));
    write_text(out_dir / ("det_random" + suffix + ".csv"), det_csv(run, TrialLabel::Random));
    if (run.use_pressure && !with_pressure) with_pressure = &run;
    if (!run.use_pressure && !without_pressure) without_pressure = &run;
    if (!run.failures.empty()) {
      std::string text;
      for (const auto& f : run.failures) text += std::to_string(f.trial) + ' ' + f.message + '\n';
      write_text(out_dir / ("failures" + suffix + ".txt"), text);
    }
  }

  auto cell = [](const ScoreSet* run, TrialLabel label) {
    return run ? eer_for(*run, label) : std::nullopt;
  };
  std::string text = "# equal error rate (%) by forgery type and pressure setting\n";
  text += "forgery pressure no_pressure\n";
  text += "skilled " + percent_cell(cell(with_pressure, TrialLabel::Skilled)) + ' ' +
          percent_cell(cell(without_pressure, TrialLabel::Skilled)) + '\n';
  text += "random " + percent_cell(cell(with_pressure, TrialLabel::Random)) + ' ' +
          percent_cell(cell(without_pressure, TrialLabel::Random)) + '\n';
  for (const ScoreSet* run : {with_pressure, without_pressure}) {
    if (!run) continue;
    text += std::string("\n[") + (run->use_pressure ? "pressure" : "no_pressure") + "]\n";
    for (TrialLabel label : {TrialLabel::Skilled, TrialLabel::Random}) {
      const auto r = eer_for(*run, label);
      const std::string name(to_string(label));
      text += name + "_eer " + (r ? format_double(r->eer) : "-") + '\n';
      text += name + "_threshold " + (r ? format_double(r->threshold) : "-") + '\n';
    }
    text += "genuine_trials " + std::to_string(run->trials.count(TrialLabel::Genuine)) + '\n';
    text += "skilled_trials " + std::to_string(run->trials.count(TrialLabel::Skilled)) + '\n';
    text += "random_trials " + std::to_string(run->trials.count(TrialLabel::Random)) + '\n';
    text += "failed_trials " + std::to_string(run->failures.size()) + '\n';
    text += "config_hash " + format_hex(run->config_hash) + '\n';
    text += "dataset_hash " + format_hex(run->dataset_hash) + '\n';
  }
  write_text(out_dir / "eer.txt", text);
}

}  // namespace sigverify::eval
