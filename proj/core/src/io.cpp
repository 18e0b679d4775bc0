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

#include "sigverify/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sigverify/error.hpp"

namespace fs = std::filesystem;

namespace sigverify::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool parse_real(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

// Integers may be written as "12" or "12.0"; anything non-integral is rejected.
bool parse_integer(std::string_view s, int& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec == std::errc() && ptr == end) return true;
  double d = 0.0;
  if (!parse_real(s, d) || d != std::floor(d) || std::abs(d) > 2e9) return false;
  out = static_cast<int>(d);
  return true;
}

std::string line_context(std::size_t line_no) {
  return "line " + std::to_string(line_no);
}

}  // namespace

double RawSignature::duration_ms() const {
  if (samples.size() < 2) return 0.0;
  return samples.back().t - samples.front().t;
}

double RawSignature::mean_period_ms() const {
  if (samples.size() < 2) return 0.0;
  return duration_ms() / static_cast<double>(samples.size() - 1);
}

void validate(const RawSignature& sig) {
  if (sig.samples.size() < 2) {
    throw Error(ErrorCode::MalformedHeader,
                "signature needs at least 2 samples, has " + std::to_string(sig.samples.size()));
  }
  for (std::size_t i = 0; i < sig.samples.size(); ++i) {
    const RawSample& s = sig.samples[i];
    if (s.pressure < 0 || s.pressure > 255) {
      throw Error(ErrorCode::PressureOutOfRange,
                  "sample " + std::to_string(i) + " pressure " + std::to_string(s.pressure));
    }
    if (s.button != 0 && s.button != 1) {
      throw Error(ErrorCode::InvalidValue, "sample " + std::to_string(i) + " button must be 0 or 1");
    }
    if (!std::isfinite(s.t) || s.t < 0.0) {
      throw Error(ErrorCode::InvalidValue, "sample " + std::to_string(i) + " has invalid time");
    }
    if (i > 0 && !(s.t > sig.samples[i - 1].t)) {
      throw Error(ErrorCode::NonMonotonicTime, "sample " + std::to_string(i) + " time not increasing");
    }
  }
}

RawSignature parse_svc(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    std::string_view line = trim(text.substr(pos, nl - pos));
    if (!line.empty()) lines.emplace_back(line_no, line);
    pos = nl + 1;
  }

  if (lines.empty()) throw Error(ErrorCode::MalformedHeader, "empty input");
  int declared = 0;
  {
    const std::string_view header = lines.front().second;
    const auto* end = header.data() + header.size();
    auto [ptr, ec] = std::from_chars(header.data(), end, declared);
    if (ec != std::errc() || ptr != end || declared < 0) {
      throw Error(ErrorCode::MalformedHeader, "first line must be a sample count");
    }
  }
  if (declared < 2) {
    throw Error(ErrorCode::MalformedHeader,
                "declared sample count " + std::to_string(declared) + " is below the minimum of 2");
  }
  if (lines.size() - 1 != static_cast<std::size_t>(declared)) {
    throw Error(ErrorCode::MalformedHeader, "header declares " + std::to_string(declared) +
                                                " samples but " + std::to_string(lines.size() - 1) +
                                                " lines are present");
  }

  RawSignature sig;
  sig.samples.reserve(static_cast<std::size_t>(declared));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [no, line] = lines[i];
    const auto fields = split_fields(line);
    if (fields.size() != 7) {
      throw Error(ErrorCode::FieldCount,
                  line_context(no) + " has " + std::to_string(fields.size()) + " fields, expected 7");
    }
    RawSample s;
    const bool ok = parse_integer(fields[0], s.x) && parse_integer(fields[1], s.y) &&
                    parse_real(fields[2], s.t) && parse_integer(fields[3], s.button) &&
                    parse_integer(fields[4], s.azimuth) && parse_integer(fields[5], s.altitude) &&
                    parse_integer(fields[6], s.pressure);
    if (!ok) throw Error(ErrorCode::InvalidValue, line_context(no) + " has a non-numeric field");
    if (s.pressure < 0 || s.pressure > 255) {
      throw Error(ErrorCode::PressureOutOfRange,
                  line_context(no) + " pressure " + std::to_string(s.pressure));
    }
    if (s.button != 0 && s.button != 1) {
      throw Error(ErrorCode::InvalidValue, line_context(no) + " button must be 0 or 1");
    }
    if (s.t < 0.0) throw Error(ErrorCode::InvalidValue, line_context(no) + " negative time");
    if (!sig.samples.empty() && !(s.t > sig.samples.back().t)) {
      throw Error(ErrorCode::NonMonotonicTime, line_context(no) + " time not increasing");
    }
    sig.samples.push_back(s);
  }
  return sig;
}

std::string write_svc(const RawSignature& sig) {
  validate(sig);
  std::string out;
  out.reserve(sig.samples.size() * 32 + 8);
  out += std::to_string(sig.samples.size());
  out += '\n';
  long long previous = -1;
  for (const RawSample& s : sig.samples) {
    const long long t = std::llround(s.t);
    if (t <= previous) {
      throw Error(ErrorCode::NonMonotonicTime,
                  "timestamps collide after rounding to integer milliseconds");
    }
    previous = t;
    out += std::to_string(s.x);
    out += ' ';
    out += std::to_string(s.y);
    out += ' ';
    out += std::to_string(t);
    out += ' ';
    out += std::to_string(s.button);
    out += ' ';
    out += std::to_string(s.azimuth);
    out += ' ';
    out += std::to_string(s.altitude);
    out += ' ';
    out += std::to_string(s.pressure);
    out += '\n';
  }
  return out;
}

RawSignature read_svc_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  RawSignature sig = parse_svc(buf.str());
  sig.source = path.string();
  return sig;
}

void write_svc_file(const fs::path& path, const RawSignature& sig) {
  const std::string text = write_svc(sig);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

SignatureStats signature_stats(const RawSignature& sig) {
  SignatureStats st;
  st.samples = sig.samples.size();
  st.duration_ms = sig.duration_ms();
  st.mean_period_ms = sig.mean_period_ms();
  st.pressure_histogram.assign(16, 0);
  if (sig.samples.empty()) return st;
  st.min_period_ms = std::numeric_limits<double>::infinity();
  st.max_period_ms = 0.0;
  for (std::size_t i = 1; i < sig.samples.size(); ++i) {
    const double gap = sig.samples[i].t - sig.samples[i - 1].t;
    st.min_period_ms = std::min(st.min_period_ms, gap);
    st.max_period_ms = std::max(st.max_period_ms, gap);
  }
  if (sig.samples.size() < 2) st.min_period_ms = 0.0;

  std::vector<std::size_t> counts(256, 0);
  st.pressure_min = 255;
  st.pressure_max = 0;
  double sum = 0.0;
  for (const auto& s : sig.samples) {
    const int p = std::clamp(s.pressure, 0, 255);
    st.pressure_histogram[static_cast<std::size_t>(p) / 16]++;
    if (s.button == 0) continue;
    ++st.pen_down;
    counts[static_cast<std::size_t>(p)]++;
    st.pressure_min = std::min(st.pressure_min, p);
    st.pressure_max = std::max(st.pressure_max, p);
    sum += p;
  }
  if (st.pen_down == 0) {
    st.pressure_min = st.pressure_max = 0;
    return st;
  }
  st.pressure_mean = sum / static_cast<double>(st.pen_down);
  std::size_t best = 0;
  for (int lo = 0; lo + 60 <= 256; ++lo) {
    std::size_t in = 0;
    for (int p = lo; p < lo + 60; ++p) in += counts[static_cast<std::size_t>(p)];
    if (in > best) {
      best = in;
      st.pressure_window_lo = lo;
    }
  }
  st.pressure_window_fraction = static_cast<double>(best) / static_cast<double>(st.pen_down);
  return st;
}

bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = a[i] >= '0' && a[i] <= '9';
    const bool db = b[j] >= '0' && b[j] <= '9';
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && a[ie] >= '0' && a[ie] <= '9') ++ie;
      while (je < b.size() && b[je] >= '0' && b[je] <= '9') ++je;
      std::string_view na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;
}

std::size_t DatasetIndex::genuine_count() const {
  std::size_t n = 0;
  for (const auto& u : users)
    for (const auto& s : u.sessions) n += s.genuine.size();
  return n;
}

std::size_t DatasetIndex::forgery_count() const {
  std::size_t n = 0;
  for (const auto& u : users) n += u.forgeries.size();
  return n;
}

bool DatasetIndex::conformant() const {
  return !users.empty() &&
         std::all_of(users.begin(), users.end(), [](const UserEntry& u) { return u.conformant; });
}

namespace {

std::vector<fs::path> sorted_children(const fs::path& dir, bool want_dirs) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (want_dirs ? entry.is_directory() : !entry.is_directory()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return natural_less(a.filename().string(), b.filename().string());
  });
  return out;
}

std::vector<fs::path> svc_files(const fs::path& dir, DatasetIndex& index) {
  std::vector<fs::path> files;
  for (const auto& f : sorted_children(dir, false)) {
    if (f.extension() != ".svc") continue;
    std::ifstream probe(f, std::ios::binary);
    if (!probe) {
      index.unreadable.push_back(f.string());
      continue;
    }
    files.push_back(f);
  }
  return files;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

DatasetIndex scan_dataset(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::MissingRoot, root.string() + " is not a directory");
  }
  DatasetIndex index;
  index.root = root;
  for (const auto& user_dir : sorted_children(root, true)) {
    const std::string name = user_dir.filename().string();
    if (!starts_with(name, "user")) {
      index.warnings.push_back("ignoring directory " + name);
      continue;
    }
    UserEntry user;
    user.id = name;
    bool have_forgery_dir = false;
    for (const auto& sub : sorted_children(user_dir, true)) {
      const std::string sub_name = sub.filename().string();
      if (starts_with(sub_name, "session")) {
        user.sessions.push_back({sub_name, svc_files(sub, index)});
      } else if (sub_name == "forgeries") {
        have_forgery_dir = true;
        user.forgeries = svc_files(sub, index);
      } else {
        index.warnings.push_back(name + ": ignoring directory " + sub_name);
      }
    }
    user.conformant = user.sessions.size() == 3 && user.forgeries.size() == 15 &&
                      std::all_of(user.sessions.begin(), user.sessions.end(),
                                  [](const SessionEntry& s) { return s.genuine.size() == 5; });
    if (!user.conformant) {
      std::string msg = name + ": non-conformant (" + std::to_string(user.sessions.size()) +
                        " sessions, genuine per session:";
      for (const auto& s : user.sessions) msg += " " + std::to_string(s.genuine.size());
      msg += ", " + std::to_string(user.forgeries.size()) + " forgeries";
      if (!have_forgery_dir) msg += ", no forgeries directory";
      msg += "; expected 3 x 5 + 15)";
      index.warnings.push_back(msg);
    }
    index.users.push_back(std::move(user));
  }
  if (index.users.empty()) index.warnings.push_back("no user directories under " + root.string());
  for (const auto& f : index.unreadable) index.warnings.push_back("unreadable file " + f);
  return index;
}

}  // namespace sigverify::io
