// Copyright 2026 The corpusforge Authors.
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
//
// \file
// Utterance manifests (JSONL), speaker-disjoint splitting and statistics.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/text.hpp"

namespace corpusforge::corpus {

enum class Status { kRaw, kVadOk, kSnrRejected, kForeignRejected, kNumericRejected, kSelected };

inline constexpr std::array<std::pair<Status, std::string_view>, 6> kStatusNames = {{
    {Status::kRaw, "raw"},
    {Status::kVadOk, "vad_ok"},
    {Status::kSnrRejected, "snr_rejected"},
    {Status::kForeignRejected, "foreign_rejected"},
    {Status::kNumericRejected, "numeric_rejected"},
    {Status::kSelected, "selected"},
}};

inline std::string to_string(Status s) {
  for (const auto& [k, v] : kStatusNames) {
    if (k == s) return std::string(v);
  }
  return "raw";
}

inline Status parse_status(std::string_view s) {
  for (const auto& [k, v] : kStatusNames) {
    if (v == s) return k;
  }
  throw Error("unknown status: " + std::string(s));
}

inline constexpr int kNoiseCluster = -1;

struct UtteranceRecord {
  std::string utt_id;
  std::string source;
  std::string audio_path;
  double duration_s = 0.0;
  std::optional<double> snr_db;
  std::optional<int> speaker_cluster;
  std::optional<std::string> gender;
  std::optional<std::string> transcript;
  Status status = Status::kRaw;
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, preserved
};

using Manifest = std::vector<UtteranceRecord>;

inline nlohmann::json to_json(const UtteranceRecord& r) {
  nlohmann::json j = r.extra.is_object() ? r.extra : nlohmann::json::object();
  j["utt_id"] = r.utt_id;
  j["source"] = r.source;
  j["audio_path"] = r.audio_path;
  j["duration_s"] = r.duration_s;
  if (r.snr_db) j["snr_db"] = *r.snr_db;
  if (r.speaker_cluster) j["speaker_cluster"] = *r.speaker_cluster;
  if (r.gender) j["gender"] = *r.gender;
  if (r.transcript) j["transcript"] = *r.transcript;
  j["status"] = to_string(r.status);
  return j;
}

inline UtteranceRecord from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("manifest row is not an object");
  UtteranceRecord r;
  r.utt_id = j.at("utt_id").get<std::string>();
  r.source = j.value("source", "");
  r.audio_path = j.value("audio_path", "");
  r.duration_s = j.at("duration_s").get<double>();
  if (j.contains("snr_db") && !j["snr_db"].is_null()) r.snr_db = j["snr_db"].get<double>();
  if (j.contains("speaker_cluster") && !j["speaker_cluster"].is_null())
    r.speaker_cluster = j["speaker_cluster"].get<int>();
  if (j.contains("gender") && !j["gender"].is_null()) r.gender = j["gender"].get<std::string>();
  if (j.contains("transcript") && !j["transcript"].is_null()) r.transcript = j["transcript"].get<std::string>();
  r.status = parse_status(j.value("status", "raw"));
  static const std::set<std::string> known = {"utt_id",          "source", "audio_path", "duration_s", "snr_db",
                                              "speaker_cluster", "gender", "transcript", "status"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) r.extra[it.key()] = it.value();
  }
  return r;
}

// Unique ids and positive durations.
inline void validate(const Manifest& m) {
  std::set<std::string> seen;
  std::vector<std::string> dups;
  for (const auto& r : m) {
    if (!seen.insert(r.utt_id).second) dups.push_back(r.utt_id);
    if (!(r.duration_s > 0.0)) throw Error("duration_s must be positive: " + r.utt_id);
  }
  if (!dups.empty()) {
    std::string msg = "duplicate utt_id:";
    for (const auto& d : dups) msg += " " + d;
    throw Error(msg);
  }
}

inline std::string serialize(const Manifest& m) {
  std::string out;
  for (const auto& r : m) {
    out += to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

inline Manifest parse_manifest(std::string_view contents) {
  Manifest m;
  std::size_t start = 0, line_no = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    ++line_no;
    const auto line = contents.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      m.push_back(from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(corpusforge::detail::concat("manifest line ", line_no, ": ", e.what()));
    }
  }
  validate(m);
  return m;
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(corpusforge::detail::read_file(path));
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  validate(m);
  corpusforge::detail::write_file_atomic(path, serialize(m));
}

// ---------------------------------------------------------------------------
// Relational helpers

inline Manifest filter(const Manifest& m, const std::function<bool(const UtteranceRecord&)>& pred) {
  Manifest out;
  std::copy_if(m.begin(), m.end(), std::back_inserter(out), pred);
  return out;
}

// Concatenation; throws listing every duplicated utt_id.
inline Manifest merge(const Manifest& a, const Manifest& b) {
  Manifest out = a;
  out.insert(out.end(), b.begin(), b.end());
  validate(out);
  return out;
}

// ---------------------------------------------------------------------------
// Speaker-disjoint split

struct SplitSpec {
  std::array<double, 3> ratios = {0.8, 0.1, 0.1};  // train, dev, test
  std::uint64_t seed = 7;

  void validate() const {
    double sum = 0.0;
    for (double r : ratios) {
      if (r < 0.0) throw Error("split ratios must be non-negative");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("split ratios must sum to 1");
  }
};

struct SplitResult {
  Manifest train, dev, test;
  std::vector<std::string> warnings;

  const Manifest& part(std::size_t k) const { return k == 0 ? train : k == 1 ? dev : test; }
};

// Whole speakers go, largest total duration first, to the split whose
// duration/target ratio would be lowest after taking the speaker (ties to
// the earlier split). Measuring after the move keeps a big speaker out of a
// small split, so every split ends within one speaker of its target.
// Equal-duration speakers are ordered by a seeded shuffle. Noise-labelled
// records always go to train.
inline SplitResult split_by_speaker(const Manifest& manifest, const SplitSpec& spec = {}) {
  spec.validate();
  if (manifest.empty()) throw Error("empty manifest");
  std::map<int, double> duration;
  for (const auto& r : manifest) {
    if (!r.speaker_cluster) throw Error("record without speaker_cluster: " + r.utt_id);
    if (*r.speaker_cluster != kNoiseCluster) duration[*r.speaker_cluster] += r.duration_s;
  }
  std::vector<std::pair<int, double>> speakers(duration.begin(), duration.end());
  std::mt19937_64 rng(spec.seed);
  std::shuffle(speakers.begin(), speakers.end(), rng);
  std::stable_sort(speakers.begin(), speakers.end(), [](const auto& x, const auto& y) { return x.second > y.second; });

  double total = 0.0;
  for (const auto& [id, d] : speakers) total += d;
  std::array<double, 3> current = {0.0, 0.0, 0.0};
  std::map<int, std::size_t> assigned;
  for (const auto& [id, d] : speakers) {
    std::size_t best = 0;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < 3; ++k) {
      const double target = spec.ratios[k] * total;
      if (target <= 0.0) continue;
      const double ratio = (current[k] + d) / target;
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best = k;
      }
    }
    assigned[id] = best;
    current[best] += d;
  }

  SplitResult out;
  for (const auto& r : manifest) {
    const int c = *r.speaker_cluster;
    const std::size_t k = c == kNoiseCluster ? 0 : assigned.at(c);
    (k == 0 ? out.train : k == 1 ? out.dev : out.test).push_back(r);
  }
  static constexpr std::array<std::string_view, 3> kNames = {"train", "dev", "test"};
  for (std::size_t k = 1; k < 3; ++k) {
    if (spec.ratios[k] > 0.0 && out.part(k).empty()) {
      out.warnings.push_back(std::string(kNames[k]) + " split is empty: not enough distinct speakers");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct Stats {
  double hours = 0.0;
  std::size_t n_utts = 0;
  std::size_t n_speakers = 0;
  std::map<std::string, double> gender_hours;
  std::size_t char_vocab_size = 0;
};

inline Stats stats(const Manifest& m) {
  Stats s;
  std::set<int> speakers;
  std::vector<std::string> transcripts;
  double seconds = 0.0;
  for (const auto& r : m) {
    seconds += r.duration_s;
    if (r.speaker_cluster && *r.speaker_cluster != kNoiseCluster) speakers.insert(*r.speaker_cluster);
    if (r.gender) s.gender_hours[*r.gender] += r.duration_s / 3600.0;
    if (r.transcript) transcripts.push_back(text::nfd(*r.transcript));
  }
  s.hours = seconds / 3600.0;
  s.n_utts = m.size();
  s.n_speakers = speakers.size();
  s.char_vocab_size = text::char_inventory(transcripts).size();
  return s;
}

inline nlohmann::json to_json(const Stats& s) {
  return {{"hours", s.hours},
          {"n_utts", s.n_utts},
          {"n_speakers", s.n_speakers},
          {"gender_hours", s.gender_hours},
          {"char_vocab_size", s.char_vocab_size}};
}

}  // namespace corpusforge::corpus
