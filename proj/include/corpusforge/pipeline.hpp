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
// Config-driven curation pipeline:
//   vad -> snr -> embed -> cluster -> gender -> select -> textclean -> split
// Stages talk only through files in the output directory. Each stage writes
// <stage>.jsonl (kept) and <stage>.rejected.jsonl, plus a stamp that lets an
// unchanged re-run skip it.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <toml.hpp>
#include <utility>
#include <vector>

#include "corpusforge/audio.hpp"
#include "corpusforge/corpus.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/gender.hpp"
#include "corpusforge/itn.hpp"
#include "corpusforge/parallel.hpp"
#include "corpusforge/snr.hpp"
#include "corpusforge/speaker.hpp"
#include "corpusforge/text.hpp"
#include "corpusforge/vad.hpp"

namespace corpusforge::pipeline {

namespace fs = std::filesystem;

inline const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> kOrder = {"vad",    "snr",    "embed",     "cluster",
                                                  "gender", "select", "textclean", "split"};
  return kOrder;
}

// Stages each stage needs earlier in the list.
inline const std::map<std::string, std::vector<std::string>>& stage_requirements() {
  static const std::map<std::string, std::vector<std::string>> kReq = {
      {"vad", {}},
      {"snr", {"vad"}},
      {"embed", {"vad"}},
      {"cluster", {"embed"}},
      {"gender", {"cluster"}},
      {"select", {"snr", "cluster"}},
      {"textclean", {"vad"}},
      {"split", {"cluster"}},
  };
  return kReq;
}

inline const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> kKeys = {
      {"",
       {"input_dir", "output_dir", "seed", "jobs", "stages", "vad", "snr", "embed", "cluster", "gender", "select",
        "textclean", "split"}},
      {"vad", {"aggressiveness", "frame_ms", "padding_ms", "trigger_ratio", "min_chunk_s", "max_chunk_s"}},
      {"snr", {"min_db", "max_db"}},
      {"embed", {"dim"}},
      {"cluster", {"min_cluster_size", "min_samples"}},
      {"gender", {"model"}},
      {"select", {"cap_minutes"}},
      {"textclean", {"vocab", "transcripts"}},
      {"split", {"train", "dev", "test"}},
  };
  return kKeys;
}

struct Diagnostic {
  enum class Level { kWarning, kError } level = Level::kWarning;
  std::string message;

  bool is_error() const { return level == Level::kError; }
  std::string str() const { return std::string(is_error() ? "error: " : "warning: ") + message; }
};

struct PipelineConfig {
  fs::path config_path;
  fs::path input_dir;
  fs::path output_dir;
  std::uint64_t seed = 7;
  std::size_t jobs = 1;
  std::vector<std::string> stages = stage_order();

  vad::VadConfig vad;
  snr::SnrThresholds snr;
  std::size_t embed_dim = speaker::kDefaultDim;
  speaker::HdbscanParams cluster;
  fs::path gender_model;
  speaker::SpeakerBudget select;
  fs::path vocab;
  fs::path transcripts;
  corpus::SplitSpec split;

  std::map<std::string, std::string> stage_tables;  // canonical dump per stage, hashed into stamps
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline std::size_t key_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::string nearest_key(std::string_view key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& c : candidates) {
    const std::size_t d = key_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best_d <= std::max<std::size_t>(2, key.size() / 3) ? best : std::string();
}

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

class TableReader {
 public:
  TableReader(const toml::table* t, std::string name, std::vector<Diagnostic>& diags)
      : t_(t), name_(std::move(name)), diags_(diags) {}

  template <typename T>
  void read(const char* key, T& out) {
    if (!t_) return;
    const auto* node = t_->get(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node->value<bool>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_integral_v<T>) {
      if (auto v = node->value<std::int64_t>()) {
        if (*v < 0 && std::is_unsigned_v<T>) {
          bad(key, "a non-negative integer");
          return;
        }
        out = static_cast<T>(*v);
        return;
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = node->value<double>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node->value<std::string>()) {
        out = *v;
        return;
      }
    }
    bad(key, std::is_same_v<T, std::string> ? "a string" : "a number");
  }

 private:
  void bad(const char* key, const char* what) {
    diags_.push_back(
        {Diagnostic::Level::kError,
         "key '" + std::string(key) + "'" + (name_.empty() ? "" : " in [" + name_ + "]") + " must be " + what});
  }

  const toml::table* t_;
  std::string name_;
  std::vector<Diagnostic>& diags_;
};

inline std::string canonical(const toml::table* t) {
  if (!t) return "{}";
  std::ostringstream s;
  s << toml::json_formatter{*t};
  return s.str();
}

}  // namespace detail

struct ParsedConfig {
  PipelineConfig config;
  std::vector<Diagnostic> diagnostics;

  bool ok() const {
    return std::none_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) { return d.is_error(); });
  }
};

inline fs::path resolve_vocab(const fs::path& v, const fs::path& base) {
  if (v.empty()) return v;
  const fs::path p = v.is_absolute() ? v : base / v;
  if (fs::exists(p)) return p;
  // Bare language tag: shipped vocabulary.
  const fs::path shipped = itn::default_data_dir() / "vocab" / (v.string() + ".vocab");
  if (v.string().find_first_of("/\\.") == std::string::npos && fs::exists(shipped)) return shipped;
  return p;
}

// Parses and validates. Syntax errors throw; everything else is reported as
// diagnostics.
inline ParsedConfig parse_config_text(std::string_view text, const fs::path& config_path = "pipeline.toml") {
  ParsedConfig out;
  auto& c = out.config;
  auto& diags = out.diagnostics;
  c.config_path = config_path;
  toml::table root;
  try {
    root = toml::parse(text, config_path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream s;
    s << "config parse error: " << e.description() << " (line " << e.source().begin.line << ")";
    throw Error(s.str());
  }

  // Unknown keys, with the closest known key as a hint.
  const auto& keys = known_keys();
  auto check_keys = [&](const toml::table& t, const std::string& table) {
    const auto& allowed = keys.at(table);
    for (const auto& [k, v] : t) {
      const std::string key(k.str());
      if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
      std::string msg = "unknown key '" + key + "'" + (table.empty() ? "" : " in [" + table + "]");
      const std::string hint = detail::nearest_key(key, allowed);
      if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
      diags.push_back({Diagnostic::Level::kWarning, msg});
    }
  };
  check_keys(root, "");
  for (const auto& [name, allowed] : keys) {
    if (name.empty()) continue;
    if (const auto* t = root.get_as<toml::table>(name))
      check_keys(*t, name);
    else if (root.get(name))
      diags.push_back({Diagnostic::Level::kError, "'" + name + "' must be a table"});
  }

  const fs::path base = config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");
  auto path_of = [&](const std::string& s) {
    return s.empty() ? fs::path() : (fs::path(s).is_absolute() ? fs::path(s) : base / s);
  };

  detail::TableReader top(&root, "", diags);
  std::string input_dir, output_dir;
  top.read("input_dir", input_dir);
  top.read("output_dir", output_dir);
  top.read("seed", c.seed);
  top.read("jobs", c.jobs);
  if (input_dir.empty()) diags.push_back({Diagnostic::Level::kError, "missing 'input_dir'"});
  if (output_dir.empty()) diags.push_back({Diagnostic::Level::kError, "missing 'output_dir'"});
  c.input_dir = path_of(input_dir);
  c.output_dir = path_of(output_dir);
  if (c.jobs == 0) c.jobs = 1;

  if (const auto* arr = root.get_as<toml::array>("stages")) {
    c.stages.clear();
    for (const auto& n : *arr) {
      if (auto s = n.value<std::string>())
        c.stages.push_back(*s);
      else
        diags.push_back({Diagnostic::Level::kError, "'stages' must be a list of strings"});
    }
  } else if (root.get("stages")) {
    diags.push_back({Diagnostic::Level::kError, "'stages' must be a list of strings"});
  }

  // Stage list: known names, no repeats, canonical order, requirements met.
  const auto& order = stage_order();
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < c.stages.size(); ++i) {
    const auto& s = c.stages[i];
    if (std::find(order.begin(), order.end(), s) == order.end()) {
      std::string msg = "unknown stage '" + s + "'";
      const std::string hint = detail::nearest_key(s, order);
      if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
      diags.push_back({Diagnostic::Level::kError, msg});
      continue;
    }
    if (!position.emplace(s, i).second) diags.push_back({Diagnostic::Level::kError, "stage '" + s + "' listed twice"});
  }
  for (const auto& [s, i] : position) {
    for (const auto& req : stage_requirements().at(s)) {
      auto it = position.find(req);
      if (it == position.end()) {
        diags.push_back({Diagnostic::Level::kError, "stage '" + s + "' requires stage '" + req + "'"});
      } else if (it->second > i) {
        diags.push_back({Diagnostic::Level::kError, "stage order: '" + s + "' must come after '" + req + "'"});
      }
    }
  }
  for (std::size_t i = 1; i < c.stages.size(); ++i) {
    auto a = std::find(order.begin(), order.end(), c.stages[i - 1]);
    auto b = std::find(order.begin(), order.end(), c.stages[i]);
    if (a != order.end() && b != order.end() && b < a) {
      diags.push_back(
          {Diagnostic::Level::kError, "stage order: '" + c.stages[i] + "' cannot follow '" + c.stages[i - 1] + "'"});
    }
  }

  auto table = [&](const char* name) { return root.get_as<toml::table>(name); };
  {
    detail::TableReader r(table("vad"), "vad", diags);
    r.read("aggressiveness", c.vad.aggressiveness);
    r.read("frame_ms", c.vad.frame_ms);
    r.read("padding_ms", c.vad.padding_ms);
    r.read("trigger_ratio", c.vad.trigger_ratio);
    r.read("min_chunk_s", c.vad.min_chunk_s);
    r.read("max_chunk_s", c.vad.max_chunk_s);
  }
  {
    detail::TableReader r(table("snr"), "snr", diags);
    r.read("min_db", c.snr.min_db);
    r.read("max_db", c.snr.max_db);
  }
  {
    detail::TableReader r(table("embed"), "embed", diags);
    r.read("dim", c.embed_dim);
  }
  {
    detail::TableReader r(table("cluster"), "cluster", diags);
    r.read("min_cluster_size", c.cluster.min_cluster_size);
    r.read("min_samples", c.cluster.min_samples);
  }
  {
    detail::TableReader r(table("gender"), "gender", diags);
    std::string model;
    r.read("model", model);
    c.gender_model = path_of(model);
  }
  {
    detail::TableReader r(table("select"), "select", diags);
    r.read("cap_minutes", c.select.cap_minutes);
  }
  {
    detail::TableReader r(table("textclean"), "textclean", diags);
    std::string vocab, transcripts;
    r.read("vocab", vocab);
    r.read("transcripts", transcripts);
    c.vocab = vocab.empty() ? fs::path() : resolve_vocab(vocab, base);
    c.transcripts = path_of(transcripts);
  }
  {
    detail::TableReader r(table("split"), "split", diags);
    r.read("train", c.split.ratios[0]);
    r.read("dev", c.split.ratios[1]);
    r.read("test", c.split.ratios[2]);
    c.split.seed = c.seed;
  }
  for (const auto& s : order) c.stage_tables[s] = detail::canonical(table(s.c_str()));

  // Parameter checks reuse the module validators.
  auto check = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      diags.push_back({Diagnostic::Level::kError, std::string(what) + ": " + e.what()});
    }
  };
  check("vad", [&] { c.vad.validate(); });
  check("snr", [&] { c.snr.validate(); });
  check("cluster", [&] { c.cluster.validate(); });
  check("split", [&] { c.split.validate(); });
  if (c.embed_dim < 3) diags.push_back({Diagnostic::Level::kError, "embed: dim must be at least 3"});
  if (!(c.select.cap_minutes > 0.0))
    diags.push_back({Diagnostic::Level::kError, "select: cap_minutes must be positive"});

  // Referenced paths.
  auto has = [&](const char* s) { return position.count(s) > 0; };
  if (!c.input_dir.empty() && !fs::is_directory(c.input_dir)) {
    diags.push_back({Diagnostic::Level::kError, "input_dir not found: " + c.input_dir.string()});
  }
  if (has("gender")) {
    if (c.gender_model.empty())
      diags.push_back({Diagnostic::Level::kError, "stage 'gender' needs [gender] model"});
    else if (!fs::exists(c.gender_model)) {
      diags.push_back({Diagnostic::Level::kError, "gender model not found: " + c.gender_model.string()});
    }
  }
  if (has("textclean")) {
    if (c.vocab.empty())
      diags.push_back({Diagnostic::Level::kError, "stage 'textclean' needs [textclean] vocab"});
    else if (!fs::exists(c.vocab))
      diags.push_back({Diagnostic::Level::kError, "vocabulary not found: " + c.vocab.string()});
    if (!c.transcripts.empty() && !fs::exists(c.transcripts)) {
      diags.push_back({Diagnostic::Level::kError, "transcripts not found: " + c.transcripts.string()});
    }
  }
  return out;
}

inline ParsedConfig parse_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error("config not found: " + path.string());
  return parse_config_text(corpusforge::detail::read_file(path), path);
}

inline std::vector<Diagnostic> validate_config(const fs::path& path) { return parse_config(path).diagnostics; }

// ---------------------------------------------------------------------------
// Report

struct StageReport {
  std::string name;
  std::size_t in = 0;
  std::size_t kept = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> reasons;
  bool skipped = false;
  double wall_s = 0.0;

  bool conserved() const {
    std::size_t sum = 0;
    for (const auto& [r, n] : reasons) sum += n;
    return in == kept + rejected && sum == rejected;
  }
};

struct RunReport {
  std::string config_hash;
  std::size_t input_files = 0;
  std::vector<StageReport> stages;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["input_files"] = input_files;
    j["stages"] = nlohmann::json::array();
    for (const auto& s : stages) {
      j["stages"].push_back({{"name", s.name},
                             {"in", s.in},
                             {"kept", s.kept},
                             {"rejected", s.rejected},
                             {"reasons", s.reasons},
                             {"skipped", s.skipped},
                             {"wall_s", s.wall_s}});
    }
    j["warnings"] = warnings;
    return j;
  }
};

struct RunOptions {
  bool force = false;
  std::optional<std::size_t> jobs;
  std::ostream* log = nullptr;
};

// ---------------------------------------------------------------------------
// Stages

namespace detail {

struct StageResult {
  corpus::Manifest kept;
  corpus::Manifest rejected;
  std::size_t in = 0;
  std::vector<std::string> warnings;
};

inline std::string reason_of(const corpus::UtteranceRecord& r) {
  if (r.extra.contains("reason") && r.extra["reason"].is_string()) return r.extra["reason"].get<std::string>();
  return corpus::to_string(r.status);
}

inline void reject(corpus::UtteranceRecord r, const std::string& reason, std::optional<corpus::Status> status,
                   StageResult& out) {
  if (status) r.status = *status;
  r.extra["reason"] = reason;
  out.rejected.push_back(std::move(r));
}

// Audio files under dir, sorted; source is the file stem for top-level
// files and the first sub-directory name otherwise.
struct InputFile {
  fs::path path;
  std::string relative;
  std::string source;
};

inline std::vector<InputFile> list_inputs(const fs::path& dir) {
  std::vector<InputFile> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (ext != ".wav") continue;
    const fs::path rel = fs::relative(e.path(), dir);
    InputFile f;
    f.path = e.path();
    f.relative = rel.generic_string();
    f.source = std::distance(rel.begin(), rel.end()) > 1 ? rel.begin()->string() : rel.stem().string();
    out.push_back(std::move(f));
  }
  std::sort(out.begin(), out.end(), [](const InputFile& a, const InputFile& b) { return a.relative < b.relative; });
  return out;
}

inline std::string utt_id_for(const InputFile& f, std::size_t index) {
  std::string stem = fs::path(f.relative).stem().string();
  std::string id = f.source == stem ? f.source : f.source + "_" + stem;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%04zu", index);
  return id + buf;
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt), jobs_(opt.jobs.value_or(cfg.jobs)) {}

  RunReport run() {
    RunReport report;
    report.config_hash = hex(fnv1a(corpusforge::detail::read_file_or_empty(cfg_.config_path)));
    fs::create_directories(cfg_.output_dir);
    inputs_ = list_inputs(cfg_.input_dir);
    report.input_files = inputs_.size();
    log("pipeline: ", inputs_.size(), " input file(s), stages: ", cfg_.stages.size());

    std::string prev;
    for (const auto& stage : cfg_.stages) {
      StageReport sr;
      sr.name = stage;
      const auto t0 = std::chrono::steady_clock::now();
      const std::string key = stamp_key(stage, prev);
      const fs::path stamp = cfg_.output_dir / (stage + ".stamp");
      if (!opt_.force && fs::exists(stamp) && corpusforge::detail::read_file(stamp) == key &&
          fs::exists(kept_path(stage)) && fs::exists(rejected_path(stage)) &&
          (stage != "embed" || fs::exists(cfg_.output_dir / "embeddings.bin"))) {
        sr.skipped = true;
        const auto kept = corpus::read_manifest(kept_path(stage));
        const auto rejected = corpus::read_manifest(rejected_path(stage));
        fill_counts(sr, prev, kept, rejected);
        log(stage, ": up to date, skipped");
      } else {
        fs::remove(stamp);
        StageResult res;
        try {
          res = run_stage(stage, prev);
        } catch (...) {
          // Keep whatever was produced so far for inspection.
          write_partial(stage);
          throw;
        }
        corpus::write_manifest(kept_path(stage), res.kept);
        corpus::write_manifest(rejected_path(stage), res.rejected);
        corpusforge::detail::write_file_atomic(stamp, key);
        sr.in = res.in;
        sr.kept = res.kept.size();
        sr.rejected = res.rejected.size();
        for (const auto& r : res.rejected) ++sr.reasons[reason_of(r)];
        for (auto& w : res.warnings) {
          log(stage, ": warning: ", w);
          report.warnings.push_back(stage + ": " + w);
        }
        log(stage, ": in ", sr.in, ", kept ", sr.kept, ", rejected ", sr.rejected);
      }
      sr.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!sr.conserved()) throw Error("stage " + stage + ": record counts do not add up");
      report.stages.push_back(std::move(sr));
      prev = stage;
    }
    corpusforge::detail::write_file_atomic(cfg_.output_dir / "run_report.json", report.to_json().dump(2) + "\n");
    return report;
  }

 private:
  template <typename... Args>
  void log(Args&&... args) {
    if (opt_.log) *opt_.log << corpusforge::detail::concat(std::forward<Args>(args)...) << '\n';
  }

  fs::path kept_path(const std::string& stage) const { return cfg_.output_dir / (stage + ".jsonl"); }
  fs::path rejected_path(const std::string& stage) const { return cfg_.output_dir / (stage + ".rejected.jsonl"); }

  void fill_counts(StageReport& sr, const std::string& prev, const corpus::Manifest& kept,
                   const corpus::Manifest& rejected) const {
    sr.kept = kept.size();
    sr.rejected = rejected.size();
    sr.in = sr.kept + sr.rejected;
    (void)prev;
    for (const auto& r : rejected) ++sr.reasons[reason_of(r)];
  }

  std::string stamp_key(const std::string& stage, const std::string& prev) const {
    std::uint64_t h = fnv1a("corpusforge-stage-v1:" + stage);
    h = fnv1a(cfg_.stage_tables.at(stage), h);
    h = fnv1a(std::to_string(cfg_.seed), h);
    if (prev.empty()) {
      for (const auto& f : inputs_) {
        h = fnv1a(f.relative, h);
        h = fnv1a(corpusforge::detail::read_file(f.path), h);
      }
    } else {
      h = fnv1a(corpusforge::detail::read_file_or_empty(kept_path(prev)), h);
    }
    if (stage == "gender") h = fnv1a(corpusforge::detail::read_file_or_empty(cfg_.gender_model), h);
    if (stage == "textclean") {
      h = fnv1a(corpusforge::detail::read_file_or_empty(cfg_.vocab), h);
      h = fnv1a(corpusforge::detail::read_file_or_empty(cfg_.transcripts), h);
    }
    // embed writes this file itself; only its consumers depend on it.
    if (stage == "cluster" || stage == "gender") {
      h = fnv1a(corpusforge::detail::read_file_or_empty(cfg_.output_dir / "embeddings.bin"), h);
    }
    return hex(h) + "\n";
  }

  void write_partial(const std::string& stage) {
    corpus::Manifest kept, rejected;
    for (std::size_t i = 0; i < partial_.size(); ++i) {
      if (!partial_done_[i]) continue;
      for (auto& r : partial_[i].kept) kept.push_back(r);
      for (auto& r : partial_[i].rejected) rejected.push_back(r);
    }
    try {
      corpusforge::detail::write_file_atomic(kept_path(stage).string() + ".partial", corpus::serialize(kept));
      corpusforge::detail::write_file_atomic(rejected_path(stage).string() + ".partial", corpus::serialize(rejected));
    } catch (...) {
    }
    fs::remove(kept_path(stage));
    fs::remove(rejected_path(stage));
  }

  corpus::Manifest input_manifest(const std::string& prev) const { return corpus::read_manifest(kept_path(prev)); }

  // Runs fn(i, slot) for every i over the worker pool; slots keep input order
  // and record which items finished, for partial output on failure.
  template <typename Fn>
  void for_each_slot(std::size_t n, Fn&& fn) {
    partial_.assign(n, {});
    partial_done_.assign(n, 0);
    parallel_for(n, jobs_, [&](std::size_t i) {
      fn(i, partial_[i]);
      partial_done_[i] = 1;
    });
  }

  StageResult gather() {
    StageResult out;
    for (auto& s : partial_) {
      for (auto& r : s.kept) out.kept.push_back(std::move(r));
      for (auto& r : s.rejected) out.rejected.push_back(std::move(r));
      for (auto& w : s.warnings) out.warnings.push_back(std::move(w));
    }
    out.in = out.kept.size() + out.rejected.size();
    partial_.clear();
    partial_done_.clear();
    return out;
  }

  StageResult run_stage(const std::string& stage, const std::string& prev) {
    if (stage == "vad") return stage_vad();
    const auto in = input_manifest(prev);
    if (stage == "snr") return stage_snr(in);
    if (stage == "embed") return stage_embed(in);
    if (stage == "cluster") return stage_cluster(in);
    if (stage == "gender") return stage_gender(in);
    if (stage == "select") return stage_select(in);
    if (stage == "textclean") return stage_textclean(in);
    if (stage == "split") return stage_split(in);
    throw Error("unknown stage: " + stage);
  }

  fs::path audio_of(const corpus::UtteranceRecord& r) const { return cfg_.output_dir / r.audio_path; }

  StageResult stage_vad() {
    const auto& vc = cfg_.vad;
    for_each_slot(inputs_.size(), [&](std::size_t i, StageResult& slot) {
      const auto& f = inputs_[i];
      const AudioBuffer audio = read_wav(f.path);
      const auto spans = vad::collect_spans(audio, vc);
      const auto plan = vad::plan_chunks(audio, spans, vc);
      // Kept and dropped pieces are numbered together in time order.
      std::vector<std::pair<vad::VoicedSpan, bool>> pieces;
      for (const auto& s : plan.kept) pieces.emplace_back(s, true);
      for (const auto& s : plan.dropped) pieces.emplace_back(s, false);
      std::sort(pieces.begin(), pieces.end(),
                [](const auto& a, const auto& b) { return a.first.start_sample < b.first.start_sample; });
      const fs::path dir = cfg_.output_dir / "chunks" / f.source;
      fs::create_directories(dir);
      for (std::size_t k = 0; k < pieces.size(); ++k) {
        const auto& [span, keep] = pieces[k];
        corpus::UtteranceRecord r;
        r.utt_id = utt_id_for(f, k);
        r.source = f.source;
        r.duration_s = span.duration_s(audio.sample_rate);
        r.extra["origin"] = f.relative;
        r.extra["start_s"] = static_cast<double>(span.start_sample) / audio.sample_rate;
        r.extra["end_s"] = static_cast<double>(span.end_sample) / audio.sample_rate;
        if (!keep) {
          reject(std::move(r), "too_short", corpus::Status::kRaw, slot);
          continue;
        }
        const fs::path rel = fs::path("chunks") / f.source / (r.utt_id + ".wav");
        write_wav(audio.slice(span.start_sample, span.end_sample), cfg_.output_dir / rel);
        r.audio_path = rel.generic_string();
        r.status = corpus::Status::kVadOk;
        slot.kept.push_back(std::move(r));
      }
    });
    return gather();
  }

  StageResult stage_snr(const corpus::Manifest& in) {
    for_each_slot(in.size(), [&](std::size_t i, StageResult& slot) {
      auto r = in[i];
      const AudioBuffer audio = read_wav(audio_of(r));
      double db;
      try {
        db = snr::wada_snr(audio).db;
      } catch (const Error&) {
        reject(std::move(r), "silent", corpus::Status::kSnrRejected, slot);
        return;
      }
      r.snr_db = db;
      if (auto reason = snr::rejection_reason(db, cfg_.snr)) {
        reject(std::move(r), *reason, corpus::Status::kSnrRejected, slot);
      } else {
        slot.kept.push_back(std::move(r));
      }
    });
    return gather();
  }

  StageResult stage_embed(const corpus::Manifest& in) {
    std::vector<speaker::Embedding> embs(in.size());
    for_each_slot(in.size(), [&](std::size_t i, StageResult& slot) {
      const AudioBuffer audio = read_wav(audio_of(in[i]));
      const auto feats = mfcc(audio);
      if (feats.n_frames < 2) {
        reject(in[i], "too_few_frames", std::nullopt, slot);
        return;
      }
      embs[i] = speaker::embed_mfcc_stats(feats, cfg_.embed_dim, in[i].utt_id);
      auto r = in[i];
      r.extra["embedding"] = "embeddings.bin";
      slot.kept.push_back(std::move(r));
    });
    std::vector<speaker::Embedding> kept;
    for (auto& e : embs) {
      if (!e.vector.empty()) kept.push_back(std::move(e));
    }
    speaker::save_embeddings(cfg_.output_dir / "embeddings.bin", kept);
    return gather();
  }

  std::map<std::string, speaker::Embedding> load_embedding_map() const {
    std::map<std::string, speaker::Embedding> out;
    for (auto& e : speaker::load_embeddings(cfg_.output_dir / "embeddings.bin")) out.emplace(e.utt_id, std::move(e));
    return out;
  }

  // Sources are clustered independently; cluster ids are offset to stay
  // globally unique.
  StageResult stage_cluster(const corpus::Manifest& in) {
    const auto embs = load_embedding_map();
    std::map<std::string, std::vector<std::size_t>> by_source;
    for (std::size_t i = 0; i < in.size(); ++i) by_source[in[i].source].push_back(i);
    std::vector<std::pair<std::string, speaker::ClusterAssignment>> results(by_source.size());
    std::vector<std::string> sources;
    for (const auto& [s, idx] : by_source) sources.push_back(s);
    parallel_for(sources.size(), jobs_, [&](std::size_t k) {
      std::vector<speaker::Embedding> pts;
      for (std::size_t i : by_source.at(sources[k])) {
        auto it = embs.find(in[i].utt_id);
        if (it == embs.end()) throw Error("no embedding for " + in[i].utt_id);
        pts.push_back(it->second);
      }
      results[k] = {sources[k], speaker::hdbscan(pts, cfg_.cluster)};
    });
    std::map<std::string, int> offset;
    int next = 0;
    for (const auto& [s, a] : results) {
      offset[s] = next;
      next += a.n_clusters;
    }
    StageResult out;
    out.in = in.size();
    for (std::size_t k = 0; k < results.size(); ++k) {
      const auto& a = results[k].second;
      for (std::size_t i : by_source.at(results[k].first)) {
        auto r = in[i];
        const int c = a.label_of(r.utt_id);
        r.speaker_cluster = c == speaker::kNoise ? corpus::kNoiseCluster : c + offset[results[k].first];
        out.kept.push_back(std::move(r));
      }
    }
    restore_order(in, out.kept);
    return out;
  }

  static void restore_order(const corpus::Manifest& in, corpus::Manifest& m) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < in.size(); ++i) pos[in[i].utt_id] = i;
    std::sort(m.begin(), m.end(), [&](const auto& a, const auto& b) { return pos.at(a.utt_id) < pos.at(b.utt_id); });
  }

  StageResult stage_gender(const corpus::Manifest& in) {
    const auto model = gender::load_model(cfg_.gender_model);
    const auto embs = load_embedding_map();
    std::vector<gender::Prediction> preds(in.size());
    parallel_for(in.size(), jobs_, [&](std::size_t i) {
      auto it = embs.find(in[i].utt_id);
      if (it == embs.end()) throw Error("no embedding for " + in[i].utt_id);
      preds[i] = gender::predict(model, it->second);
    });
    speaker::ClusterAssignment assignment;
    std::map<std::string, gender::Prediction> by_id;
    for (std::size_t i = 0; i < in.size(); ++i) {
      assignment.labels[in[i].utt_id] = in[i].speaker_cluster.value_or(speaker::kNoise);
      by_id[in[i].utt_id] = preds[i];
    }
    const auto dominant = gender::dominant_gender(assignment, by_id);
    StageResult out;
    out.in = in.size();
    for (std::size_t i = 0; i < in.size(); ++i) {
      auto r = in[i];
      const int c = r.speaker_cluster.value_or(speaker::kNoise);
      r.gender = gender::to_string(c == speaker::kNoise ? preds[i].label : dominant.at(c));
      r.extra["gender_margin"] = preds[i].margin;
      out.kept.push_back(std::move(r));
    }
    return out;
  }

  StageResult stage_select(const corpus::Manifest& in) {
    std::vector<speaker::BudgetRecord> recs;
    for (const auto& r : in) {
      if (!r.snr_db) throw Error("select needs snr_db on " + r.utt_id);
      recs.push_back({r.utt_id, r.duration_s, *r.snr_db, r.speaker_cluster.value_or(speaker::kNoise)});
    }
    const auto sel = speaker::select_budget(recs, cfg_.select);
    const std::set<std::string> selected(sel.selected.begin(), sel.selected.end());
    const std::set<std::string> unclustered(sel.unclustered.begin(), sel.unclustered.end());
    StageResult out;
    out.in = in.size();
    for (auto r : in) {
      if (selected.count(r.utt_id)) {
        r.status = corpus::Status::kSelected;
        out.kept.push_back(std::move(r));
      } else {
        reject(std::move(r), unclustered.count(r.utt_id) ? "unclustered" : "over_budget", std::nullopt, out);
      }
    }
    return out;
  }

  StageResult stage_textclean(const corpus::Manifest& in) {
    const auto vocab = text::load_vocabulary(cfg_.vocab);
    std::map<std::string, std::string> transcripts;
    if (!cfg_.transcripts.empty()) {
      std::istringstream s(corpusforge::detail::read_file(cfg_.transcripts));
      for (std::string line; std::getline(s, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tab = line.find('\t');
        if (line.empty() || tab == std::string::npos) continue;
        transcripts[line.substr(0, tab)] = line.substr(tab + 1);
      }
    }
    StageResult out;
    out.in = in.size();
    text::CleanReport report;
    for (auto r : in) {
      if (auto it = transcripts.find(r.utt_id); it != transcripts.end()) r.transcript = it->second;
      if (!r.transcript) {
        out.kept.push_back(std::move(r));  // nothing to clean
        continue;
      }
      const auto c = text::clean_transcript(*r.transcript, vocab, &report);
      switch (c.status) {
        case text::CleanStatus::kKept:
          r.transcript = c.text;
          out.kept.push_back(std::move(r));
          break;
        case text::CleanStatus::kNumeric:
          reject(std::move(r), "numeric", corpus::Status::kNumericRejected, out);
          break;
        case text::CleanStatus::kForeign: {
          std::string chars;
          for (char32_t ch : c.offending) chars += text::code_point_to_utf8(ch);
          r.extra["offending"] = chars;
          reject(std::move(r), "foreign", corpus::Status::kForeignRejected, out);
          break;
        }
      }
    }
    return out;
  }

  StageResult stage_split(const corpus::Manifest& in) {
    StageResult out;
    out.in = in.size();
    corpus::SplitResult parts;
    if (!in.empty()) {
      parts = corpus::split_by_speaker(in, cfg_.split);
      out.warnings = parts.warnings;
    }
    static const char* kNames[] = {"train", "dev", "test"};
    std::map<std::string, std::string> split_of;
    for (std::size_t k = 0; k < 3; ++k) {
      corpus::write_manifest(cfg_.output_dir / (std::string(kNames[k]) + ".jsonl"), parts.part(k));
      for (const auto& r : parts.part(k)) split_of[r.utt_id] = kNames[k];
    }
    for (auto r : in) {
      r.extra["split"] = split_of.at(r.utt_id);
      out.kept.push_back(std::move(r));
    }
    return out;
  }

  const PipelineConfig& cfg_;
  RunOptions opt_;
  std::size_t jobs_;
  std::vector<InputFile> inputs_;
  std::vector<StageResult> partial_;
  std::vector<char> partial_done_;
};

}  // namespace detail

inline RunReport run_pipeline(const PipelineConfig& config, const RunOptions& options = {}) {
  return detail::Runner(config, options).run();
}

}  // namespace corpusforge::pipeline
