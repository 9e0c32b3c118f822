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
// Blind SNR estimation by waveform amplitude distribution analysis (WADA).
//
// Speech amplitudes are modelled as Gamma(shape 0.4) with a random sign and
// the noise as Gaussian. Under that model the statistic
//
//   g = ln(E|z|) - E[ln|z|]
//
// is scale-free and strictly increasing in the SNR, so an observed g maps back
// to an SNR through a precomputed table.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "corpusforge/audio.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/snr_model.hpp"
#include "corpusforge/wada_table.hpp"

namespace corpusforge::snr {

struct SnrEstimate {
  double db = 0.0;
};

struct SnrThresholds {
  double min_db = 20.0;
  double max_db = 60.0;

  void validate() const {
    if (!(min_db < max_db)) throw Error("snr thresholds require min < max");
  }
};

// (g, snr_db) pairs sorted by strictly increasing g.
class GainTable {
 public:
  GainTable(std::vector<double> g, std::vector<double> db) : g_(std::move(g)), db_(std::move(db)) {
    if (g_.size() != db_.size() || g_.size() < 2) throw Error("gain table needs >= 2 matching entries");
    for (std::size_t i = 1; i < g_.size(); ++i) {
      if (!(g_[i] > g_[i - 1])) throw Error("gain table must be strictly increasing in g");
    }
  }

  // The committed table: -20..100 dB in 1 dB steps.
  static const GainTable& standard() {
    static const GainTable table = [] {
      std::vector<double> g(kWadaTable.begin(), kWadaTable.end());
      std::vector<double> db(g.size());
      for (std::size_t i = 0; i < db.size(); ++i) db[i] = kWadaTableMinDb + static_cast<double>(i);
      return GainTable(std::move(g), std::move(db));
    }();
    return table;
  }

  // Linear interpolation; g outside the table clamps to the end points.
  double invert(double g) const {
    if (g <= g_.front()) return db_.front();
    if (g >= g_.back()) return db_.back();
    const auto it = std::upper_bound(g_.begin(), g_.end(), g);
    const auto hi = static_cast<std::size_t>(it - g_.begin());
    const std::size_t lo = hi - 1;
    const double frac = (g - g_[lo]) / (g_[hi] - g_[lo]);
    return db_[lo] + frac * (db_[hi] - db_[lo]);
  }

  const std::vector<double>& g_values() const { return g_; }
  const std::vector<double>& db_values() const { return db_; }

 private:
  std::vector<double> g_;
  std::vector<double> db_;
};

// ---------------------------------------------------------------------------

inline SnrEstimate wada_snr(std::span<const float> samples, const GainTable& table = GainTable::standard()) {
  double sum_abs = 0.0, sum_log = 0.0;
  std::size_t n = 0;
  for (float s : samples) {
    const double a = std::abs(static_cast<double>(s));
    if (a < 1e-10) continue;
    sum_abs += a;
    sum_log += std::log(a);
    ++n;
  }
  if (n == 0) throw Error("silent input");
  const double g = std::log(sum_abs / static_cast<double>(n)) - sum_log / static_cast<double>(n);
  return {std::clamp(table.invert(g), kMinDb, kMaxDb)};
}

inline SnrEstimate wada_snr(const AudioBuffer& buffer, const GainTable& table = GainTable::standard()) {
  return wada_snr(std::span<const float>(buffer.samples), table);
}

// Returns "snr_low" / "snr_high" for rejected values, nothing if kept.
inline std::optional<std::string> rejection_reason(double db, const SnrThresholds& thresholds) {
  if (db < thresholds.min_db) return "snr_low";
  if (db > thresholds.max_db) return "snr_high";
  return std::nullopt;
}

template <typename Record>
struct SnrPartition {
  std::vector<std::pair<Record, SnrEstimate>> kept;
  std::vector<std::pair<Record, std::string>> rejected;
};

// Keeps records with min_db <= db <= max_db; input order is preserved within
// each side.
template <typename Record>
SnrPartition<Record> filter_by_snr(const std::vector<std::pair<Record, SnrEstimate>>& records,
                                   const SnrThresholds& thresholds = {}) {
  thresholds.validate();
  SnrPartition<Record> out;
  for (const auto& [rec, est] : records) {
    if (auto reason = rejection_reason(est.db, thresholds)) {
      out.rejected.emplace_back(rec, *reason);
    } else {
      out.kept.emplace_back(rec, est);
    }
  }
  return out;
}

}  // namespace corpusforge::snr
