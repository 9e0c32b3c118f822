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
// Voice activity detection: a per-frame energy/flatness classifier feeding a
// padded ring-buffer trigger/detrigger collector, and chunking of the
// collected spans into 1-15 s pieces split at low-energy frames.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "corpusforge/audio.hpp"
#include "corpusforge/error.hpp"

namespace corpusforge::vad {

struct VadConfig {
  int aggressiveness = 2;
  int frame_ms = 30;
  int padding_ms = 300;
  double trigger_ratio = 0.9;
  double min_chunk_s = 1.0;
  double max_chunk_s = 15.0;

  int window_frames() const { return padding_ms / frame_ms; }

  void validate() const {
    if (aggressiveness < 0 || aggressiveness > 3) throw Error("aggressiveness must be 0-3");
    if (frame_ms != 10 && frame_ms != 20 && frame_ms != 30) throw Error("frame_ms must be 10, 20 or 30");
    if (padding_ms <= 0 || padding_ms % frame_ms != 0)
      throw Error("padding_ms must be a positive multiple of frame_ms");
    if (!(trigger_ratio > 0.0 && trigger_ratio <= 1.0)) throw Error("trigger_ratio must be in (0, 1]");
    if (!(min_chunk_s > 0.0 && min_chunk_s < max_chunk_s)) throw Error("require 0 < min_chunk_s < max_chunk_s");
  }
};

// Half-open sample range [start_sample, end_sample).
struct VoicedSpan {
  std::size_t start_sample = 0;
  std::size_t end_sample = 0;

  double duration_s(int rate) const { return static_cast<double>(end_sample - start_sample) / rate; }
  friend bool operator==(const VoicedSpan&, const VoicedSpan&) = default;
};

// Half-open frame range.
struct FrameSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
};

// ---------------------------------------------------------------------------
// Frame classifier

struct FrameFeatures {
  double energy_db = -200.0;  // mean power in dBFS
  double flatness = 1.0;      // spectral flatness over 80 Hz - 4 kHz
};

// Per-aggressiveness thresholds. Calibrated on the synthetic tone/noise corpus
// in tests/test_vad.cpp; each level is at least as strict as the previous on
// both axes, which makes the frame decisions nested.
struct ClassifierPreset {
  double min_energy_db;
  double max_flatness;
};

inline constexpr std::array<ClassifierPreset, 4> kPresets = {{
    {-60.0, 0.50},
    {-55.0, 0.45},
    {-50.0, 0.40},
    {-45.0, 0.35},
}};

inline FrameFeatures frame_features(std::span<const float> frame, int sample_rate = kCanonicalRate) {
  FrameFeatures f;
  if (frame.empty()) return f;
  double sum_sq = 0.0;
  for (float s : frame) sum_sq += static_cast<double>(s) * s;
  const double power = sum_sq / static_cast<double>(frame.size());
  f.energy_db = 10.0 * std::log10(power + 1e-20);

  std::vector<double> windowed(frame.size());
  for (std::size_t n = 0; n < frame.size(); ++n) {
    const double w =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(frame.size() - 1));
    windowed[n] = frame[n] * w;
  }
  const std::size_t n_fft = next_pow2(std::max<std::size_t>(frame.size(), 256));
  const auto p = power_spectrum(windowed, n_fft);
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n_fft);
  const auto lo = static_cast<std::size_t>(std::ceil(80.0 / bin_hz));
  const auto hi = std::min(p.size() - 1, static_cast<std::size_t>(std::floor(4000.0 / bin_hz)));
  double log_sum = 0.0, lin_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const double v = p[k] + 1e-20;
    log_sum += std::log(v);
    lin_sum += v;
    ++count;
  }
  if (count > 0 && lin_sum > 0.0) {
    f.flatness = std::exp(log_sum / static_cast<double>(count)) / (lin_sum / static_cast<double>(count));
  }
  return f;
}

inline bool is_voiced(const FrameFeatures& f, int aggressiveness) {
  const auto& p = kPresets.at(static_cast<std::size_t>(aggressiveness));
  return f.energy_db > p.min_energy_db && f.flatness < p.max_flatness;
}

// Frames must be 10, 20 or 30 ms long at the canonical rate.
inline bool classify_frame(std::span<const float> frame, int aggressiveness) {
  if (aggressiveness < 0 || aggressiveness > 3) throw Error("aggressiveness must be 0-3");
  const std::size_t n = frame.size();
  if (n != 160 && n != 320 && n != 480) {
    throw Error(detail::concat("wrong frame length ", n, ": expected 10, 20 or 30 ms at 16 kHz"));
  }
  return is_voiced(frame_features(frame), aggressiveness);
}

// ---------------------------------------------------------------------------
// Collector

// Runs the padded trigger/detrigger automaton over per-frame decisions.
// NOTTRIGGERED -> TRIGGERED when voiced frames in the ring exceed
// ratio * window; the span starts at the oldest frame in the ring.
// TRIGGERED -> NOTTRIGGERED when unvoiced frames reach ratio * window; the
// span ends after the detrigger frame. The ring is cleared on both edges.
inline std::vector<FrameSpan> collect_frames(const std::vector<bool>& voiced, int window_frames, double trigger_ratio) {
  if (window_frames <= 0) throw Error("window must hold at least one frame");
  const double threshold = trigger_ratio * window_frames;
  const auto window = static_cast<std::size_t>(window_frames);

  std::vector<FrameSpan> spans;
  std::deque<bool> ring;
  bool triggered = false;
  std::size_t start = 0;
  for (std::size_t t = 0; t < voiced.size(); ++t) {
    ring.push_back(voiced[t]);
    if (ring.size() > window) ring.pop_front();
    if (!triggered) {
      const auto n_voiced = static_cast<double>(std::count(ring.begin(), ring.end(), true));
      if (n_voiced > threshold + 1e-9) {
        triggered = true;
        start = t + 1 - ring.size();
        ring.clear();
      }
    } else {
      const auto n_unvoiced = static_cast<double>(std::count(ring.begin(), ring.end(), false));
      if (n_unvoiced >= threshold - 1e-9) {
        triggered = false;
        spans.push_back({start, t + 1});
        ring.clear();
      }
    }
  }
  if (triggered) spans.push_back({start, voiced.size()});
  return spans;
}

inline std::size_t frame_samples(const VadConfig& config, int sample_rate = kCanonicalRate) {
  return static_cast<std::size_t>(config.frame_ms) * static_cast<std::size_t>(sample_rate) / 1000;
}

inline std::vector<bool> frame_decisions(const AudioBuffer& buffer, const VadConfig& config) {
  const std::size_t len = frame_samples(config, buffer.sample_rate);
  const std::size_t n = buffer.samples.size() / len;
  std::vector<bool> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::span<const float> frame(buffer.samples.data() + t * len, len);
    out[t] = is_voiced(frame_features(frame, buffer.sample_rate), config.aggressiveness);
  }
  return out;
}

inline std::vector<VoicedSpan> collect_spans(const AudioBuffer& buffer, const VadConfig& config) {
  config.validate();
  if (buffer.sample_rate != kCanonicalRate) throw Error("collect_spans expects 16 kHz input");
  const auto decisions = frame_decisions(buffer, config);
  const auto frames = collect_frames(decisions, config.window_frames(), config.trigger_ratio);
  const std::size_t len = frame_samples(config, buffer.sample_rate);
  std::vector<VoicedSpan> spans;
  spans.reserve(frames.size());
  for (const auto& f : frames) {
    // A span still open at the last full frame runs to the end of the audio.
    const std::size_t end = f.end == decisions.size() ? buffer.samples.size() : f.end * len;
    spans.push_back({f.begin * len, end});
  }
  return spans;
}

// ---------------------------------------------------------------------------
// Chunking

struct ChunkPlan {
  std::vector<VoicedSpan> kept;
  std::vector<VoicedSpan> dropped;  // shorter than min_chunk_s
};

namespace detail {

inline void split_span(const AudioBuffer& buffer, VoicedSpan span, const VadConfig& config, ChunkPlan& plan) {
  const int rate = buffer.sample_rate;
  const double dur = span.duration_s(rate);
  if (dur < config.min_chunk_s) {
    plan.dropped.push_back(span);
    return;
  }
  if (dur <= config.max_chunk_s) {
    plan.kept.push_back(span);
    return;
  }
  // Cut at the centre of the quietest frame inside the middle third.
  const std::size_t len = frame_samples(config, rate);
  const std::size_t total = span.end_sample - span.start_sample;
  const std::size_t lo = span.start_sample + total / 3;
  const std::size_t hi = span.start_sample + 2 * total / 3;
  std::size_t best = lo;
  double best_energy = std::numeric_limits<double>::infinity();
  for (std::size_t f = span.start_sample; f + len <= span.end_sample; f += len) {
    if (f < lo || f + len > hi) continue;
    double e = 0.0;
    for (std::size_t i = f; i < f + len; ++i) e += static_cast<double>(buffer.samples[i]) * buffer.samples[i];
    if (e < best_energy) {
      best_energy = e;
      best = f;
    }
  }
  const std::size_t cut = std::isinf(best_energy) ? span.start_sample + total / 2 : best + len / 2;
  split_span(buffer, {span.start_sample, cut}, config, plan);
  split_span(buffer, {cut, span.end_sample}, config, plan);
}

}  // namespace detail

inline ChunkPlan plan_chunks(const AudioBuffer& buffer, std::span<const VoicedSpan> spans, const VadConfig& config) {
  config.validate();
  ChunkPlan plan;
  for (const auto& s : spans) {
    if (s.start_sample >= s.end_sample || s.end_sample > buffer.samples.size()) {
      throw Error("span outside buffer bounds");
    }
    detail::split_span(buffer, s, config, plan);
  }
  return plan;
}

inline std::vector<AudioBuffer> chunk(const AudioBuffer& buffer, std::span<const VoicedSpan> spans,
                                      const VadConfig& config) {
  const auto plan = plan_chunks(buffer, spans, config);
  std::vector<AudioBuffer> out;
  out.reserve(plan.kept.size());
  for (const auto& s : plan.kept) out.push_back(buffer.slice(s.start_sample, s.end_sample));
  return out;
}

}  // namespace corpusforge::vad
