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
// Forced alignment by synthesis: render each text fragment through a
// synthesis provider, DTW-align the MFCCs of the rendering against the real
// recording, and carry the fragment boundaries across the warp path.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "corpusforge/audio.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/text.hpp"

namespace corpusforge::align {

struct TextFragment {
  std::string id;
  std::string text;
};

// Half-open range of frames in the synthesized MFCC timeline.
struct Segment {
  std::string fragment_id;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
};

struct SynthResult {
  AudioBuffer audio;
  std::vector<Segment> segments;
};

struct AlignedFragment {
  std::string fragment_id;
  double start_s = 0.0;
  double end_s = 0.0;
  double confidence = 0.0;  // mean matched-frame distance; lower is better
};

// ---------------------------------------------------------------------------
// Synthesis providers

class SynthesisProvider {
 public:
  virtual ~SynthesisProvider() = default;
  // Renders one fragment at the canonical rate.
  virtual AudioBuffer render(const std::string& text) const = 0;
  virtual std::string name() const = 0;
};

// Hermetic provider: every code point becomes an 80 ms tone at a fixed
// frequency; spaces become 80 ms of silence.
class ToneCodeProvider : public SynthesisProvider {
 public:
  static constexpr double kSymbolMs = 80.0;
  static constexpr double kAmplitude = 0.5;

  static double frequency(char32_t cp) { return 250.0 + 55.0 * static_cast<double>(cp % 48); }

  static std::size_t symbol_samples() { return static_cast<std::size_t>(kSymbolMs * kCanonicalRate / 1000.0); }

  // One symbol's samples, with 5 ms raised-cosine ramps.
  static std::vector<float> render_symbol(char32_t cp, std::size_t n_samples) {
    std::vector<float> out(n_samples, 0.0f);
    if (cp == U' ') return out;
    const double f = frequency(cp);
    const auto ramp = static_cast<std::size_t>(0.005 * kCanonicalRate);
    for (std::size_t n = 0; n < n_samples; ++n) {
      double env = 1.0;
      if (n < ramp)
        env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n) / ramp);
      else if (n + ramp >= n_samples)
        env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n_samples - 1 - n) / ramp);
      out[n] = static_cast<float>(kAmplitude * env *
                                  std::sin(2.0 * std::numbers::pi * f * static_cast<double>(n) / kCanonicalRate));
    }
    return out;
  }

  AudioBuffer render(const std::string& text) const override {
    AudioBuffer out;
    for (char32_t cp : text::utf8_to_utf32(text)) {
      auto sym = render_symbol(cp, symbol_samples());
      out.samples.insert(out.samples.end(), sym.begin(), sym.end());
    }
    return out;
  }

  std::string name() const override { return "tone-code"; }
};

// Shells out to the espeak binary. Not exercised by the test suite.
class EspeakProvider : public SynthesisProvider {
 public:
  explicit EspeakProvider(std::string voice = "en", std::string binary = "espeak")
      : voice_(std::move(voice)), binary_(std::move(binary)) {}

  AudioBuffer render(const std::string& text) const override {
    const auto dir = std::filesystem::temp_directory_path();
    const auto wav = dir / ("corpusforge_espeak_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".wav");
    const auto txt = dir / ("corpusforge_espeak_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".txt");
    corpusforge::detail::write_file_atomic(txt, text);
    const std::string cmd = binary_ + " -v " + voice_ + " -w '" + wav.string() + "' -f '" + txt.string() + "'";
    if (std::system(cmd.c_str()) != 0) throw Error("synthesis provider failed: " + cmd);
    auto audio = read_wav(wav, kCanonicalRate);
    std::filesystem::remove(wav);
    std::filesystem::remove(txt);
    return audio;
  }

  std::string name() const override { return "espeak"; }

 private:
  std::string voice_;
  std::string binary_;
};

inline std::unique_ptr<SynthesisProvider> make_provider(const std::string& name) {
  if (name == "tone-code") return std::make_unique<ToneCodeProvider>();
  if (name == "espeak") return std::make_unique<EspeakProvider>();
  throw Error("unknown synthesis provider: " + name);
}

// Concatenates the renderings and records each fragment's frame range. A
// boundary at sample s falls on frame round(s / hop). With pad_ms > 0 the
// timeline is wrapped in that much silence, which belongs to no fragment;
// without padding the last segment runs to the final MFCC frame.
inline SynthResult synthesize(const std::vector<TextFragment>& fragments, const SynthesisProvider& provider,
                              const MfccConfig& mfcc_config = {}, double pad_ms = 0.0) {
  if (fragments.empty()) throw Error("no fragments to synthesize");
  if (pad_ms < 0.0) throw Error("pad_ms must be non-negative");
  const MfccExtractor extractor(mfcc_config);
  const auto pad = static_cast<std::size_t>(std::lround(pad_ms * kCanonicalRate / 1000.0));
  SynthResult out;
  out.audio.samples.assign(pad, 0.0f);
  std::vector<std::size_t> sample_bounds{pad};
  for (const auto& f : fragments) {
    if (f.text.empty()) throw Error("empty fragment: " + f.id);
    const auto audio = provider.render(f.text);
    if (audio.sample_rate != kCanonicalRate) throw Error("provider returned non-canonical rate");
    out.audio.samples.insert(out.audio.samples.end(), audio.samples.begin(), audio.samples.end());
    sample_bounds.push_back(out.audio.samples.size());
  }
  out.audio.samples.resize(out.audio.samples.size() + pad, 0.0f);
  const std::size_t n_frames =
      frame_count(out.audio.samples.size(), extractor.window_samples(), extractor.hop_samples());
  const auto hop = static_cast<double>(extractor.hop_samples());
  auto to_frame = [&](std::size_t s) {
    return std::min(n_frames, static_cast<std::size_t>(std::lround(static_cast<double>(s) / hop)));
  };
  for (std::size_t k = 0; k < fragments.size(); ++k) {
    const std::size_t start = to_frame(sample_bounds[k]);
    const bool last = k + 1 == fragments.size();
    const std::size_t end = last && pad == 0 ? n_frames : to_frame(sample_bounds[k + 1]);
    out.segments.push_back({fragments[k].id, start, std::max(start, end)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// DTW

struct WarpPath {
  std::vector<std::pair<std::size_t, std::size_t>> steps;
  std::vector<double> local_cost;  // distance of each matched frame pair
};

struct DtwResult {
  WarpPath path;
  double cost = 0.0;
};

struct DtwOptions {
  // Sakoe-Chiba half-width in frames around the scaled diagonal; nullopt
  // disables the band.
  std::optional<std::size_t> band;
};

inline double frame_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// Full dynamic program with steps (1,1), (0,1), (1,0); on equal cost the
// predecessor is preferred in that order.
inline DtwResult dtw(const MfccMatrix& a, const MfccMatrix& b, const DtwOptions& options = {}) {
  if (a.empty() || b.empty()) throw Error("dtw needs non-empty inputs");
  if (a.n_coeffs != b.n_coeffs) {
    throw Error(corpusforge::detail::concat("coefficient-count mismatch: ", a.n_coeffs, " vs ", b.n_coeffs));
  }
  const std::size_t m = a.n_frames, n = b.n_frames;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(m * n, kInf);
  std::vector<std::uint8_t> from(m * n, 0);  // 0 start, 1 diag, 2 (0,1), 3 (1,0)

  auto in_band = [&](std::size_t i, std::size_t j) {
    if (!options.band) return true;
    const double centre =
        m > 1 ? static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(m - 1) : 0.0;
    return std::abs(static_cast<double>(j) - centre) <= static_cast<double>(*options.band) + 0.5;
  };

  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_band(i, j) && !(i == 0 && j == 0) && !(i == m - 1 && j == n - 1)) continue;
      const double d = frame_distance(a.row(i), b.row(j));
      if (i == 0 && j == 0) {
        acc[0] = d;
        continue;
      }
      double best = kInf;
      std::uint8_t dir = 0;
      if (i > 0 && j > 0 && acc[(i - 1) * n + (j - 1)] < best) {
        best = acc[(i - 1) * n + (j - 1)];
        dir = 1;
      }
      if (j > 0 && acc[i * n + (j - 1)] < best) {
        best = acc[i * n + (j - 1)];
        dir = 2;
      }
      if (i > 0 && acc[(i - 1) * n + j] < best) {
        best = acc[(i - 1) * n + j];
        dir = 3;
      }
      if (dir == 0) continue;
      acc[i * n + j] = best + d;
      from[i * n + j] = dir;
    }
  }
  if (std::isinf(acc[m * n - 1])) throw Error("dtw band too narrow: end point unreachable");

  DtwResult out;
  out.cost = acc[m * n - 1];
  std::size_t i = m - 1, j = n - 1;
  while (true) {
    out.path.steps.emplace_back(i, j);
    out.path.local_cost.push_back(frame_distance(a.row(i), b.row(j)));
    const auto dir = from[i * n + j];
    if (dir == 0) break;
    if (dir == 1) {
      --i;
      --j;
    } else if (dir == 2) {
      --j;
    } else {
      --i;
    }
  }
  std::reverse(out.path.steps.begin(), out.path.steps.end());
  std::reverse(out.path.local_cost.begin(), out.path.local_cost.end());
  return out;
}

// Maps synthesized segment boundaries onto the real timeline: a boundary
// after synthesized frame i lands after the last real frame j paired with i.
// A segment starts at the boundary after its predecessor frame (0 for frame
// 0) and ends at the boundary after its own last frame. Boundaries are forced
// to be non-decreasing.
inline std::vector<AlignedFragment> map_boundaries(const WarpPath& path, const std::vector<Segment>& segments,
                                                   double hop_ms) {
  if (path.steps.empty()) throw Error("empty warp path");
  const std::size_t m = path.steps.back().first + 1;
  std::vector<std::size_t> last_j(m, 0);
  std::vector<double> cost_sum(m, 0.0);
  std::vector<std::size_t> cost_count(m, 0);
  for (std::size_t k = 0; k < path.steps.size(); ++k) {
    const auto [i, j] = path.steps[k];
    last_j[i] = std::max(last_j[i], j);
    if (k < path.local_cost.size()) {
      cost_sum[i] += path.local_cost[k];
      ++cost_count[i];
    }
  }
  const double hop_s = hop_ms / 1000.0;
  const std::size_t real_frames = path.steps.back().second + 1;
  std::vector<AlignedFragment> out;
  double prev_end = 0.0;
  for (const auto& seg : segments) {
    AlignedFragment f;
    f.fragment_id = seg.fragment_id;
    const std::size_t first = std::min(seg.start_frame, m - 1);
    const std::size_t last = seg.end_frame > seg.start_frame ? std::min(seg.end_frame - 1, m - 1) : first;
    f.start_s = first == 0 ? 0.0 : static_cast<double>(last_j[first - 1] + 1) * hop_s;
    f.end_s = static_cast<double>(last_j[last] + 1) * hop_s;
    f.start_s = std::max(f.start_s, prev_end);
    f.end_s = std::min(std::max(f.end_s, f.start_s + hop_s), static_cast<double>(real_frames) * hop_s);
    if (f.end_s <= f.start_s) f.end_s = f.start_s + hop_s;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = first; i <= last; ++i) {
      sum += cost_sum[i];
      count += cost_count[i];
    }
    f.confidence = count ? sum / static_cast<double>(count) : 0.0;
    prev_end = f.end_s;
    out.push_back(f);
  }
  return out;
}

// Alignment features use a raised log floor. Synthesized silence is exact
// zeros while real silence carries noise; at the default floor that gap
// outweighs the difference between two tones.
inline MfccConfig alignment_mfcc() {
  MfccConfig c;
  c.log_floor = 1e-4;
  return c;
}

struct AlignOptions {
  MfccConfig mfcc = alignment_mfcc();
  DtwOptions dtw;
  // Silence around the synthesized timeline absorbs leading and trailing
  // silence in the real audio.
  double pad_ms = 300.0;
};

inline std::vector<AlignedFragment> align(const AudioBuffer& real, const std::vector<TextFragment>& fragments,
                                          const SynthesisProvider& provider, const AlignOptions& options = {}) {
  const auto synth = synthesize(fragments, provider, options.mfcc, options.pad_ms);
  const MfccExtractor extractor(options.mfcc);
  const auto a = extractor(synth.audio);
  const auto b = extractor(real);
  const auto result = dtw(a, b, options.dtw);
  return map_boundaries(result.path, synth.segments, options.mfcc.hop_ms);
}

// One fragment per non-empty line.
inline std::vector<TextFragment> fragments_from_lines(const std::string& text) {
  std::vector<TextFragment> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string s = text.substr(start, end - start);
    if (!s.empty() && s.back() == '\r') s.pop_back();
    if (!s.empty()) out.push_back({"f" + std::to_string(out.size()), s});
    start = end + 1;
  }
  return out;
}

}  // namespace corpusforge::align
