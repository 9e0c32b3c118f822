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
// Seeded synthetic data: speaker-embedding blobs, a two-Gaussian gender set,
// WADA-model signals and speech-like multi-speaker recordings.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "corpusforge/audio.hpp"
#include "corpusforge/gender.hpp"
#include "corpusforge/snr_model.hpp"
#include "corpusforge/speaker.hpp"

namespace corpusforge::synthetic {

inline std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = n(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// ---------------------------------------------------------------------------
// Speaker blobs

struct BlobSet {
  std::vector<speaker::Embedding> embeddings;
  std::map<std::string, std::string> truth;  // utt_id -> speaker
  double min_center_distance = 0.0;
};

// Centres are random unit vectors; each point is centre + isotropic noise
// whose expected norm is sigma, then L2-normalized.
inline BlobSet speaker_blobs(std::size_t n_speakers, std::size_t per_speaker, std::size_t dim, double sigma,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma / std::sqrt(static_cast<double>(dim)));
  std::vector<std::vector<double>> centers;
  for (std::size_t s = 0; s < n_speakers; ++s) centers.push_back(random_unit(dim, rng));
  BlobSet out;
  out.min_center_distance = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n_speakers; ++a) {
    for (std::size_t b = a + 1; b < n_speakers; ++b) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d2 += (centers[a][k] - centers[b][k]) * (centers[a][k] - centers[b][k]);
      out.min_center_distance = std::min(out.min_center_distance, std::sqrt(d2));
    }
  }
  char buf[64];
  for (std::size_t s = 0; s < n_speakers; ++s) {
    for (std::size_t i = 0; i < per_speaker; ++i) {
      std::snprintf(buf, sizeof(buf), "spk%03zu_utt%03zu", s, i);
      speaker::Embedding e;
      e.utt_id = buf;
      e.vector.resize(dim);
      for (std::size_t k = 0; k < dim; ++k) e.vector[k] = static_cast<float>(centers[s][k] + n(rng));
      speaker::l2_normalize(e.vector);
      std::snprintf(buf, sizeof(buf), "spk%03zu", s);
      out.truth[e.utt_id] = buf;
      out.embeddings.push_back(std::move(e));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gender set: two isotropic Gaussians whose means are delta apart along a
// random direction; per-coordinate standard deviation sigma.

inline gender::LabeledSet gender_set(std::size_t n, std::size_t dim, double delta, double sigma, std::uint64_t seed,
                                     std::uint64_t direction_seed = 99) {
  std::mt19937_64 dir_rng(direction_seed);
  const auto u = random_unit(dim, dir_rng);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  gender::LabeledSet out;
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    const gender::Gender g = i % 2 == 0 ? gender::Gender::kMale : gender::Gender::kFemale;
    const double side = gender::sign_of(g) * delta / 2.0;
    gender::LabeledExample ex{{}, g};
    std::snprintf(buf, sizeof(buf), "g%05zu", i);
    ex.x.utt_id = buf;
    ex.x.vector.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) ex.x.vector[k] = static_cast<float>(side * u[k] + noise(rng));
    out.push_back(std::move(ex));
  }
  return out;
}

// ---------------------------------------------------------------------------
// WADA generative model: Gamma(shape 0.4) magnitudes with random sign, plus
// unit Gaussian noise scaled to the requested SNR.

inline std::vector<float> wada_signal(std::size_t n, double snr_db, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(snr::kGammaShape, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> speech(n), noise(n);
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    speech[i] = (sign(rng) ? 1.0 : -1.0) * gamma(rng);
    noise[i] = normal(rng);
    ps += speech[i] * speech[i];
    pn += noise[i] * noise[i];
  }
  const double scale = std::sqrt(ps / pn / std::pow(10.0, snr_db / 10.0));
  std::vector<double> mix(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mix[i] = speech[i] + scale * noise[i];
    peak = std::max(peak, std::abs(mix[i]));
  }
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(0.9 * mix[i] / peak);
  return out;
}

// ---------------------------------------------------------------------------
// Speech-like voices

struct Voice {
  double f0 = 120.0;
  std::vector<double> formants = {500.0, 1500.0, 2500.0};
  std::vector<double> bandwidths = {80.0, 100.0, 120.0};
};

// Spread voices over a pitch and formant range; even index = lower voice.
inline Voice make_voice(std::size_t index, std::size_t count) {
  Voice v;
  const double t = count > 1 ? static_cast<double>(index) / static_cast<double>(count - 1) : 0.0;
  v.f0 = 95.0 + 160.0 * t;
  const double stretch = 0.85 + 0.35 * t;
  v.formants = {520.0 * stretch, 1450.0 * stretch, 2450.0 * stretch};
  return v;
}

// One utterance: harmonic source through a formant envelope, syllable-rate
// amplitude modulation and slight vibrato.
inline std::vector<float> voiced_utterance(const Voice& v, double seconds, int rate, std::mt19937_64& rng,
                                           double level = 0.3) {
  const std::size_t n = static_cast<std::size_t>(seconds * rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double syllable_hz = 3.0 + 2.0 * u(rng);
  const double phase0 = 2.0 * std::numbers::pi * u(rng);
  const double vibrato_hz = 4.0 + 2.0 * u(rng);
  std::vector<double> out(n, 0.0);
  const int harmonics = static_cast<int>(4000.0 / v.f0);
  std::vector<double> amp(static_cast<std::size_t>(harmonics) + 1, 0.0);
  for (int h = 1; h <= harmonics; ++h) {
    const double f = h * v.f0;
    double a = 0.0;
    for (std::size_t k = 0; k < v.formants.size(); ++k) {
      const double d = (f - v.formants[k]) / v.bandwidths[k];
      a += std::exp(-0.5 * d * d) / static_cast<double>(k + 1);
    }
    amp[static_cast<std::size_t>(h)] = a + 0.02;
  }
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double f0 = v.f0 * (1.0 + 0.02 * std::sin(2.0 * std::numbers::pi * vibrato_hz * t));
    phase += 2.0 * std::numbers::pi * f0 / rate;
    double s = 0.0;
    for (int h = 1; h <= harmonics; ++h) s += amp[static_cast<std::size_t>(h)] * std::sin(h * phase);
    // Syllables with near-silent dips between them; real speech spends much
    // of its time quiet, which is what amplitude-based SNR estimators expect.
    const double syl = std::max(0.0, std::sin(2.0 * std::numbers::pi * syllable_hz * t + phase0));
    const double env = 0.05 + syl * syl * syl;
    // 20 ms fades avoid clicks at the edges.
    const double fade = std::min({1.0, t / 0.02, (seconds - t) / 0.02});
    out[i] = s * env * fade;
  }
  double peak = 0.0;
  for (double x : out) peak = std::max(peak, std::abs(x));
  std::vector<float> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = static_cast<float>(peak > 0 ? level * out[i] / peak : 0.0);
  return f;
}

struct RecordingSpec {
  std::vector<Voice> voices;
  double total_s = 300.0;
  double min_utt_s = 2.0;
  double max_utt_s = 9.0;
  double min_gap_s = 0.8;
  double max_gap_s = 1.6;
  double noise_rms = 0.002;  // background Gaussian noise
  int sample_rate = kCanonicalRate;
  std::uint64_t seed = 1;
};

struct Recording {
  AudioBuffer audio;
  struct Turn {
    std::size_t voice;
    std::size_t start_sample;
    std::size_t end_sample;
  };
  std::vector<Turn> turns;
};

// Alternating speaker turns separated by near-silence.
inline Recording long_recording(const RecordingSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, spec.noise_rms);
  Recording rec;
  rec.audio.sample_rate = spec.sample_rate;
  const std::size_t total = static_cast<std::size_t>(spec.total_s * spec.sample_rate);
  auto& s = rec.audio.samples;
  s.reserve(total);
  auto gap = [&] {
    const double g = spec.min_gap_s + (spec.max_gap_s - spec.min_gap_s) * u(rng);
    s.resize(std::min(total, s.size() + static_cast<std::size_t>(g * spec.sample_rate)), 0.0f);
  };
  gap();
  while (s.size() < total) {
    const std::size_t voice =
        static_cast<std::size_t>(u(rng) * static_cast<double>(spec.voices.size())) % spec.voices.size();
    const double dur = spec.min_utt_s + (spec.max_utt_s - spec.min_utt_s) * u(rng);
    const double level = 0.2 + 0.2 * u(rng);
    auto utt = voiced_utterance(spec.voices[voice], dur, spec.sample_rate, rng, level);
    if (s.size() + utt.size() > total) break;
    rec.turns.push_back({voice, s.size(), s.size() + utt.size()});
    s.insert(s.end(), utt.begin(), utt.end());
    gap();
  }
  s.resize(total, 0.0f);
  for (auto& x : s) x = std::clamp(static_cast<float>(x + noise(rng)), -1.0f, 1.0f);
  return rec;
}

}  // namespace corpusforge::synthetic
