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
// Audio buffers, RIFF/WAVE I/O, windowed-sinc resampling, and MFCC features.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "corpusforge/error.hpp"

namespace corpusforge {

inline constexpr int kCanonicalRate = 16000;

// Mono PCM at a fixed rate. Samples are nominally in [-1, 1]; write_wav clamps.
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = kCanonicalRate;

  double duration_s() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
  bool empty() const { return samples.empty(); }

  bool in_range() const {
    return std::all_of(samples.begin(), samples.end(), [](float s) { return s >= -1.0f && s <= 1.0f; });
  }

  AudioBuffer slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, samples.size());
    begin = std::min(begin, end);
    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(begin),
                       samples.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
  }
};

// ---------------------------------------------------------------------------
// Resampling

namespace detail {

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

// Windowed-sinc interpolation with a 64-tap Blackman-windowed kernel. When
// downsampling the cutoff follows the output Nyquist frequency.
inline AudioBuffer resample(const AudioBuffer& in, int target_rate) {
  if (target_rate <= 0) throw Error("target rate must be positive");
  if (in.sample_rate == target_rate || in.samples.empty()) {
    AudioBuffer out = in;
    out.sample_rate = target_rate;
    return out;
  }
  constexpr int kHalfTaps = 32;
  const double ratio = static_cast<double>(target_rate) / in.sample_rate;
  // Cutoff in cycles per input sample, slightly below Nyquist.
  const double cutoff = 0.5 * std::min(1.0, ratio) * 0.97;
  const auto n_in = static_cast<std::int64_t>(in.samples.size());
  const auto n_out = static_cast<std::int64_t>(std::llround(static_cast<double>(n_in) * ratio));

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (std::int64_t m = 0; m < n_out; ++m) {
    const double x = static_cast<double>(m) / ratio;
    const auto center = static_cast<std::int64_t>(std::floor(x));
    double acc = 0.0;
    for (std::int64_t k = center - kHalfTaps + 1; k <= center + kHalfTaps; ++k) {
      if (k < 0 || k >= n_in) continue;
      const double d = x - static_cast<double>(k);
      if (std::abs(d) >= kHalfTaps) continue;
      const double w = 0.42 + 0.5 * std::cos(std::numbers::pi * d / kHalfTaps) +
                       0.08 * std::cos(2.0 * std::numbers::pi * d / kHalfTaps);
      acc += in.samples[static_cast<std::size_t>(k)] * 2.0 * cutoff * detail::sinc(2.0 * cutoff * d) * w;
    }
    out.samples[static_cast<std::size_t>(m)] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// WAV I/O

namespace detail {

inline constexpr std::uint16_t kWavPcm = 1;
inline constexpr std::uint16_t kWavFloat = 3;
inline constexpr std::uint16_t kWavExtensible = 0xfffe;

}  // namespace detail

// Reads PCM16 or float32 RIFF/WAVE, downmixes to mono and resamples to
// target_rate.
inline AudioBuffer read_wav(const std::filesystem::path& path, int target_rate = kCanonicalRate) {
  if (!std::filesystem::exists(path)) throw Error("missing file: " + path.string());
  const std::string bytes = detail::read_file(path);
  detail::ByteReader r(bytes);
  try {
    if (r.take(4) != "RIFF") throw Error("not a RIFF file: " + path.string());
    r.u32();
    if (r.take(4) != "WAVE") throw Error("not a WAVE file: " + path.string());
  } catch (const Error& e) {
    if (std::string(e.what()) == "truncated") throw Error("not a RIFF file: " + path.string());
    throw;
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::string_view data;
  bool have_data = false;
  while (r.has(8)) {
    const std::string_view id = r.take(4);
    const std::uint32_t size = r.u32();
    const std::size_t avail = std::min<std::size_t>(size, r.remaining());
    const std::string_view body = r.take(avail);
    if (size % 2 == 1 && r.has(1)) r.take(1);
    if (id == "fmt ") {
      detail::ByteReader f(body);
      format = f.u16();
      channels = f.u16();
      rate = f.u32();
      f.u32();
      f.u16();
      bits = f.u16();
      if (format == detail::kWavExtensible) {
        if (!f.has(10)) throw Error("unsupported codec: malformed extensible header");
        f.u16();
        f.u16();
        f.u32();
        format = f.u16();
      }
      have_fmt = true;
    } else if (id == "data") {
      data = body;
      have_data = true;
      break;
    }
  }
  if (!have_fmt) throw Error("missing fmt chunk: " + path.string());
  if (!have_data) throw Error("missing data chunk: " + path.string());
  const bool pcm16 = format == detail::kWavPcm && bits == 16;
  const bool float32 = format == detail::kWavFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(detail::concat("unsupported codec: format ", format, ", ", bits, " bits"));
  }
  if (channels == 0 || rate == 0) throw Error("unsupported codec: zero channels or rate");
  if (data.empty()) throw Error("zero-length data chunk: " + path.string());

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data.size() / frame_bytes;
  if (n_frames == 0) throw Error("zero-length data chunk: " + path.string());

  AudioBuffer buf;
  buf.sample_rate = static_cast<int>(rate);
  buf.samples.resize(n_frames);
  detail::ByteReader d(data);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      if (pcm16) {
        acc += static_cast<std::int16_t>(d.u16()) / 32768.0;
      } else {
        acc += d.f32();
      }
    }
    buf.samples[i] = static_cast<float>(std::clamp(acc / channels, -1.0, 1.0));
  }
  if (buf.sample_rate != target_rate) return resample(buf, target_rate);
  return buf;
}

// Writes 16-bit PCM mono. Samples are clamped to [-1, 1] and scaled by 32768.
inline void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path) {
  const auto n = static_cast<std::uint32_t>(buffer.samples.size());
  std::string out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out += "RIFF";
  detail::put_u32(out, 36 + 2 * n);
  out += "WAVE";
  out += "fmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, detail::kWavPcm);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * 2);
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out += "data";
  detail::put_u32(out, 2 * n);
  for (float s : buffer.samples) {
    const double c = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const long q = std::clamp(std::lround(c * 32768.0), -32768L, 32767L);
    detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  detail::write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Spectral helpers

// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw Error("fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// |X[k]|^2 / n_fft for k in [0, n_fft/2]; the frame is zero-padded to n_fft.
inline std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft) {
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t i = 0; i < std::min(frame.size(), n_fft); ++i) buf[i] = frame[i];
  fft(buf);
  std::vector<double> p(n_fft / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]) / static_cast<double>(n_fft);
  return p;
}

// ---------------------------------------------------------------------------
// MFCC

struct MfccConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  int n_coeffs = 13;
  int n_mel_filters = 26;
  double pre_emphasis = 0.97;
  double log_floor = 1e-10;

  void validate() const {
    if (n_coeffs < 1 || n_coeffs > n_mel_filters) throw Error("n_coeffs must be in [1, n_mel_filters]");
    if (!(hop_ms > 0.0) || !(frame_ms > hop_ms)) throw Error("require frame_ms > hop_ms > 0");
  }
};

// Row-major n_frames x n_coeffs.
struct MfccMatrix {
  std::size_t n_frames = 0;
  std::size_t n_coeffs = 0;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * n_coeffs, n_coeffs}; }
  double at(std::size_t i, std::size_t c) const { return values[i * n_coeffs + c]; }
  bool empty() const { return n_frames == 0; }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline std::size_t frame_count(std::size_t n_samples, std::size_t win, std::size_t hop) {
  if (win == 0 || hop == 0 || n_samples < win) return 0;
  return (n_samples - win) / hop + 1;
}

// Precomputes window, filterbank and DCT for one (config, rate) pair.
class MfccExtractor {
 public:
  explicit MfccExtractor(const MfccConfig& config = {}, int sample_rate = kCanonicalRate)
      : config_(config), sample_rate_(sample_rate) {
    config_.validate();
    win_ = static_cast<std::size_t>(std::lround(config_.frame_ms * sample_rate_ / 1000.0));
    hop_ = static_cast<std::size_t>(std::lround(config_.hop_ms * sample_rate_ / 1000.0));
    n_fft_ = next_pow2(win_);

    window_.resize(win_);
    for (std::size_t n = 0; n < win_; ++n) {
      window_[n] =
          0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(win_ - 1));
    }

    // Triangular HTK-mel filters evaluated at FFT bin centre frequencies.
    const auto n_filt = static_cast<std::size_t>(config_.n_mel_filters);
    const std::size_t n_bins = n_fft_ / 2 + 1;
    const double mel_hi = hz_to_mel(sample_rate_ / 2.0);
    std::vector<double> edges(n_filt + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_filt + 1));
    }
    filters_.assign(n_filt * n_bins, 0.0);
    for (std::size_t m = 0; m < n_filt; ++m) {
      const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
      for (std::size_t k = 0; k < n_bins; ++k) {
        const double f = static_cast<double>(k) * sample_rate_ / static_cast<double>(n_fft_);
        double w = 0.0;
        if (f > lo && f <= mid)
          w = (f - lo) / (mid - lo);
        else if (f > mid && f < hi)
          w = (hi - f) / (hi - mid);
        filters_[m * n_bins + k] = w;
      }
    }

    // Orthonormal DCT-II, first n_coeffs rows.
    const auto n_c = static_cast<std::size_t>(config_.n_coeffs);
    dct_.resize(n_c * n_filt);
    for (std::size_t k = 0; k < n_c; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n_filt) : std::sqrt(2.0 / n_filt);
      for (std::size_t n = 0; n < n_filt; ++n) {
        dct_[k * n_filt + n] =
            scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(n) + 1.0) /
                             (2.0 * static_cast<double>(n_filt)));
      }
    }
  }

  std::size_t window_samples() const { return win_; }
  std::size_t hop_samples() const { return hop_; }
  const MfccConfig& config() const { return config_; }

  MfccMatrix operator()(const AudioBuffer& buffer) const {
    if (buffer.sample_rate != sample_rate_) {
      throw Error(detail::concat("mfcc expects ", sample_rate_, " Hz input, got ", buffer.sample_rate));
    }
    MfccMatrix out;
    out.frame_ms = config_.frame_ms;
    out.hop_ms = config_.hop_ms;
    out.n_coeffs = static_cast<std::size_t>(config_.n_coeffs);
    out.n_frames = frame_count(buffer.samples.size(), win_, hop_);
    if (out.n_frames == 0) return out;

    const auto& x = buffer.samples;
    std::vector<double> emph(x.size());
    emph[0] = x[0];
    for (std::size_t i = 1; i < x.size(); ++i) emph[i] = x[i] - config_.pre_emphasis * x[i - 1];

    const auto n_filt = static_cast<std::size_t>(config_.n_mel_filters);
    const std::size_t n_bins = n_fft_ / 2 + 1;
    std::vector<double> frame(win_), logmel(n_filt);
    out.values.resize(out.n_frames * out.n_coeffs);
    for (std::size_t t = 0; t < out.n_frames; ++t) {
      const std::size_t off = t * hop_;
      for (std::size_t n = 0; n < win_; ++n) frame[n] = emph[off + n] * window_[n];
      const auto power = power_spectrum(frame, n_fft_);
      for (std::size_t m = 0; m < n_filt; ++m) {
        double e = 0.0;
        const double* w = &filters_[m * n_bins];
        for (std::size_t k = 0; k < n_bins; ++k) e += w[k] * power[k];
        logmel[m] = std::log(std::max(e, config_.log_floor));
      }
      for (std::size_t k = 0; k < out.n_coeffs; ++k) {
        double c = 0.0;
        for (std::size_t n = 0; n < n_filt; ++n) c += dct_[k * n_filt + n] * logmel[n];
        out.values[t * out.n_coeffs + k] = c;
      }
    }
    return out;
  }

 private:
  MfccConfig config_;
  int sample_rate_;
  std::size_t win_ = 0, hop_ = 0, n_fft_ = 0;
  std::vector<double> window_;
  std::vector<double> filters_;
  std::vector<double> dct_;
};

inline MfccMatrix mfcc(const AudioBuffer& buffer, const MfccConfig& config = {}) {
  return MfccExtractor(config, buffer.sample_rate)(buffer);
}

}  // namespace corpusforge
