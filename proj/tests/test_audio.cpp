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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "corpusforge/audio.hpp"
#include "test_util.hpp"

namespace cf = corpusforge;
using cftest::TempDir;

namespace {

cf::AudioBuffer tone(double hz, std::size_t n, int rate = 16000, double amp = 0.5) {
  cf::AudioBuffer b;
  b.sample_rate = rate;
  b.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.samples[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate));
  }
  return b;
}

// Raw RIFF writer so the reader is tested against bytes it did not produce.
std::string riff(std::uint16_t format, std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                 const std::string& data) {
  namespace d = cf::detail;
  std::string out = "RIFF";
  d::put_u32(out, static_cast<std::uint32_t>(36 + data.size()));
  out += "WAVEfmt ";
  d::put_u32(out, 16);
  d::put_u16(out, format);
  d::put_u16(out, channels);
  d::put_u32(out, rate);
  d::put_u32(out, rate * channels * bits / 8);
  d::put_u16(out, static_cast<std::uint16_t>(channels * bits / 8));
  d::put_u16(out, bits);
  out += "data";
  d::put_u32(out, static_cast<std::uint32_t>(data.size()));
  return out + data;
}

std::size_t dominant_bin(const cf::AudioBuffer& b, std::size_t n_fft) {
  std::vector<std::complex<double>> a(n_fft);
  for (std::size_t i = 0; i < std::min(n_fft, b.samples.size()); ++i) a[i] = b.samples[i];
  cf::fft(a);
  std::size_t best = 0;
  for (std::size_t k = 1; k < n_fft / 2; ++k) {
    if (std::abs(a[k]) > std::abs(a[best])) best = k;
  }
  return best;
}

}  // namespace

TEST(Wav, ZerosReadBack) {
  TempDir dir;
  std::string data(2 * 16000, '\0');
  cftest::write_text(dir / "z.wav", riff(1, 1, 16000, 16, data));
  auto b = cf::read_wav(dir / "z.wav");
  ASSERT_EQ(b.samples.size(), 16000u);
  for (float s : b.samples) EXPECT_EQ(s, 0.0f);
}

TEST(Wav, FullScalePositiveSample) {
  TempDir dir;
  std::string data;
  cf::detail::put_u16(data, 32767);
  cftest::write_text(dir / "one.wav", riff(1, 1, 16000, 16, data));
  auto b = cf::read_wav(dir / "one.wav");
  ASSERT_EQ(b.samples.size(), 1u);
  EXPECT_NEAR(b.samples[0], 32767.0 / 32768.0, 1e-7);
}

TEST(Wav, ToneRoundTrip) {
  TempDir dir;
  auto b = tone(440.0, 16000);
  cf::write_wav(b, dir / "t.wav");
  auto r = cf::read_wav(dir / "t.wav");
  ASSERT_EQ(r.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < b.samples.size(); ++i) EXPECT_LT(std::abs(r.samples[i] - b.samples[i]), 1.0 / 32768.0);
}

TEST(Wav, EmptyBufferWritesValidFile) {
  TempDir dir;
  cf::write_wav(cf::AudioBuffer{}, dir / "e.wav");
  EXPECT_EQ(std::filesystem::file_size(dir / "e.wav"), 44u);
  // Zero-length data is a read error, but the header itself is well formed.
  EXPECT_THROW(cf::read_wav(dir / "e.wav"), cf::Error);
}

TEST(Wav, ClampsBeforeQuantizing) {
  TempDir dir;
  cf::AudioBuffer b;
  b.samples = {1.5f, -2.0f};
  cf::write_wav(b, dir / "c.wav");
  auto r = cf::read_wav(dir / "c.wav");
  EXPECT_NEAR(r.samples[0], 32767.0 / 32768.0, 1e-7);
  EXPECT_EQ(r.samples[1], -1.0f);
}

TEST(Wav, StereoIsAveraged) {
  TempDir dir;
  std::string data;
  cf::detail::put_u16(data, 16384);
  cf::detail::put_u16(data, 0);
  cftest::write_text(dir / "s.wav", riff(1, 2, 16000, 16, data));
  auto b = cf::read_wav(dir / "s.wav");
  ASSERT_EQ(b.samples.size(), 1u);
  EXPECT_FLOAT_EQ(b.samples[0], 0.25f);
}

TEST(Wav, Float32Accepted) {
  TempDir dir;
  std::string data;
  cf::detail::put_f32(data, 0.125f);
  cf::detail::put_f32(data, -0.5f);
  cftest::write_text(dir / "f.wav", riff(3, 1, 16000, 32, data));
  auto b = cf::read_wav(dir / "f.wav");
  ASSERT_EQ(b.samples.size(), 2u);
  EXPECT_EQ(b.samples[0], 0.125f);
  EXPECT_EQ(b.samples[1], -0.5f);
}

TEST(Wav, Errors) {
  TempDir dir;
  EXPECT_THROW(cf::read_wav(dir / "nope.wav"), cf::Error);
  cftest::write_text(dir / "adpcm.wav", riff(2, 1, 16000, 4, std::string(8, '\1')));
  try {
    cf::read_wav(dir / "adpcm.wav");
    FAIL();
  } catch (const cf::Error& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported codec"), std::string::npos);
  }
  cftest::write_text(dir / "empty.wav", riff(1, 1, 16000, 16, ""));
  try {
    cf::read_wav(dir / "empty.wav");
    FAIL();
  } catch (const cf::Error& e) {
    EXPECT_NE(std::string(e.what()).find("zero-length"), std::string::npos);
  }
  cftest::write_text(dir / "junk.wav", "hello");
  EXPECT_THROW(cf::read_wav(dir / "junk.wav"), cf::Error);
}

TEST(Wav, UnwritablePath) { EXPECT_THROW(cf::write_wav(tone(100, 10), "/nonexistent_dir_xyz/a.wav"), cf::Error); }

TEST(Resample, PreservesToneFrequency) {
  for (int rate : {8000, 22050, 44100, 48000}) {
    auto in = tone(440.0, static_cast<std::size_t>(rate), rate);
    auto out = cf::resample(in, 16000);
    ASSERT_EQ(out.sample_rate, 16000);
    EXPECT_NEAR(static_cast<double>(out.samples.size()), 16000.0, 1.0);
    // 8192-point FFT at 16 kHz: 440 Hz sits at bin 225.28.
    const auto bin = dominant_bin(out, 8192);
    EXPECT_NEAR(static_cast<double>(bin), 440.0 * 8192 / 16000, 1.0) << "rate " << rate;
  }
}

TEST(Resample, ReadWavResamplesToTarget) {
  TempDir dir;
  auto in = tone(440.0, 44100, 44100);
  cf::write_wav(in, dir / "hi.wav");
  auto b = cf::read_wav(dir / "hi.wav");
  EXPECT_EQ(b.sample_rate, 16000);
  EXPECT_NEAR(b.duration_s(), 1.0, 1e-3);
  EXPECT_TRUE(b.in_range());
}

TEST(Mfcc, OneSecondGives98Frames) {
  auto m = cf::mfcc(tone(440.0, 16000));
  EXPECT_EQ(m.n_frames, 98u);
  EXPECT_EQ(m.n_coeffs, 13u);
}

TEST(Mfcc, FrameCountProperty) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> len(0, 5000);
  cf::MfccExtractor ex;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = len(rng);
    auto m = ex(tone(300.0, n));
    const std::size_t expect = n >= 400 ? (n - 400) / 160 + 1 : 0;
    EXPECT_EQ(m.n_frames, expect) << n;
    for (double v : m.values) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Mfcc, SilenceIsConstant) {
  cf::AudioBuffer b;
  b.samples.assign(8000, 0.0f);
  auto m = cf::mfcc(b);
  ASSERT_GT(m.n_frames, 1u);
  // Every filter hits the floor: c0 = sqrt(26) * ln(1e-10), the rest vanish.
  EXPECT_NEAR(m.at(0, 0), std::sqrt(26.0) * std::log(1e-10), 1e-9);
  for (std::size_t t = 0; t < m.n_frames; ++t) {
    for (std::size_t c = 0; c < m.n_coeffs; ++c) EXPECT_EQ(m.at(t, c), m.at(0, c));
  }
  for (std::size_t c = 1; c < m.n_coeffs; ++c) EXPECT_NEAR(m.at(0, c), 0.0, 1e-9);
}

TEST(Mfcc, MatchesReferenceImplementation) {
  const auto ref = cftest::load_json("mfcc_440.json");
  auto b = tone(ref["freq"].get<double>(), ref["n"].get<std::size_t>(), 16000, ref["amp"].get<double>());
  auto m = cf::mfcc(b);
  const auto& rows = ref["mfcc"];
  ASSERT_EQ(m.n_frames, rows.size());
  for (std::size_t t = 0; t < m.n_frames; ++t) {
    for (std::size_t c = 0; c < m.n_coeffs; ++c) EXPECT_NEAR(m.at(t, c), rows[t][c].get<double>(), 1e-3);
  }
}

TEST(Mfcc, Deterministic) {
  std::mt19937 rng(3);
  std::normal_distribution<float> n(0.0f, 0.1f);
  cf::AudioBuffer b;
  for (int i = 0; i < 8000; ++i) b.samples.push_back(n(rng));
  auto a = cf::mfcc(b);
  auto c = cf::mfcc(b);
  EXPECT_EQ(a.values, c.values);
}

TEST(Mfcc, ShortInputIsEmpty) {
  auto m = cf::mfcc(tone(440.0, 399));
  EXPECT_TRUE(m.empty());
}

TEST(Mfcc, ConfigValidation) {
  cf::MfccConfig c;
  c.n_coeffs = 30;
  EXPECT_THROW(c.validate(), cf::Error);
  c = {};
  c.hop_ms = 30;
  EXPECT_THROW(c.validate(), cf::Error);
}
