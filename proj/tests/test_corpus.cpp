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

#include <random>

#include "corpusforge/corpus.hpp"
#include "test_util.hpp"

namespace cf = corpusforge;
namespace cp = corpusforge::corpus;

namespace {

cp::UtteranceRecord rec(std::string id, double dur, std::optional<int> spk = std::nullopt,
                        cp::Status st = cp::Status::kRaw) {
  cp::UtteranceRecord r;
  r.utt_id = std::move(id);
  r.source = "s";
  r.audio_path = "a.wav";
  r.duration_s = dur;
  r.speaker_cluster = spk;
  r.status = st;
  return r;
}

std::set<int> speakers_of(const cp::Manifest& m) {
  std::set<int> s;
  for (const auto& r : m)
    if (*r.speaker_cluster != cp::kNoiseCluster) s.insert(*r.speaker_cluster);
  return s;
}

double hours(const cp::Manifest& m) {
  double s = 0;
  for (const auto& r : m) s += r.duration_s;
  return s / 3600.0;
}

}  // namespace

TEST(Manifest, RoundTripPreservesUnknownFields) {
  const std::string line =
      R"({"utt_id":"u1","source":"s","audio_path":"a.wav","duration_s":2.5,"snr_db":31.0,"speaker_cluster":4,)"
      R"("gender":"female","transcript":"नमस्ते","status":"selected","origin":"x.wav","start_s":1.5})";
  auto m = cp::parse_manifest(line + "\n\n");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].status, cp::Status::kSelected);
  EXPECT_EQ(*m[0].speaker_cluster, 4);
  EXPECT_EQ(m[0].extra["origin"], "x.wav");
  auto again = cp::parse_manifest(cp::serialize(m));
  EXPECT_EQ(cp::serialize(again), cp::serialize(m));
  EXPECT_EQ(cp::to_json(again[0])["start_s"], 1.5);
}

TEST(Manifest, Errors) {
  EXPECT_THROW(cp::parse_manifest(R"({"utt_id":"a","duration_s":0})"), cf::Error);
  EXPECT_THROW(cp::parse_manifest("not json"), cf::Error);
  EXPECT_THROW(cp::parse_manifest(R"({"utt_id":"a","duration_s":1,"status":"weird"})"), cf::Error);
  try {
    cp::parse_manifest(R"({"utt_id":"a","duration_s":1})"
                       "\n"
                       R"({"utt_id":"a","duration_s":2})");
    FAIL();
  } catch (const cf::Error& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate utt_id: a"), std::string::npos);
  }
}

TEST(Manifest, AtomicWriteAndRead) {
  cftest::TempDir dir;
  cp::Manifest m = {rec("a", 1.0, 0), rec("b", 2.0, 1)};
  cp::write_manifest(dir / "m.jsonl", m);
  EXPECT_FALSE(std::filesystem::exists(dir / "m.jsonl.tmp"));
  EXPECT_EQ(cp::read_manifest(dir / "m.jsonl").size(), 2u);
}

TEST(Relational, FilterAndMerge) {
  cp::Manifest m = {rec("a", 1, 0, cp::Status::kSelected), rec("b", 1, 0, cp::Status::kSnrRejected),
                    rec("c", 1, 0, cp::Status::kSelected)};
  auto sel = cp::filter(m, [](const auto& r) { return r.status == cp::Status::kSelected; });
  ASSERT_EQ(sel.size(), 2u);
  EXPECT_EQ(sel[0].utt_id, "a");
  EXPECT_EQ(sel[1].utt_id, "c");
  auto merged = cp::merge(sel, {rec("d", 1)});
  EXPECT_EQ(merged.size(), 3u);
  try {
    cp::merge(m, {rec("a", 1), rec("c", 1)});
    FAIL();
  } catch (const cf::Error& e) {
    EXPECT_STREQ(e.what(), "duplicate utt_id: a c");
  }
}

TEST(Split, SingleSpeakerGoesToTrain) {
  auto r = cp::split_by_speaker({rec("a", 10, 0), rec("b", 5, 0)});
  EXPECT_EQ(r.train.size(), 2u);
  EXPECT_TRUE(r.dev.empty());
  EXPECT_TRUE(r.test.empty());
  EXPECT_EQ(r.warnings.size(), 2u);
}

TEST(Split, EightOneOne) {
  cp::Manifest m = {rec("a", 8 * 3600.0, 0), rec("b", 3600.0, 1), rec("c", 3600.0, 2)};
  auto r = cp::split_by_speaker(m);
  EXPECT_EQ(speakers_of(r.train), (std::set<int>{0}));
  EXPECT_EQ(r.dev.size(), 1u);
  EXPECT_EQ(r.test.size(), 1u);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Split, NoiseToTrainAndErrors) {
  auto r = cp::split_by_speaker({rec("n", 100, cp::kNoiseCluster), rec("a", 1, 0)});
  EXPECT_EQ(r.train.size(), 2u);
  EXPECT_THROW(cp::split_by_speaker({}), cf::Error);
  EXPECT_THROW(cp::split_by_speaker({rec("x", 1)}), cf::Error);
  cp::SplitSpec bad;
  bad.ratios = {0.5, 0.5, 0.5};
  EXPECT_THROW(cp::split_by_speaker({rec("a", 1, 0)}, bad), cf::Error);
}

TEST(Split, RandomizedProperties) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> n_spk(3, 60), n_utt(1, 20);
    std::lognormal_distribution<double> dur(1.5, 0.6);
    cp::Manifest m;
    const int ns = n_spk(rng);
    std::map<int, double> spk_dur;
    for (int s = 0; s < ns; ++s) {
      for (int u = n_utt(rng); u > 0; --u) {
        const double d = dur(rng);
        m.push_back(rec("s" + std::to_string(s) + "_" + std::to_string(u), d, s));
        spk_dur[s] += d;
      }
    }
    double max_spk = 0, total = 0;
    for (const auto& [s, d] : spk_dur) {
      max_spk = std::max(max_spk, d);
      total += d;
    }
    cp::SplitSpec spec;
    spec.seed = static_cast<std::uint64_t>(trial);
    auto r = cp::split_by_speaker(m, spec);
    // Disjoint speakers, nothing lost.
    auto a = speakers_of(r.train), b = speakers_of(r.dev), c = speakers_of(r.test);
    for (int s : a) EXPECT_FALSE(b.count(s) || c.count(s));
    for (int s : b) EXPECT_FALSE(c.count(s));
    EXPECT_EQ(r.train.size() + r.dev.size() + r.test.size(), m.size());
    // Within one speaker of the targets.
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_LE(std::abs(hours(r.part(k)) * 3600.0 - spec.ratios[k] * total), max_spk + 1e-9) << trial << " " << k;
    }
    // Same seed, same bytes.
    auto again = cp::split_by_speaker(m, spec);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(cp::serialize(again.part(k)), cp::serialize(r.part(k)));
  }
}

TEST(Stats, Examples) {
  auto z = cp::stats({});
  EXPECT_EQ(z.hours, 0.0);
  EXPECT_EQ(z.n_utts, 0u);
  EXPECT_EQ(z.n_speakers, 0u);
  EXPECT_EQ(z.char_vocab_size, 0u);

  cp::Manifest m = {rec("a", 30, 0), rec("b", 30, 1)};
  m[0].transcript = "ab";
  m[1].transcript = "bc";
  m[0].gender = "male";
  auto s = cp::stats(m);
  EXPECT_DOUBLE_EQ(s.hours, 1.0 / 60.0);
  EXPECT_EQ(s.n_utts, 2u);
  EXPECT_EQ(s.n_speakers, 2u);
  EXPECT_EQ(s.char_vocab_size, 3u);
  EXPECT_DOUBLE_EQ(s.gender_hours.at("male"), 30.0 / 3600.0);
}

TEST(Stats, VocabCountedAfterNfd) {
  cp::Manifest m = {rec("a", 1, 0)};
  m[0].transcript = "é e";
  EXPECT_EQ(cp::stats(m).char_vocab_size, 2u);  // e and U+0301
}
