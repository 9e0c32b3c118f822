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

#include <numbers>
#include <random>
#include <set>

#include "brute_force.hpp"
#include "corpusforge/speaker.hpp"
#include "corpusforge/synthetic.hpp"
#include "test_util.hpp"

namespace cf = corpusforge;
namespace spk = corpusforge::speaker;

namespace {

cf::AudioBuffer tone(double hz, double seconds) {
  cf::AudioBuffer b;
  const auto n = static_cast<std::size_t>(seconds * 16000);
  for (std::size_t i = 0; i < n; ++i) {
    b.samples.push_back(static_cast<float>(0.4 * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / 16000)));
  }
  return b;
}

double cosine(const spk::Embedding& a, const spk::Embedding& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.vector.size(); ++i) {
    d += a.vector[i] * b.vector[i];
    na += a.vector[i] * a.vector[i];
    nb += b.vector[i] * b.vector[i];
  }
  return d / std::sqrt(na * nb);
}

// True when the two labelings induce the same partition and the same noise set.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == -1) != (b[i] == -1)) return false;
    if (a[i] == -1) continue;
    auto [it, fresh] = ab.emplace(a[i], b[i]);
    if (!fresh && it->second != b[i]) return false;
    auto [jt, fresh2] = ba.emplace(b[i], a[i]);
    if (!fresh2 && jt->second != a[i]) return false;
  }
  return true;
}

std::vector<spk::Embedding> points_from_json(const nlohmann::json& pts) {
  std::vector<spk::Embedding> out;
  char buf[16];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "p%04zu", i);
    spk::Embedding e;
    e.utt_id = buf;
    for (const auto& v : pts[i]) e.vector.push_back(v.get<float>());
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

TEST(Embedding, DeterministicAndNormalized) {
  auto m = cf::mfcc(tone(300, 1.0));
  auto a = spk::embed_mfcc_stats(m, 256, "a");
  auto b = spk::embed_mfcc_stats(m, 256, "b");
  EXPECT_EQ(a.vector, b.vector);
  double n = 0;
  for (float x : a.vector) n += x * x;
  EXPECT_NEAR(n, 1.0, 1e-5);
  EXPECT_EQ(a.dim(), 256u);
}

TEST(Embedding, SilenceHasZeroSpread) {
  cf::AudioBuffer b;
  b.samples.assign(16000, 0.0f);
  const auto stats = spk::mfcc_stats(cf::mfcc(b));
  ASSERT_EQ(stats.size(), 39u);
  for (std::size_t i = 13; i < 39; ++i) EXPECT_NEAR(stats[i], 0.0, 1e-9) << i;
}

TEST(Embedding, TonesSeparate) {
  auto a = spk::embed_mfcc_stats(cf::mfcc(tone(440, 1.0)));
  auto b = spk::embed_mfcc_stats(cf::mfcc(tone(2000, 1.0)));
  EXPECT_LT(cosine(a, b), 0.9);
}

TEST(Embedding, TooFewFrames) { EXPECT_THROW(spk::embed_mfcc_stats(cf::mfcc(tone(440, 0.03))), cf::Error); }

TEST(EmbeddingFile, RoundTrip) {
  cftest::TempDir dir;
  auto blobs = cf::synthetic::speaker_blobs(1, 3, 16, 0.1, 1);
  spk::save_embeddings(dir / "e.bin", blobs.embeddings);
  auto back = spk::load_embeddings(dir / "e.bin");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].utt_id, blobs.embeddings[i].utt_id);
    EXPECT_EQ(back[i].vector, blobs.embeddings[i].vector);
  }
}

TEST(EmbeddingFile, Errors) {
  cftest::TempDir dir;
  cftest::write_text(dir / "bad.bin", "XXXX0000");
  try {
    spk::load_embeddings(dir / "bad.bin");
    FAIL();
  } catch (const cf::Error& e) {
    EXPECT_STREQ(e.what(), "not an embedding file");
  }
  // Declared five, four present.
  auto blobs = cf::synthetic::speaker_blobs(1, 4, 8, 0.1, 1);
  std::string bytes = cf::speaker::detail::encode_embeddings(blobs.embeddings);
  bytes[16] = 5;
  cftest::write_text(dir / "short.bin", bytes);
  try {
    spk::load_embeddings(dir / "short.bin");
    FAIL();
  } catch (const cf::Error& e) {
    EXPECT_STREQ(e.what(), "truncated");
  }
  auto mixed = blobs.embeddings;
  mixed[1].vector.pop_back();
  EXPECT_THROW(spk::save_embeddings(dir / "m.bin", mixed), cf::Error);
}

TEST(Hdbscan, FewerThanMinClusterSizeIsNoise) {
  auto blobs = cf::synthetic::speaker_blobs(1, 4, 8, 0.1, 2);
  auto a = spk::hdbscan(blobs.embeddings, {5, 0});
  EXPECT_EQ(a.n_clusters, 0);
  for (const auto& [id, c] : a.labels) EXPECT_EQ(c, spk::kNoise);
}

TEST(Hdbscan, MatchesReferenceImplementation) {
  const auto ref = cftest::load_json("hdbscan_ref.json");
  for (const auto& c : ref["cases"]) {
    auto pts = points_from_json(c["points"]);
    auto a = spk::hdbscan(pts, {c["min_cluster_size"].get<int>(), c["min_samples"].get<int>()});
    std::vector<int> got;
    for (const auto& p : pts) got.push_back(a.label_of(p.utt_id));
    const auto want = c["labels"].get<std::vector<int>>();
    EXPECT_TRUE(same_partition(got, want)) << c["name"];
    std::set<int> distinct(want.begin(), want.end());
    distinct.erase(-1);
    EXPECT_EQ(a.n_clusters, static_cast<int>(distinct.size())) << c["name"];
  }
}

TEST(Hdbscan, DimMismatch) {
  auto blobs = cf::synthetic::speaker_blobs(2, 5, 8, 0.1, 3);
  blobs.embeddings[3].vector.push_back(0.0f);
  EXPECT_THROW(spk::hdbscan(blobs.embeddings), cf::Error);
}

TEST(Hdbscan, EightySpeakers) {
  auto blobs = cf::synthetic::speaker_blobs(80, 15, 256, 0.15, 42);
  ASSERT_GE(blobs.min_center_distance / 0.15, 8.0);
  auto a = spk::hdbscan(blobs.embeddings, {5, 0});
  EXPECT_GE(a.n_clusters, 79);
  EXPECT_GE(spk::cluster_purity(a, blobs.truth).mean, 0.96);
}

TEST(Hdbscan, DenseIdsAndMinimumSize) {
  auto blobs = cf::synthetic::speaker_blobs(6, 12, 32, 0.3, 8);
  auto a = spk::hdbscan(blobs.embeddings, {5, 0});
  std::map<int, int> sizes;
  for (const auto& [id, c] : a.labels)
    if (c != spk::kNoise) ++sizes[c];
  ASSERT_EQ(static_cast<int>(sizes.size()), a.n_clusters);
  int expect = 0;
  for (const auto& [c, n] : sizes) {
    EXPECT_EQ(c, expect++);
    EXPECT_GE(n, 5);
  }
}

TEST(Hdbscan, InputOrderIndependent) {
  auto blobs = cf::synthetic::speaker_blobs(5, 10, 16, 0.4, 13);
  auto base = spk::hdbscan(blobs.embeddings);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 5; ++t) {
    auto pts = blobs.embeddings;
    std::shuffle(pts.begin(), pts.end(), rng);
    auto a = spk::hdbscan(pts);
    EXPECT_EQ(a.labels, base.labels);
  }
}

TEST(Mst, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial) % 9;
    std::uniform_int_distribution<std::size_t> kd(1, n);
    const std::size_t k = kd(rng);
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<spk::Embedding> pts(n);
    for (auto& p : pts)
      for (int d = 0; d < 3; ++d) p.vector.push_back(g(rng));
    const auto dist = spk::pairwise_distances(pts);
    const auto core = spk::core_distances(dist, n, k);
    double got = 0;
    for (const auto& e : spk::mutual_reachability_mst(dist, core)) got += e.weight;
    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) w[a][b] = std::max({core[a], core[b], dist[a * n + b]});
    EXPECT_NEAR(got, cftest::brute::mst_weight(w), 1e-12) << "trial " << trial;
  }
}

TEST(Purity, Examples) {
  spk::ClusterAssignment a;
  a.labels = {{"1", 0}, {"2", 0}, {"3", 0}};
  EXPECT_NEAR(spk::cluster_purity(a, {{"1", "A"}, {"2", "A"}, {"3", "B"}}).per_cluster.at(0), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(spk::cluster_purity(a, {{"1", "A"}, {"2", "A"}, {"3", "A"}}).per_cluster.at(0), 1.0);

  spk::ClusterAssignment b;
  b.labels = {{"1", 0}, {"2", 0}, {"3", 1}, {"4", 1}, {"5", 1}, {"6", 1}, {"7", spk::kNoise}};
  auto r = spk::cluster_purity(b, {{"1", "A"}, {"2", "A"}, {"3", "B"}, {"4", "B"}, {"5", "B"}, {"6", "C"}, {"7", "Z"}});
  EXPECT_NEAR(r.mean, 5.0 / 6.0, 1e-12);
  EXPECT_THROW(spk::cluster_purity(b, {{"1", "A"}}), cf::Error);
}

TEST(Budget, GreedyStopsBeforeCap) {
  std::vector<spk::BudgetRecord> r = {
      {"a", 40 * 60.0, 30.0, 0}, {"b", 40 * 60.0, 25.0, 0}, {"c", 30 * 60.0, 22.0, 0}, {"d", 10 * 60.0, 20.0, 0}};
  auto s = spk::select_budget(r);
  EXPECT_EQ(s.selected, (std::vector<std::string>{"a", "b", "d"}));
  EXPECT_EQ(s.over_budget, (std::vector<std::string>{"c"}));
}

TEST(Budget, UnderCapAndExactFill) {
  std::vector<spk::BudgetRecord> r = {{"a", 30 * 60.0, 30.0, 0}, {"b", 30 * 60.0, 25.0, 0}};
  EXPECT_EQ(spk::select_budget(r).selected.size(), 2u);
  std::vector<spk::BudgetRecord> two = {{"x", 90 * 60.0, 21.0, 3}, {"y", 90 * 60.0, 35.0, 3}};
  EXPECT_EQ(spk::select_budget(two).selected, (std::vector<std::string>{"y"}));
}

TEST(Budget, NoisePassesThroughAndFeasibility) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dur(60.0, 900.0), db(20.0, 60.0);
  std::vector<spk::BudgetRecord> r;
  for (int i = 0; i < 200; ++i) r.push_back({"u" + std::to_string(i), dur(rng), db(rng), i % 4 - 1});
  auto s = spk::select_budget(r);
  EXPECT_EQ(s.unclustered.size(), 50u);
  std::map<int, double> total, min_snr;
  std::map<std::string, const spk::BudgetRecord*> by_id;
  for (const auto& x : r) by_id[x.utt_id] = &x;
  for (const auto& id : s.selected) total[by_id[id]->cluster_id] += by_id[id]->duration_s;
  for (const auto& [c, t] : total) EXPECT_LE(t, 90 * 60.0 + 1e-6);
  // Any rejected chunk must fail to fit on top of everything ranked above it.
  for (const auto& id : s.over_budget) {
    const auto* x = by_id[id];
    double above = 0;
    for (const auto& sid : s.selected) {
      const auto* y = by_id[sid];
      if (y->cluster_id == x->cluster_id && y->snr_db > x->snr_db) above += y->duration_s;
    }
    EXPECT_GT(above + x->duration_s, 90 * 60.0);
  }
  EXPECT_THROW(spk::select_budget(std::vector<spk::BudgetRecord>{{"z", 0.0, 30.0, 0}}), cf::Error);
}
