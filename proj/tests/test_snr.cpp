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

#include "corpusforge/snr.hpp"
#include "corpusforge/synthetic.hpp"

namespace cf = corpusforge;
namespace snr = corpusforge::snr;

TEST(Wada, TenDbFromModel) {
  auto x = cf::synthetic::wada_signal(1000000, 10.0, 1);
  EXPECT_NEAR(snr::wada_snr(x).db, 10.0, 2.0);
}

TEST(Wada, SweepMonotoneWithinTwoDb) {
  double prev = -1e9;
  for (double db : {0.0, 5.0, 10.0, 20.0, 30.0, 40.0}) {
    const double est = snr::wada_snr(cf::synthetic::wada_signal(1000000, db, 17)).db;
    EXPECT_NEAR(est, db, 2.0);
    EXPECT_GT(est, prev);
    prev = est;
  }
}

TEST(Wada, PureNoiseNearLowerClamp) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> n(0.0f, 0.1f);
  std::vector<float> x(200000);
  for (auto& v : x) v = n(rng);
  EXPECT_LE(snr::wada_snr(x).db, -15.0);
}

TEST(Wada, NoiselessGammaHitsUpperClamp) {
  std::mt19937_64 rng(4);
  std::gamma_distribution<double> g(snr::kGammaShape, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<float> x(200000);
  for (auto& v : x) v = static_cast<float>((sign(rng) ? 0.1 : -0.1) * g(rng));
  EXPECT_EQ(snr::wada_snr(x).db, 100.0);
}

TEST(Wada, SilentInputThrows) {
  std::vector<float> z(1000, 0.0f);
  try {
    snr::wada_snr(z);
    FAIL();
  } catch (const cf::Error& e) {
    EXPECT_STREQ(e.what(), "silent input");
  }
}

TEST(Wada, ScaleInvariant) {
  auto x = cf::synthetic::wada_signal(100000, 25.0, 8);
  auto y = x;
  for (auto& v : y) v *= 0.25f;
  EXPECT_NEAR(snr::wada_snr(x).db, snr::wada_snr(y).db, 1e-3);
}

TEST(GainTable, CommittedTableMatchesModel) {
  const auto g = snr::model::compute_table();
  const auto& t = snr::GainTable::standard().g_values();
  ASSERT_EQ(g.size(), t.size());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(t[i], g[i], 1e-9) << i;
}

TEST(GainTable, StrictlyMonotoneAndCoversRange) {
  const auto& t = snr::GainTable::standard();
  EXPECT_EQ(t.db_values().front(), -20.0);
  EXPECT_EQ(t.db_values().back(), 100.0);
  for (std::size_t i = 1; i < t.g_values().size(); ++i) EXPECT_GT(t.g_values()[i], t.g_values()[i - 1]);
  EXPECT_THROW(snr::GainTable({1.0, 1.0}, {0.0, 1.0}), cf::Error);
}

// Monte Carlo g from the generative model agrees with the numerically
// integrated table entry.
TEST(GainTable, MatchesSampledStatistic) {
  for (double db : {-10.0, 0.0, 15.0, 35.0}) {
    auto x = cf::synthetic::wada_signal(2000000, db, 23);
    double sa = 0.0, sl = 0.0;
    for (float v : x) {
      sa += std::abs(v);
      sl += std::log(std::abs(static_cast<double>(v)));
    }
    const double n = static_cast<double>(x.size());
    const double g = std::log(sa / n) - sl / n;
    const auto idx = static_cast<std::size_t>(db + 20.0);
    EXPECT_NEAR(g, snr::GainTable::standard().g_values()[idx], 0.01) << db;
  }
}

TEST(GainTable, InterpolatesAndClamps) {
  snr::GainTable t({0.0, 1.0, 3.0}, {0.0, 10.0, 20.0});
  EXPECT_DOUBLE_EQ(t.invert(0.5), 5.0);
  EXPECT_DOUBLE_EQ(t.invert(2.0), 15.0);
  EXPECT_DOUBLE_EQ(t.invert(-4.0), 0.0);
  EXPECT_DOUBLE_EQ(t.invert(9.0), 20.0);
}

TEST(Filter, PaperThresholds) {
  std::vector<std::pair<std::string, snr::SnrEstimate>> recs = {
      {"a", {15.0}}, {"b", {25.0}}, {"c", {65.0}}, {"d", {20.0}}, {"e", {60.0}}};
  auto p = snr::filter_by_snr(recs);
  ASSERT_EQ(p.kept.size(), 3u);
  EXPECT_EQ(p.kept[0].first, "b");
  EXPECT_EQ(p.kept[1].first, "d");
  EXPECT_EQ(p.kept[2].first, "e");
  ASSERT_EQ(p.rejected.size(), 2u);
  EXPECT_EQ(p.rejected[0], (std::pair<std::string, std::string>{"a", "snr_low"}));
  EXPECT_EQ(p.rejected[1], (std::pair<std::string, std::string>{"c", "snr_high"}));
}

TEST(Filter, SweepPartitions) {
  std::vector<std::pair<double, snr::SnrEstimate>> recs;
  for (double db : {0.0, 5.0, 10.0, 30.0, 40.0, 70.0, 80.0}) {
    recs.push_back({db, snr::wada_snr(cf::synthetic::wada_signal(300000, db, 5))});
  }
  auto p = snr::filter_by_snr(recs);
  for (const auto& [truth, est] : p.kept) EXPECT_TRUE(truth >= 20.0 && truth <= 60.0) << truth;
  for (const auto& [truth, reason] : p.rejected) {
    EXPECT_TRUE(truth < 20.0 || truth > 60.0) << truth;
    EXPECT_EQ(reason, truth < 20.0 ? "snr_low" : "snr_high");
  }
  EXPECT_EQ(p.kept.size(), 2u);
  EXPECT_THROW(snr::filter_by_snr(recs, {30.0, 30.0}), cf::Error);
}
