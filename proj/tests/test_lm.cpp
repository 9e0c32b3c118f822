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
#include <random>
#include <string>
#include <vector>

#include "corpusforge/lm.hpp"
#include "test_util.hpp"

namespace lm = corpusforge::lm;

namespace {

std::vector<lm::Sentence> lines(const nlohmann::json& arr) {
  std::vector<lm::Sentence> out;
  for (const auto& l : arr) out.push_back(lm::tokenize(l.get<std::string>()));
  return out;
}

lm::NGramModel train_case(const nlohmann::json& c) {
  const auto corpus = lines(c["corpus"]);
  const auto vocab = lm::build_vocab(corpus, c["top_k"].get<std::size_t>());
  return lm::train_ngram(corpus, vocab, c["order"].get<int>());
}

// Max |sum - 1| over every trained history.
double worst_normalization(const lm::NGramModel& m) {
  const auto words = lm::predictable_words(m);
  double worst = 0.0;
  for (const auto& h : lm::trained_histories(m)) {
    double sum = 0.0;
    for (const auto& w : words) sum += std::pow(10.0, m.log10_prob(h, w));
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

}  // namespace

TEST(Vocab, FrequencyRule) {
  const auto v = lm::build_vocab({{"a", "a", "b"}}, 1);
  ASSERT_EQ(v.words.size(), 1u);
  EXPECT_EQ(v.words[0].first, "a");
  EXPECT_EQ(v.map("b"), "<unk>");
  EXPECT_EQ(v.map("a"), "a");
}

TEST(Vocab, TieIsLexicographic) {
  const auto v = lm::build_vocab({{"b", "a"}}, 1);
  EXPECT_EQ(v.words[0].first, "a");
}

TEST(Vocab, LargeTopKKeepsAll) {
  const auto v = lm::build_vocab({{"x", "y", "z"}}, 100);
  EXPECT_EQ(v.words.size(), 3u);
  EXPECT_EQ(v.size(), 6u);
}

TEST(Vocab, EmptyCorpusThrows) { EXPECT_THROW(lm::build_vocab({}), corpusforge::Error); }

TEST(Train, UnigramLeavesUnkMass) {
  const std::vector<lm::Sentence> c = {{"a", "a", "a"}};
  const auto m = lm::train_ngram(c, lm::build_vocab(c), 1);
  const double pa = m.log10_prob({}, "a");
  const double pu = m.log10_prob({}, "<unk>");
  EXPECT_GT(pa, pu);
  EXPECT_GT(pu, -10.0);
  EXPECT_NEAR(worst_normalization(m), 0.0, 1e-9);
}

TEST(Train, ShortCorpusTruncatesOrder) {
  const std::vector<lm::Sentence> c = {{"a"}};
  const auto r = lm::train_ngram_full(c, lm::build_vocab(c), {5});
  EXPECT_EQ(r.model.order(), 3);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings.front().find("truncated"), std::string::npos);
}

TEST(Train, DegenerateCountsFallBack) {
  const auto d = lm::estimate_discounts({3, 0, 1, 1});
  EXPECT_TRUE(d.fallback);
  EXPECT_DOUBLE_EQ(d(1), 0.75);
  EXPECT_DOUBLE_EQ(d(7), 0.75);
}

TEST(Train, DiscountFormula) {
  // n1..n4 = 10, 5, 3, 2: Y = 0.5.
  const auto d = lm::estimate_discounts({10, 5, 3, 2});
  EXPECT_FALSE(d.fallback);
  EXPECT_NEAR(d.d[0], 0.5, 1e-12);
  EXPECT_NEAR(d.d[1], 2.0 - 1.5 * 3.0 / 5.0, 1e-12);
  EXPECT_NEAR(d.d[2], 3.0 - 2.0 * 2.0 / 3.0, 1e-12);
}

TEST(Train, InvalidOrderThrows) {
  const std::vector<lm::Sentence> c = {{"a"}};
  EXPECT_THROW(lm::train_ngram(c, lm::build_vocab(c), 6), corpusforge::Error);
  EXPECT_THROW(lm::train_ngram(c, lm::build_vocab(c), 0), corpusforge::Error);
}

// Bigram model on "a b" / "a c" / "b a". All count-of-counts are degenerate so
// D = 0.75 everywhere. Continuation counts: a 2, b 2, c 1, </s> 3 (total 8);
// uniform over {a, b, c, </s>, <unk>}.
TEST(Score, HandComputedBackoff) {
  const std::vector<lm::Sentence> c = {{"a", "b"}, {"a", "c"}, {"b", "a"}};
  const auto m = lm::train_ngram(c, lm::build_vocab(c), 2);
  const double g0 = 3.0 / 8.0 / 5.0;
  const double pa = 1.25 / 8.0 + g0, pb = pa, peos = 2.25 / 8.0 + g0;
  // p(a|<s>): <s> a 2, <s> b 1 -> total 3, gamma 1.5/3.
  const double pa_s = 1.25 / 3.0 + 0.5 * pa;
  // p(b|a): a b, a c, a </s> -> total 3, gamma 2.25/3.
  const double pb_a = 0.25 / 3.0 + 0.75 * pb;
  // p(</s>|b): b </s>, b a -> total 2, gamma 1.5/2.
  const double peos_b = 0.25 / 2.0 + 0.75 * peos;
  EXPECT_NEAR(m.score({"a", "b"}).total, std::log10(pa_s * pb_a * peos_b), 1e-12);

  // "c a" unseen: back off through c's weight (c </s> only, gamma 0.75).
  const double pc_a = 0.25 / 3.0 + 0.75 * (0.25 / 8.0 + g0);
  const double pa_c = 0.75 * pa;
  const double peos_a = 0.25 / 3.0 + 0.75 * peos;
  EXPECT_NEAR(m.score({"a", "c", "a"}).total, std::log10(pa_s * pc_a * pa_c * peos_a), 1e-12);
}

TEST(Score, UnigramOnlyWord) {
  const std::vector<lm::Sentence> c = {{"a", "b"}, {"b"}};
  const auto m = lm::train_ngram(c, lm::build_vocab(c), 1);
  const auto s = m.score({"a"});
  ASSERT_EQ(s.per_token.size(), 2u);
  EXPECT_DOUBLE_EQ(s.per_token[0], m.table(1).at("a").log10_prob);
  EXPECT_DOUBLE_EQ(s.per_token[1], m.table(1).at("</s>").log10_prob);
}

TEST(Score, OovScoredAsUnk) {
  const std::vector<lm::Sentence> c = {{"a", "b"}, {"b", "a"}};
  const auto m = lm::train_ngram(c, lm::build_vocab(c), 3);
  EXPECT_DOUBLE_EQ(m.score({"a", "qqq"}).total, m.score({"a", "<unk>"}).total);
}

TEST(Train, SumsToOneOnReferenceCorpora) {
  const auto ref = cftest::load_json("mkn_ref.json");
  for (const auto& c : ref["cases"]) {
    const auto m = train_case(c);
    EXPECT_LT(worst_normalization(m), 1e-6) << c["name"];
  }
}

TEST(Train, MatchesReferenceMkn) {
  const auto ref = cftest::load_json("mkn_ref.json");
  for (const auto& c : ref["cases"]) {
    const auto corpus = lines(c["corpus"]);
    const auto r =
        lm::train_ngram_full(corpus, lm::build_vocab(corpus, c["top_k"].get<std::size_t>()), {c["order"].get<int>()});
    for (std::size_t n = 0; n < r.discounts.size(); ++n) {
      for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(r.discounts[n].d[k], c["discounts"][n][k].get<double>(), 1e-12);
      }
    }
    const auto probes = lines(c["probes"]);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const auto s = r.model.score(probes[i]);
      const auto& want = c["scores"][i];
      ASSERT_EQ(s.per_token.size(), want.size());
      for (std::size_t t = 0; t < want.size(); ++t) {
        EXPECT_NEAR(s.per_token[t], want[t].get<double>(), 1e-4) << c["name"] << " probe " << i;
      }
    }
  }
}

TEST(Train, AddingSentenceNeverLowersIt) {
  const auto ref = cftest::load_json("mkn_ref.json");
  std::mt19937 rng(7);
  for (const auto& c : ref["cases"]) {
    auto corpus = lines(c["corpus"]);
    const auto top_k = c["top_k"].get<std::size_t>();
    const int order = c["order"].get<int>();
    const auto probes = lines(c["probes"]);
    for (int trial = 0; trial < 10; ++trial) {
      const auto& s = probes[rng() % probes.size()];
      if (s.empty()) continue;
      const double before = lm::train_ngram(corpus, lm::build_vocab(corpus, top_k), order).score(s).total;
      auto more = corpus;
      more.push_back(s);
      const double after = lm::train_ngram(more, lm::build_vocab(more, top_k), order).score(s).total;
      EXPECT_GE(after, before - 1e-12) << c["name"] << " trial " << trial;
    }
  }
}

TEST(Arpa, RoundTripPreservesScores) {
  const auto ref = cftest::load_json("mkn_ref.json");
  for (const auto& c : ref["cases"]) {
    const auto m = train_case(c);
    const auto back = lm::parse_arpa(lm::to_arpa(m));
    ASSERT_EQ(back.order(), m.order());
    for (int n = 1; n <= m.order(); ++n) EXPECT_EQ(back.count(n), m.count(n));
    for (const auto& p : lines(c["probes"])) {
      EXPECT_NEAR(back.score(p).total, m.score(p).total, 1e-5);
    }
    // Second pass is exact: values already carry 7 significant digits.
    EXPECT_EQ(lm::to_arpa(lm::parse_arpa(lm::to_arpa(back))), lm::to_arpa(back));
  }
}

TEST(Arpa, ReferenceFileLoadsAndScores) {
  const auto ref = cftest::load_json("mkn_ref.json");
  for (const auto& c : ref["cases"]) {
    const auto m = lm::read_arpa(cftest::data_path(c["arpa"].get<std::string>()));
    const auto probes = lines(c["probes"]);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      EXPECT_NEAR(
          m.score(probes[i]).total,
          [&] {
            double t = 0.0;
            for (const auto& v : c["scores"][i]) t += v.get<double>();
            return t;
          }(),
          1e-4 * static_cast<double>(c["scores"][i].size()))
          << c["name"] << " probe " << i;
    }
  }
}

TEST(Arpa, WriteAndRead) {
  cftest::TempDir dir;
  const std::vector<lm::Sentence> c = {{"a", "b"}, {"b", "a", "c"}};
  const auto m = lm::train_ngram(c, lm::build_vocab(c), 2);
  lm::write_arpa(dir / "m.arpa", m);
  EXPECT_EQ(lm::to_arpa(lm::read_arpa(dir / "m.arpa")), lm::to_arpa(m));
}

TEST(Arpa, CountMismatch) {
  const std::string text =
      "\\data\\\nngram 1=2\nngram 2=2\n\n\\1-grams:\n-0.3\ta\t-0.1\n-0.3\t</s>\n\n"
      "\\2-grams:\n-0.2\ta </s>\n\n\\end\\\n";
  try {
    lm::parse_arpa(text);
    FAIL() << "expected throw";
  } catch (const corpusforge::Error& e) {
    EXPECT_NE(std::string(e.what()).find("count mismatch"), std::string::npos);
  }
}

TEST(Arpa, MalformedHeaderAndMissingEnd) {
  EXPECT_THROW(lm::parse_arpa("ngram 1=1\n"), corpusforge::Error);
  EXPECT_THROW(lm::parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n-0.1\ta\n"), corpusforge::Error);
  EXPECT_THROW(lm::parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n-0.1\n\n\\end\\\n"), corpusforge::Error);
}
