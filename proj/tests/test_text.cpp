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
#include <sstream>

#include "corpusforge/text.hpp"
#include "scenarios.hpp"
#include "test_util.hpp"

namespace cf = corpusforge;
namespace tx = corpusforge::text;

namespace {

tx::CharVocabulary vocab(const std::string& lang) {
  return tx::load_vocabulary(std::filesystem::path(CORPUSFORGE_DATA_DIR) / "vocab" / (lang + ".vocab"));
}

using cftest::scenario::random_text;

}  // namespace

TEST(StripPunct, Examples) {
  EXPECT_EQ(tx::strip_punct("hello, world!"), "hello world");
  EXPECT_EQ(tx::strip_punct("क्या?  हाँ।"), "क्या हाँ");
  EXPECT_EQ(tx::strip_punct(""), "");
  EXPECT_EQ(tx::strip_punct("  a -- b  "), "a b");
}

TEST(StripPunct, VocabularyWhitelistKeepsPronouncedSymbols) {
  auto en = vocab("en");
  ASSERT_TRUE(en.contains(U'\''));
  EXPECT_EQ(tx::strip_punct("don't stop!", tx::PunctSet::for_vocabulary(en)), "don't stop");
  EXPECT_EQ(tx::strip_punct("don't stop!"), "dont stop");
}

TEST(StripPunct, TalliesRemovedChars) {
  std::map<char32_t, std::size_t> removed;
  tx::strip_punct("a!! b?", {}, &removed);
  EXPECT_EQ(removed.at(U'!'), 2u);
  EXPECT_EQ(removed.at(U'?'), 1u);
}

TEST(Foreign, Examples) {
  auto hi = vocab("hi");
  EXPECT_TRUE(tx::check_foreign(tx::nfd("नमस्ते दुनिया"), hi).is_clean);
  auto r = tx::check_foreign(tx::nfd("नमस्ते hello"), hi);
  EXPECT_FALSE(r.is_clean);
  EXPECT_EQ(r.offending, (std::set<char32_t>{U'h', U'e', U'l', U'o'}));
  EXPECT_TRUE(tx::check_foreign("", hi).is_clean);
}

TEST(Digits, Examples) {
  EXPECT_TRUE(tx::has_digits("I have 5000 dollars"));
  EXPECT_FALSE(tx::has_digits("पाँच हज़ार"));
  EXPECT_TRUE(tx::has_digits("२०२२"));
  EXPECT_FALSE(tx::has_digits("x² ½ Ⅻ"));
}

TEST(Digits, BilingualFixtureExact) {
  std::istringstream in(cf::detail::read_file(cftest::data_path("bilingual_200.tsv")));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos);
    const bool want = line[0] == '1';
    EXPECT_EQ(tx::has_digits(line.substr(tab + 1)), want) << line;
    ++n;
  }
  EXPECT_EQ(n, 200);
}

TEST(Nfd, Examples) {
  EXPECT_EQ(tx::nfd("é"), "é");
  EXPECT_EQ(tx::nfd("क़"), "क़");
  EXPECT_EQ(tx::nfd("abc"), "abc");
}

TEST(Nfd, MatchesCharacterDatabase) {
  const auto ref = cftest::load_json("nfd_ref.json");
  for (const auto& row : ref["rows"]) {
    const auto s = row["s"].get<std::string>();
    EXPECT_EQ(tx::nfd(s), row["nfd"].get<std::string>()) << s;
    EXPECT_EQ(tx::nfc(s), row["nfc"].get<std::string>()) << s;
  }
}

TEST(Nfd, IdempotentAndRoundTrips) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10000; ++i) {
    const auto s = random_text(rng);
    const auto d = tx::nfd(s);
    ASSERT_EQ(tx::nfd(d), d) << s;
    ASSERT_EQ(tx::nfc(d), tx::nfc(s)) << s;
  }
}

TEST(Nfd, ShrinksComposedDevanagariInventory) {
  const auto corpus = cftest::scenario::nukta_corpus();

  std::vector<std::string> decomposed;
  for (const auto& s : corpus) decomposed.push_back(tx::nfd(s));
  const auto before = tx::char_inventory(corpus);
  const auto after = tx::char_inventory(decomposed);
  EXPECT_LT(after.size(), before.size());
  for (char32_t c : {U'क़', U'ज़', U'ड़', U'फ़'}) {
    EXPECT_TRUE(before.count(c));
    EXPECT_FALSE(after.count(c));
  }
}

TEST(Vocabulary, ParsingAndInvariants) {
  auto v = tx::parse_vocabulary("# c\na\nU+0301\n\n", "xx", "x.vocab");
  EXPECT_TRUE(v.contains(U'a'));
  EXPECT_TRUE(v.contains(U'́'));
  EXPECT_TRUE(v.contains(U' '));
  EXPECT_THROW(tx::parse_vocabulary("a\n5\n"), cf::Error);
  EXPECT_THROW(tx::parse_vocabulary("ab\n"), cf::Error);
  EXPECT_THROW(tx::parse_vocabulary("U+ZZ\n"), cf::Error);
  for (const char* lang : {"hi", "ta", "en"}) {
    auto voc = vocab(lang);
    for (char32_t c : voc.allowed) {
      EXPECT_FALSE(tx::is_decimal_digit(c));
      // Every listed code point is already in NFD.
      const auto s = tx::code_point_to_utf8(c);
      EXPECT_EQ(tx::nfd(s), s) << lang << " U+" << std::hex << static_cast<std::uint32_t>(c);
    }
  }
}

TEST(Clean, OrderAndReport) {
  auto hi = vocab("hi");
  tx::CleanReport rep;
  // Punctuation goes before the foreign check, digits before foreign.
  EXPECT_EQ(tx::clean_transcript("नमस्ते!", hi, &rep).status, tx::CleanStatus::kKept);
  EXPECT_EQ(tx::clean_transcript("hello 5", hi, &rep).status, tx::CleanStatus::kNumeric);
  auto f = tx::clean_transcript("नमस्ते hello", hi, &rep);
  EXPECT_EQ(f.status, tx::CleanStatus::kForeign);
  EXPECT_EQ(f.offending.size(), 4u);
  // Precomposed nukta letters pass once decomposed.
  auto z = tx::clean_transcript("ज़मीन", hi, &rep);
  EXPECT_EQ(z.status, tx::CleanStatus::kKept);
  EXPECT_EQ(z.text, "ज़मीन");
  EXPECT_EQ(rep.kept, 2u);
  EXPECT_EQ(rep.dropped_numeric, 1u);
  EXPECT_EQ(rep.dropped_foreign, 1u);
  EXPECT_EQ(rep.total(), 4u);
  EXPECT_EQ(rep.chars_removed.at(U'!'), 1u);
}
