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
// Transcript cleaning. The fixed order is
//   strip_punct -> nfd -> has_digits -> check_foreign
// and utterances that contain digits or characters outside the language's
// vocabulary are dropped, never rewritten.

#pragma once

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"

namespace corpusforge::text {

// ---------------------------------------------------------------------------
// UTF-8 <-> code points

inline std::u32string utf8_to_utf32(std::string_view s) {
  const auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  std::u32string out;
  out.reserve(static_cast<std::size_t>(u.length()));
  for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) out.push_back(static_cast<char32_t>(u.char32At(i)));
  return out;
}

inline std::string utf32_to_utf8(std::u32string_view s) {
  icu::UnicodeString u;
  for (char32_t c : s) u.append(static_cast<UChar32>(c));
  std::string out;
  u.toUTF8String(out);
  return out;
}

inline std::string code_point_to_utf8(char32_t c) { return utf32_to_utf8(std::u32string(1, c)); }

// ---------------------------------------------------------------------------
// Normalization

namespace detail {

inline std::string normalize(std::string_view s, const icu::Normalizer2* (*instance)(UErrorCode&)) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = instance(status);
  if (U_FAILURE(status)) throw Error(std::string("icu normalizer unavailable: ") + u_errorName(status));
  const auto in = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  const icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) throw Error(std::string("normalization failed: ") + u_errorName(status));
  std::string utf8;
  out.toUTF8String(utf8);
  return utf8;
}

}  // namespace detail

// Canonical decomposition with canonical reordering.
inline std::string nfd(std::string_view s) { return detail::normalize(s, &icu::Normalizer2::getNFDInstance); }

inline std::string nfc(std::string_view s) { return detail::normalize(s, &icu::Normalizer2::getNFCInstance); }

// ---------------------------------------------------------------------------
// Character classes

inline bool is_punct_or_symbol(char32_t c) {
  switch (u_charType(static_cast<UChar32>(c))) {
    case U_CONNECTOR_PUNCTUATION:
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return true;
    default:
      return false;
  }
}

inline bool is_decimal_digit(char32_t c) { return u_charType(static_cast<UChar32>(c)) == U_DECIMAL_DIGIT_NUMBER; }

inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }

// True iff any code point is in category Nd.
inline bool has_digits(std::string_view s) {
  for (char32_t c : utf8_to_utf32(s)) {
    if (is_decimal_digit(c)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Vocabulary

struct CharVocabulary {
  std::string language;
  std::string name;
  std::set<char32_t> allowed;  // post-NFD code points, always includes U+0020

  bool contains(char32_t c) const { return c == U' ' || allowed.count(c) > 0; }

  void validate() const {
    if (allowed.empty()) throw Error("vocabulary is empty");
    for (char32_t c : allowed) {
      if (is_decimal_digit(c)) {
        throw Error("vocabulary must not contain digits: U+" + std::to_string(static_cast<std::uint32_t>(c)));
      }
    }
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

// One code point (literal or U+XXXX) per line; blank lines and lines starting
// with '#' are ignored.
inline CharVocabulary parse_vocabulary(std::string_view contents, std::string language = {}, std::string name = {}) {
  CharVocabulary v;
  v.language = std::move(language);
  v.name = std::move(name);
  std::size_t line_no = 0, start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    ++line_no;
    const std::string line = detail::trim(contents.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line[0] == '#') continue;
    char32_t cp;
    if (line.size() > 2 && (line[0] == 'U' || line[0] == 'u') && line[1] == '+') {
      try {
        cp = static_cast<char32_t>(std::stoul(line.substr(2), nullptr, 16));
      } catch (const std::exception&) {
        throw Error(corpusforge::detail::concat("vocabulary line ", line_no, ": bad escape '", line, "'"));
      }
    } else {
      const auto cps = utf8_to_utf32(line);
      if (cps.size() != 1) {
        throw Error(
            corpusforge::detail::concat("vocabulary line ", line_no, ": expected one code point, got '", line, "'"));
      }
      cp = cps[0];
    }
    v.allowed.insert(cp);
  }
  v.allowed.insert(U' ');
  v.validate();
  return v;
}

inline CharVocabulary load_vocabulary(const std::filesystem::path& path) {
  return parse_vocabulary(corpusforge::detail::read_file(path), path.stem().string(), path.filename().string());
}

// ---------------------------------------------------------------------------
// Cleaning steps

// Code points deleted by strip_punct: categories P and S minus a whitelist of
// pronounced symbols.
struct PunctSet {
  std::set<char32_t> keep;

  bool removes(char32_t c) const { return is_punct_or_symbol(c) && keep.count(c) == 0; }

  // Punctuation and symbols listed in a vocabulary are pronounced there, so
  // they are kept.
  static PunctSet for_vocabulary(const CharVocabulary& vocab) {
    PunctSet p;
    for (char32_t c : vocab.allowed) {
      if (is_punct_or_symbol(c)) p.keep.insert(c);
    }
    return p;
  }
};

// Deletes punctuation, collapses whitespace runs to one space and trims.
// Removed code points are tallied into removed when given.
inline std::string strip_punct(std::string_view s, const PunctSet& punct = {},
                               std::map<char32_t, std::size_t>* removed = nullptr) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : utf8_to_utf32(s)) {
    if (punct.removes(c)) {
      if (removed) ++(*removed)[c];
      continue;
    }
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return utf32_to_utf8(out);
}

struct ForeignCheck {
  bool is_clean = true;
  std::set<char32_t> offending;
};

// Expects NFD, punctuation-stripped text.
inline ForeignCheck check_foreign(std::string_view s, const CharVocabulary& vocab) {
  ForeignCheck r;
  for (char32_t c : utf8_to_utf32(s)) {
    if (!vocab.contains(c)) r.offending.insert(c);
  }
  r.is_clean = r.offending.empty();
  return r;
}

// ---------------------------------------------------------------------------
// Pipeline

enum class CleanStatus { kKept, kNumeric, kForeign };

struct CleanOutcome {
  CleanStatus status = CleanStatus::kKept;
  std::string text;  // cleaned NFD text
  std::set<char32_t> offending;
};

struct CleanReport {
  std::size_t kept = 0;
  std::size_t dropped_foreign = 0;
  std::size_t dropped_numeric = 0;
  std::map<char32_t, std::size_t> chars_removed;

  std::size_t total() const { return kept + dropped_foreign + dropped_numeric; }
};

inline CleanOutcome clean_transcript(std::string_view raw, const CharVocabulary& vocab, CleanReport* report = nullptr) {
  CleanOutcome out;
  const auto punct = PunctSet::for_vocabulary(vocab);
  out.text = nfd(strip_punct(raw, punct, report ? &report->chars_removed : nullptr));
  if (has_digits(out.text)) {
    out.status = CleanStatus::kNumeric;
  } else {
    auto fc = check_foreign(out.text, vocab);
    if (!fc.is_clean) {
      out.status = CleanStatus::kForeign;
      out.offending = std::move(fc.offending);
    }
  }
  if (report) {
    switch (out.status) {
      case CleanStatus::kKept:
        ++report->kept;
        break;
      case CleanStatus::kNumeric:
        ++report->dropped_numeric;
        break;
      case CleanStatus::kForeign:
        ++report->dropped_foreign;
        break;
    }
  }
  return out;
}

// Distinct non-space code points across texts.
template <typename Range>
std::set<char32_t> char_inventory(const Range& texts) {
  std::set<char32_t> out;
  for (const auto& t : texts) {
    for (char32_t c : utf8_to_utf32(t)) {
      if (!is_space(c)) out.insert(c);
    }
  }
  return out;
}

}  // namespace corpusforge::text
