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
// CTC decoding (greedy and prefix beam search with word-level n-gram
// fusion) and WER/CER scoring.
//
// LM scores are log10; they are converted to natural log before mixing with
// the CTC log-probabilities, so a completed word adds
//   alpha * ln(10) * log10 P(w | history) + beta.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/lm.hpp"
#include "corpusforge/parallel.hpp"
#include "corpusforge/text.hpp"

namespace corpusforge::decode {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// T x (V+1) log-probabilities. symbols[blank] is the empty string; every
// other symbol is a single code point.
struct EmissionMatrix {
  std::vector<std::string> symbols;
  std::size_t blank = 0;
  std::size_t frames = 0;
  std::vector<float> log_probs;

  std::size_t width() const { return symbols.size(); }
  float at(std::size_t t, std::size_t s) const { return log_probs[t * width() + s]; }

  void validate(double tol = 1e-4) const {
    if (frames == 0) throw Error("emissions: T must be at least 1");
    if (blank >= symbols.size() || !symbols[blank].empty()) throw Error("emissions: blank symbol missing");
    if (log_probs.size() != frames * width()) throw Error("emissions: size mismatch");
    std::set<std::string> seen;
    for (std::size_t s = 0; s < symbols.size(); ++s) {
      if (s == blank) continue;
      if (text::utf8_to_utf32(symbols[s]).size() != 1) throw Error("emissions: symbol is not one code point");
      if (!seen.insert(symbols[s]).second) throw Error("emissions: duplicate symbol " + symbols[s]);
    }
    for (std::size_t t = 0; t < frames; ++t) {
      double z = kNegInf;
      for (std::size_t s = 0; s < width(); ++s) z = log_add(z, at(t, s));
      if (std::abs(z) > tol) throw Error(corpusforge::detail::concat("emissions: row ", t, " is not normalized"));
    }
  }

  std::size_t index_of(std::string_view sym) const {
    for (std::size_t s = 0; s < symbols.size(); ++s) {
      if (s != blank && symbols[s] == sym) return s;
    }
    return symbols.size();
  }
};

// ---------------------------------------------------------------------------
// CFEM file: "CFEM", u32 T, u32 V+1, V+1 u16-length-prefixed UTF-8 symbols
// (blank is the empty one), then row-major f32.

inline std::string encode_emissions(const EmissionMatrix& e) {
  std::string out = "CFEM";
  corpusforge::detail::put_u32(out, static_cast<std::uint32_t>(e.frames));
  corpusforge::detail::put_u32(out, static_cast<std::uint32_t>(e.width()));
  for (const auto& s : e.symbols) {
    corpusforge::detail::put_u16(out, static_cast<std::uint16_t>(s.size()));
    out += s;
  }
  for (float v : e.log_probs) corpusforge::detail::put_f32(out, v);
  return out;
}

inline EmissionMatrix decode_emissions(std::string_view bytes) {
  corpusforge::detail::ByteReader r(bytes);
  if (!r.has(4) || r.take(4) != "CFEM") throw Error("not an emissions file");
  EmissionMatrix e;
  e.frames = r.u32();
  const std::size_t width = r.u32();
  bool have_blank = false;
  for (std::size_t s = 0; s < width; ++s) {
    const std::uint16_t len = r.u16();
    e.symbols.emplace_back(r.take(len));
    if (len == 0) {
      if (have_blank) throw Error("emissions: more than one blank");
      have_blank = true;
      e.blank = s;
    }
  }
  if (!have_blank) throw Error("emissions: blank symbol missing");
  if (r.remaining() != e.frames * width * 4) throw Error("truncated");
  e.log_probs.resize(e.frames * width);
  for (auto& v : e.log_probs) v = r.f32();
  e.validate();
  return e;
}

inline void save_emissions(const std::filesystem::path& path, const EmissionMatrix& e) {
  corpusforge::detail::write_file_atomic(path, encode_emissions(e));
}

inline EmissionMatrix load_emissions(const std::filesystem::path& path) {
  return decode_emissions(corpusforge::detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Greedy

inline std::string greedy_decode(const EmissionMatrix& e) {
  std::string out;
  std::size_t prev = e.blank;
  for (std::size_t t = 0; t < e.frames; ++t) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < e.width(); ++s) {
      if (e.at(t, s) > e.at(t, best)) best = s;
    }
    if (best != e.blank && best != prev) out += e.symbols[best];
    prev = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prefix beam search

struct DecoderConfig {
  std::size_t beam_width = 128;
  double lm_weight = 2.0;
  double word_insertion_penalty = -1.0;
  std::size_t n_best = 1;

  void validate() const {
    if (beam_width < 1) throw Error("beam_width must be at least 1");
    if (n_best < 1) throw Error("n_best must be at least 1");
  }
};

struct Hypothesis {
  std::string text;
  double score = 0.0;     // acoustic + lm
  double acoustic = 0.0;  // log P(prefix | emissions)
  double lm = 0.0;        // weighted LM and insertion terms
};

struct BeamEntry {
  std::u32string prefix;
  double p_blank = kNegInf;
  double p_non_blank = kNegInf;
  double lm_score = 0.0;
  std::vector<std::string> history;  // completed words, newest last
  // Cost the unfinished word is already certain to pay when it closes.
  double pending = 0.0;
  int node = 0;       // word-trie state of the unfinished word, -1 outside
  double rank = 0.0;  // cached score() + pending, used for pruning

  double acoustic() const { return log_add(p_blank, p_non_blank); }
  double score() const { return acoustic() + lm_score; }
};

struct BeamResult {
  std::vector<Hypothesis> n_best;
  std::vector<BeamEntry> beam;  // surviving prefixes after the last frame, best first
};

namespace detail {

// Checks that the emissions can spell every LM word.
inline void check_symbols(const EmissionMatrix& e, const lm::NGramModel& model) {
  std::set<char32_t> have;
  for (std::size_t s = 0; s < e.width(); ++s) {
    if (s != e.blank) have.insert(text::utf8_to_utf32(e.symbols[s])[0]);
  }
  if (!have.count(U' ')) throw Error("symbol mismatch: emissions have no space symbol");
  for (const auto& [w, entry] : model.table(1)) {
    if (w == lm::kBos || w == lm::kEos || w == lm::kUnk) continue;
    for (char32_t c : text::utf8_to_utf32(w)) {
      if (!have.count(c)) {
        throw Error("symbol mismatch: LM word '" + w + "' uses a character missing from the emissions");
      }
    }
  }
}

// Trie over the LM's words by code point; node 0 is the root. A partial word
// that falls out of the trie can only ever close as <unk>.
class WordTrie {
 public:
  WordTrie() = default;
  explicit WordTrie(const lm::NGramModel& model) {
    for (const auto& [w, entry] : model.table(1)) {
      if (w == lm::kBos || w == lm::kEos || w == lm::kUnk) continue;
      int node = 0;
      for (char32_t c : text::utf8_to_utf32(w)) {
        auto [it, inserted] = edges_.try_emplace(key(node, c), size_);
        if (inserted) ++size_;
        node = it->second;
      }
    }
  }

  // -1 once outside the trie.
  int child(int node, char32_t c) const {
    if (node < 0) return -1;
    auto it = edges_.find(key(node, c));
    return it == edges_.end() ? -1 : it->second;
  }

 private:
  static std::uint64_t key(int node, char32_t c) { return (static_cast<std::uint64_t>(node) << 32) | c; }
  std::unordered_map<std::uint64_t, int> edges_;
  int size_ = 1;
};

struct Fusion {
  const lm::NGramModel* model = nullptr;
  double alpha = 0.0;
  double beta = 0.0;

  double lm_term(const std::vector<std::string>& history, const std::string& w) const {
    return alpha * std::numbers::ln10 * model->log10_prob(history, w);
  }

  // Closes the word at the end of prefix (if any) into entry.
  void close_word(BeamEntry& entry) const {
    const auto& p = entry.prefix;
    entry.node = 0;
    if (p.empty() || p.back() == U' ') return;
    const auto start = p.find_last_of(U' ');
    const std::u32string word = start == std::u32string::npos ? p : p.substr(start + 1);
    std::string w = text::utf32_to_utf8(word);
    if (model) {
      w = model->map_word(w);
      entry.lm_score += lm_term(entry.history, w);
    }
    entry.lm_score += beta;
    entry.history.push_back(std::move(w));
    if (entry.history.size() >= static_cast<std::size_t>(lm::kMaxOrder)) entry.history.erase(entry.history.begin());
  }

  void close_sentence(BeamEntry& entry) const {
    close_word(entry);
    if (model) entry.lm_score += lm_term(entry.history, std::string(lm::kEos));
  }
};

// Orders by the cached rank; ties go to the lexicographically smaller prefix.
inline bool better(const BeamEntry& a, const BeamEntry& b) {
  if (a.rank != b.rank) return a.rank > b.rank;
  return a.prefix < b.prefix;
}

}  // namespace detail

// lm may be null (pure CTC; beta still applies per word). trie may be passed
// in to share detail::WordTrie(*lm) across calls.
//
// Candidates for the next frame are (parent, symbol) pairs; a prefix string
// is only built for the ones that survive pruning. Unfinished words carry a
// pending cost that is already certain: beta, plus the <unk> term once the
// word leaves the trie. It counts for pruning only and is replaced by the
// real charge when the word closes, so no final score changes.
inline BeamResult beam_decode(const EmissionMatrix& e, const lm::NGramModel* model, const DecoderConfig& config,
                              const detail::WordTrie* trie = nullptr) {
  config.validate();
  if (e.frames == 0) throw Error("emissions: T must be at least 1");
  detail::WordTrie own;
  if (model) {
    detail::check_symbols(e, *model);
    if (!trie) {
      own = detail::WordTrie(*model);
      trie = &own;
    }
  }
  const detail::Fusion fusion{model, config.lm_weight, config.word_insertion_penalty};
  const double nan = std::numeric_limits<double>::quiet_NaN();

  const std::size_t width = e.width();
  std::vector<char32_t> sym(width, 0);
  std::unordered_map<char32_t, std::size_t> sym_index;
  for (std::size_t s = 0; s < width; ++s) {
    if (s == e.blank) continue;
    sym[s] = text::utf8_to_utf32(e.symbols[s])[0];
    sym_index[sym[s]] = s;
  }

  struct Candidate {
    std::size_t parent = 0;
    std::size_t symbol = 0;  // == width: same prefix as the parent
    double p_blank = kNegInf;
    double p_non_blank = kNegInf;
    double lm_score = 0.0;
    double pending = 0.0;
    int node = 0;
    double rank = 0.0;
  };

  BeamEntry root;
  root.p_blank = 0.0;
  std::vector<BeamEntry> beam = {root};
  std::vector<Candidate> cands;
  std::vector<std::ptrdiff_t> ext_target;
  std::vector<double> closed_lm, unk_cost;
  std::unordered_map<std::u32string_view, std::size_t> index;

  auto cand_prefix = [&](const Candidate& c) {
    std::u32string p = beam[c.parent].prefix;
    if (c.symbol < width) p.push_back(sym[c.symbol]);
    return p;
  };
  auto cand_better = [&](const Candidate& a, const Candidate& b) {
    if (a.rank != b.rank) return a.rank > b.rank;
    return cand_prefix(a) < cand_prefix(b);
  };

  for (std::size_t t = 0; t < e.frames; ++t) {
    const std::size_t nb = beam.size();
    // Which beam entry, if any, is parent + symbol.
    index.clear();
    for (std::size_t q = 0; q < nb; ++q) index.emplace(beam[q].prefix, q);
    ext_target.assign(nb * width, -1);
    for (std::size_t q = 0; q < nb; ++q) {
      const std::u32string_view p = beam[q].prefix;
      if (p.empty()) continue;
      auto it = index.find(p.substr(0, p.size() - 1));
      if (it != index.end()) ext_target[it->second * width + sym_index.at(p.back())] = static_cast<std::ptrdiff_t>(q);
    }
    closed_lm.assign(nb, nan);
    unk_cost.assign(nb, nan);

    cands.clear();
    for (std::size_t q = 0; q < nb; ++q) {
      const auto& b = beam[q];
      Candidate c;
      c.parent = q;
      c.symbol = width;
      c.p_blank = b.acoustic() + e.at(t, e.blank);
      if (!b.prefix.empty()) c.p_non_blank = b.p_non_blank + e.at(t, sym_index.at(b.prefix.back()));
      c.lm_score = b.lm_score;
      c.pending = b.pending;
      c.node = b.node;
      cands.push_back(c);
    }
    for (std::size_t q = 0; q < nb; ++q) {
      const auto& b = beam[q];
      const double total = b.acoustic();
      const char32_t last = b.prefix.empty() ? 0 : b.prefix.back();
      for (std::size_t s = 0; s < width; ++s) {
        if (s == e.blank) continue;
        const double p = (sym[s] == last ? b.p_blank : total) + e.at(t, s);
        if (p == kNegInf) continue;
        const auto target = ext_target[q * width + s];
        if (target >= 0) {
          auto& c = cands[static_cast<std::size_t>(target)];
          c.p_non_blank = log_add(c.p_non_blank, p);
          continue;
        }
        Candidate c;
        c.parent = q;
        c.symbol = s;
        c.p_non_blank = p;
        if (sym[s] == U' ') {
          if (std::isnan(closed_lm[q])) {
            BeamEntry probe;
            probe.prefix = b.prefix;
            probe.lm_score = b.lm_score;
            probe.history = b.history;
            fusion.close_word(probe);
            closed_lm[q] = probe.lm_score;
          }
          c.lm_score = closed_lm[q];
        } else {
          c.lm_score = b.lm_score;
          c.pending = fusion.beta;
          if (model) {
            c.node = trie->child(b.node, sym[s]);
            if (c.node < 0) {
              if (std::isnan(unk_cost[q])) unk_cost[q] = fusion.lm_term(b.history, std::string(lm::kUnk));
              c.pending += unk_cost[q];
            }
          }
        }
        cands.push_back(c);
      }
    }

    for (auto& c : cands) c.rank = log_add(c.p_blank, c.p_non_blank) + c.lm_score + c.pending;
    if (cands.size() > config.beam_width) {
      std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(config.beam_width), cands.end(),
                       cand_better);
      cands.resize(config.beam_width);
    }
    std::sort(cands.begin(), cands.end(), cand_better);

    std::vector<BeamEntry> next;
    next.reserve(cands.size());
    for (const auto& c : cands) {
      const auto& par = beam[c.parent];
      BeamEntry n;
      n.prefix = par.prefix;
      n.history = par.history;
      n.lm_score = par.lm_score;
      if (c.symbol < width) {
        n.prefix.push_back(sym[c.symbol]);
        if (sym[c.symbol] == U' ') {
          BeamEntry probe;
          probe.prefix = par.prefix;
          probe.lm_score = par.lm_score;
          probe.history = par.history;
          fusion.close_word(probe);
          n.history = std::move(probe.history);
        }
      }
      n.p_blank = c.p_blank;
      n.p_non_blank = c.p_non_blank;
      n.lm_score = c.lm_score;
      n.pending = c.pending;
      n.node = c.node;
      n.rank = c.rank;
      next.push_back(std::move(n));
    }
    beam = std::move(next);
  }

  BeamResult out;
  std::vector<BeamEntry> finals = beam;
  for (auto& f : finals) {
    fusion.close_sentence(f);
    f.pending = 0.0;
    f.rank = f.score();
  }
  std::sort(finals.begin(), finals.end(), detail::better);
  std::set<std::string> emitted;
  for (const auto& f : finals) {
    if (out.n_best.size() >= config.n_best) break;
    std::string txt;
    for (const auto& w : lm::tokenize(text::utf32_to_utf8(f.prefix))) txt += (txt.empty() ? "" : " ") + w;
    if (!emitted.insert(txt).second) continue;
    out.n_best.push_back({txt, f.score(), f.acoustic(), f.lm_score});
  }
  out.beam = std::move(beam);
  return out;
}

inline std::string beam_decode_text(const EmissionMatrix& e, const lm::NGramModel* model, const DecoderConfig& config) {
  auto r = beam_decode(e, model, config);
  return r.n_best.empty() ? std::string() : r.n_best.front().text;
}

// Decodes utterances in parallel over a shared model; output order follows
// input order.
inline std::vector<std::string> decode_batch(const std::vector<EmissionMatrix>& batch, const lm::NGramModel* model,
                                             const DecoderConfig& config, std::size_t jobs = 1) {
  std::vector<std::string> out(batch.size());
  const auto trie = model ? detail::WordTrie(*model) : detail::WordTrie{};
  parallel_for(batch.size(), jobs, [&](std::size_t i) {
    const auto r = beam_decode(batch[i], model, config, model ? &trie : nullptr);
    out[i] = r.n_best.empty() ? std::string() : r.n_best.front().text;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Scoring

template <typename T>
std::size_t edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct ErrorCounts {
  std::size_t edits = 0;
  std::size_t ref_length = 0;

  double rate() const { return static_cast<double>(edits) / static_cast<double>(ref_length); }
  ErrorCounts& operator+=(const ErrorCounts& o) {
    edits += o.edits;
    ref_length += o.ref_length;
    return *this;
  }
};

inline std::vector<std::string> words_of(std::string_view s) { return lm::tokenize(s); }

inline std::u32string chars_of(std::string_view s) {
  std::u32string out;
  for (char32_t c : text::utf8_to_utf32(s)) {
    if (!text::is_space(c)) out.push_back(c);
  }
  return out;
}

inline ErrorCounts word_errors(std::string_view ref, std::string_view hyp) {
  const auto r = words_of(ref);
  if (r.empty()) throw Error("empty reference");
  return {edit_distance(r, words_of(hyp)), r.size()};
}

inline ErrorCounts char_errors(std::string_view ref, std::string_view hyp) {
  const auto r = chars_of(ref);
  if (r.empty()) throw Error("empty reference");
  const auto h = chars_of(hyp);
  return {edit_distance(std::vector<char32_t>(r.begin(), r.end()), std::vector<char32_t>(h.begin(), h.end())),
          r.size()};
}

inline double wer(std::string_view ref, std::string_view hyp) { return word_errors(ref, hyp).rate(); }
inline double cer(std::string_view ref, std::string_view hyp) { return char_errors(ref, hyp).rate(); }

// ---------------------------------------------------------------------------
// Mock acoustic model

struct MockAcousticConfig {
  std::size_t frames_per_char = 2;
  double margin = 4.0;  // logit advantage of the true symbol
  double noise = 0.0;   // std-dev of Gaussian logit noise
  std::uint64_t seed = 1;
};

// Emissions for text: each character held for frames_per_char frames, with a
// blank-dominant frame after every character.
inline EmissionMatrix mock_emissions(std::string_view txt, const std::vector<std::string>& alphabet,
                                     const MockAcousticConfig& config, std::mt19937_64& rng) {
  EmissionMatrix e;
  e.symbols = alphabet;
  e.symbols.push_back("");
  e.blank = alphabet.size();
  const std::size_t width = e.symbols.size();
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::size_t> targets;
  for (char32_t c : text::utf8_to_utf32(txt)) {
    const std::size_t s = e.index_of(text::code_point_to_utf8(c));
    if (s >= width) throw Error("mock acoustic model: character outside alphabet");
    for (std::size_t k = 0; k < config.frames_per_char; ++k) targets.push_back(s);
    targets.push_back(e.blank);
  }
  if (targets.empty()) targets.push_back(e.blank);
  e.frames = targets.size();
  e.log_probs.resize(e.frames * width);
  std::vector<double> logits(width);
  for (std::size_t t = 0; t < e.frames; ++t) {
    double z = kNegInf;
    for (std::size_t s = 0; s < width; ++s) {
      logits[s] = (s == targets[t] ? config.margin : 0.0) + config.noise * noise(rng);
      z = log_add(z, logits[s]);
    }
    for (std::size_t s = 0; s < width; ++s) e.log_probs[t * width + s] = static_cast<float>(logits[s] - z);
  }
  return e;
}

}  // namespace corpusforge::decode
