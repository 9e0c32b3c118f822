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
// Word n-gram language model: interpolated modified Kneser-Ney training,
// ARPA text I/O and back-off scoring.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "corpusforge/error.hpp"

namespace corpusforge::lm {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";
inline constexpr int kMaxOrder = 5;
inline constexpr double kBosLogProb = -99.0;  // conventional ARPA value; <s> is never predicted

using Sentence = std::vector<std::string>;

inline Sentence tokenize(std::string_view line) {
  Sentence out;
  std::istringstream in{std::string(line)};
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

inline std::vector<Sentence> tokenize_corpus(std::string_view text) {
  std::vector<Sentence> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto s = tokenize(text.substr(start, end - start));
    if (!s.empty()) out.push_back(std::move(s));
    start = end + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

struct Vocabulary {
  std::vector<std::pair<std::string, std::size_t>> words;  // descending count, then lexicographic
  std::unordered_set<std::string> index;

  bool contains(std::string_view w) const { return index.count(std::string(w)) > 0; }
  std::size_t size() const { return index.size(); }  // includes the three specials

  const std::string& map(const std::string& w) const {
    static const std::string unk(kUnk);
    return contains(w) ? w : unk;
  }
};

inline Vocabulary build_vocab(const std::vector<Sentence>& corpus, std::size_t top_k = 500000) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : corpus) {
    for (const auto& w : s) {
      if (w == kBos || w == kEos || w == kUnk) continue;
      ++counts[w];
    }
  }
  if (counts.empty()) throw Error("empty corpus");
  Vocabulary v;
  v.words.assign(counts.begin(), counts.end());
  std::stable_sort(v.words.begin(), v.words.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (v.words.size() > top_k) v.words.resize(top_k);
  for (const auto& [w, c] : v.words) v.index.insert(w);
  for (auto s : {kBos, kEos, kUnk}) v.index.insert(std::string(s));
  return v;
}

// ---------------------------------------------------------------------------
// Model

struct NGramEntry {
  double log10_prob = 0.0;
  double log10_backoff = 0.0;
};

namespace detail {

inline std::string join(const std::string* first, const std::string* last) {
  std::string out;
  for (auto it = first; it != last; ++it) {
    if (it != first) out += ' ';
    out += *it;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& words) {
  return join(words.data(), words.data() + words.size());
}

}  // namespace detail

class NGramModel {
 public:
  NGramModel() = default;
  explicit NGramModel(int order) : tables_(static_cast<std::size_t>(order)) {
    if (order < 1 || order > kMaxOrder) throw Error("order must be in 1..5");
  }

  int order() const { return static_cast<int>(tables_.size()); }

  // n is 1-based.
  std::unordered_map<std::string, NGramEntry>& table(int n) { return tables_.at(static_cast<std::size_t>(n - 1)); }
  const std::unordered_map<std::string, NGramEntry>& table(int n) const {
    return tables_.at(static_cast<std::size_t>(n - 1));
  }

  bool in_vocab(const std::string& w) const { return order() > 0 && table(1).count(w) > 0; }

  std::string map_word(const std::string& w) const { return in_vocab(w) ? w : std::string(kUnk); }

  // log10 p(word | context) by longest match; context holds preceding words,
  // oldest first, already mapped into the vocabulary.
  double log10_prob(const std::vector<std::string>& context, const std::string& word) const {
    const std::size_t max_ctx = std::min<std::size_t>(context.size(), static_cast<std::size_t>(order() - 1));
    std::vector<std::string> gram(context.end() - static_cast<std::ptrdiff_t>(max_ctx), context.end());
    gram.push_back(word);
    double backoff = 0.0;
    while (true) {
      const int n = static_cast<int>(gram.size());
      const auto& t = table(n);
      auto it = t.find(detail::join(gram));
      if (it != t.end()) return backoff + it->second.log10_prob;
      if (n == 1) {
        // Word missing from the unigram table: score as <unk>.
        auto unk = t.find(std::string(kUnk));
        if (unk == t.end()) throw Error("model has no <unk> unigram");
        return backoff + unk->second.log10_prob;
      }
      const std::string* h = gram.data();
      auto ctx = table(n - 1).find(detail::join(h, h + n - 1));
      if (ctx != table(n - 1).end()) backoff += ctx->second.log10_backoff;
      gram.erase(gram.begin());
    }
  }

  struct SentenceScore {
    double total = 0.0;
    std::vector<double> per_token;  // one per word plus </s>
  };

  SentenceScore score(const Sentence& words, bool add_eos = true) const {
    SentenceScore out;
    std::vector<std::string> ctx = {std::string(kBos)};
    auto step = [&](const std::string& w) {
      const double lp = log10_prob(ctx, w);
      out.per_token.push_back(lp);
      out.total += lp;
      ctx.push_back(w);
      if (ctx.size() >= static_cast<std::size_t>(kMaxOrder)) ctx.erase(ctx.begin());
    };
    for (const auto& w : words) step(map_word(w));
    if (add_eos) step(std::string(kEos));
    return out;
  }

  std::size_t count(int n) const { return table(n).size(); }

 private:
  std::vector<std::unordered_map<std::string, NGramEntry>> tables_;
};

// ---------------------------------------------------------------------------
// Training

struct Discounts {
  std::array<double, 3> d = {0.75, 0.75, 0.75};  // D1, D2, D3+
  bool fallback = false;

  double operator()(double count) const { return count >= 3.0 ? d[2] : d[static_cast<std::size_t>(count) - 1]; }
};

// Chen and Goodman estimates from count-of-counts n1..n4; degenerate
// statistics fall back to a flat 0.75.
inline Discounts estimate_discounts(const std::array<std::size_t, 4>& n) {
  Discounts out;
  const bool degenerate = n[0] == 0 || n[1] == 0 || n[2] == 0 || n[3] == 0;
  if (!degenerate) {
    const double n1 = static_cast<double>(n[0]), n2 = static_cast<double>(n[1]);
    const double n3 = static_cast<double>(n[2]), n4 = static_cast<double>(n[3]);
    const double y = n1 / (n1 + 2.0 * n2);
    const std::array<double, 3> d = {1.0 - 2.0 * y * n2 / n1, 2.0 - 3.0 * y * n3 / n2, 3.0 - 4.0 * y * n4 / n3};
    bool ok = true;
    for (std::size_t k = 0; k < 3; ++k) ok = ok && d[k] > 0.0 && d[k] < static_cast<double>(k + 1);
    if (ok) {
      out.d = d;
      return out;
    }
  }
  out.fallback = true;
  return out;
}

struct TrainOptions {
  int order = 5;
};

struct TrainResult {
  NGramModel model;
  std::vector<Discounts> discounts;  // per order, 1-based index - 1
  std::vector<std::string> warnings;
};

namespace detail {

using Gram = std::vector<std::string>;

struct GramStats {
  double count = 0.0;  // adjusted (continuation) count
};

}  // namespace detail

inline TrainResult train_ngram_full(const std::vector<Sentence>& corpus, const Vocabulary& vocab,
                                    const TrainOptions& options = {}) {
  if (options.order < 1 || options.order > kMaxOrder) throw Error("order must be in 1..5");
  if (corpus.empty()) throw Error("empty corpus");
  TrainResult out;

  std::vector<std::vector<std::string>> sents;
  std::size_t longest = 0;
  for (const auto& s : corpus) {
    std::vector<std::string> w = {std::string(kBos)};
    for (const auto& t : s) w.push_back(vocab.map(t));
    w.push_back(std::string(kEos));
    longest = std::max(longest, w.size());
    sents.push_back(std::move(w));
  }
  int order = options.order;
  if (longest < static_cast<std::size_t>(order)) {
    order = static_cast<int>(longest);
    out.warnings.push_back(corpusforge::detail::concat("corpus too short for order ", options.order,
                                                       "; model truncated to order ", order));
  }

  // Raw counts of every n-gram up to the model order.
  std::vector<std::map<detail::Gram, double>> raw(static_cast<std::size_t>(order));
  for (const auto& w : sents) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (int n = 1; n <= order && i + static_cast<std::size_t>(n) <= w.size(); ++n) {
        raw[static_cast<std::size_t>(n - 1)][detail::Gram(w.begin() + i, w.begin() + i + n)] += 1.0;
      }
    }
  }

  // Adjusted counts: raw at the top order and for grams opening with <s>,
  // otherwise the number of distinct left extensions.
  std::vector<std::map<detail::Gram, double>> adj(static_cast<std::size_t>(order));
  adj[static_cast<std::size_t>(order - 1)] = raw[static_cast<std::size_t>(order - 1)];
  for (int n = order - 1; n >= 1; --n) {
    auto& a = adj[static_cast<std::size_t>(n - 1)];
    for (const auto& [g, c] : raw[static_cast<std::size_t>(n - 1)]) {
      if (g.front() == kBos) a[g] = c;
    }
    for (const auto& [g, c] : raw[static_cast<std::size_t>(n)]) {
      a[detail::Gram(g.begin() + 1, g.end())] += 1.0;
    }
  }
  // <s> alone is a context only; it is not part of the unigram distribution.
  adj[0].erase(detail::Gram{std::string(kBos)});

  // Discounts per order.
  for (int n = 1; n <= order; ++n) {
    std::array<std::size_t, 4> coc = {0, 0, 0, 0};
    for (const auto& [g, c] : adj[static_cast<std::size_t>(n - 1)]) {
      if (c >= 1.0 && c <= 4.0) ++coc[static_cast<std::size_t>(c) - 1];
    }
    auto d = estimate_discounts(coc);
    if (d.fallback) {
      out.warnings.push_back(
          corpusforge::detail::concat("order ", n, ": degenerate count-of-counts, using discount 0.75"));
    }
    out.discounts.push_back(d);
  }

  // Per-history totals and discount mass.
  struct HistStats {
    double total = 0.0;
    double mass = 0.0;  // D1 N1 + D2 N2 + D3 N3+
  };
  std::vector<std::map<detail::Gram, HistStats>> hist(static_cast<std::size_t>(order));
  for (int n = 1; n <= order; ++n) {
    const auto& d = out.discounts[static_cast<std::size_t>(n - 1)];
    for (const auto& [g, c] : adj[static_cast<std::size_t>(n - 1)]) {
      auto& h = hist[static_cast<std::size_t>(n - 1)][detail::Gram(g.begin(), g.end() - 1)];
      h.total += c;
      h.mass += d(c);
    }
  }

  // Unigram vocabulary: everything except <s>, so <unk> always gets mass.
  std::set<std::string> uni_vocab;
  for (const auto& w : vocab.index) {
    if (w != kBos) uni_vocab.insert(w);
  }
  for (const auto& [g, c] : adj[0]) uni_vocab.insert(g.front());
  const double uniform = 1.0 / static_cast<double>(uni_vocab.size());

  // Interpolated probabilities, lowest order first.
  std::vector<std::map<detail::Gram, double>> prob(static_cast<std::size_t>(order));
  {
    const auto& h = hist[0][detail::Gram{}];
    const double gamma = h.mass / h.total;
    const auto& d = out.discounts[0];
    for (const auto& w : uni_vocab) {
      auto it = adj[0].find(detail::Gram{w});
      const double c = it == adj[0].end() ? 0.0 : it->second;
      const double u = c > 0.0 ? (c - d(c)) / h.total : 0.0;
      prob[0][detail::Gram{w}] = u + gamma * uniform;
    }
  }
  for (int n = 2; n <= order; ++n) {
    const auto& d = out.discounts[static_cast<std::size_t>(n - 1)];
    for (const auto& [g, c] : adj[static_cast<std::size_t>(n - 1)]) {
      const auto& h = hist[static_cast<std::size_t>(n - 1)].at(detail::Gram(g.begin(), g.end() - 1));
      const double lower = prob[static_cast<std::size_t>(n - 2)].at(detail::Gram(g.begin() + 1, g.end()));
      prob[static_cast<std::size_t>(n - 1)][g] = (c - d(c)) / h.total + (h.mass / h.total) * lower;
    }
  }

  NGramModel model(order);
  for (int n = 1; n <= order; ++n) {
    auto& t = model.table(n);
    for (const auto& [g, p] : prob[static_cast<std::size_t>(n - 1)]) {
      t[detail::join(g)] = {std::log10(p), 0.0};
    }
  }
  model.table(1)[std::string(kBos)] = {kBosLogProb, 0.0};
  // Back-off weight of a context is its interpolation weight.
  for (int n = 2; n <= order; ++n) {
    for (const auto& [h, s] : hist[static_cast<std::size_t>(n - 1)]) {
      auto& t = model.table(n - 1);
      auto it = t.find(detail::join(h));
      if (it == t.end()) throw Error("internal: context missing from lower order");
      it->second.log10_backoff = std::log10(s.mass / s.total);
    }
  }
  out.model = std::move(model);
  return out;
}

inline NGramModel train_ngram(const std::vector<Sentence>& corpus, const Vocabulary& vocab, int order = 5) {
  return train_ngram_full(corpus, vocab, {order}).model;
}

// Histories that have at least one continuation; the model's conditional
// distributions are defined over these.
inline std::vector<std::vector<std::string>> trained_histories(const NGramModel& m) {
  std::vector<std::vector<std::string>> out = {{}};
  for (int n = 2; n <= m.order(); ++n) {
    std::set<std::string> seen;
    for (const auto& [key, e] : m.table(n)) {
      const auto pos = key.rfind(' ');
      seen.insert(key.substr(0, pos));
    }
    for (const auto& h : seen) {
      std::vector<std::string> words;
      std::istringstream in(h);
      for (std::string w; in >> w;) words.push_back(w);
      out.push_back(std::move(words));
    }
  }
  return out;
}

// Words a history can be followed by: the unigram vocabulary minus <s>.
inline std::vector<std::string> predictable_words(const NGramModel& m) {
  std::vector<std::string> out;
  for (const auto& [w, e] : m.table(1)) {
    if (w != kBos) out.push_back(w);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// ARPA

namespace detail {

inline std::string format_log(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.7g", v);
  return buf;
}

}  // namespace detail

inline std::string to_arpa(const NGramModel& m) {
  std::string out = "\n\\data\\\n";
  for (int n = 1; n <= m.order(); ++n) out += corpusforge::detail::concat("ngram ", n, "=", m.count(n), "\n");
  for (int n = 1; n <= m.order(); ++n) {
    out += corpusforge::detail::concat("\n\\", n, "-grams:\n");
    std::vector<std::pair<std::string, NGramEntry>> rows(m.table(n).begin(), m.table(n).end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [key, e] : rows) {
      out += detail::format_log(e.log10_prob) + "\t" + key;
      if (n < m.order()) out += "\t" + detail::format_log(e.log10_backoff);
      out += '\n';
    }
  }
  out += "\n\\end\\\n";
  return out;
}

inline void write_arpa(const std::filesystem::path& path, const NGramModel& m) {
  corpusforge::detail::write_file_atomic(path, to_arpa(m));
}

inline NGramModel parse_arpa(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(start, end - start));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      start = end + 1;
    }
  }
  std::size_t i = 0;
  auto skip_blank = [&] {
    while (i < lines.size() && lines[i].find_first_not_of(" \t") == std::string::npos) ++i;
  };
  skip_blank();
  if (i >= lines.size() || lines[i] != "\\data\\") throw Error("malformed header: expected \\data\\");
  ++i;
  std::vector<std::size_t> declared;
  while (i < lines.size() && lines[i].rfind("ngram ", 0) == 0) {
    const auto& l = lines[i];
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw Error("malformed header: " + l);
    int n = 0;
    std::size_t c = 0;
    try {
      n = std::stoi(l.substr(6, eq - 6));
      c = std::stoul(l.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error("malformed header: " + l);
    }
    if (n != static_cast<int>(declared.size()) + 1) throw Error("malformed header: ngram orders out of sequence");
    declared.push_back(c);
    ++i;
  }
  if (declared.empty() || declared.size() > static_cast<std::size_t>(kMaxOrder)) {
    throw Error("malformed header: bad ngram count list");
  }
  NGramModel m(static_cast<int>(declared.size()));
  for (int n = 1; n <= m.order(); ++n) {
    skip_blank();
    if (i >= lines.size() || lines[i] != corpusforge::detail::concat("\\", n, "-grams:")) {
      throw Error(corpusforge::detail::concat("malformed file: expected \\", n, "-grams:"));
    }
    ++i;
    auto& t = m.table(n);
    while (i < lines.size() && !lines[i].empty() && lines[i][0] != '\\') {
      std::istringstream in(lines[i]);
      std::vector<std::string> fields;
      for (std::string f; in >> f;) fields.push_back(f);
      const std::size_t nf = fields.size();
      if (nf != static_cast<std::size_t>(n) + 1 && nf != static_cast<std::size_t>(n) + 2) {
        throw Error("malformed n-gram line: " + lines[i]);
      }
      NGramEntry e;
      try {
        e.log10_prob = std::stod(fields[0]);
        if (nf == static_cast<std::size_t>(n) + 2) e.log10_backoff = std::stod(fields.back());
      } catch (const std::exception&) {
        throw Error("malformed n-gram line: " + lines[i]);
      }
      t[detail::join(fields.data() + 1, fields.data() + 1 + n)] = e;
      ++i;
    }
    if (t.size() != declared[static_cast<std::size_t>(n - 1)]) {
      throw Error(corpusforge::detail::concat("count mismatch: ", n, "-grams declared ",
                                              declared[static_cast<std::size_t>(n - 1)], ", found ", t.size()));
    }
  }
  skip_blank();
  if (i >= lines.size() || lines[i] != "\\end\\") throw Error("missing \\end\\");
  return m;
}

inline NGramModel read_arpa(const std::filesystem::path& path) {
  return parse_arpa(corpusforge::detail::read_file(path));
}

}  // namespace corpusforge::lm
