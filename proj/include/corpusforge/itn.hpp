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
// Inverse text normalization of spoken cardinals: a small weighted FST
// engine (tropical semiring) and number grammars compiled from data files.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/text.hpp"

namespace corpusforge::itn {

// ---------------------------------------------------------------------------
// WFST

using StateId = int;

struct Arc {
  std::string input;                // empty = epsilon
  std::vector<std::string> output;  // possibly empty
  double weight = 0.0;
  StateId to = 0;
};

class Wfst {
 public:
  StateId add_state() {
    arcs_.emplace_back();
    return static_cast<StateId>(arcs_.size()) - 1;
  }

  void set_start(StateId s) {
    check(s);
    start_ = s;
  }
  void set_final(StateId s, double weight = 0.0) {
    check(s);
    if (weight < 0.0) throw Error("negative final weight");
    finals_[s] = weight;
  }

  void add_arc(StateId from, Arc arc) {
    check(from);
    check(arc.to);
    if (arc.weight < 0.0 || !std::isfinite(arc.weight)) throw Error("arc weights must be finite and non-negative");
    arcs_[static_cast<std::size_t>(from)].push_back(std::move(arc));
  }

  void add_arc(StateId from, std::string input, std::vector<std::string> output, double weight, StateId to) {
    add_arc(from, Arc{std::move(input), std::move(output), weight, to});
  }

  std::size_t num_states() const { return arcs_.size(); }
  StateId start() const { return start_; }
  const std::map<StateId, double>& finals() const { return finals_; }
  const std::vector<Arc>& arcs(StateId s) const { return arcs_.at(static_cast<std::size_t>(s)); }

  void validate() const {
    if (start_ < 0 || static_cast<std::size_t>(start_) >= arcs_.size()) throw Error("wfst has no start state");
  }

 private:
  void check(StateId s) const {
    if (s < 0 || static_cast<std::size_t>(s) >= arcs_.size()) throw Error("wfst: state out of range");
  }

  std::vector<std::vector<Arc>> arcs_;
  std::map<StateId, double> finals_;
  StateId start_ = -1;
};

struct TransduceResult {
  std::vector<std::string> output;
  double weight = 0.0;
};

// Shortest (tropical) path consuming all of tokens. Dijkstra over
// (state, position) pairs; throws "no parse" when nothing accepts.
inline TransduceResult transduce(const Wfst& fst, const std::vector<std::string>& tokens) {
  fst.validate();
  const std::size_t n = tokens.size();
  const std::size_t width = n + 1;
  const std::size_t nodes = fst.num_states() * width;
  const std::size_t sink = nodes;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(nodes + 1, kInf);
  struct Back {
    std::size_t node = 0;
    const std::vector<std::string>* output = nullptr;
  };
  std::vector<Back> back(nodes + 1);
  std::vector<bool> done(nodes + 1, false);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const std::size_t src = static_cast<std::size_t>(fst.start()) * width;
  dist[src] = 0.0;
  pq.emplace(0.0, src);
  auto relax = [&](std::size_t from, std::size_t to, double w, const std::vector<std::string>* out) {
    const double d = dist[from] + w;
    if (d < dist[to]) {
      dist[to] = d;
      back[to] = {from, out};
      pq.emplace(d, to);
    }
  };
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = true;
    if (u == sink) break;
    const auto q = static_cast<StateId>(u / width);
    const std::size_t pos = u % width;
    if (pos == n) {
      auto f = fst.finals().find(q);
      if (f != fst.finals().end()) relax(u, sink, f->second, nullptr);
    }
    for (const auto& a : fst.arcs(q)) {
      if (a.input.empty()) {
        relax(u, static_cast<std::size_t>(a.to) * width + pos, a.weight, &a.output);
      } else if (pos < n && a.input == tokens[pos]) {
        relax(u, static_cast<std::size_t>(a.to) * width + pos + 1, a.weight, &a.output);
      }
    }
  }
  if (dist[sink] == kInf) throw Error("no parse");
  TransduceResult r;
  r.weight = dist[sink];
  std::vector<const std::vector<std::string>*> pieces;
  for (std::size_t v = back[sink].node; v != src; v = back[v].node) pieces.push_back(back[v].output);
  for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
    r.output.insert(r.output.end(), (*it)->begin(), (*it)->end());
  }
  return r;
}

inline std::optional<TransduceResult> try_transduce(const Wfst& fst, const std::vector<std::string>& tokens) {
  try {
    return transduce(fst, tokens);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Single-state transducer copying any token from the given alphabet.
inline Wfst identity_transducer(const std::set<std::string>& alphabet) {
  Wfst f;
  const StateId s = f.add_state();
  f.set_start(s);
  f.set_final(s);
  for (const auto& t : alphabet) f.add_arc(s, t, {t}, 0.0, s);
  return f;
}

// ---------------------------------------------------------------------------
// Number grammars

enum class Role { kUnit, kTeen, kTen, kMultiplier };

struct GrammarEntry {
  std::string token;  // NFD
  std::uint64_t value = 0;
  Role role = Role::kUnit;
};

struct NumberGrammar {
  std::string language;
  std::vector<GrammarEntry> entries;
};

inline Role parse_role(std::string_view s) {
  if (s == "unit") return Role::kUnit;
  if (s == "teen") return Role::kTeen;
  if (s == "ten") return Role::kTen;
  if (s == "multiplier") return Role::kMultiplier;
  throw Error("unknown grammar role: " + std::string(s));
}

// Lines: token<TAB>value<TAB>role; '#' starts a comment line.
inline NumberGrammar parse_grammar(std::string_view contents, std::string language) {
  NumberGrammar g;
  g.language = std::move(language);
  std::size_t start = 0, line_no = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string line(contents.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, '\t');) f.push_back(col);
    if (f.size() != 3)
      throw Error(corpusforge::detail::concat("grammar line ", line_no, ": expected 3 tab-separated fields"));
    GrammarEntry e;
    e.token = text::nfd(f[0]);
    try {
      e.value = std::stoull(f[1]);
    } catch (const std::exception&) {
      throw Error(corpusforge::detail::concat("grammar line ", line_no, ": bad value"));
    }
    e.role = parse_role(f[2]);
    const bool ok = (e.role == Role::kUnit && e.value <= 9) ||
                    (e.role == Role::kTeen && e.value >= 10 && e.value <= 99) ||
                    (e.role == Role::kTen && e.value % 10 == 0 && e.value >= 20 && e.value <= 90) ||
                    (e.role == Role::kMultiplier && e.value >= 100);
    if (!ok) throw Error(corpusforge::detail::concat("grammar line ", line_no, ": value out of range for role"));
    g.entries.push_back(std::move(e));
  }
  if (g.entries.empty()) throw Error("empty grammar");
  return g;
}

inline std::filesystem::path default_data_dir() {
#ifdef CORPUSFORGE_DATA_DIR
  return CORPUSFORGE_DATA_DIR;
#else
  return "data";
#endif
}

inline NumberGrammar load_grammar(const std::string& lang, const std::filesystem::path& data_dir = default_data_dir()) {
  const auto path = data_dir / "itn" / (lang + ".grammar");
  if (lang.empty() || lang.find_first_of("/\\.") != std::string::npos || !std::filesystem::exists(path)) {
    throw Error("unsupported language: " + lang);
  }
  return parse_grammar(corpusforge::detail::read_file(path), lang);
}

struct CompileOptions {
  bool years = false;  // also read "twenty twenty two" as 2022
  double skip_penalty = 0.1;
};

namespace detail {

class NumberCompiler {
 public:
  NumberCompiler(const NumberGrammar& g, const CompileOptions& opt) : opt_(opt) {
    for (const auto& e : g.entries) {
      switch (e.role) {
        case Role::kUnit:
          (e.value == 0 ? zeros_ : units_).push_back(e);
          break;
        case Role::kTeen:
          teens_.push_back(e);
          break;
        case Role::kTen:
          tens_.push_back(e);
          break;
        case Role::kMultiplier:
          (e.value == 100 ? hundreds_ : multipliers_).push_back(e);
          break;
      }
    }
    if (units_.empty()) throw Error("grammar has no unit words");
    // Larger multipliers first. Group widths follow from the ratio between
    // neighbouring multipliers; the top group takes the width of the one
    // below it.
    std::map<std::uint64_t, std::vector<std::string>, std::greater<>> by_value;
    for (const auto& m : multipliers_) by_value[m.value].push_back(m.token);
    for (const auto& [v, tokens] : by_value) groups_.push_back({v, tokens, 0});
    groups_.push_back({1, {}, 0});
    for (std::size_t k = 1; k < groups_.size(); ++k) {
      const std::uint64_t ratio = groups_[k - 1].value / groups_[k].value;
      int w = 0;
      for (std::uint64_t r = ratio; r > 1; r /= 10) ++w;
      if (w < 1 || w > 3 || groups_[k - 1].value % groups_[k].value != 0) {
        throw Error("grammar multipliers do not form digit groups");
      }
      groups_[k].width = w;
    }
    groups_[0].width = groups_.size() > 1 ? groups_[1].width : 3;
    for (const auto& grp : groups_) {
      if (grp.width == 3 && hundreds_.empty()) throw Error("three-digit groups need a hundred word");
    }
  }

  Wfst compile() {
    const StateId start = f_.add_state();
    f_.set_start(start);
    const StateId final = f_.add_state();
    f_.set_final(final);
    for (const auto& z : zeros_) f_.add_arc(start, z.token, {"0"}, 0.0, final);

    // positions[k]: a group of index k comes next (all earlier groups done).
    const std::size_t G = groups_.size();
    std::vector<StateId> positions(G + 1);
    for (std::size_t k = 1; k < G; ++k) positions[k] = f_.add_state();
    positions[G] = final;

    for (std::size_t k = 0; k < G; ++k) {
      const auto& grp = groups_[k];
      const StateId next = positions[k + 1];
      // Leading group: natural digits.
      {
        const StateId end = grp.tokens.empty() ? next : f_.add_state();
        group(start, end, grp.width, /*padded=*/false);
        for (const auto& t : grp.tokens) f_.add_arc(end, t, {}, 0.0, next);
      }
      if (k == 0) continue;
      // Later group: zero-padded to its width, or skipped entirely.
      const StateId end = grp.tokens.empty() ? next : f_.add_state();
      group(positions[k], end, grp.width, /*padded=*/true);
      for (const auto& t : grp.tokens) f_.add_arc(end, t, {}, 0.0, next);
      f_.add_arc(positions[k], "", {std::string(static_cast<std::size_t>(grp.width), '0')}, opt_.skip_penalty, next);
    }

    if (opt_.years) {
      const StateId mid = f_.add_state();
      tens_part(start, mid, false);
      tens_part(mid, final, true);
    }
    return std::move(f_);
  }

 private:
  struct Group {
    std::uint64_t value;
    std::vector<std::string> tokens;
    int width;
  };

  static std::string digits(std::uint64_t v) { return std::to_string(v); }

  // Value 1..99. Padded output is always two digits.
  void tens_part(StateId a, StateId b, bool padded) {
    for (const auto& u : units_) f_.add_arc(a, u.token, {(padded ? "0" : "") + digits(u.value)}, 0.0, b);
    for (const auto& t : teens_) f_.add_arc(a, t.token, {digits(t.value)}, 0.0, b);
    if (tens_.empty()) return;
    const StateId m = f_.add_state();
    for (const auto& t : tens_) f_.add_arc(a, t.token, {digits(t.value / 10)}, 0.0, m);
    for (const auto& u : units_) f_.add_arc(m, u.token, {digits(u.value)}, 0.0, b);
    f_.add_arc(m, "", {"0"}, opt_.skip_penalty, b);
  }

  // Non-zero group value of the given width.
  void group(StateId a, StateId b, int width, bool padded) {
    if (width == 1) {
      for (const auto& u : units_) f_.add_arc(a, u.token, {digits(u.value)}, 0.0, b);
      return;
    }
    if (width == 2) {
      tens_part(a, b, padded);
      return;
    }
    // Width 3: optional "<unit> hundred" then an optional two-digit part.
    if (padded) {
      const StateId no_hundreds = f_.add_state();
      f_.add_arc(a, "", {"0"}, opt_.skip_penalty, no_hundreds);
      tens_part(no_hundreds, b, true);
    } else {
      tens_part(a, b, false);
    }
    const StateId h = f_.add_state(), h2 = f_.add_state();
    for (const auto& u : units_) f_.add_arc(a, u.token, {digits(u.value)}, 0.0, h);
    for (const auto& t : hundreds_) f_.add_arc(h, t.token, {}, 0.0, h2);
    tens_part(h2, b, true);
    f_.add_arc(h2, "", {"00"}, opt_.skip_penalty, b);
  }

  CompileOptions opt_;
  Wfst f_;
  std::vector<GrammarEntry> zeros_, units_, teens_, tens_, hundreds_, multipliers_;
  std::vector<Group> groups_;
};

}  // namespace detail

inline Wfst compile_number_grammar(const NumberGrammar& g, const CompileOptions& options = {}) {
  return detail::NumberCompiler(g, options).compile();
}

inline Wfst compile_number_grammar(const std::string& lang, const CompileOptions& options = {},
                                   const std::filesystem::path& data_dir = default_data_dir()) {
  return compile_number_grammar(load_grammar(lang, data_dir), options);
}

// Digits for a token span, or nullopt when the span is not one number.
inline std::optional<std::string> parse_number(const Wfst& fst, const std::vector<std::string>& tokens) {
  auto r = try_transduce(fst, tokens);
  if (!r) return std::nullopt;
  std::string out;
  for (const auto& p : r->output) out += p;
  return out;
}

inline constexpr std::size_t kMaxNumberTokens = 32;

// Replaces every maximal number span (leftmost first, longest match) with its
// digits; other tokens pass through.
inline std::string itn_text(std::string_view input, const Wfst& fst) {
  std::vector<std::string> raw;
  {
    std::istringstream in{std::string(input)};
    for (std::string w; in >> w;) raw.push_back(std::move(w));
  }
  std::vector<std::string> norm;
  norm.reserve(raw.size());
  for (const auto& w : raw) norm.push_back(text::nfd(w));

  std::vector<std::string> out;
  for (std::size_t i = 0; i < raw.size();) {
    std::size_t best_end = 0;
    std::string best;
    const std::size_t limit = std::min(raw.size(), i + kMaxNumberTokens);
    for (std::size_t j = limit; j > i; --j) {
      auto r = parse_number(fst, std::vector<std::string>(norm.begin() + i, norm.begin() + j));
      if (r) {
        best_end = j;
        best = *r;
        break;
      }
    }
    if (best_end) {
      out.push_back(best);
      i = best_end;
    } else {
      out.push_back(raw[i]);
      ++i;
    }
  }
  std::string joined;
  for (const auto& w : out) joined += (joined.empty() ? "" : " ") + w;
  return joined;
}

inline std::string itn_text(std::string_view input, const std::string& lang, const CompileOptions& options = {}) {
  return itn_text(input, compile_number_grammar(lang, options));
}

}  // namespace corpusforge::itn
