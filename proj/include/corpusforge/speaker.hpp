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
// Speaker embeddings, the CFEB embedding container, HDBSCAN clustering,
// cluster purity and the per-speaker duration budget.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "corpusforge/audio.hpp"
#include "corpusforge/error.hpp"

namespace corpusforge::speaker {

inline constexpr int kNoise = -1;
inline constexpr std::size_t kDefaultDim = 256;

struct Embedding {
  std::string utt_id;
  std::vector<float> vector;

  std::size_t dim() const { return vector.size(); }
};

// ---------------------------------------------------------------------------
// MFCC-statistics embedder

// Per-coefficient mean, standard deviation and mean absolute frame-to-frame
// delta, concatenated (3 * n_coeffs values, not normalized).
inline std::vector<double> mfcc_stats(const MfccMatrix& features) {
  if (features.n_frames < 2) throw Error("embedding needs at least 2 frames");
  const std::size_t nc = features.n_coeffs;
  const auto n = static_cast<double>(features.n_frames);
  std::vector<double> out(3 * nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < features.n_frames; ++t) sum += features.at(t, c);
    const double mean = sum / n;
    double var = 0.0, delta = 0.0;
    for (std::size_t t = 0; t < features.n_frames; ++t) {
      const double d = features.at(t, c) - mean;
      var += d * d;
      if (t > 0) delta += std::abs(features.at(t, c) - features.at(t - 1, c));
    }
    out[c] = mean;
    out[nc + c] = std::sqrt(var / n);
    out[2 * nc + c] = delta / (n - 1.0);
  }
  return out;
}

inline void l2_normalize(std::vector<float>& v) {
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (float& x : v) x = static_cast<float>(x / norm);
}

// Stats are tiled (or truncated) to dim, then L2-normalized.
inline Embedding embed_mfcc_stats(const MfccMatrix& features, std::size_t dim = kDefaultDim, std::string utt_id = {}) {
  if (dim == 0) throw Error("embedding dim must be positive");
  const auto stats = mfcc_stats(features);
  Embedding e;
  e.utt_id = std::move(utt_id);
  e.vector.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) e.vector[i] = static_cast<float>(stats[i % stats.size()]);
  l2_normalize(e.vector);
  return e;
}

// ---------------------------------------------------------------------------
// CFEB container: "CFEB", u32 version=1, u32 dim, u32 count, then per record
// u16 id length, UTF-8 id, dim little-endian f32.

namespace detail {

inline std::string encode_embeddings(std::span<const Embedding> embeddings) {
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().dim();
  std::string out = "CFEB";
  corpusforge::detail::put_u32(out, 1);
  corpusforge::detail::put_u32(out, static_cast<std::uint32_t>(dim));
  corpusforge::detail::put_u32(out, static_cast<std::uint32_t>(embeddings.size()));
  for (const auto& e : embeddings) {
    if (e.dim() != dim) throw Error("dim disagreement: all embeddings in a file share one dim");
    if (e.utt_id.size() > 0xffff) throw Error("utt_id too long: " + e.utt_id.substr(0, 32));
    corpusforge::detail::put_u16(out, static_cast<std::uint16_t>(e.utt_id.size()));
    out += e.utt_id;
    for (float x : e.vector) corpusforge::detail::put_f32(out, x);
  }
  return out;
}

inline std::vector<Embedding> decode_embeddings(corpusforge::detail::ByteReader& r) {
  if (!r.has(4) || r.take(4) != "CFEB") throw Error("not an embedding file");
  const std::uint32_t version = r.u32();
  if (version != 1) throw Error(corpusforge::detail::concat("unsupported embedding file version ", version));
  const std::uint32_t dim = r.u32();
  const std::uint32_t count = r.u32();
  std::vector<Embedding> out;
  out.reserve(std::min<std::uint32_t>(count, 1u << 20));
  for (std::uint32_t i = 0; i < count; ++i) {
    Embedding e;
    const std::uint16_t len = r.u16();
    e.utt_id = std::string(r.take(len));
    e.vector.resize(dim);
    for (auto& x : e.vector) x = r.f32();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace detail

inline void save_embeddings(const std::filesystem::path& path, std::span<const Embedding> embeddings) {
  corpusforge::detail::write_file_atomic(path, detail::encode_embeddings(embeddings));
}

inline std::vector<Embedding> load_embeddings(const std::filesystem::path& path) {
  const std::string bytes = corpusforge::detail::read_file(path);
  corpusforge::detail::ByteReader r(bytes);
  return detail::decode_embeddings(r);
}

// ---------------------------------------------------------------------------
// HDBSCAN

struct HdbscanParams {
  int min_cluster_size = 5;
  int min_samples = 0;  // 0 means "same as min_cluster_size"

  int effective_min_samples() const { return min_samples > 0 ? min_samples : min_cluster_size; }

  void validate() const {
    if (min_cluster_size < 2) throw Error("min_cluster_size must be >= 2");
    if (min_samples < 0) throw Error("min_samples must be >= 1");
  }
};

struct ClusterAssignment {
  std::map<std::string, int> labels;  // utt_id -> cluster id or kNoise
  int n_clusters = 0;

  int label_of(const std::string& id) const {
    auto it = labels.find(id);
    if (it == labels.end()) throw Error("unknown utt_id: " + id);
    return it->second;
  }
};

struct MstEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

inline double euclidean(std::span<const float> x, std::span<const float> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline std::vector<double> pairwise_distances(std::span<const Embedding> pts) {
  const std::size_t n = pts.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i * n + j] = d[j * n + i] = euclidean(pts[i].vector, pts[j].vector);
    }
  }
  return d;
}

// Distance to the k-th nearest point, the point itself counting as the first.
inline std::vector<double> core_distances(const std::vector<double>& dist, std::size_t n, std::size_t k) {
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<double> core(n), row(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(dist.begin() + static_cast<std::ptrdiff_t>(i * n),
              dist.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), row.begin());
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
    core[i] = row[k - 1];
  }
  return core;
}

// Exact Prim's MST over the complete mutual-reachability graph,
// d_mr(a, b) = max(core(a), core(b), d(a, b)).
inline std::vector<MstEdge> mutual_reachability_mst(const std::vector<double>& dist, const std::vector<double>& core) {
  const std::size_t n = core.size();
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = std::max({core[current], core[j], dist[current * n + j]});
      if (w < best[j]) {
        best[j] = w;
        from[j] = current;
      }
      if (next == n || best[j] < best[next]) next = j;
    }
    in_tree[next] = true;
    edges.push_back({from[next], next, best[next]});
    current = next;
  }
  return edges;
}

namespace detail {

struct UnionFind {
  std::vector<std::size_t> parent;
  std::vector<std::size_t> size;

  explicit UnionFind(std::size_t n) : parent(n), size(n, 1) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

struct CondensedRow {
  std::size_t parent;
  std::size_t child;
  double lambda;
  std::size_t child_size;
};

}  // namespace detail

// Full HDBSCAN with excess-of-mass selection; the root is never selected.
// Cluster ids are ordered by the smallest utt_id among their members, which
// keeps labels independent of input order.
inline ClusterAssignment hdbscan(std::span<const Embedding> points, const HdbscanParams& params = {}) {
  params.validate();
  ClusterAssignment result;
  const std::size_t n = points.size();
  if (n == 0) throw Error("hdbscan needs at least one embedding");
  const std::size_t dim = points.front().dim();
  for (const auto& p : points) {
    if (p.dim() != dim) throw Error("dim mismatch in embeddings");
  }
  const auto mcs = static_cast<std::size_t>(params.min_cluster_size);
  for (const auto& p : points) result.labels[p.utt_id] = kNoise;
  if (n < mcs || n < 2) return result;

  const auto dist = pairwise_distances(points);
  const auto core = core_distances(dist, n, static_cast<std::size_t>(params.effective_min_samples()));
  auto edges = mutual_reachability_mst(dist, core);
  std::stable_sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) { return x.weight < y.weight; });

  // Single-linkage dendrogram: internal node n + i merges left/right at dist.
  struct Merge {
    std::size_t left, right;
    double dist;
    std::size_t size;
  };
  std::vector<Merge> tree;
  tree.reserve(n - 1);
  detail::UnionFind uf(2 * n - 1);
  std::vector<std::size_t> node_of(n);
  std::iota(node_of.begin(), node_of.end(), 0);
  for (const auto& e : edges) {
    const std::size_t ra = uf.find(e.a), rb = uf.find(e.b);
    const std::size_t id = n + tree.size();
    const std::size_t sa = ra < n ? 1 : tree[ra - n].size;
    const std::size_t sb = rb < n ? 1 : tree[rb - n].size;
    tree.push_back({ra, rb, e.weight, sa + sb});
    uf.parent[ra] = id;
    uf.parent[rb] = id;
  }
  auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : tree[node - n].size; };
  auto leaves_under = [&](std::size_t node, auto&& emit) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        emit(x);
      } else {
        stack.push_back(tree[x - n].right);
        stack.push_back(tree[x - n].left);
      }
    }
  };

  // Condensed tree, visiting dendrogram nodes breadth first from the root.
  const std::size_t root = 2 * n - 2;
  std::vector<detail::CondensedRow> condensed;
  std::vector<std::size_t> relabel(2 * n - 1, 0);
  relabel[root] = n;
  std::size_t next_label = n + 1;
  std::vector<std::size_t> queue{root};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const std::size_t node = queue[qi];
    if (node < n) continue;
    const auto& m = tree[node - n];
    const double lambda = 1.0 / std::max(m.dist, 1e-12);
    const std::size_t lsize = node_size(m.left), rsize = node_size(m.right);
    const std::size_t label = relabel[node];
    auto fall_out = [&](std::size_t sub) {
      leaves_under(sub, [&](std::size_t leaf) { condensed.push_back({label, leaf, lambda, 1}); });
    };
    if (lsize >= mcs && rsize >= mcs) {
      relabel[m.left] = next_label++;
      condensed.push_back({label, relabel[m.left], lambda, lsize});
      relabel[m.right] = next_label++;
      condensed.push_back({label, relabel[m.right], lambda, rsize});
      queue.push_back(m.left);
      queue.push_back(m.right);
    } else if (lsize < mcs && rsize < mcs) {
      fall_out(m.left);
      fall_out(m.right);
    } else if (lsize < mcs) {
      relabel[m.right] = label;
      fall_out(m.left);
      queue.push_back(m.right);
    } else {
      relabel[m.left] = label;
      fall_out(m.right);
      queue.push_back(m.left);
    }
  }

  // Stability: sum over children of (lambda_child - lambda_birth) * size.
  const std::size_t n_labels = next_label - n;
  std::vector<double> birth(n_labels, 0.0), stability(n_labels, 0.0);
  std::vector<std::vector<std::size_t>> children(n_labels);
  for (const auto& r : condensed) {
    if (r.child_size > 1 || r.child >= n) {
      birth[r.child - n] = r.lambda;
      children[r.parent - n].push_back(r.child - n);
    }
  }
  for (const auto& r : condensed) {
    stability[r.parent - n] += (r.lambda - birth[r.parent - n]) * static_cast<double>(r.child_size);
  }

  // Excess of mass, leaves first; labels increase with depth.
  std::vector<bool> selected(n_labels, false);
  for (std::size_t c = n_labels; c-- > 1;) {
    double subtree = 0.0;
    for (std::size_t ch : children[c]) subtree += stability[ch];
    if (!children[c].empty() && subtree > stability[c]) {
      stability[c] = subtree;
    } else {
      selected[c] = true;
      std::vector<std::size_t> stack(children[c].begin(), children[c].end());
      while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        selected[x] = false;
        stack.insert(stack.end(), children[x].begin(), children[x].end());
      }
    }
  }

  // Each point belongs to the nearest selected ancestor in the condensed tree.
  std::vector<std::size_t> parent_of(n_labels, 0);
  for (std::size_t c = 0; c < n_labels; ++c) {
    for (std::size_t ch : children[c]) parent_of[ch] = c;
  }
  std::vector<std::size_t> point_cluster(n, 0);
  for (const auto& r : condensed) {
    if (r.child < n) point_cluster[r.child] = r.parent - n;
  }
  std::vector<int> raw(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = point_cluster[i];
    while (c != 0 && !selected[c]) c = parent_of[c];
    if (c != 0) raw[i] = static_cast<int>(c);
  }

  std::map<int, std::string> first_member;
  for (std::size_t i = 0; i < n; ++i) {
    if (raw[i] == kNoise) continue;
    auto [it, inserted] = first_member.emplace(raw[i], points[i].utt_id);
    if (!inserted && points[i].utt_id < it->second) it->second = points[i].utt_id;
  }
  std::vector<std::pair<std::string, int>> order;
  for (const auto& [c, id] : first_member) order.emplace_back(id, c);
  std::sort(order.begin(), order.end());
  std::map<int, int> dense;
  for (const auto& [id, c] : order) dense[c] = static_cast<int>(dense.size());
  for (std::size_t i = 0; i < n; ++i) {
    result.labels[points[i].utt_id] = raw[i] == kNoise ? kNoise : dense.at(raw[i]);
  }
  result.n_clusters = static_cast<int>(dense.size());
  return result;
}

// ---------------------------------------------------------------------------
// Purity

struct PurityReport {
  std::map<int, double> per_cluster;
  std::map<int, std::size_t> cluster_size;
  double mean = 1.0;  // size-weighted; 1.0 when there are no clusters
};

// Fraction of each cluster belonging to its dominant true speaker. Noise is
// excluded.
inline PurityReport cluster_purity(const ClusterAssignment& assignment,
                                   const std::map<std::string, std::string>& truth) {
  std::map<int, std::map<std::string, std::size_t>> counts;
  for (const auto& [id, c] : assignment.labels) {
    if (c == kNoise) continue;
    auto it = truth.find(id);
    if (it == truth.end()) throw Error("missing truth label for " + id);
    ++counts[c][it->second];
  }
  PurityReport rep;
  std::size_t total = 0, dominant_total = 0;
  for (const auto& [c, speakers] : counts) {
    std::size_t size = 0, dominant = 0;
    for (const auto& [spk, k] : speakers) {
      size += k;
      dominant = std::max(dominant, k);
    }
    rep.per_cluster[c] = static_cast<double>(dominant) / static_cast<double>(size);
    rep.cluster_size[c] = size;
    total += size;
    dominant_total += dominant;
  }
  if (total > 0) rep.mean = static_cast<double>(dominant_total) / static_cast<double>(total);
  return rep;
}

// ---------------------------------------------------------------------------
// Budget selection

struct SpeakerBudget {
  double cap_minutes = 90.0;
};

struct BudgetRecord {
  std::string utt_id;
  double duration_s = 0.0;
  double snr_db = 0.0;
  int cluster_id = kNoise;
};

struct BudgetSelection {
  std::vector<std::string> selected;     // input order
  std::vector<std::string> over_budget;  // clustered, did not fit
  std::vector<std::string> unclustered;  // noise, passed through
};

// Per cluster: rank by SNR (desc, utt_id asc) and take each chunk that still
// fits under the cap. A chunk that does not fit is skipped, and smaller
// lower-ranked chunks may still be taken.
inline BudgetSelection select_budget(std::span<const BudgetRecord> records, const SpeakerBudget& budget = {}) {
  if (!(budget.cap_minutes > 0.0)) throw Error("budget cap must be positive");
  const double cap_s = budget.cap_minutes * 60.0;
  std::map<int, std::vector<std::size_t>> by_cluster;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!(records[i].duration_s > 0.0)) throw Error("durations must be positive: " + records[i].utt_id);
    if (records[i].cluster_id != kNoise) by_cluster[records[i].cluster_id].push_back(i);
  }
  std::vector<char> take(records.size(), 0);
  for (auto& [cluster, idx] : by_cluster) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (records[a].snr_db != records[b].snr_db) return records[a].snr_db > records[b].snr_db;
      return records[a].utt_id < records[b].utt_id;
    });
    double total = 0.0;
    for (std::size_t i : idx) {
      // Small slack so an exactly filled cap survives float summation.
      if (total + records[i].duration_s <= cap_s + 1e-9) {
        total += records[i].duration_s;
        take[i] = 1;
      }
    }
  }
  BudgetSelection out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].cluster_id == kNoise)
      out.unclustered.push_back(records[i].utt_id);
    else if (take[i])
      out.selected.push_back(records[i].utt_id);
    else
      out.over_budget.push_back(records[i].utt_id);
  }
  return out;
}

}  // namespace corpusforge::speaker
