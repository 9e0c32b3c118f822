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
// RBF-kernel SVM trained by sequential minimal optimization, plus the
// per-cluster dominant-gender vote.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/speaker.hpp"

namespace corpusforge::gender {

// Male is the positive class.
enum class Gender { kMale, kFemale };

inline std::string to_string(Gender g) { return g == Gender::kMale ? "male" : "female"; }

inline Gender parse_gender(std::string_view s) {
  if (s == "male" || s == "m") return Gender::kMale;
  if (s == "female" || s == "f") return Gender::kFemale;
  throw Error("unknown gender label: " + std::string(s));
}

inline double sign_of(Gender g) { return g == Gender::kMale ? 1.0 : -1.0; }

struct LabeledExample {
  speaker::Embedding x;
  Gender label;
};

using LabeledSet = std::vector<LabeledExample>;

struct SmoOptions {
  double gamma = 0.01;
  double c = 100.0;
  double tol = 1e-3;
  int max_passes = 10;
  std::uint64_t seed = 0x5eed;
};

struct SvmModel {
  std::vector<speaker::Embedding> support_vectors;
  std::vector<double> alphas;  // alpha_i * y_i
  double bias = 0.0;
  double gamma = 0.01;
  double c = 100.0;

  std::size_t dim() const { return support_vectors.empty() ? 0 : support_vectors.front().dim(); }
};

inline double rbf(std::span<const float> x, std::span<const float> y, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - y[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

// Output of training: the model plus the full dual solution, which the KKT
// checks need.
struct TrainResult {
  SvmModel model;
  std::vector<double> alpha;  // unsigned, one per training example
  int iterations = 0;
};

namespace detail {

class SmoSolver {
 public:
  SmoSolver(const LabeledSet& data, const SmoOptions& opt) : data_(data), opt_(opt), n_(data.size()) {
    y_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) y_[i] = sign_of(data[i].label);
    kernel_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i) {
      kernel_[i * n_ + i] = 1.0;
      for (std::size_t j = i + 1; j < n_; ++j) {
        kernel_[i * n_ + j] = kernel_[j * n_ + i] = rbf(data[i].x.vector, data[j].x.vector, opt.gamma);
      }
    }
    alpha_.assign(n_, 0.0);
    f_.assign(n_, 0.0);
  }

  TrainResult run() {
    std::mt19937_64 rng(opt_.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    int passes = 0, iterations = 0;
    while (passes < opt_.max_passes) {
      std::size_t changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (!violates(i)) continue;
        std::size_t j = pick(rng);
        if (j == i) j = (j + 1) % n_;
        bool moved = step(i, j);
        // The random partner made no progress: sweep every other partner,
        // starting from a random offset, before giving up on i.
        for (std::size_t k = 0; !moved && k < n_; ++k) {
          const std::size_t jj = (j + k) % n_;
          if (jj != i) moved = step(i, jj);
        }
        if (moved) ++changed;
      }
      ++iterations;
      passes = changed == 0 ? passes + 1 : 0;
    }

    TrainResult out;
    out.alpha = alpha_;
    out.iterations = iterations;
    out.model.bias = b_;
    out.model.gamma = opt_.gamma;
    out.model.c = opt_.c;
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] > 0.0) {
        out.model.support_vectors.push_back(data_[i].x);
        out.model.alphas.push_back(alpha_[i] * y_[i]);
      }
    }
    return out;
  }

 private:
  double error(std::size_t i) const { return f_[i] + b_ - y_[i]; }

  bool violates(std::size_t i) const {
    const double r = y_[i] * error(i);
    return (r < -opt_.tol && alpha_[i] < opt_.c) || (r > opt_.tol && alpha_[i] > 0.0);
  }

  bool step(std::size_t i, std::size_t j) {
    const double c = opt_.c;
    const double ai = alpha_[i], aj = alpha_[j];
    const double yi = y_[i], yj = y_[j];
    const double ei = error(i), ej = error(j);
    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj - ai);
      hi = std::min(c, c + aj - ai);
    } else {
      lo = std::max(0.0, ai + aj - c);
      hi = std::min(c, ai + aj);
    }
    if (hi - lo < 1e-12) return false;
    const double kii = kernel_[i * n_ + i], kjj = kernel_[j * n_ + j], kij = kernel_[i * n_ + j];
    const double eta = 2.0 * kij - kii - kjj;
    double aj_new;
    if (eta < -1e-12) {
      aj_new = std::clamp(aj - yj * (ei - ej) / eta, lo, hi);
    } else {
      // Objective along the constraint line is linear or convex: take the
      // better end point.
      auto objective = [&](double a) { return 0.5 * eta * a * a + (yj * (ei - ej) - eta * aj) * a; };
      const double w_lo = objective(lo), w_hi = objective(hi);
      if (std::abs(w_hi - w_lo) < 1e-12) return false;
      aj_new = w_hi > w_lo ? hi : lo;
    }
    if (std::abs(aj_new - aj) < 1e-12 * (aj_new + aj + 1e-12)) return false;
    const double ai_new = ai + yi * yj * (aj - aj_new);
    const double dai = ai_new - ai, daj = aj_new - aj;

    const double b1 = b_ - ei - yi * dai * kii - yj * daj * kij;
    const double b2 = b_ - ej - yi * dai * kij - yj * daj * kjj;
    double b_new;
    if (ai_new > 0.0 && ai_new < c)
      b_new = b1;
    else if (aj_new > 0.0 && aj_new < c)
      b_new = b2;
    else
      b_new = 0.5 * (b1 + b2);

    alpha_[i] = ai_new;
    alpha_[j] = aj_new;
    for (std::size_t k = 0; k < n_; ++k) {
      f_[k] += yi * dai * kernel_[i * n_ + k] + yj * daj * kernel_[j * n_ + k];
    }
    b_ = b_new;
    return true;
  }

  const LabeledSet& data_;
  SmoOptions opt_;
  std::size_t n_;
  std::vector<double> y_;
  std::vector<double> kernel_;
  std::vector<double> alpha_;
  std::vector<double> f_;  // sum_j alpha_j y_j K(j, i), without bias
  double b_ = 0.0;
};

}  // namespace detail

inline TrainResult train_svm_smo_full(const LabeledSet& data, const SmoOptions& options = {}) {
  bool has_pos = false, has_neg = false;
  for (const auto& ex : data) {
    (ex.label == Gender::kMale ? has_pos : has_neg) = true;
    if (ex.x.dim() != data.front().x.dim()) throw Error("dim mismatch in training data");
  }
  if (!has_pos || !has_neg) throw Error("single-class data: both labels are required");
  if (!(options.gamma > 0.0) || !(options.c > 0.0)) throw Error("gamma and c must be positive");
  return detail::SmoSolver(data, options).run();
}

inline SvmModel train_svm_smo(const LabeledSet& data, const SmoOptions& options = {}) {
  return train_svm_smo_full(data, options).model;
}

struct Prediction {
  Gender label = Gender::kMale;
  double margin = 0.0;
};

inline double decision_value(const SvmModel& model, std::span<const float> x) {
  double f = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    f += model.alphas[i] * rbf(model.support_vectors[i].vector, x, model.gamma);
  }
  return f;
}

inline Prediction predict(const SvmModel& model, const speaker::Embedding& x) {
  if (x.dim() != model.dim()) {
    throw Error(corpusforge::detail::concat("dim mismatch: model ", model.dim(), ", input ", x.dim()));
  }
  const double m = decision_value(model, x.vector);
  return {m >= 0.0 ? Gender::kMale : Gender::kFemale, m};
}

// Majority label per cluster; ties go to the label with the larger mean
// |margin|, then to male. Noise utterances are not part of any cluster.
inline std::map<int, Gender> dominant_gender(const speaker::ClusterAssignment& assignment,
                                             const std::map<std::string, Prediction>& predictions) {
  struct Tally {
    std::size_t count[2] = {0, 0};
    double margin[2] = {0.0, 0.0};
  };
  std::map<int, Tally> tallies;
  for (const auto& [id, c] : assignment.labels) {
    if (c == speaker::kNoise) continue;
    auto it = predictions.find(id);
    if (it == predictions.end()) throw Error("no gender prediction for " + id);
    const int k = it->second.label == Gender::kMale ? 0 : 1;
    auto& t = tallies[c];
    ++t.count[k];
    t.margin[k] += std::abs(it->second.margin);
  }
  std::map<int, Gender> out;
  for (const auto& [c, t] : tallies) {
    if (t.count[0] != t.count[1]) {
      out[c] = t.count[0] > t.count[1] ? Gender::kMale : Gender::kFemale;
    } else {
      const double m0 = t.margin[0] / static_cast<double>(t.count[0]);
      const double m1 = t.margin[1] / static_cast<double>(t.count[1]);
      out[c] = m1 > m0 ? Gender::kFemale : Gender::kMale;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model file: "CFSV", u32 version=1, u32 header length, JSON header
// {gamma, c, bias, dim, alphas}, then a CFEB container of support vectors.

inline void save_model(const std::filesystem::path& path, const SvmModel& model) {
  nlohmann::json header = {
      {"gamma", model.gamma}, {"c", model.c},           {"bias", model.bias},
      {"dim", model.dim()},   {"alphas", model.alphas}, {"positive", "male"},
  };
  const std::string h = header.dump();
  std::string out = "CFSV";
  corpusforge::detail::put_u32(out, 1);
  corpusforge::detail::put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  out += speaker::detail::encode_embeddings(model.support_vectors);
  corpusforge::detail::write_file_atomic(path, out);
}

inline SvmModel load_model(const std::filesystem::path& path) {
  const std::string bytes = corpusforge::detail::read_file(path);
  corpusforge::detail::ByteReader r(bytes);
  if (!r.has(4) || r.take(4) != "CFSV") throw Error("not an svm model file");
  if (r.u32() != 1) throw Error("unsupported svm model version");
  const std::uint32_t len = r.u32();
  const auto header = nlohmann::json::parse(r.take(len));
  SvmModel m;
  m.gamma = header.at("gamma").get<double>();
  m.c = header.at("c").get<double>();
  m.bias = header.at("bias").get<double>();
  m.alphas = header.at("alphas").get<std::vector<double>>();
  m.support_vectors = speaker::detail::decode_embeddings(r);
  if (m.alphas.size() != m.support_vectors.size()) throw Error("svm model: alpha count mismatch");
  return m;
}

}  // namespace corpusforge::gender
