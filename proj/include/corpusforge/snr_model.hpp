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
// Numerical evaluation of the WADA generative model: Gamma(0.4) speech
// amplitudes with random sign plus unit-variance Gaussian noise. Produces the
// g-versus-SNR table committed as wada_table.hpp.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace corpusforge::snr {

inline constexpr double kMinDb = -20.0;
inline constexpr double kMaxDb = 100.0;
inline constexpr double kGammaShape = 0.4;

namespace model {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// E|a + n| for n ~ N(0, 1) (folded normal mean).
inline double mean_abs(double a) { return a * std::erf(a / std::numbers::sqrt2) + 2.0 * normal_pdf(a); }

// E ln|a + n| for n ~ N(0, 1), tabulated on [0, kLogGridMax] and continued by
// its asymptotic series beyond.
class MeanLogAbs {
 public:
  static constexpr double kLogGridMax = 12.0;
  static constexpr double kStep = 0.002;

  MeanLogAbs() {
    const auto n = static_cast<std::size_t>(std::lround(kLogGridMax / kStep)) + 1;
    values_.resize(n);
    for (std::size_t i = 0; i < n; ++i) values_[i] = integrate(static_cast<double>(i) * kStep);
  }

  double operator()(double a) const {
    a = std::abs(a);
    if (a >= kLogGridMax) return asymptotic(a);
    // Catmull-Rom on the uniform grid; L is even so reflect at zero.
    const double x = a / kStep;
    const auto i = static_cast<std::ptrdiff_t>(std::floor(x));
    const double t = x - static_cast<double>(i);
    auto at = [&](std::ptrdiff_t k) {
      k = std::abs(k);
      k = std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(values_.size()) - 1);
      return values_[static_cast<std::size_t>(k)];
    };
    const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
  }

  // Integral of [phi(y - a) + phi(y + a)] ln y over y > 0, via y = e^u.
  static double integrate(double a) {
    constexpr double du = 0.005;
    const double u_lo = -40.0;
    const double u_hi = std::log(a + 12.0);
    const auto steps = static_cast<std::size_t>(std::ceil((u_hi - u_lo) / du));
    const double h = (u_hi - u_lo) / static_cast<double>(steps);
    double sum = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
      const double u = u_lo + h * static_cast<double>(i);
      const double y = std::exp(u);
      const double f = (normal_pdf(y - a) + normal_pdf(y + a)) * u * y;
      sum += (i == 0 || i == steps) ? 0.5 * f : f;
    }
    return sum * h;
  }

  static double asymptotic(double a) {
    const double r = 1.0 / (a * a);
    return std::log(a) - r * (0.5 + r * (0.75 + r * (2.5 + r * (105.0 / 8.0))));
  }

 private:
  std::vector<double> values_;
};

// g for the Gamma(0.4) + N(0,1) mixture at the given SNR.
inline double g_at_snr(double snr_db, const MeanLogAbs& mean_log) {
  const double k = kGammaShape;
  const double power = std::pow(10.0, snr_db / 10.0);
  const double theta = std::sqrt(power / (k * (k + 1.0)));
  // Integrate over tau = ln(a / theta); the Gamma density in tau is smooth.
  constexpr double dtau = 0.005;
  constexpr double tau_lo = -120.0, tau_hi = 6.0;
  const auto steps = static_cast<std::size_t>(std::lround((tau_hi - tau_lo) / dtau));
  const double log_norm = -std::lgamma(k);
  double mass = 0.0, e_abs = 0.0, e_log = 0.0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double tau = tau_lo + dtau * static_cast<double>(i);
    const double w = std::exp(k * tau - std::exp(tau) + log_norm) * ((i == 0 || i == steps) ? 0.5 : 1.0);
    const double a = theta * std::exp(tau);
    mass += w;
    e_abs += w * mean_abs(a);
    e_log += w * mean_log(a);
  }
  return std::log(e_abs / mass) - e_log / mass;
}

inline std::vector<double> compute_table(double min_db = kMinDb, double max_db = kMaxDb) {
  const MeanLogAbs mean_log;
  std::vector<double> g;
  for (double db = min_db; db <= max_db + 1e-9; db += 1.0) g.push_back(g_at_snr(db, mean_log));
  return g;
}

}  // namespace model

}  // namespace corpusforge::snr
