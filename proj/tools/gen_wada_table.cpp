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
// Regenerates include/corpusforge/wada_table.hpp:
//   gen_wada_table > include/corpusforge/wada_table.hpp

#include <cstdio>

#include "corpusforge/snr_model.hpp"

int main() {
  using namespace corpusforge::snr;
  const auto g = model::compute_table(kMinDb, kMaxDb);
  std::printf(
      "// Copyright 2026 The corpusforge Authors.\n"
      "//\n"
      "// Licensed under the Apache License, Version 2.0 (the \"License\");\n"
      "// you may not use this file except in compliance with the License.\n"
      "// You may obtain a copy of the License at\n"
      "//\n"
      "//     http://www.apache.org/licenses/LICENSE-2.0\n"
      "//\n"
      "// Unless required by applicable law or agreed to in writing, software\n"
      "// distributed under the License is distributed on an \"AS IS\" BASIS,\n"
      "// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.\n"
      "// See the License for the specific language governing permissions and\n"
      "// limitations under the License.\n"
      "//\n"
      "// Generated by tools/gen_wada_table.cpp. Do not edit.\n"
      "// g = ln E|z| - E ln|z| for Gamma(0.4) speech plus Gaussian noise, one\n"
      "// entry per dB from %.0f to %.0f.\n\n"
      "#pragma once\n\n#include <array>\n\n"
      "namespace corpusforge::snr {\n\n"
      "inline constexpr double kWadaTableMinDb = %.1f;\n\n"
      "inline constexpr std::array<double, %zu> kWadaTable = {{\n",
      kMinDb, kMaxDb, kMinDb, g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::printf("    %.12f,  // %+.0f dB\n", g[i], kMinDb + static_cast<double>(i));
  }
  std::printf("}};\n\n}  // namespace corpusforge::snr\n");
  return 0;
}
