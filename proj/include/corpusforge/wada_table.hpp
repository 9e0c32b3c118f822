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
// Generated by tools/gen_wada_table.cpp. Do not edit.
// g = ln E|z| - E ln|z| for Gamma(0.4) speech plus Gaussian noise, one
// entry per dB from -20 to 100.

#pragma once

#include <array>

namespace corpusforge::snr {

inline constexpr double kWadaTableMinDb = -20.0;

inline constexpr std::array<double, 121> kWadaTable = {{
    0.409434700095,  // -20 dB
    0.409459495110,  // -19 dB
    0.409497615913,  // -18 dB
    0.409555846207,  // -17 dB
    0.409644124773,  // -16 dB
    0.409776796419,  // -15 dB
    0.409974217320,  // -14 dB
    0.410264732142,  // -13 dB
    0.410686991881,  // -12 dB
    0.411292510535,  // -11 dB
    0.412148269347,  // -10 dB
    0.413339080453,  // -9 dB
    0.414969335244,  // -8 dB
    0.417163709489,  // -7 dB
    0.420066400570,  // -6 dB
    0.423838549374,  // -5 dB
    0.428653656360,  // -4 dB
    0.434691027400,  // -3 dB
    0.442127552406,  // -2 dB
    0.451128386167,  // -1 dB
    0.461837316824,  // +0 dB
    0.474367727019,  // +1 dB
    0.488795044855,  // +2 dB
    0.505151439240,  // +3 dB
    0.523423258049,  // +4 dB
    0.543551382632,  // +5 dB
    0.565434337212,  // +6 dB
    0.588933704136,  // +7 dB
    0.613881198687,  // +8 dB
    0.640086670339,  // +9 dB
    0.667346316631,  // +10 dB
    0.695450498384,  // +11 dB
    0.724190697946,  // +12 dB
    0.753365332045,  // +13 dB
    0.782784290373,  // +14 dB
    0.812272202540,  // +15 dB
    0.841670531330,  // +16 dB
    0.870838649307,  // +17 dB
    0.899654083458,  // +18 dB
    0.928012116155,  // +19 dB
    0.955824918031,  // +20 dB
    0.983020366088,  // +21 dB
    1.009540674046,  // +22 dB
    1.035340935207,  // +23 dB
    1.060387653437,  // +24 dB
    1.084657316429,  // +25 dB
    1.108135047732,  // +26 dB
    1.130813360007,  // +27 dB
    1.152691021290,  // +28 dB
    1.173772038204,  // +29 dB
    1.194064754544,  // +30 dB
    1.213581060009,  // +31 dB
    1.232335701551,  // +32 dB
    1.250345688604,  // +33 dB
    1.267629782969,  // +34 dB
    1.284208064126,  // +35 dB
    1.300101561142,  // +36 dB
    1.315331942895,  // +37 dB
    1.329921250454,  // +38 dB
    1.343891724736,  // +39 dB
    1.357265543372,  // +40 dB
    1.370064761266,  // +41 dB
    1.382311150201,  // +42 dB
    1.394026113260,  // +43 dB
    1.405230610515,  // +44 dB
    1.415945101427,  // +45 dB
    1.426189501281,  // +46 dB
    1.435983149393,  // +47 dB
    1.445344787100,  // +48 dB
    1.454292543886,  // +49 dB
    1.462843930215,  // +50 dB
    1.471015835881,  // +51 dB
    1.478824532838,  // +52 dB
    1.486285681667,  // +53 dB
    1.493414340955,  // +54 dB
    1.500224978962,  // +55 dB
    1.506731487084,  // +56 dB
    1.512947194674,  // +57 dB
    1.518884884866,  // +58 dB
    1.524556811115,  // +59 dB
    1.529974714190,  // +60 dB
    1.535149839433,  // +61 dB
    1.540092954122,  // +62 dB
    1.544814364778,  // +63 dB
    1.549323934336,  // +64 dB
    1.553631099071,  // +65 dB
    1.557744885224,  // +66 dB
    1.561673925257,  // +67 dB
    1.565426473715,  // +68 dB
    1.569010422649,  // +69 dB
    1.572433316579,  // +70 dB
    1.575702366992,  // +71 dB
    1.578824466356,  // +72 dB
    1.581806201644,  // +73 dB
    1.584653867386,  // +74 dB
    1.587373478226,  // +75 dB
    1.589970781010,  // +76 dB
    1.592451264522,  // +77 dB
    1.594820180064,  // +78 dB
    1.597082533332,  // +79 dB
    1.599243113530,  // +80 dB
    1.601306493808,  // +81 dB
    1.603277042595,  // +82 dB
    1.605158932644,  // +83 dB
    1.606956149700,  // +84 dB
    1.608672500802,  // +85 dB
    1.610311622218,  // +86 dB
    1.611876987050,  // +87 dB
    1.613371912504,  // +88 dB
    1.614799566840,  // +89 dB
    1.616162976030,  // +90 dB
    1.617465030107,  // +91 dB
    1.618708489256,  // +92 dB
    1.619895989615,  // +93 dB
    1.621030048839,  // +94 dB
    1.622113071402,  // +95 dB
    1.623147353676,  // +96 dB
    1.624135088775,  // +97 dB
    1.625078371191,  // +98 dB
    1.625979201221,  // +99 dB
    1.626839489190,  // +100 dB
}};

}  // namespace corpusforge::snr
