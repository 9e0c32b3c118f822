# Copyright 2026 The corpusforge Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Reference MFCC for a 440 Hz tone, built from numpy rfft and scipy's DCT.

Writes tests/data/mfcc_440.json. Re-run only if the feature definition changes.
"""
import json
import pathlib

import numpy as np
from scipy.fft import dct

RATE = 16000
N = 4000  # 0.25 s
AMP = 0.5
WIN, HOP, NFFT = 400, 160, 512
NFILT, NCEP = 26, 13


def signal():
    n = np.arange(N)
    return (AMP * np.sin(2 * np.pi * 440.0 * n / RATE)).astype(np.float32).astype(np.float64)


def mel(f):
    return 2595.0 * np.log10(1.0 + f / 700.0)


def imel(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def fbank():
    edges = imel(np.linspace(0.0, mel(RATE / 2.0), NFILT + 2))
    freqs = np.arange(NFFT // 2 + 1) * RATE / NFFT
    out = np.zeros((NFILT, freqs.size))
    for m in range(NFILT):
        lo, mid, hi = edges[m : m + 3]
        up = (freqs > lo) & (freqs <= mid)
        down = (freqs > mid) & (freqs < hi)
        out[m, up] = (freqs[up] - lo) / (mid - lo)
        out[m, down] = (hi - freqs[down]) / (hi - mid)
    return out


def mfcc(x):
    y = np.append(x[0], x[1:] - 0.97 * x[:-1])
    n_frames = (len(y) - WIN) // HOP + 1
    idx = np.arange(WIN)[None, :] + HOP * np.arange(n_frames)[:, None]
    frames = y[idx] * np.hamming(WIN)
    power = np.abs(np.fft.rfft(frames, NFFT)) ** 2 / NFFT
    energies = np.maximum(power @ fbank().T, 1e-10)
    return dct(np.log(energies), type=2, norm="ortho", axis=1)[:, :NCEP]


if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "mfcc_440.json"
    m = mfcc(signal())
    out.write_text(json.dumps({"rate": RATE, "n": N, "amp": AMP, "freq": 440.0, "mfcc": m.tolist()}) + "\n")
    print(out, m.shape)
