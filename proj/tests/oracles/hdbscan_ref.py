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
"""Cluster labels from scikit-learn's HDBSCAN on small fixed point sets.

Writes tests/data/hdbscan_ref.json. Points are stored as float32 so both sides
see identical inputs.
"""
import json
import pathlib

import numpy as np
import sklearn
from sklearn.cluster import HDBSCAN


def two_blobs(rng):
    a = rng.normal(0.0, 0.05, size=(50, 8)) + 1.0
    b = rng.normal(0.0, 0.05, size=(50, 8)) - 1.0
    return np.vstack([a, b])


def mixed(rng):
    parts = [
        rng.normal(0.0, 0.1, size=(40, 4)),
        rng.normal(0.0, 0.3, size=(30, 4)) + np.array([3.0, 0, 0, 0]),
        rng.normal(0.0, 0.05, size=(12, 4)) + np.array([0, 3.0, 0, 0]),
        rng.uniform(-4.0, 6.0, size=(8, 4)),
    ]
    return np.vstack(parts)


def case(name, pts, mcs, ms):
    pts = pts.astype(np.float32)
    labels = HDBSCAN(min_cluster_size=mcs, min_samples=ms).fit(pts.astype(np.float64)).labels_
    return {"name": name, "min_cluster_size": mcs, "min_samples": ms,
            "points": pts.astype(float).tolist(), "labels": [int(x) for x in labels]}


if __name__ == "__main__":
    rng = np.random.default_rng(2026)
    cases = [
        case("two_blobs", two_blobs(rng), 5, 5),
        case("mixed", mixed(rng), 5, 3),
        case("mixed_mcs8", mixed(rng), 8, 8),
    ]
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "hdbscan_ref.json"
    out.write_text(json.dumps({"sklearn": sklearn.__version__, "cases": cases}) + "\n")
    for c in cases:
        print(c["name"], sorted(set(c["labels"])), c["labels"].count(-1))
