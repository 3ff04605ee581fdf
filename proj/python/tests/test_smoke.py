# Copyright 2026 The fedguard-sim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import csv

import numpy as np
import pytest

import fedguard_sim as fg

TINY = {
    "seed": 7,
    "dataset": {"synthetic": {"classes": 4, "per_class": 30, "test_per_class": 10,
                              "height": 8, "width": 8}},
    "partition": {"clients": 4},
    "model": {"hidden": [8]},
    "training": {"rounds": 2, "local_epochs": 1, "batch_size": 16, "learning_rate": 0.05},
    "fedguard": {"seed_fraction": 0.05, "replication": 2, "shadow_count": 16,
                 "shadow_epochs": 2, "svm_iterations": 200},
    "attacks": {"byz_fraction": 0.5},
    "aggregation": {"rule": "fedguard"},
}


def test_default_config_round_trips():
    cfg = fg.default_config()
    assert cfg["partition"]["clients"] == 30
    assert cfg["aggregation"]["rule"] == "fedguard"
    assert len(cfg["attacks"]["catalog"]) == 7


def test_unknown_key_is_config_error():
    with pytest.raises(fg.ConfigError):
        fg.run_experiment({"training": {"round": 3}})
    assert issubclass(fg.ConfigError, fg.FedGuardError)


def test_run_writes_csv_schema(tmp_path):
    path = tmp_path / "run.csv"
    rep = fg.run_experiment(TINY, str(path))
    assert len(rep["records"]) == 2
    for r in rep["records"]:
        assert sum(r["mistaken"].values()) == r["n_m"] <= r["n_b"] == 2
        assert r["selected"]
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# fedguard-sim seed=7")
    rows = list(csv.DictReader(lines[1:]))
    assert list(rows[0].keys()) == fg.csv_header().split(",")
    assert rows[-1]["round"] == "-1"
    assert float(rows[-1]["aer"]) == pytest.approx(rep["aer"], abs=1e-6)


def test_runs_are_deterministic():
    assert fg.run_experiment(TINY) == fg.run_experiment(TINY)


def test_sweep_files(tmp_path):
    cfg = dict(TINY, training=dict(TINY["training"], rounds=1))
    reps = fg.sweep(cfg, [0.0, 0.5], tmp_path)
    assert len(reps) == 2
    assert (tmp_path / "fedguard_byz0.000.csv").exists()
    assert (tmp_path / "fedguard_byz0.500.csv").exists()


def test_features_and_attacks():
    a = np.array([[1.0, 0.0], [0.5, 0.5]], dtype=np.float32)
    b = np.array([[0.0, 1.0], [0.5, 0.5]], dtype=np.float32)
    assert fg.extract_features(a, b, [0, 1]) == pytest.approx((0.5, 0.5))
    p = np.linspace(-2, 2, 17, dtype=np.float32)
    np.testing.assert_array_equal(fg.sign_flip(fg.sign_flip(p)), p)
    np.testing.assert_array_equal(fg.bit_flip(fg.bit_flip(p, 10), 10), p)
    assert fg.bit_flip(np.array([1.0], dtype=np.float32), 10)[0] == 1.25


def test_aggregators():
    u = np.array([[0, 0], [0.1, 0], [0, 0.1], [50, 50]], dtype=np.float32)
    np.testing.assert_allclose(fg.coordinate_median(u), [0.05, 0.05])
    assert fg.krum_select(u, 1, 4)[-1] == 3
    agg, sel = fg.bulyan(u, 0)
    assert len(sel) == 4
    with pytest.raises(fg.DimensionError):
        fg.fedavg(np.zeros(3, dtype=np.float32))
