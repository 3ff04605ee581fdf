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

"""Python front end for the fedguard-sim native core."""

import json

from fedguard_sim._fedguard import (
    ConfigError,
    DimensionError,
    FedGuardError,
    FormatError,
    InfeasibleError,
    IoError,
    attack_names,
    bit_flip,
    bulyan,
    coordinate_median,
    csv_header,
    extract_features,
    fedavg,
    krum_select,
    sign_flip,
)
from fedguard_sim import _fedguard

__all__ = [
    "ConfigError", "DimensionError", "FedGuardError", "FormatError",
    "InfeasibleError", "IoError", "attack_names", "bit_flip", "bulyan",
    "coordinate_median", "csv_header", "default_config", "extract_features",
    "fedavg", "krum_select", "run_experiment", "sign_flip", "sweep",
]


def default_config():
    """The default experiment configuration as a nested dict."""
    return json.loads(_fedguard.default_config_json())


def _to_json(config):
    return config if isinstance(config, str) else json.dumps(config)


def run_experiment(config, csv_path=""):
    """Runs one experiment. `config` is a dict or a JSON string; missing keys
    keep their defaults."""
    return _fedguard.run_experiment(_to_json(config), csv_path)


def sweep(config, fractions, out_dir):
    """Runs `config` once per Byzantine fraction, writing one CSV each."""
    return _fedguard.sweep(_to_json(config), list(fractions), str(out_dir))
