// Copyright 2026 The fedguard-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedguard/attacks.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "fedguard/common.h"

namespace fedguard::attacks {
namespace {

// First round(fraction * n) entries of a seeded permutation.
std::vector<std::size_t> ChooseRows(std::size_t n, double fraction,
                                    std::mt19937_64& rng) {
  const auto count = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(count);
  return order;
}

void CheckFraction(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("poison fraction must lie in (0, 1]");
  }
}

}  // namespace

std::string_view AttackName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kLabelFlip: return "label_flip";
    case AttackKind::kBackdoor: return "backdoor";
    case AttackKind::kSignFlip: return "sign_flip";
    case AttackKind::kRandomParams: return "random_params";
    case AttackKind::kBitFlip: return "bit_flip";
    case AttackKind::kLie: return "lie";
    case AttackKind::kKrumScale: return "krum_scale";
  }
  return "unknown";
}

AttackKind ParseAttack(std::string_view name) {
  for (AttackKind k : kAllAttacks) {
    if (AttackName(k) == name) return k;
  }
  throw ConfigError("unknown attack kind '" + std::string(name) + "'");
}

bool IsDataAttack(AttackKind kind) {
  return kind == AttackKind::kLabelFlip || kind == AttackKind::kBackdoor;
}

void AttackSpec::Validate() const {
  if (IsDataAttack(kind)) CheckFraction(poison_fraction);
  if (bit_index < 0 || bit_index > 31) {
    throw ConfigError("bit_index must lie in [0, 31]");
  }
  if (!(uniform_lo < uniform_hi)) {
    throw ConfigError("random_params range needs lo < hi");
  }
  if (!(noise_scale >= 0.0f)) throw ConfigError("lie noise scale must be >= 0");
  if (!std::isfinite(krum_factor)) throw ConfigError("krum factor must be finite");
  if (trigger.size < 1) throw ConfigError("trigger size must be >= 1");
}

LabeledDataset LabelFlip(const LabeledDataset& ds, double fraction,
                         std::uint64_t seed) {
  CheckFraction(fraction);
  if (ds.class_count() < 2) throw ConfigError("label flip needs >= 2 classes");
  std::mt19937_64 rng(seed);
  LabeledDataset out = ds;
  std::uniform_int_distribution<int> wrong(1, ds.class_count() - 1);
  for (std::size_t row : ChooseRows(ds.size(), fraction, rng)) {
    // Adding an offset in [1, L-1] modulo L is uniform over the wrong labels.
    out.SetLabel(row, (ds.Label(row) + wrong(rng)) % ds.class_count());
  }
  return out;
}

LabeledDataset BackdoorInject(const LabeledDataset& ds, double fraction,
                              const Trigger& trigger, int target_label,
                              std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("poison fraction must lie in [0, 1]");
  }
  const Shape& s = ds.shape();
  const int row0 = trigger.row < 0 ? s.height - trigger.size : trigger.row;
  const int col0 = trigger.col < 0 ? s.width - trigger.size : trigger.col;
  if (trigger.size < 1 || row0 < 0 || col0 < 0 || row0 + trigger.size > s.height ||
      col0 + trigger.size > s.width) {
    throw ConfigError("backdoor trigger does not fit inside the image");
  }
  if (target_label < 0 || target_label >= ds.class_count()) {
    throw ConfigError("backdoor target label outside the class range");
  }
  std::mt19937_64 rng(seed);
  LabeledDataset out = ds;
  for (std::size_t row : ChooseRows(ds.size(), fraction, rng)) {
    std::span<float> img = out.MutableImage(row);
    for (int c = 0; c < s.channels; ++c) {
      for (int y = row0; y < row0 + trigger.size; ++y) {
        for (int x = col0; x < col0 + trigger.size; ++x) {
          img[static_cast<std::size_t>((c * s.height + y) * s.width + x)] =
              trigger.value;
        }
      }
    }
    out.SetLabel(row, target_label);
  }
  return out;
}

nn::ParamVector SignFlip(const nn::ParamVector& p) {
  nn::ParamVector out = p;
  for (float& v : out.values) v = -v;
  return out;
}

nn::ParamVector RandomParams(const nn::ParamVector& p, float lo, float hi,
                             std::uint64_t seed) {
  if (!(lo < hi)) throw ConfigError("random_params range needs lo < hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  nn::ParamVector out = p;
  for (float& v : out.values) v = dist(rng);
  return out;
}

nn::ParamVector BitFlip(const nn::ParamVector& p, int bit_index) {
  if (bit_index < 0 || bit_index > 31) {
    throw ConfigError("bit_index must lie in [0, 31]");
  }
  const std::uint32_t mask = std::uint32_t{1} << (31 - bit_index);
  nn::ParamVector out = p;
  for (float& v : out.values) {
    v = std::bit_cast<float>(std::bit_cast<std::uint32_t>(v) ^ mask);
  }
  return out;
}

nn::ParamVector LieAttack(const nn::ParamVector& p, float z, std::uint64_t seed) {
  if (!(z >= 0.0f)) throw ConfigError("lie noise scale must be >= 0");
  nn::ParamVector out = p;
  if (z == 0.0f) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  for (float& v : out.values) v += z * gauss(rng);
  return out;
}

nn::ParamVector KrumAttack(const nn::ParamVector& p, float factor) {
  if (!std::isfinite(factor)) throw ConfigError("krum factor must be finite");
  nn::ParamVector out = p;
  for (float& v : out.values) v *= factor;
  return out;
}

LabeledDataset ApplyDataAttack(const AttackSpec& spec, const LabeledDataset& ds,
                               std::uint64_t seed) {
  switch (spec.kind) {
    case AttackKind::kLabelFlip:
      return LabelFlip(ds, spec.poison_fraction, seed);
    case AttackKind::kBackdoor:
      return BackdoorInject(ds, spec.poison_fraction, spec.trigger,
                            spec.target_label, seed);
    default:
      return ds;
  }
}

nn::ParamVector ApplyModelAttack(const AttackSpec& spec,
                                 const nn::ParamVector& p, std::uint64_t seed) {
  switch (spec.kind) {
    case AttackKind::kSignFlip: return SignFlip(p);
    case AttackKind::kRandomParams:
      return RandomParams(p, spec.uniform_lo, spec.uniform_hi, seed);
    case AttackKind::kBitFlip: return BitFlip(p, spec.bit_index);
    case AttackKind::kLie: return LieAttack(p, spec.noise_scale, seed);
    case AttackKind::kKrumScale: return KrumAttack(p, spec.krum_factor);
    default: return p;
  }
}

}  // namespace fedguard::attacks
