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

// Byzantine client behaviours. Data-poisoning transforms rewrite a training
// set before local training; model-poisoning transforms rewrite the trained
// parameter vector before upload.

#ifndef FEDGUARD_ATTACKS_H_
#define FEDGUARD_ATTACKS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedguard/dataset.h"
#include "fedguard/nn.h"

namespace fedguard::attacks {

enum class AttackKind {
  kLabelFlip,
  kBackdoor,
  kSignFlip,
  kRandomParams,
  kBitFlip,
  kLie,
  kKrumScale,
};

inline constexpr std::array<AttackKind, 7> kAllAttacks = {
    AttackKind::kLabelFlip, AttackKind::kBackdoor,  AttackKind::kSignFlip,
    AttackKind::kRandomParams, AttackKind::kBitFlip, AttackKind::kLie,
    AttackKind::kKrumScale};

// "label_flip", "backdoor", "sign_flip", "random_params", "bit_flip", "lie",
// "krum_scale".
std::string_view AttackName(AttackKind kind);
// Throws ConfigError for unknown names.
AttackKind ParseAttack(std::string_view name);
bool IsDataAttack(AttackKind kind);

// Square block of pixels forced to `value` in every channel.
struct Trigger {
  int size = 3;
  // Top-left corner; negative means anchored to the bottom-right corner.
  int row = -1;
  int col = -1;
  float value = 1.0f;

  bool operator==(const Trigger&) const = default;
};

// Per-attack constants. Defaults follow the evaluated attacker settings.
struct AttackSpec {
  AttackKind kind = AttackKind::kSignFlip;
  double poison_fraction = 0.5;
  int bit_index = 10;
  float noise_scale = 1.0f;
  float uniform_lo = -1.0f;
  float uniform_hi = 1.0f;
  float krum_factor = 0.5f;
  Trigger trigger;
  int target_label = 0;

  // Throws ConfigError on out-of-range constants.
  void Validate() const;

  bool operator==(const AttackSpec&) const = default;
};

// round(fraction * N) rows, chosen without replacement, get a label drawn
// uniformly from the L-1 wrong labels. Images are untouched.
LabeledDataset LabelFlip(const LabeledDataset& ds, double fraction,
                         std::uint64_t seed);

// round(fraction * N) rows, chosen without replacement, get the trigger block
// stamped in and their label set to target_label.
LabeledDataset BackdoorInject(const LabeledDataset& ds, double fraction,
                              const Trigger& trigger, int target_label,
                              std::uint64_t seed);

nn::ParamVector SignFlip(const nn::ParamVector& p);
nn::ParamVector RandomParams(const nn::ParamVector& p, float lo, float hi,
                             std::uint64_t seed);
// XORs every element's IEEE-754 encoding with 1 << (31 - bit_index): index 0
// is the sign bit, 1-8 the exponent, 9-31 the mantissa.
nn::ParamVector BitFlip(const nn::ParamVector& p, int bit_index);
// p + z * g with g ~ N(0, 1) i.i.d.
nn::ParamVector LieAttack(const nn::ParamVector& p, float z, std::uint64_t seed);
nn::ParamVector KrumAttack(const nn::ParamVector& p, float factor);

// Dispatchers used by the simulator and the shadow-model builder.
LabeledDataset ApplyDataAttack(const AttackSpec& spec, const LabeledDataset& ds,
                               std::uint64_t seed);
nn::ParamVector ApplyModelAttack(const AttackSpec& spec,
                                 const nn::ParamVector& p, std::uint64_t seed);

}  // namespace fedguard::attacks

#endif  // FEDGUARD_ATTACKS_H_
