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

#ifndef FEDGUARD_COMMON_H_
#define FEDGUARD_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace fedguard {

// Error hierarchy. Every failure surfaced by the library derives from Error so
// callers (the CLI, the Python bindings) can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid architecture, attack parameters, or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor or matrix shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Empty or otherwise unusable datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed files (IDX, checkpoints, configs).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Files that cannot be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Requests that cannot be satisfied, e.g. more clients than samples.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Training could not proceed (e.g. single-class defense data).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Stream identifiers used when deriving child seeds. Keeping them in one place
// guarantees two subsystems never draw from the same stream.
enum class SeedStream : std::uint64_t {
  kModelInit = 1,
  kPartition = 2,
  kSeedSample = 3,
  kRoles = 4,
  kClientTrain = 5,
  kClientAttack = 6,
  kServerTrain = 7,
  kShadowInit = 8,
  kShadowTrain = 9,
  kShadowAttack = 10,
  kReference = 11,
  kDefenseSvm = 12,
  kSynthTrain = 13,
  kSynthTest = 14,
};

// SplitMix64 finalizer.
inline std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed split: the child seed depends only on the parent seed,
// the stream, and the path of counters (round, client, ...). Adding a client
// therefore never perturbs another client's randomness.
inline std::uint64_t DeriveSeed(std::uint64_t parent, SeedStream stream,
                                std::initializer_list<std::uint64_t> path = {}) {
  std::uint64_t s = MixSeed(parent ^ MixSeed(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t p : path) s = MixSeed(s ^ MixSeed(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Runs body(i) for i in [0, count) on up to `workers` threads. Results must be
// written to per-index slots; the schedule never affects the outcome.
void ParallelFor(std::size_t count, int workers,
                 const std::function<void(std::size_t)>& body);

}  // namespace fedguard

#endif  // FEDGUARD_COMMON_H_
