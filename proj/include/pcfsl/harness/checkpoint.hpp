/*
 * Copyright 2026 The pcfsl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcfsl/harness/config.hpp"

namespace pcfsl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

/// Binary checkpoint: "PCFSLCKP" magic, u32 version, then the backbone
/// variant, the serialized config, its fingerprint, N, the epoch and
/// validation accuracy it was taken at, a hash over every tensor, and the
/// named tensors (rows, cols, float64 data).
struct Checkpoint {
  std::string variant;
  std::string config_text;
  std::string config_fingerprint;
  int n_way = 0;
  int epoch = 0;
  double val_accuracy = 0.0;
  std::uint64_t param_hash = 0;
  std::vector<NamedTensor> tensors;
};

/// FNV-1a over names, shapes and raw bytes, in registry order.
std::uint64_t param_hash(const std::vector<NamedTensor>& tensors);

Checkpoint snapshot(const FewShotModel& model, const ExperimentConfig& cfg, int epoch, double val_accuracy);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws kNotFound / kFormat (bad magic, version, truncation, hash mismatch).
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies tensors into the model. Throws kConfig when the variant, N, a name
/// or a shape does not match.
void restore(FewShotModel& model, const Checkpoint& ckpt);

/// Throws kConfig unless the checkpoint was produced for a model compatible
/// with `cfg` (same variant, N and module layout).
void check_compatible(const Checkpoint& ckpt, const ExperimentConfig& cfg);

}  // namespace pcfsl
