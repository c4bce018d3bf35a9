// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dastnet/error.hpp"
#include "dastnet/tensor.hpp"

namespace dastnet {

inline constexpr int kCheckpointVersion = 1;

class CheckpointVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};
class CheckpointHashError : public FormatError {
 public:
  using FormatError::FormatError;
};
/// Malformed record or shape header.
class CheckpointShapeError : public FormatError {
 public:
  using FormatError::FormatError;
};
/// File ends before the trailer line.
class CheckpointTruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Named tensors plus run metadata.
///
/// Text format:
///   version=1
///   stage=pretrained|finetuned|baseline
///   config_hash=<16 hex>
///   seed=<u64>
///   variant=<name>
///   domains=<comma list>
///   <name> shape d0,d1 values v1 v2 ...     (one line per tensor)
///   end tensors=<count>
/// Values use shortest round-trip decimal formatting, so a reload is exact.
struct Checkpoint {
  int version = kCheckpointVersion;
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string variant;
  std::vector<std::string> domains;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  void put(const std::string& name, Tensor value);
  bool has_prefix(const std::string& prefix) const;

  /// Copies every parameter value into the checkpoint.
  void store(const ParameterList& params);
  /// Overwrites parameter values by name; missing names or shape mismatches throw.
  void restore(const ParameterList& params) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// `expected_hash`, when given, must match the stored config hash.
Checkpoint parse_checkpoint(const std::string& text,
                            const std::optional<std::string>& expected_hash = std::nullopt);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_hash = std::nullopt);

}  // namespace dastnet
