// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dastnet/data.hpp"
#include "dastnet/kv.hpp"

namespace dastnet {

enum class Variant { Full, WithoutDomainAdaptation, WithoutPrivate, TargetOnly, TemporalForecaster };

std::string variant_name(Variant v);
/// full | wo_da | wo_pri | target_only | temporal_forecaster
Variant parse_variant(const std::string& name);

/// Every hyperparameter of both training stages. Serialized as flat dotted
/// keys; `set` rejects unknown keys.
struct ExperimentConfig {
  // data
  std::string data_dir = "data";
  std::vector<std::string> sources;
  std::string target;
  // windows
  std::size_t history = 12;  ///< H'
  std::size_t horizon = 12;  ///< H
  // model
  std::size_t feature_dim = 64;  ///< D_f
  std::size_t gin_layers = 1;    ///< K
  std::size_t gin_hidden = 64;
  std::size_t hidden = 64;
  std::size_t classifier_hidden = 32;
  // node2vec; node2vec.dim is D_e
  double node2vec_p = 1.0;
  double node2vec_q = 1.0;
  std::size_t node2vec_walks = 200;
  std::size_t node2vec_length = 8;
  std::size_t node2vec_dim = 64;
  std::size_t node2vec_window = 3;
  std::size_t node2vec_negatives = 5;
  std::size_t node2vec_epochs = 5;
  double node2vec_lr = 0.025;
  // optimizer
  double learning_rate = 0.01;
  double momentum = 0.9;
  double clip_norm = 5.0;
  // training
  std::size_t batch_size = 64;
  std::size_t pretrain_epochs = 200;
  std::size_t finetune_epochs = 2000;
  std::size_t patience = 50;
  /// Mini-batches drawn per domain per epoch; 0 = one full pass.
  std::size_t batches_per_epoch = 0;
  std::size_t eval_batch_size = 1024;
  double eta = 10.0;
  // splits
  SplitRatios split{};
  /// Consecutive days kept from the target training segment; 0 keeps all.
  std::size_t target_train_days = 10;
  // evaluation
  std::vector<std::size_t> horizons{3, 6, 12};
  double mape_threshold = 1.0;
  // run
  Variant variant = Variant::Full;
  std::uint64_t seed = 42;

  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& kv);
  /// Every key in a fixed order.
  KeyValues to_key_values() const;
  /// Hash of every key except `seed` (the seed is recorded separately).
  std::string hash() const;
  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;

  std::vector<std::string> domains() const;  ///< sources then target
};

ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace dastnet
