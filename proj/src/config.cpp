// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/config.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "dastnet/error.hpp"

namespace dastnet {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::WithoutDomainAdaptation: return "wo_da";
    case Variant::WithoutPrivate: return "wo_pri";
    case Variant::TargetOnly: return "target_only";
    case Variant::TemporalForecaster: return "temporal_forecaster";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (auto v : {Variant::Full, Variant::WithoutDomainAdaptation, Variant::WithoutPrivate,
                 Variant::TargetOnly, Variant::TemporalForecaster})
    if (variant_name(v) == name) return v;
  throw std::invalid_argument("unknown variant '" + name +
                              "' (full | wo_da | wo_pri | target_only | temporal_forecaster)");
}

namespace {

std::vector<std::string> parse_names(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  for (auto& s : split(value, ','))
    if (!s.empty()) out.push_back(s);
  return out;
}

std::string size_list(const std::vector<std::size_t>& v) {
  std::vector<std::string> parts;
  for (auto x : v) parts.push_back(std::to_string(x));
  return join(parts, ',');
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const std::string what = "config key '" + key + "'";
  auto sz = [&](std::size_t& field) { field = parse_size(value, what); };
  auto dbl = [&](double& field) { field = parse_double(value, what); };
  if (key == "data.dir") data_dir = value;
  else if (key == "data.sources") sources = parse_names(value);
  else if (key == "data.target") target = value;
  else if (key == "window.history") sz(history);
  else if (key == "window.horizon") sz(horizon);
  else if (key == "model.feature_dim") sz(feature_dim);
  else if (key == "model.gin_layers") sz(gin_layers);
  else if (key == "model.gin_hidden") sz(gin_hidden);
  else if (key == "model.hidden") sz(hidden);
  else if (key == "model.classifier_hidden") sz(classifier_hidden);
  else if (key == "node2vec.p") dbl(node2vec_p);
  else if (key == "node2vec.q") dbl(node2vec_q);
  else if (key == "node2vec.walks") sz(node2vec_walks);
  else if (key == "node2vec.length") sz(node2vec_length);
  else if (key == "node2vec.dim") sz(node2vec_dim);
  else if (key == "node2vec.window") sz(node2vec_window);
  else if (key == "node2vec.negatives") sz(node2vec_negatives);
  else if (key == "node2vec.epochs") sz(node2vec_epochs);
  else if (key == "node2vec.lr") dbl(node2vec_lr);
  else if (key == "optim.lr") dbl(learning_rate);
  else if (key == "optim.momentum") dbl(momentum);
  else if (key == "optim.clip_norm") dbl(clip_norm);
  else if (key == "train.batch_size") sz(batch_size);
  else if (key == "train.pretrain_epochs") sz(pretrain_epochs);
  else if (key == "train.finetune_epochs") sz(finetune_epochs);
  else if (key == "train.patience") sz(patience);
  else if (key == "train.batches_per_epoch") sz(batches_per_epoch);
  else if (key == "train.eval_batch_size") sz(eval_batch_size);
  else if (key == "adversary.eta") dbl(eta);
  else if (key == "split.train") dbl(split.train);
  else if (key == "split.val") dbl(split.val);
  else if (key == "split.test") dbl(split.test);
  else if (key == "split.target_train_days") sz(target_train_days);
  else if (key == "eval.horizons") horizons = parse_size_list(value, what);
  else if (key == "eval.mape_threshold") dbl(mape_threshold);
  else if (key == "run.variant") variant = parse_variant(value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(value, what));
  else throw FormatError("unknown config key '" + key + "'");
}

void ExperimentConfig::apply(const KeyValues& kv) {
  for (const auto& [k, v] : kv) set(k, v);
}

KeyValues ExperimentConfig::to_key_values() const {
  return {
      {"data.dir", data_dir},
      {"data.sources", join(sources, ',')},
      {"data.target", target},
      {"window.history", std::to_string(history)},
      {"window.horizon", std::to_string(horizon)},
      {"model.feature_dim", std::to_string(feature_dim)},
      {"model.gin_layers", std::to_string(gin_layers)},
      {"model.gin_hidden", std::to_string(gin_hidden)},
      {"model.hidden", std::to_string(hidden)},
      {"model.classifier_hidden", std::to_string(classifier_hidden)},
      {"node2vec.p", format_double(node2vec_p)},
      {"node2vec.q", format_double(node2vec_q)},
      {"node2vec.walks", std::to_string(node2vec_walks)},
      {"node2vec.length", std::to_string(node2vec_length)},
      {"node2vec.dim", std::to_string(node2vec_dim)},
      {"node2vec.window", std::to_string(node2vec_window)},
      {"node2vec.negatives", std::to_string(node2vec_negatives)},
      {"node2vec.epochs", std::to_string(node2vec_epochs)},
      {"node2vec.lr", format_double(node2vec_lr)},
      {"optim.lr", format_double(learning_rate)},
      {"optim.momentum", format_double(momentum)},
      {"optim.clip_norm", format_double(clip_norm)},
      {"train.batch_size", std::to_string(batch_size)},
      {"train.pretrain_epochs", std::to_string(pretrain_epochs)},
      {"train.finetune_epochs", std::to_string(finetune_epochs)},
      {"train.patience", std::to_string(patience)},
      {"train.batches_per_epoch", std::to_string(batches_per_epoch)},
      {"train.eval_batch_size", std::to_string(eval_batch_size)},
      {"adversary.eta", format_double(eta)},
      {"split.train", format_double(split.train)},
      {"split.val", format_double(split.val)},
      {"split.test", format_double(split.test)},
      {"split.target_train_days", std::to_string(target_train_days)},
      {"eval.horizons", size_list(horizons)},
      {"eval.mape_threshold", format_double(mape_threshold)},
      {"run.variant", variant_name(variant)},
      {"seed", std::to_string(seed)},
  };
}

std::string ExperimentConfig::hash() const {
  std::string canonical;
  for (const auto& [k, v] : to_key_values())
    if (k != "seed") canonical += k + "=" + v + "\n";
  return fnv1a_hex(canonical);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (target.empty()) fail("data.target is required");
  if (variant != Variant::TargetOnly && sources.empty())
    fail("data.sources needs at least one source domain");
  std::set<std::string> names(sources.begin(), sources.end());
  if (names.size() != sources.size()) fail("duplicate source domain");
  if (names.count(target)) fail("target domain is also listed as a source");
  if (history == 0 || horizon == 0) fail("window sizes must be positive");
  if (feature_dim == 0 || gin_layers == 0 || gin_hidden == 0 || hidden == 0 ||
      classifier_hidden == 0 || node2vec_dim == 0)
    fail("model dimensions must be positive");
  if (!(node2vec_p > 0) || !(node2vec_q > 0)) fail("node2vec p and q must be positive");
  if (node2vec_walks == 0 || node2vec_length == 0 || node2vec_window == 0)
    fail("node2vec walks, length and window must be positive");
  if (!(learning_rate > 0) || momentum < 0 || momentum >= 1) fail("optimizer settings out of range");
  if (clip_norm < 0) fail("optim.clip_norm must be non-negative (0 disables)");
  if (batch_size == 0 || eval_batch_size == 0) fail("batch sizes must be positive");
  if (finetune_epochs > 2000) fail("train.finetune_epochs is capped at 2000");
  if (horizons.empty()) fail("eval.horizons must not be empty");
  for (auto h : horizons)
    if (h == 0 || h > horizon) fail("evaluation horizon " + std::to_string(h) + " exceeds H");
  if (eta < 0) fail("adversary.eta must be non-negative");
}

std::vector<std::string> ExperimentConfig::domains() const {
  std::vector<std::string> out = sources;
  out.push_back(target);
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig c;
  c.apply(read_key_values(path));
  return c;
}

}  // namespace dastnet
