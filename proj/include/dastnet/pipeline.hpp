// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dastnet/adversary.hpp"
#include "dastnet/checkpoint.hpp"
#include "dastnet/config.hpp"
#include "dastnet/data.hpp"
#include "dastnet/forecaster.hpp"
#include "dastnet/graph.hpp"
#include "dastnet/metrics.hpp"
#include "dastnet/optimizer.hpp"
#include "dastnet/spatial_encoder.hpp"

namespace dastnet {

/// Windowed, normalized signals of one domain behind an access log. While
/// locked, any read throws ProtocolError; every read (locked or not) is
/// counted, so tests can assert how often signals were touched.
class SignalStore {
 public:
  SignalStore() = default;
  SignalStore(WindowedDataset train, WindowedDataset val, WindowedDataset test);

  const WindowedDataset& train() const { return access(train_); }
  const WindowedDataset& val() const { return access(val_); }
  const WindowedDataset& test() const { return access(test_); }

  bool has_signals() const { return has_; }
  std::size_t reads() const { return reads_; }
  std::size_t violations() const { return violations_; }
  bool locked() const { return locked_; }

  /// Scoped lock used around stage-1 training of the target domain.
  class Lock {
   public:
    explicit Lock(const SignalStore& store) : store_(store), previous_(store.locked_) {
      store_.locked_ = true;
    }
    ~Lock() { store_.locked_ = previous_; }
    Lock(const Lock&) = delete;
    Lock& operator=(const Lock&) = delete;

   private:
    const SignalStore& store_;
    bool previous_;
  };

 private:
  const WindowedDataset& access(const WindowedDataset& ds) const;

  WindowedDataset train_;
  WindowedDataset val_;
  WindowedDataset test_;
  bool has_ = false;
  mutable std::size_t reads_ = 0;
  mutable std::size_t violations_ = 0;
  mutable bool locked_ = false;
};

/// Everything the pipeline knows about one road network.
struct DomainData {
  std::string name;
  RoadGraph graph;
  Tensor raw_features;  ///< e_v rows, [N x D_e]
  Tensor aggregation;   ///< graph.mean_aggregation_matrix()
  NormalizationStats stats;
  SignalStore signals;
};

/// node2vec features for one graph under the config's settings.
Tensor compute_raw_features(const ExperimentConfig& config, const RoadGraph& graph,
                            const std::string& domain);

/// Splits, normalizes (stats from the training segment) and windows a series.
/// `is_target` applies config.target_train_days to the training segment.
/// Precomputed `raw_features` skip node2vec.
DomainData prepare_domain(const ExperimentConfig& config, const std::string& name, RoadGraph graph,
                          const TrafficSeries& series, bool is_target,
                          const Tensor* raw_features = nullptr);

class MissingDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentData {
  std::vector<DomainData> sources;
  DomainData target;
};

std::filesystem::path graph_path(const ExperimentConfig& config, const std::string& domain);
std::filesystem::path series_path(const ExperimentConfig& config, const std::string& domain);

/// Loads <data_dir>/<name>.edges and <data_dir>/<name>.csv for every domain.
/// `feature_dir`, when set, supplies raw_<name>.csv files written by a
/// previous embed run.
ExperimentData load_experiment(const ExperimentConfig& config,
                               const std::filesystem::path& feature_dir = {});

/// One optimizer step in the replay log.
struct StepRecord {
  std::size_t step = 0;
  std::string stage;
  std::size_t epoch = 0;
  std::string domain;
  double factor = 0.0;
  double loss_src = 0.0;
  double loss_adv = 0.0;
  bool classifier_update = false;
};

std::string format_step_record(const StepRecord& r);

struct EpochSummary {
  std::size_t epoch = 0;
  double mean_loss_src = 0.0;
  double mean_loss_adv = 0.0;
  std::size_t steps = 0;
  std::size_t target_embedding_uses = 0;  ///< steps whose domain loss saw target embeddings
  double val_mae = 0.0;                   ///< fine-tuning only, raw scale
};

/// Stage-1 model: one spatial encoder per domain (sources then target), the
/// shared temporal forecaster and the domain classifier.
struct PretrainModel {
  std::vector<std::string> domains;
  std::vector<SpatialEncoder> encoders;  ///< empty for the temporal_forecaster variant
  TemporalForecaster forecaster;
  std::optional<DomainClassifier> classifier;

  PretrainModel(const ExperimentConfig& config, std::vector<std::string> domains);
  void init(std::uint64_t seed);
  ParameterList params();
  ParameterList encoder_params();
  ParameterList classifier_params();
};

/// The encoder, combiner and forecaster trained on the target domain.
class Combiner {
 public:
  Combiner() = default;
  Combiner(std::size_t dim, const std::string& prefix = "cmb.");

  /// MLP_pre and MLP_cmb start at identity, MLP_pri at zero, so the combined
  /// embedding initially equals the shared one.
  void init();

  /// MLP_cmb(MLP_pre(f) + MLP_pri(f_private))
  ad::Var forward(ad::Tape& tape, const ad::Var& shared, const ad::Var& priv);
  ParameterList params();

  nn::Affine& pre() { return pre_; }
  nn::Affine& pri() { return pri_; }
  nn::Affine& out() { return out_; }

 private:
  nn::Affine pre_;
  nn::Affine pri_;
  nn::Affine out_;
};

struct FinetuneModel {
  Variant variant = Variant::Full;
  std::string target;
  std::optional<SpatialEncoder> shared;    ///< theta_e*, absent for temporal_forecaster
  std::optional<SpatialEncoder> priv;      ///< theta~_e, full / wo_da / target_only
  std::optional<Combiner> combiner;
  TemporalForecaster forecaster;

  FinetuneModel(const ExperimentConfig& config, Variant variant, const std::string& target);
  /// Node embeddings f_v^tar for the whole target graph: [N x D_f].
  ad::Var embeddings(ad::Tape& tape, const Tensor& raw_features, const Tensor& aggregation);
  ParameterList params();
};

struct PretrainResult {
  Checkpoint checkpoint;
  std::vector<EpochSummary> epochs;
  std::vector<StepRecord> replay;
};

/// Stage 1. Sources are visited round-robin per mini-batch. Target signals
/// stay locked for the whole call; only the target graph and raw features
/// are used, through the domain loss.
PretrainResult pretrain(const ExperimentConfig& config, std::span<const DomainData> sources,
                        const DomainData& target);

struct FinetuneResult {
  Checkpoint checkpoint;
  std::vector<EpochSummary> epochs;
  std::vector<StepRecord> replay;
  double initial_val_mae = 0.0;
  double best_val_mae = 0.0;
  std::size_t best_epoch = 0;  ///< 0 = the initial weights were never beaten
};

/// Builds the stage-2 model from a stage-1 checkpoint (or fresh weights
/// when `pretrained` is null) without training it.
FinetuneModel init_finetune_model(const ExperimentConfig& config, const Checkpoint* pretrained,
                                  const DomainData& target);

/// Stage 2 on the target domain with early stopping on validation MAE.
FinetuneResult finetune(const ExperimentConfig& config, const Checkpoint* pretrained,
                        const DomainData& target);

/// Raw-scale predictions of a fine-tuned model on a windowed dataset,
/// [samples x H], plus the matching raw-scale targets.
struct Predictions {
  Tensor predicted;
  Tensor actual;
};
Predictions predict(const ExperimentConfig& config, FinetuneModel& model, const Tensor& raw_features,
                    const Tensor& aggregation, const WindowedDataset& windows,
                    const NormalizationStats& stats);

/// One report per requested horizon; metrics use the h-th step ahead on
/// the raw scale.
std::vector<MetricReport> evaluate(const ExperimentConfig& config, const Checkpoint& checkpoint,
                                   const DomainData& target, std::span<const std::size_t> horizons);

/// Historical-average baseline on the target's test windows.
std::vector<MetricReport> evaluate_ha(const ExperimentConfig& config, const DomainData& target,
                                      std::span<const std::size_t> horizons);

struct VariantResult {
  std::optional<PretrainResult> pretrain;
  FinetuneResult finetune;
  std::vector<MetricReport> reports;
};

VariantResult run_variant(const ExperimentConfig& config, const ExperimentData& data);

/// Rebuilds a finetune model from a finetuned checkpoint.
FinetuneModel model_from_checkpoint(const ExperimentConfig& config, const Checkpoint& checkpoint);

struct EmbeddingRow {
  std::string domain;
  std::size_t node = 0;
  std::string kind;  ///< "raw" or "shared"
  std::vector<double> values;
};

/// e_v and f_v for every requested domain held by the checkpoint.
std::vector<EmbeddingRow> export_embeddings(const ExperimentConfig& config, const Checkpoint& checkpoint,
                                            std::span<const std::pair<std::string, RoadGraph>> graphs);
void write_embeddings_csv(std::span<const EmbeddingRow> rows, std::ostream& out);

/// Shared stage-1 embeddings per domain, straight from a pretrained checkpoint.
std::vector<Tensor> shared_embeddings(const ExperimentConfig& config, const Checkpoint& pretrained,
                                      std::span<const DomainData> domains);

/// Trains a fresh domain classifier on half of every domain's frozen
/// embeddings and returns its accuracy on the other half.
double domain_probe_accuracy(std::span<const Tensor> embeddings, std::uint64_t seed,
                             std::size_t steps = 400);

}  // namespace dastnet
