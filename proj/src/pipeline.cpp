// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dastnet/error.hpp"
#include "dastnet/kv.hpp"
#include "dastnet/rng.hpp"

namespace dastnet {

SignalStore::SignalStore(WindowedDataset train, WindowedDataset val, WindowedDataset test)
    : train_(std::move(train)), val_(std::move(val)), test_(std::move(test)), has_(true) {}

const WindowedDataset& SignalStore::access(const WindowedDataset& ds) const {
  if (locked_) {
    ++violations_;
    throw ProtocolError("target signals read while locked (split '" + ds.split + "')");
  }
  ++reads_;
  return ds;
}

Tensor compute_raw_features(const ExperimentConfig& config, const RoadGraph& graph,
                            const std::string& domain) {
  const WalkCorpus corpus =
      build_corpus(graph, config.node2vec_walks, config.node2vec_length, config.node2vec_p,
                   config.node2vec_q, derive_seed(config.seed, "node2vec." + domain));
  SkipGramOptions opts;
  opts.dim = config.node2vec_dim;
  opts.window = config.node2vec_window;
  opts.negatives = config.node2vec_negatives;
  opts.epochs = config.node2vec_epochs;
  opts.learning_rate = config.node2vec_lr;
  opts.seed = derive_seed(config.seed, "node2vec.sgns." + domain);
  return train_skipgram(corpus, graph.node_count(), opts);
}

DomainData prepare_domain(const ExperimentConfig& config, const std::string& name, RoadGraph graph,
                          const TrafficSeries& series, bool is_target, const Tensor* raw_features) {
  if (series.nodes() != graph.node_count())
    throw DimensionError("series '" + name + "' has " + std::to_string(series.nodes()) +
                         " nodes, graph has " + std::to_string(graph.node_count()));
  DomainData d;
  d.name = name;
  d.raw_features = raw_features ? *raw_features : compute_raw_features(config, graph, name);
  if (d.raw_features.rows() != graph.node_count() || d.raw_features.cols() != config.node2vec_dim)
    throw DimensionError("raw features of '" + name + "' are " +
                         shape_string(d.raw_features.shape()));
  d.aggregation = graph.mean_aggregation_matrix();
  d.graph = std::move(graph);

  const SeriesSplit parts =
      chrono_split(series, config.split, config.history + config.horizon,
                   is_target ? config.target_train_days : 0, derive_seed(config.seed, "split." + name));
  d.stats = compute_stats(parts.train, "train");
  auto windows = [&](const TrafficSeries& s, const std::string& tag) {
    return make_windows(normalize(s, d.stats), config.history, config.horizon, tag);
  };
  d.signals = SignalStore(windows(parts.train, "train"), windows(parts.val, "val"),
                          windows(parts.test, "test"));
  return d;
}

std::filesystem::path graph_path(const ExperimentConfig& config, const std::string& domain) {
  return std::filesystem::path(config.data_dir) / (domain + ".edges");
}

std::filesystem::path series_path(const ExperimentConfig& config, const std::string& domain) {
  return std::filesystem::path(config.data_dir) / (domain + ".csv");
}

ExperimentData load_experiment(const ExperimentConfig& config,
                               const std::filesystem::path& feature_dir) {
  config.validate();
  auto load = [&](const std::string& name, bool is_target) {
    for (const auto& p : {graph_path(config, name), series_path(config, name)})
      if (!std::filesystem::exists(p)) throw MissingDataError("missing data file " + p.string());
    RoadGraph graph = read_edge_list(graph_path(config, name));
    const TrafficSeries series = load_series(series_path(config, name), graph, name);
    std::optional<Tensor> raw;
    if (!feature_dir.empty()) {
      const auto fp = feature_dir / ("raw_" + name + ".csv");
      if (std::filesystem::exists(fp)) raw = read_raw_features(fp);
    }
    return prepare_domain(config, name, std::move(graph), series, is_target,
                          raw ? &*raw : nullptr);
  };
  ExperimentData data;
  for (const auto& s : config.sources) data.sources.push_back(load(s, false));
  data.target = load(config.target, true);
  return data;
}

std::string format_step_record(const StepRecord& r) {
  std::ostringstream os;
  os << "step=" << r.step << " stage=" << r.stage << " epoch=" << r.epoch << " domain=" << r.domain
     << " factor=" << format_double(r.factor) << " loss_src=" << format_double(r.loss_src)
     << " loss_adv=" << format_double(r.loss_adv)
     << " classifier_update=" << (r.classifier_update ? 1 : 0);
  return os.str();
}

namespace {

ForecasterDims forecaster_dims(const ExperimentConfig& config) {
  return {1, config.hidden, config.feature_dim, config.horizon};
}

SpatialEncoder make_encoder(const ExperimentConfig& config, const std::string& prefix) {
  return SpatialEncoder(prefix, config.node2vec_dim, config.gin_hidden, config.feature_dim,
                        config.gin_layers);
}

std::string encoder_prefix(const std::string& domain) { return "enc." + domain + "."; }

struct Batch {
  Tensor input;
  Tensor target;
  std::vector<std::size_t> nodes;
};

Batch make_batch(const WindowedDataset& ds, std::span<const std::size_t> idx) {
  Batch b{Tensor({idx.size(), ds.history}), Tensor({idx.size(), ds.horizon}), {}};
  b.nodes.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const WindowSample& s = ds.samples[idx[r]];
    std::copy(s.input.begin(), s.input.end(), b.input.data().begin() + r * ds.history);
    std::copy(s.target.begin(), s.target.end(), b.target.data().begin() + r * ds.horizon);
    b.nodes.push_back(s.node);
  }
  return b;
}

/// Shuffled mini-batches of one epoch, truncated to `cap` when positive.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t samples, std::size_t batch_size,
                                                    std::size_t cap, Rng& rng) {
  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < samples; i += batch_size) {
    if (cap && out.size() == cap) break;
    out.emplace_back(order.begin() + i, order.begin() + std::min(samples, i + batch_size));
  }
  return out;
}

std::size_t batch_count(std::size_t samples, std::size_t batch_size, std::size_t cap) {
  const std::size_t n = (samples + batch_size - 1) / batch_size;
  return cap ? std::min(n, cap) : n;
}

std::vector<Tensor> snapshot(const ParameterList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(const ParameterList& params, const std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

void append(ParameterList& to, ParameterList from) { to.insert(to.end(), from.begin(), from.end()); }

Tensor norm_tensor(const NormalizationStats& s) { return Tensor({2}, {s.mean, s.std}); }

NormalizationStats norm_from(const Tensor& t) {
  if (t.size() != 2) throw CheckpointShapeError("normalization record must hold [mean, std]");
  return {t[0], t[1], "train"};
}

}  // namespace

PretrainModel::PretrainModel(const ExperimentConfig& config, std::vector<std::string> names)
    : domains(std::move(names)), forecaster(forecaster_dims(config)) {
  if (config.variant == Variant::TemporalForecaster) return;
  for (const auto& d : domains) encoders.push_back(make_encoder(config, encoder_prefix(d)));
  if (config.variant != Variant::WithoutDomainAdaptation)
    classifier.emplace(config.feature_dim, config.classifier_hidden, domains.size());
}

void PretrainModel::init(std::uint64_t seed) {
  for (std::size_t i = 0; i < encoders.size(); ++i) {
    Rng rng(derive_seed(seed, "init.enc." + domains[i]));
    encoders[i].init(rng);
  }
  Rng fc_rng(derive_seed(seed, "init.fc"));
  forecaster.init(fc_rng);
  if (classifier) {
    Rng cls_rng(derive_seed(seed, "init.cls"));
    classifier->init(cls_rng);
  }
}

ParameterList PretrainModel::encoder_params() {
  ParameterList out;
  for (auto& e : encoders) append(out, e.params());
  return out;
}

ParameterList PretrainModel::classifier_params() {
  return classifier ? classifier->params() : ParameterList{};
}

ParameterList PretrainModel::params() {
  ParameterList out = encoder_params();
  append(out, forecaster.params());
  append(out, classifier_params());
  return out;
}

Combiner::Combiner(std::size_t dim, const std::string& prefix)
    : pre_(prefix + "pre", dim, dim), pri_(prefix + "pri", dim, dim), out_(prefix + "out", dim, dim) {}

void Combiner::init() {
  pre_.init_identity();
  pri_.init_zero();
  out_.init_identity();
}

ad::Var Combiner::forward(ad::Tape& tape, const ad::Var& shared, const ad::Var& priv) {
  return out_.forward(tape, ad::add(pre_.forward(tape, shared), pri_.forward(tape, priv)));
}

ParameterList Combiner::params() {
  ParameterList out = pre_.params();
  append(out, pri_.params());
  append(out, out_.params());
  return out;
}

FinetuneModel::FinetuneModel(const ExperimentConfig& config, Variant v, const std::string& tgt)
    : variant(v), target(tgt), forecaster(forecaster_dims(config)) {
  if (variant == Variant::TemporalForecaster) return;
  shared.emplace(make_encoder(config, encoder_prefix(target)));
  if (variant == Variant::WithoutPrivate) return;
  priv.emplace(make_encoder(config, "pri."));
  combiner.emplace(config.feature_dim);
}

ad::Var FinetuneModel::embeddings(ad::Tape& tape, const Tensor& raw_features,
                                  const Tensor& aggregation) {
  if (!shared)
    return tape.constant(Tensor({raw_features.rows(), forecaster.dims().embed_dim}));
  const ad::Var raw = tape.constant(raw_features);
  const ad::Var f = shared->forward(tape, raw, aggregation);
  if (!priv) return f;
  return combiner->forward(tape, f, priv->forward(tape, raw, aggregation));
}

ParameterList FinetuneModel::params() {
  ParameterList out;
  if (shared) append(out, shared->params());
  if (priv) append(out, priv->params());
  if (combiner) append(out, combiner->params());
  append(out, forecaster.params());
  return out;
}

PretrainResult pretrain(const ExperimentConfig& config, std::span<const DomainData> sources,
                        const DomainData& target) {
  config.validate();
  if (sources.empty()) throw DomainError("pre-training needs at least one source domain");
  if (config.variant == Variant::TargetOnly)
    throw ProtocolError("the target_only variant has no pre-training stage");
  for (const auto& s : sources)
    if (!s.signals.has_signals()) throw DomainError("source '" + s.name + "' has no signals");

  std::vector<std::string> names;
  for (const auto& s : sources) names.push_back(s.name);
  names.push_back(target.name);
  PretrainModel model(config, names);
  model.init(config.seed);
  const ParameterList params = model.params();
  const bool adversarial = model.classifier.has_value();
  const std::size_t target_index = sources.size();

  const SignalStore::Lock guard(target.signals);

  std::vector<std::size_t> sizes;
  std::size_t steps_per_epoch = 0;
  for (const auto& s : sources) {
    sizes.push_back(s.signals.train().samples.size());
    steps_per_epoch += batch_count(sizes.back(), config.batch_size, config.batches_per_epoch);
  }
  const std::size_t total_steps = steps_per_epoch * config.pretrain_epochs;

  Sgdm opt(config.learning_rate, config.momentum);
  Rng batch_rng(derive_seed(config.seed, "batching.pretrain"));
  PretrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    std::vector<std::vector<std::vector<std::size_t>>> plan;
    for (std::size_t s = 0; s < sources.size(); ++s)
      plan.push_back(epoch_batches(sizes[s], config.batch_size, config.batches_per_epoch, batch_rng));

    EpochSummary summary;
    summary.epoch = epoch;
    const std::size_t rounds =
        std::max_element(plan.begin(), plan.end(), [](const auto& a, const auto& b) {
          return a.size() < b.size();
        })->size();
    for (std::size_t round = 0; round < rounds; ++round) {
      for (std::size_t s = 0; s < sources.size(); ++s) {
        if (round >= plan[s].size()) continue;
        const DomainData& src = sources[s];
        const Batch batch = make_batch(src.signals.train(), plan[s][round]);
        const double factor = adversarial ? adaptation_factor(
                                                static_cast<double>(step) / static_cast<double>(total_steps),
                                                config.eta)
                                          : 0.0;
        ad::Tape tape;
        ad::Var f_batch;
        std::vector<DomainGroup> groups;
        if (model.encoders.empty()) {
          f_batch = tape.constant(Tensor({batch.nodes.size(), config.feature_dim}));
        } else {
          auto embed = [&](std::size_t d, const DomainData& dom) {
            return model.encoders[d].forward(tape, tape.constant(dom.raw_features), dom.aggregation);
          };
          const ad::Var f_src = embed(s, src);
          f_batch = ad::gather_rows(f_src, batch.nodes);
          if (adversarial) {
            for (std::size_t d = 0; d < sources.size(); ++d)
              groups.push_back({d == s ? f_src : embed(d, sources[d]), d});
            groups.push_back({embed(target_index, target), target_index});
          }
        }
        const ad::Var pred = model.forecaster.forecast(tape, batch.input, f_batch);
        const ad::Var loss_src = source_loss(pred, batch.target);
        ad::Var total = loss_src;
        double adv_value = 0.0;
        if (adversarial) {
          const ad::Var loss_adv = adversarial_loss(tape, *model.classifier, groups, factor);
          adv_value = loss_adv.value()[0];
          total = ad::add(loss_src, loss_adv);
          ++summary.target_embedding_uses;
        }
        zero_grads(params);
        tape.backward(total);
        clip_global_norm(params, config.clip_norm);
        opt.step(params);

        StepRecord rec{step, "pretrain", epoch, src.name, factor, loss_src.value()[0], adv_value,
                       adversarial};
        summary.mean_loss_src += rec.loss_src;
        summary.mean_loss_adv += rec.loss_adv;
        ++summary.steps;
        result.replay.push_back(std::move(rec));
        ++step;
      }
    }
    if (summary.steps) {
      summary.mean_loss_src /= static_cast<double>(summary.steps);
      summary.mean_loss_adv /= static_cast<double>(summary.steps);
    }
    result.epochs.push_back(summary);
  }

  Checkpoint& ckpt = result.checkpoint;
  ckpt.stage = "pretrained";
  ckpt.config_hash = config.hash();
  ckpt.seed = config.seed;
  ckpt.variant = variant_name(config.variant);
  ckpt.domains = names;
  ckpt.store(params);
  for (const auto& s : sources) {
    ckpt.put("raw." + s.name, s.raw_features);
    ckpt.put("norm." + s.name, norm_tensor(s.stats));
  }
  ckpt.put("raw." + target.name, target.raw_features);
  return result;
}

FinetuneModel init_finetune_model(const ExperimentConfig& config, const Checkpoint* pretrained,
                                  const DomainData& target) {
  FinetuneModel model(config, config.variant, target.name);
  if (config.variant == Variant::TargetOnly) {
    Rng enc_rng(derive_seed(config.seed, "init.enc." + target.name));
    model.shared->init(enc_rng);
    Rng fc_rng(derive_seed(config.seed, "init.fc"));
    model.forecaster.init(fc_rng);
  } else {
    if (!pretrained) throw ProtocolError("variant " + variant_name(config.variant) +
                                         " needs a pretrained checkpoint");
    if (pretrained->stage != "pretrained")
      throw ProtocolError("expected a pretrained checkpoint, got stage '" + pretrained->stage + "'");
    if (std::find(pretrained->domains.begin(), pretrained->domains.end(), target.name) ==
        pretrained->domains.end())
      throw DomainError("checkpoint holds no domain '" + target.name + "'");
    if (model.shared) pretrained->restore(model.shared->params());
    pretrained->restore(model.forecaster.params());
  }
  if (model.priv) {
    Rng pri_rng(derive_seed(config.seed, "init.private"));
    model.priv->init(pri_rng);
    model.combiner->init();
  }
  return model;
}

Predictions predict(const ExperimentConfig& config, FinetuneModel& model, const Tensor& raw_features,
                    const Tensor& aggregation, const WindowedDataset& windows,
                    const NormalizationStats& stats) {
  const std::size_t n = windows.samples.size();
  const std::size_t h = windows.horizon;
  Predictions out{Tensor({n, h}), Tensor({n, h})};
  Tensor embeddings;
  {
    ad::Tape tape;
    embeddings = model.embeddings(tape, raw_features, aggregation).value();
  }
  const std::size_t step = std::max<std::size_t>(config.eval_batch_size, 1);
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < n; begin += step) {
    const std::size_t end = std::min(n, begin + step);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Batch batch = make_batch(windows, idx);
    ad::Tape tape;
    const ad::Var f = ad::gather_rows(tape.constant(embeddings), batch.nodes);
    const Tensor pred = model.forecaster.forecast(tape, batch.input, f).value();
    for (std::size_t i = 0; i < pred.size(); ++i) {
      out.predicted[begin * h + i] = denormalize_value(pred[i], stats);
      out.actual[begin * h + i] = denormalize_value(batch.target[i], stats);
    }
  }
  return out;
}

FinetuneResult finetune(const ExperimentConfig& config, const Checkpoint* pretrained,
                        const DomainData& target) {
  config.validate();
  FinetuneModel model = init_finetune_model(config, pretrained, target);
  const ParameterList params = model.params();
  const WindowedDataset& train = target.signals.train();
  const WindowedDataset& val = target.signals.val();

  auto val_mae = [&] {
    const Predictions p = predict(config, model, target.raw_features, target.aggregation, val,
                                  target.stats);
    return mae(p.actual.data(), p.predicted.data());
  };

  FinetuneResult result;
  result.initial_val_mae = val_mae();
  result.best_val_mae = result.initial_val_mae;
  std::vector<Tensor> best = snapshot(params);
  std::size_t since_best = 0;

  Sgdm opt(config.learning_rate, config.momentum);
  Rng batch_rng(derive_seed(config.seed, "batching.finetune"));
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.finetune_epochs; ++epoch) {
    EpochSummary summary;
    summary.epoch = epoch;
    for (const auto& idx :
         epoch_batches(train.samples.size(), config.batch_size, config.batches_per_epoch, batch_rng)) {
      const Batch batch = make_batch(train, idx);
      ad::Tape tape;
      const ad::Var f = model.embeddings(tape, target.raw_features, target.aggregation);
      const ad::Var pred = model.forecaster.forecast(tape, batch.input, ad::gather_rows(f, batch.nodes));
      const ad::Var loss = source_loss(pred, batch.target);
      zero_grads(params);
      tape.backward(loss);
      clip_global_norm(params, config.clip_norm);
      opt.step(params);
      StepRecord rec{step++, "finetune", epoch, target.name, 0.0, loss.value()[0], 0.0, false};
      summary.mean_loss_src += rec.loss_src;
      ++summary.steps;
      result.replay.push_back(std::move(rec));
    }
    if (summary.steps) summary.mean_loss_src /= static_cast<double>(summary.steps);
    summary.val_mae = val_mae();
    result.epochs.push_back(summary);
    if (summary.val_mae < result.best_val_mae) {
      result.best_val_mae = summary.val_mae;
      result.best_epoch = epoch;
      best = snapshot(params);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  restore(params, best);

  Checkpoint& ckpt = result.checkpoint;
  ckpt.stage = "finetuned";
  ckpt.config_hash = config.hash();
  ckpt.seed = config.seed;
  ckpt.variant = variant_name(config.variant);
  ckpt.domains = {target.name};
  ckpt.store(params);
  ckpt.put("raw." + target.name, target.raw_features);
  ckpt.put("norm." + target.name, norm_tensor(target.stats));
  return result;
}

FinetuneModel model_from_checkpoint(const ExperimentConfig& config, const Checkpoint& checkpoint) {
  if (checkpoint.stage != "finetuned")
    throw ProtocolError("expected a finetuned checkpoint, got stage '" + checkpoint.stage + "'");
  if (checkpoint.domains.empty()) throw FormatError("checkpoint names no target domain");
  FinetuneModel model(config, parse_variant(checkpoint.variant), checkpoint.domains.back());
  checkpoint.restore(model.params());
  return model;
}

namespace {

void check_horizons(std::span<const std::size_t> horizons, std::size_t trained) {
  for (const std::size_t h : horizons)
    if (h == 0 || h > trained)
      throw DomainError("horizon " + std::to_string(h) + " outside the trained range 1.." +
                        std::to_string(trained));
}

std::vector<MetricReport> horizon_reports(const Predictions& p, std::span<const std::size_t> horizons,
                                          const std::string& variant, const std::string& dataset,
                                          const ExperimentConfig& config, std::uint64_t seed,
                                          const std::string& hash) {
  const std::size_t n = p.actual.rows();
  const std::size_t width = p.actual.cols();
  std::vector<MetricReport> out;
  for (const std::size_t h : horizons) {
    std::vector<double> y(n), y_hat(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = p.actual[i * width + h - 1];
      y_hat[i] = p.predicted[i * width + h - 1];
    }
    MetricReport r = make_report(y, y_hat, config.mape_threshold);
    r.variant = variant;
    r.dataset = dataset;
    r.horizon = h;
    r.seed = seed;
    r.config_hash = hash;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<MetricReport> evaluate(const ExperimentConfig& config, const Checkpoint& checkpoint,
                                   const DomainData& target, std::span<const std::size_t> horizons) {
  check_horizons(horizons, config.horizon);
  FinetuneModel model = model_from_checkpoint(config, checkpoint);
  if (model.target != target.name)
    throw DomainError("checkpoint was fine-tuned on '" + model.target + "', not '" + target.name + "'");
  const NormalizationStats stats = norm_from(checkpoint.get("norm." + target.name));
  const Predictions p = predict(config, model, checkpoint.get("raw." + target.name),
                                target.aggregation, target.signals.test(), stats);
  return horizon_reports(p, horizons, checkpoint.variant, target.name, config, checkpoint.seed,
                         checkpoint.config_hash);
}

std::vector<MetricReport> evaluate_ha(const ExperimentConfig& config, const DomainData& target,
                                      std::span<const std::size_t> horizons) {
  check_horizons(horizons, config.horizon);
  const WindowedDataset& test = target.signals.test();
  const std::size_t n = test.samples.size();
  const std::size_t h = test.horizon;
  Predictions p{Tensor({n, h}), Tensor({n, h})};
  std::vector<double> history(test.history);
  for (std::size_t i = 0; i < n; ++i) {
    const WindowSample& s = test.samples[i];
    for (std::size_t t = 0; t < history.size(); ++t)
      history[t] = denormalize_value(s.input[t], target.stats);
    const std::vector<double> forecast = ha_forecast(history, h);
    for (std::size_t t = 0; t < h; ++t) {
      p.predicted[i * h + t] = forecast[t];
      p.actual[i * h + t] = denormalize_value(s.target[t], target.stats);
    }
  }
  return horizon_reports(p, horizons, "ha", target.name, config, config.seed, config.hash());
}

VariantResult run_variant(const ExperimentConfig& config, const ExperimentData& data) {
  VariantResult out;
  const Checkpoint* pretrained = nullptr;
  if (config.variant != Variant::TargetOnly) {
    out.pretrain = pretrain(config, data.sources, data.target);
    pretrained = &out.pretrain->checkpoint;
  }
  out.finetune = finetune(config, pretrained, data.target);
  out.reports = evaluate(config, out.finetune.checkpoint, data.target, config.horizons);
  return out;
}

namespace {

Tensor checkpoint_embedding(const ExperimentConfig& config, const Checkpoint& checkpoint,
                            const std::string& domain, const RoadGraph& graph) {
  const Tensor* raw = checkpoint.find("raw." + domain);
  if (!raw || !checkpoint.has_prefix(encoder_prefix(domain)))
    throw DomainError("checkpoint holds no encoder for domain '" + domain + "'");
  SpatialEncoder enc = make_encoder(config, encoder_prefix(domain));
  checkpoint.restore(enc.params());
  return enc.embed(*raw, graph);
}

}  // namespace

std::vector<EmbeddingRow> export_embeddings(const ExperimentConfig& config, const Checkpoint& checkpoint,
                                            std::span<const std::pair<std::string, RoadGraph>> graphs) {
  std::vector<EmbeddingRow> rows;
  for (const auto& [domain, graph] : graphs) {
    const Tensor shared = checkpoint_embedding(config, checkpoint, domain, graph);
    const Tensor& raw = checkpoint.get("raw." + domain);
    auto emit = [&](const Tensor& t, const std::string& kind) {
      for (std::size_t v = 0; v < t.rows(); ++v) {
        EmbeddingRow row{domain, v, kind, {}};
        row.values.assign(t.data().begin() + v * t.cols(), t.data().begin() + (v + 1) * t.cols());
        rows.push_back(std::move(row));
      }
    };
    emit(raw, "raw");
    emit(shared, "shared");
  }
  return rows;
}

void write_embeddings_csv(std::span<const EmbeddingRow> rows, std::ostream& out) {
  out << "domain,node,kind,values\n";
  for (const auto& r : rows) {
    out << r.domain << ',' << r.node << ',' << r.kind << ',';
    for (std::size_t i = 0; i < r.values.size(); ++i) out << (i ? " " : "") << format_double(r.values[i]);
    out << '\n';
  }
}

std::vector<Tensor> shared_embeddings(const ExperimentConfig& config, const Checkpoint& pretrained,
                                      std::span<const DomainData> domains) {
  std::vector<Tensor> out;
  for (const auto& d : domains) out.push_back(checkpoint_embedding(config, pretrained, d.name, d.graph));
  return out;
}

double domain_probe_accuracy(std::span<const Tensor> embeddings, std::uint64_t seed,
                             std::size_t steps) {
  if (embeddings.size() < 2) throw DomainError("the probe needs at least two domains");
  const std::size_t dim = embeddings.front().cols();
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& e : embeddings) {
    if (e.cols() != dim || e.rows() < 2) throw DimensionError("probe embeddings must share their width");
    for (const double v : e.data()) {
      sum += v;
      sq += v * v;
    }
    count += e.size();
  }
  const double mean = sum / static_cast<double>(count);
  const double var = sq / static_cast<double>(count) - mean * mean;
  const double scale = var > 1e-300 ? 1.0 / std::sqrt(var) : 1.0;

  Rng rng(derive_seed(seed, "probe.split"));
  std::vector<Tensor> train, test;
  for (const auto& e : embeddings) {
    std::vector<std::size_t> order(e.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    const std::size_t half = e.rows() / 2;
    auto take = [&](std::size_t begin, std::size_t end) {
      Tensor t({end - begin, dim});
      for (std::size_t r = begin; r < end; ++r)
        for (std::size_t c = 0; c < dim; ++c) t.at(r - begin, c) = (e.at(order[r], c) - mean) * scale;
      return t;
    };
    train.push_back(take(0, half));
    test.push_back(take(half, e.rows()));
  }

  DomainClassifier probe(dim, 16, embeddings.size(), "probe.");
  Rng init_rng(derive_seed(seed, "probe.init"));
  probe.init(init_rng);
  const ParameterList params = probe.params();
  Sgdm opt(0.05, 0.9);
  for (std::size_t it = 0; it < steps; ++it) {
    ad::Tape tape;
    std::vector<DomainGroup> groups;
    for (std::size_t d = 0; d < train.size(); ++d) groups.push_back({tape.constant(train[d]), d});
    const ad::Var loss = adversarial_loss(tape, probe, groups, std::nullopt);
    zero_grads(params);
    tape.backward(loss);
    clip_global_norm(params, 5.0);
    opt.step(params);
  }

  std::size_t correct = 0, total = 0;
  for (std::size_t d = 0; d < test.size(); ++d) {
    const Tensor probs = probe.classify(test[d]);
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < probs.cols(); ++c)
        if (probs.at(r, c) > probs.at(r, best)) best = c;
      correct += best == d;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace dastnet
