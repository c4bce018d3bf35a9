// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "dastnet/pipeline.hpp"
#include "support.hpp"

namespace dastnet {
namespace {

ExperimentConfig small_config(Variant variant = Variant::Full, std::uint64_t seed = 3) {
  ExperimentConfig c;
  c.sources = {"src_a", "src_b"};
  c.target = "tgt";
  c.history = 4;
  c.horizon = 3;
  c.feature_dim = 4;
  c.gin_hidden = 6;
  c.hidden = 6;
  c.classifier_hidden = 6;
  c.node2vec_dim = 4;
  c.node2vec_walks = 4;
  c.node2vec_length = 5;
  c.node2vec_epochs = 1;
  c.batch_size = 16;
  c.pretrain_epochs = 3;
  c.batches_per_epoch = 3;
  c.finetune_epochs = 6;
  c.patience = 3;
  c.split = {0.6, 0.2, 0.2};
  c.target_train_days = 1;
  c.horizons = {1, 2, 3};
  c.variant = variant;
  c.seed = seed;
  return c;
}

SyntheticCitySpec city_spec(const std::string& name, std::size_t nodes, double phase,
                            std::uint64_t seed) {
  SyntheticCitySpec s;
  s.name = name;
  s.nodes = nodes;
  s.phase_shift = phase;
  s.days = 2;
  s.seed = seed;
  return s;
}

DomainData make_domain(const ExperimentConfig& c, const SyntheticCitySpec& spec, bool is_target) {
  auto city = synth_generate(spec);
  return prepare_domain(c, spec.name, std::move(city.graph), city.series, is_target);
}

ExperimentData make_data(const ExperimentConfig& c) {
  ExperimentData d;
  d.sources.push_back(make_domain(c, city_spec("src_a", 6, 0.0, 1), false));
  d.sources.push_back(make_domain(c, city_spec("src_b", 6, 1.0, 2), false));
  d.target = make_domain(c, city_spec("tgt", 5, 0.5, 3), true);
  return d;
}

bool has_prefix(const std::vector<std::string>& names, const std::string& prefix) {
  for (const auto& n : names)
    if (n.rfind(prefix, 0) == 0) return true;
  return false;
}

TEST(SignalStore, LockBlocksAndCountsReads) {
  const SignalStore store(WindowedDataset{}, WindowedDataset{}, WindowedDataset{});
  (void)store.train();
  EXPECT_EQ(store.reads(), 1u);
  {
    const SignalStore::Lock lock(store);
    EXPECT_THROW((void)store.val(), ProtocolError);
    EXPECT_THROW((void)store.test(), ProtocolError);
  }
  EXPECT_FALSE(store.locked());
  EXPECT_EQ(store.violations(), 2u);
  EXPECT_EQ(store.reads(), 1u);
}

TEST(Pretrain, NeverReadsTargetSignalsAndUsesTargetEmbeddings) {
  const auto c = small_config();
  const auto data = make_data(c);
  const std::size_t before = data.target.signals.reads();
  const auto result = pretrain(c, data.sources, data.target);
  EXPECT_EQ(data.target.signals.reads(), before);
  EXPECT_EQ(data.target.signals.violations(), 0u);
  ASSERT_EQ(result.epochs.size(), 3u);
  for (const auto& e : result.epochs) EXPECT_GE(e.target_embedding_uses, 1u);
  EXPECT_TRUE(result.checkpoint.has_prefix("enc.tgt."));
  EXPECT_EQ(result.checkpoint.domains, (std::vector<std::string>{"src_a", "src_b", "tgt"}));
  EXPECT_EQ(result.checkpoint.find("norm.tgt"), nullptr);
}

TEST(Pretrain, RoundRobinOrderAndSchedule) {
  const auto c = small_config();
  const auto data = make_data(c);
  const auto result = pretrain(c, data.sources, data.target);
  const std::size_t total = result.replay.size();
  ASSERT_EQ(total, 3u * 2 * 3);
  EXPECT_EQ(result.replay.front().factor, 0.0);
  for (std::size_t k = 0; k < total; ++k) {
    const auto& r = result.replay[k];
    EXPECT_EQ(r.step, k);
    EXPECT_EQ(r.domain, k % 2 == 0 ? "src_a" : "src_b");
    EXPECT_NEAR(r.factor, 2.0 / (1.0 + std::exp(-10.0 * k / total)) - 1.0, 1e-15);
    if (k) {
      EXPECT_GE(r.factor, result.replay[k - 1].factor);
    }
    EXPECT_TRUE(r.classifier_update);
  }
  EXPECT_EQ(format_step_record(result.replay.front()).rfind(
                "step=0 stage=pretrain epoch=1 domain=src_a factor=0 loss_src=", 0),
            0u);
}

TEST(Pretrain, LossDecreasesOnSmallPair) {
  double first = 0.0, last = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto c = small_config(Variant::Full, seed);
    c.sources = {"src_a"};
    c.pretrain_epochs = 20;
    c.batches_per_epoch = 4;
    ExperimentData d;
    d.sources.push_back(make_domain(c, city_spec("src_a", 6, 0.0, seed), false));
    d.target = make_domain(c, city_spec("tgt", 6, 1.0, seed + 10), true);
    const auto r = pretrain(c, d.sources, d.target);
    first += r.epochs.front().mean_loss_src + r.epochs.front().mean_loss_adv;
    last += r.epochs.back().mean_loss_src + r.epochs.back().mean_loss_adv;
  }
  EXPECT_LT(last, first);
}

TEST(Pretrain, WithoutDomainAdaptationNeverUpdatesClassifier) {
  const auto c = small_config(Variant::WithoutDomainAdaptation);
  const auto data = make_data(c);
  const auto result = pretrain(c, data.sources, data.target);
  for (const auto& r : result.replay) {
    EXPECT_FALSE(r.classifier_update);
    EXPECT_EQ(r.factor, 0.0);
    EXPECT_EQ(r.loss_adv, 0.0);
  }
  EXPECT_FALSE(result.checkpoint.has_prefix("cls."));
}

TEST(Pretrain, TargetOnlyHasNoPretrainStage) {
  const auto c = small_config(Variant::TargetOnly);
  const auto data = make_data(c);
  EXPECT_THROW(pretrain(c, data.sources, data.target), ProtocolError);
  const auto result = run_variant(c, data);
  EXPECT_FALSE(result.pretrain.has_value());
  EXPECT_EQ(result.finetune.checkpoint.stage, "finetuned");
}

TEST(Variants, TemporalForecasterHasNoEncoderOrClassifier) {
  const auto c = small_config(Variant::TemporalForecaster);
  PretrainModel pm(c, {"src_a", "src_b", "tgt"});
  const auto names = parameter_names(pm.params());
  EXPECT_FALSE(has_prefix(names, "enc."));
  EXPECT_FALSE(has_prefix(names, "cls."));
  EXPECT_TRUE(has_prefix(names, "fc."));
  FinetuneModel fm(c, Variant::TemporalForecaster, "tgt");
  const auto fnames = parameter_names(fm.params());
  for (const char* p : {"enc.", "cls.", "pri.", "cmb."}) EXPECT_FALSE(has_prefix(fnames, p)) << p;

  ExperimentConfig full = small_config();
  FinetuneModel ff(full, Variant::Full, "tgt");
  EXPECT_TRUE(has_prefix(parameter_names(ff.params()), "pri."));
  FinetuneModel wp(full, Variant::WithoutPrivate, "tgt");
  EXPECT_FALSE(has_prefix(parameter_names(wp.params()), "pri."));
  EXPECT_FALSE(has_prefix(parameter_names(wp.params()), "cmb."));
}

TEST(Finetune, TransfersParametersExactly) {
  const auto c = small_config();
  const auto data = make_data(c);
  const auto pre = pretrain(c, data.sources, data.target);
  FinetuneModel model = init_finetune_model(c, &pre.checkpoint, data.target);
  for (auto* p : model.shared->params()) EXPECT_EQ(p->value, pre.checkpoint.get(p->name)) << p->name;
  for (auto* p : model.forecaster.params()) EXPECT_EQ(p->value, pre.checkpoint.get(p->name)) << p->name;
  const auto shared = model.shared->params();
  const auto priv = model.priv->params();
  ASSERT_EQ(shared.size(), priv.size());
  std::size_t differing = 0;
  for (std::size_t i = 0; i < shared.size(); ++i) differing += shared[i]->value != priv[i]->value;
  EXPECT_GT(differing, 0u);
  EXPECT_NE(priv[1]->value, pre.checkpoint.get(shared[1]->name));
}

TEST(Finetune, StageMismatchThrows) {
  const auto c = small_config();
  const auto data = make_data(c);
  Checkpoint wrong;
  wrong.stage = "finetuned";
  wrong.domains = {"tgt"};
  EXPECT_THROW(finetune(c, &wrong, data.target), ProtocolError);
  EXPECT_THROW(finetune(c, nullptr, data.target), ProtocolError);
  auto capped = c;
  capped.finetune_epochs = 2001;
  EXPECT_THROW(finetune(capped, nullptr, data.target), std::invalid_argument);
}

TEST(Finetune, ValidationMaeNotWorseThanInitial) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = small_config(Variant::Full, seed);
    const auto data = make_data(c);
    const auto pre = pretrain(c, data.sources, data.target);
    const auto ft = finetune(c, &pre.checkpoint, data.target);
    EXPECT_LE(ft.best_val_mae, ft.initial_val_mae) << "seed " << seed;
    FinetuneModel restored = model_from_checkpoint(c, ft.checkpoint);
    const auto p = predict(c, restored, data.target.raw_features, data.target.aggregation,
                           data.target.signals.val(), data.target.stats);
    EXPECT_NEAR(mae(p.actual.data(), p.predicted.data()), ft.best_val_mae, 1e-9);
  }
}

TEST(Combiner, IdentityInitReducesToSharedEmbedding) {
  Combiner cmb(4);
  cmb.init();
  Rng rng(1);
  const Tensor f = testing::random_tensor({5, 4}, rng);
  const Tensor g = testing::random_tensor({5, 4}, rng);
  ad::Tape tape;
  EXPECT_EQ(cmb.forward(tape, tape.constant(f), tape.constant(g)).value(), f);
}

TEST(Combiner, MatchesAffineComposition) {
  Combiner cmb(3);
  Rng rng(2);
  for (auto* p : cmb.params())
    for (double& v : p->value.data()) v = rng.uniform(-1, 1);
  const Tensor f = testing::random_tensor({2, 3}, rng);
  const Tensor g = testing::random_tensor({2, 3}, rng);
  auto apply = [](nn::Affine& a, const std::vector<double>& x) {
    std::vector<double> y(a.out_dim());
    for (std::size_t o = 0; o < y.size(); ++o) {
      y[o] = a.bias().value[o];
      for (std::size_t i = 0; i < x.size(); ++i) y[o] += a.weight().value.at(o, i) * x[i];
    }
    return y;
  };
  ad::Tape tape;
  const Tensor out = cmb.forward(tape, tape.constant(f), tape.constant(g)).value();
  for (std::size_t r = 0; r < 2; ++r) {
    const std::vector<double> fr(f.data().begin() + 3 * r, f.data().begin() + 3 * r + 3);
    const std::vector<double> gr(g.data().begin() + 3 * r, g.data().begin() + 3 * r + 3);
    auto a = apply(cmb.pre(), fr);
    const auto b = apply(cmb.pri(), gr);
    for (std::size_t i = 0; i < 3; ++i) a[i] += b[i];
    const auto want = apply(cmb.out(), a);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out.at(r, i), want[i], 1e-12);
  }
}

TEST(Determinism, IdenticalConfigGivesBitIdenticalCheckpoints) {
  const auto c = small_config();
  const auto a = run_variant(c, make_data(c));
  const auto b = run_variant(c, make_data(c));
  EXPECT_EQ(serialize_checkpoint(a.pretrain->checkpoint), serialize_checkpoint(b.pretrain->checkpoint));
  EXPECT_EQ(serialize_checkpoint(a.finetune.checkpoint), serialize_checkpoint(b.finetune.checkpoint));
  EXPECT_EQ(a.reports, b.reports);
  auto other = c;
  other.seed = 4;
  const auto d = run_variant(other, make_data(other));
  EXPECT_NE(serialize_checkpoint(a.finetune.checkpoint), serialize_checkpoint(d.finetune.checkpoint));
}

TEST(Evaluate, ReportsPerHorizonAndRejectsLongHorizon) {
  const auto c = small_config();
  const auto data = make_data(c);
  const auto result = run_variant(c, data);
  ASSERT_EQ(result.reports.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& r = result.reports[i];
    EXPECT_EQ(r.horizon, i + 1);
    EXPECT_EQ(r.variant, "full");
    EXPECT_EQ(r.dataset, "tgt");
    EXPECT_EQ(r.config_hash, c.hash());
    EXPECT_EQ(r.count, data.target.signals.test().samples.size());
    EXPECT_GE(r.rmse, r.mae);
  }
  const auto again = evaluate(c, result.finetune.checkpoint, data.target, c.horizons);
  const auto dir = testing::temp_dir("evaluate");
  write_report(result.reports[1], dir / "a.txt");
  write_report(again[1], dir / "b.txt");
  std::ifstream fa(dir / "a.txt"), fb(dir / "b.txt");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  const std::vector<std::size_t> too_long{4};
  EXPECT_THROW(evaluate(c, result.finetune.checkpoint, data.target, too_long), DomainError);
  EXPECT_THROW(evaluate_ha(c, data.target, too_long), DomainError);
  EXPECT_THROW(evaluate(c, result.pretrain->checkpoint, data.target, c.horizons), ProtocolError);
}

TEST(Evaluate, MetricsAreOnRawScale) {
  const auto c = small_config();
  const auto data = make_data(c);
  const auto result = run_variant(c, data);
  FinetuneModel model = model_from_checkpoint(c, result.finetune.checkpoint);
  const auto& test = data.target.signals.test();
  const auto p = predict(c, model, data.target.raw_features, data.target.aggregation, test,
                         data.target.stats);
  std::vector<double> y, y_hat;
  for (std::size_t i = 0; i < p.actual.size(); ++i) {
    y.push_back(normalize_value(p.actual[i], data.target.stats));
    y_hat.push_back(normalize_value(p.predicted[i], data.target.stats));
  }
  const double raw = mae(p.actual.data(), p.predicted.data());
  const double normalized = mae(y, y_hat);
  EXPECT_GT(std::abs(raw - normalized), 1.0);
  EXPECT_NEAR(raw, normalized * data.target.stats.std, 1e-9 * raw);
  // Actuals round-trip to the stored windows.
  EXPECT_NEAR(y[0], test.samples[0].target[0], 1e-12);
}

TEST(Evaluate, HistoricalAverageMatchesDirectFormula) {
  const auto c = small_config();
  const auto data = make_data(c);
  const std::vector<std::size_t> h1{1};
  const auto ha = evaluate_ha(c, data.target, h1);
  ASSERT_EQ(ha.size(), 1u);
  EXPECT_EQ(ha[0].variant, "ha");
  double sum = 0.0;
  const auto& test = data.target.signals.test();
  for (const auto& s : test.samples) {
    double avg = 0.0;
    for (double v : s.input) avg += denormalize_value(v, data.target.stats);
    avg /= static_cast<double>(s.input.size());
    sum += std::abs(denormalize_value(s.target[0], data.target.stats) - avg);
  }
  EXPECT_NEAR(ha[0].mae, sum / static_cast<double>(test.samples.size()), 1e-9);
}

TEST(Export, RawAndSharedRows) {
  const auto c = small_config();
  const auto data = make_data(c);
  const auto pre = pretrain(c, data.sources, data.target);
  std::vector<std::pair<std::string, RoadGraph>> graphs;
  for (const auto& s : data.sources) graphs.emplace_back(s.name, s.graph);
  graphs.emplace_back(data.target.name, data.target.graph);
  const auto rows = export_embeddings(c, pre.checkpoint, graphs);
  EXPECT_EQ(rows.size(), 2u * (6 + 6 + 5));

  SpatialEncoder enc("enc.src_b.", c.node2vec_dim, c.gin_hidden, c.feature_dim, c.gin_layers);
  pre.checkpoint.restore(enc.params());
  ad::Tape tape;
  const Tensor want =
      gin_forward(tape, enc, tape.constant(data.sources[1].raw_features), data.sources[1].graph).value();
  std::size_t checked = 0;
  for (const auto& r : rows) {
    ASSERT_EQ(r.values.size(), 4u);
    if (r.domain != "src_b") continue;
    for (std::size_t k = 0; k < 4; ++k) {
      const double expected =
          r.kind == "raw" ? data.sources[1].raw_features.at(r.node, k) : want.at(r.node, k);
      EXPECT_NEAR(r.values[k], expected, r.kind == "raw" ? 0.0 : 1e-12);
    }
    ++checked;
  }
  EXPECT_EQ(checked, 12u);

  std::ostringstream csv;
  write_embeddings_csv(rows, csv);
  EXPECT_EQ(csv.str().substr(0, 24), "domain,node,kind,values\n");
  const std::vector<std::pair<std::string, RoadGraph>> unknown{{"nowhere", data.target.graph}};
  EXPECT_THROW(export_embeddings(c, pre.checkpoint, unknown), DomainError);
}

TEST(Probe, ChanceOnIdenticalAndPerfectOnSeparated) {
  Rng rng(5);
  std::vector<Tensor> same, apart;
  for (std::size_t d = 0; d < 3; ++d) {
    same.push_back(testing::random_tensor({40, 4}, rng));
    Tensor t = testing::random_tensor({40, 4}, rng, 0.1);
    for (std::size_t r = 0; r < 40; ++r) t.at(r, d) += 5.0;
    apart.push_back(t);
  }
  EXPECT_LT(domain_probe_accuracy(same, 1), 0.6);
  EXPECT_EQ(domain_probe_accuracy(apart, 1), 1.0);
  EXPECT_THROW(domain_probe_accuracy(std::span<const Tensor>(same.data(), 1), 1), DomainError);
}

TEST(LoadExperiment, MissingFilesRaiseMissingDataError) {
  auto c = small_config();
  c.data_dir = testing::temp_dir("missing").string();
  EXPECT_THROW(load_experiment(c), MissingDataError);
}

}  // namespace
}  // namespace dastnet
