// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0
//
// dastnet: command-line driver for synthetic data generation, the two-stage
// training protocol, evaluation and report comparison.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dastnet/checkpoint.hpp"
#include "dastnet/config.hpp"
#include "dastnet/data.hpp"
#include "dastnet/kv.hpp"
#include "dastnet/metrics.hpp"
#include "dastnet/pipeline.hpp"
#include "dastnet/version.hpp"

namespace fs = std::filesystem;
using namespace dastnet;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitMissingData = 2;

struct RunOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out = "run";
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> variants;
  std::string replay_log;
  unsigned jobs = 1;
};

void add_run_flags(CLI::App* cmd, RunOptions& o, bool multi = false) {
  cmd->add_option("--config", o.config_path, "Experiment config file (key=value lines)");
  cmd->add_option("--set", o.overrides, "Override one config key, e.g. --set optim.lr=0.005")
      ->type_name("KEY=VALUE");
  cmd->add_option("--out", o.out, "Run directory")->capture_default_str();
  auto* seed = cmd->add_option("--seed", o.seeds, "Root seed; overrides the config");
  auto* variant = cmd->add_option("--variant", o.variants,
                                  "full | wo_da | wo_pri | target_only | temporal_forecaster");
  if (!multi) {
    seed->expected(1);
    variant->expected(1);
  }
  cmd->add_option("--replay-log", o.replay_log, "Write one line per optimizer step to this file");
  if (multi)
    cmd->add_option("--jobs", o.jobs, "Independent seed/variant runs executed concurrently")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

ExperimentConfig base_config(const RunOptions& o) {
  ExperimentConfig config = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw FormatError("--set expects KEY=VALUE, got '" + kv + "'");
    config.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig effective_config(const RunOptions& o) {
  ExperimentConfig config = base_config(o);
  if (!o.seeds.empty()) config.seed = o.seeds.front();
  if (!o.variants.empty()) config.variant = parse_variant(o.variants.front());
  config.validate();
  return config;
}

/// Tracks the stages of one run directory in run.txt.
class RunManifest {
 public:
  RunManifest(fs::path dir, const ExperimentConfig& config) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    write_key_values(config.to_key_values(), dir_ / "config.txt");
    const fs::path path = dir_ / "run.txt";
    if (fs::exists(path)) kv_ = read_key_values(path);
    put("version", kVersion);
    put("seed", std::to_string(config.seed));
    put("config_hash", config.hash());
    put("variant", variant_name(config.variant));
    flush();
  }

  void mark(const std::string& stage, const std::string& state) {
    put("stage." + stage, state);
    flush();
  }

  const fs::path& dir() const { return dir_; }

 private:
  void put(const std::string& key, const std::string& value) {
    for (auto& [k, v] : kv_)
      if (k == key) {
        v = value;
        return;
      }
    kv_.emplace_back(key, value);
  }
  void flush() { write_key_values(kv_, dir_ / "run.txt"); }

  fs::path dir_;
  KeyValues kv_;
};

void append_replay(const std::string& path, const std::vector<StepRecord>& records) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write replay log " + path);
  for (const auto& r : records) out << format_step_record(r) << '\n';
}

void truncate_replay(const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write replay log " + path);
}

/// Runs `body` as stage `stage`, recording done/failed in the manifest.
template <typename F>
void stage(RunManifest& manifest, const std::string& name, F&& body) {
  manifest.mark(name, "running");
  try {
    body();
  } catch (...) {
    manifest.mark(name, "failed");
    throw;
  }
  manifest.mark(name, "done");
}

void write_reports(const fs::path& dir, const std::vector<MetricReport>& reports) {
  fs::create_directories(dir);
  for (const auto& r : reports) {
    write_report(r, dir / report_filename(r));
    std::cout << r.variant << " h=" << r.horizon << " MAE=" << format_double(r.mae)
              << " RMSE=" << format_double(r.rmse) << " MAPE=" << format_double(r.mape) << '\n';
  }
}

void embed_features(const ExperimentData& data, const fs::path& dir) {
  for (const auto& d : data.sources) write_raw_features(d.raw_features, dir / ("raw_" + d.name + ".csv"));
  write_raw_features(data.target.raw_features, dir / ("raw_" + data.target.name + ".csv"));
}

void do_pretrain(const ExperimentConfig& config, const ExperimentData& data, RunManifest& manifest,
                 const std::string& replay) {
  if (config.variant == Variant::TargetOnly) {
    manifest.mark("pretrain", "skipped");
    return;
  }
  stage(manifest, "pretrain", [&] {
    const PretrainResult r = pretrain(config, data.sources, data.target);
    save_checkpoint(r.checkpoint, manifest.dir() / "pretrained.ckpt");
    append_replay(replay, r.replay);
    if (!r.epochs.empty())
      std::cout << "pretrain: " << r.epochs.size() << " epochs, final loss_src="
                << format_double(r.epochs.back().mean_loss_src)
                << " loss_adv=" << format_double(r.epochs.back().mean_loss_adv) << '\n';
  });
}

void do_finetune(const ExperimentConfig& config, const ExperimentData& data, RunManifest& manifest,
                 const std::string& replay) {
  stage(manifest, "finetune", [&] {
    std::optional<Checkpoint> pre;
    if (config.variant != Variant::TargetOnly)
      pre = load_checkpoint(manifest.dir() / "pretrained.ckpt", config.hash());
    const FinetuneResult r = finetune(config, pre ? &*pre : nullptr, data.target);
    save_checkpoint(r.checkpoint, manifest.dir() / "finetuned.ckpt");
    append_replay(replay, r.replay);
    std::cout << "finetune: " << r.epochs.size() << " epochs, val MAE "
              << format_double(r.initial_val_mae) << " -> " << format_double(r.best_val_mae)
              << " (best epoch " << r.best_epoch << ")\n";
  });
}

void do_evaluate(const ExperimentConfig& config, const ExperimentData& data, RunManifest& manifest) {
  stage(manifest, "evaluate", [&] {
    const Checkpoint ckpt = load_checkpoint(manifest.dir() / "finetuned.ckpt", config.hash());
    write_reports(manifest.dir() / "reports", evaluate(config, ckpt, data.target, config.horizons));
    write_reports(manifest.dir() / "reports", evaluate_ha(config, data.target, config.horizons));
  });
}

int run_pipeline(const ExperimentConfig& config, const fs::path& dir, const std::string& replay) {
  RunManifest manifest(dir, config);
  truncate_replay(replay);
  ExperimentData data;
  stage(manifest, "embed", [&] {
    data = load_experiment(config);
    embed_features(data, dir);
  });
  do_pretrain(config, data, manifest, replay);
  do_finetune(config, data, manifest, replay);
  do_evaluate(config, data, manifest);
  return 0;
}

int cmd_pipeline(const RunOptions& o) {
  const ExperimentConfig base = base_config(o);
  std::vector<ExperimentConfig> runs;
  const std::vector<std::uint64_t> seeds = o.seeds.empty() ? std::vector{base.seed} : o.seeds;
  const std::vector<std::string> variants =
      o.variants.empty() ? std::vector{variant_name(base.variant)} : o.variants;
  for (const auto& v : variants)
    for (const auto s : seeds) {
      ExperimentConfig c = base;
      c.variant = parse_variant(v);
      c.seed = s;
      c.validate();
      runs.push_back(c);
    }
  if (runs.size() == 1) return run_pipeline(runs.front(), o.out, o.replay_log);

  auto run_dir = [&](const ExperimentConfig& c) {
    return fs::path(o.out) / (variant_name(c.variant) + "_s" + std::to_string(c.seed));
  };
  std::atomic<std::size_t> next{0};
  std::atomic<int> status{0};
  std::mutex err_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const fs::path dir = run_dir(runs[i]);
      const std::string replay = o.replay_log.empty() ? "" : (dir / "replay.log").string();
      try {
        run_pipeline(runs[i], dir, replay);
      } catch (const MissingDataError& e) {
        const std::lock_guard lock(err_mu);
        std::cerr << "error: " << dir.string() << ": " << e.what() << '\n';
        status = kExitMissingData;
      } catch (const std::exception& e) {
        const std::lock_guard lock(err_mu);
        std::cerr << "error: " << dir.string() << ": " << e.what() << '\n';
        if (status == 0) status = kExitFailure;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::min<unsigned>(o.jobs, static_cast<unsigned>(runs.size()));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return status;
}

int cmd_synth(const std::vector<std::string>& specs, const std::string& out) {
  if (specs.empty()) throw std::invalid_argument("synth needs at least one spec file");
  fs::create_directories(out);
  KeyValues manifest;
  for (const auto& path : specs) {
    const SyntheticCitySpec spec = parse_synthetic_spec(read_key_values(path));
    const SyntheticCity city = synth_generate(spec);
    const fs::path edges = fs::path(out) / (spec.name + ".edges");
    const fs::path series = fs::path(out) / (spec.name + ".csv");
    write_edge_list(city.graph, edges);
    write_series(city.series, series);
    manifest.emplace_back(spec.name + ".edges", edges.filename().string());
    manifest.emplace_back(spec.name + ".series", series.filename().string());
    std::cout << spec.name << ": " << city.graph.node_count() << " nodes, "
              << city.series.steps() << " steps\n";
  }
  write_key_values(manifest, fs::path(out) / "manifest.txt");
  return 0;
}

int cmd_compare(const std::string& dir, const std::string& reference, const std::string& out) {
  std::vector<MetricReport> reports;
  if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("report_", 0) == 0) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) reports.push_back(read_report(f));
  if (reports.size() < 2)
    throw std::invalid_argument("compare needs at least two reports under " + dir);
  const auto rows = compare_variants(reports, reference);
  if (out.empty()) {
    write_comparison_csv(rows, std::cout);
  } else {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    write_comparison_csv(rows, os);
  }
  return 0;
}

int cmd_export(const ExperimentConfig& config, const std::string& dir, const std::string& stage_name,
               std::vector<std::string> domains) {
  const Checkpoint ckpt = load_checkpoint(fs::path(dir) / (stage_name + ".ckpt"), config.hash());
  if (domains.empty()) domains = ckpt.domains;
  std::vector<std::pair<std::string, RoadGraph>> graphs;
  for (const auto& d : domains) {
    const fs::path p = graph_path(config, d);
    if (!fs::exists(p)) throw MissingDataError("missing data file " + p.string());
    graphs.emplace_back(d, read_edge_list(p));
  }
  const auto rows = export_embeddings(config, ckpt, graphs);
  const fs::path out = fs::path(dir) / "embeddings.csv";
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write " + out.string());
  write_embeddings_csv(rows, os);
  std::cout << rows.size() << " embedding rows written to " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-adversarial spatio-temporal traffic forecasting"};
  app.set_version_flag("--version", std::string("dastnet ") + kVersion);
  app.require_subcommand(1);

  std::vector<std::string> synth_specs;
  std::string synth_out = "data";
  auto* synth = app.add_subcommand("synth", "Generate synthetic cities from spec files");
  synth->add_option("specs", synth_specs, "City spec files (key=value lines)")->required();
  synth->add_option("--out", synth_out, "Output directory")->capture_default_str();

  RunOptions embed_o, pre_o, fine_o, eval_o, pipe_o, export_o;
  auto* embed = app.add_subcommand("embed", "Compute node2vec features for every domain");
  add_run_flags(embed, embed_o);
  auto* pre = app.add_subcommand("pretrain", "Stage 1: adversarial pre-training on the sources");
  add_run_flags(pre, pre_o);
  auto* fine = app.add_subcommand("finetune", "Stage 2: fine-tune on the target domain");
  add_run_flags(fine, fine_o);
  auto* eval = app.add_subcommand("evaluate", "Evaluate the fine-tuned model on the target test split");
  add_run_flags(eval, eval_o);
  auto* pipe = app.add_subcommand("pipeline", "embed, pretrain, finetune and evaluate in one go");
  add_run_flags(pipe, pipe_o, true);

  std::string cmp_dir, cmp_ref = "target_only", cmp_out;
  auto* cmp = app.add_subcommand("compare", "Compare reports against a reference variant");
  cmp->add_option("reports", cmp_dir, "Directory searched recursively for report files")->required();
  cmp->add_option("--reference", cmp_ref, "Reference variant")->capture_default_str();
  cmp->add_option("--out", cmp_out, "CSV output file (stdout when omitted)");

  std::string export_stage = "pretrained";
  std::vector<std::string> export_domains;
  auto* exp = app.add_subcommand("export-embeddings", "Write raw and shared node embeddings as CSV");
  add_run_flags(exp, export_o);
  exp->add_option("--stage", export_stage, "pretrained | finetuned")
      ->check(CLI::IsMember({"pretrained", "finetuned"}))
      ->capture_default_str();
  exp->add_option("--domains", export_domains, "Domains to export (default: all in the checkpoint)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(synth_specs, synth_out);
    if (*cmp) return cmd_compare(cmp_dir, cmp_ref, cmp_out);
    if (*pipe) return cmd_pipeline(pipe_o);
    if (*exp) return cmd_export(effective_config(export_o), export_o.out, export_stage, export_domains);

    const RunOptions& o = *embed ? embed_o : *pre ? pre_o : *fine ? fine_o : eval_o;
    const ExperimentConfig config = effective_config(o);
    RunManifest manifest(o.out, config);
    ExperimentData data;
    if (*embed) {
      stage(manifest, "embed", [&] {
        data = load_experiment(config);
        embed_features(data, o.out);
      });
      return 0;
    }
    data = load_experiment(config, o.out);
    if (*pre) {
      truncate_replay(o.replay_log);
      do_pretrain(config, data, manifest, o.replay_log);
    } else if (*fine) {
      do_finetune(config, data, manifest, o.replay_log);
    } else {
      do_evaluate(config, data, manifest);
    }
    return 0;
  } catch (const MissingDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
