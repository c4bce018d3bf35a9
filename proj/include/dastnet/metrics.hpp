// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dastnet/kv.hpp"

namespace dastnet {

/// Mean absolute error. Throws on empty or mismatched input.
double mae(std::span<const double> y, std::span<const double> y_hat);
/// Root mean squared error.
double rmse(std::span<const double> y, std::span<const double> y_hat);

struct MapeResult {
  double value = 0.0;        ///< fraction, not percent
  std::size_t included = 0;  ///< |{i : |y_i| > threshold}|
};

/// Mean |y - y_hat| / |y| over entries with |y| > threshold. Throws when no
/// entry qualifies.
MapeResult mape(std::span<const double> y, std::span<const double> y_hat, double threshold = 1.0);

/// Historical average: every one of `horizon` steps is the mean of the history.
std::vector<double> ha_forecast(std::span<const double> history, std::size_t horizon);

struct MetricReport {
  std::string variant;
  std::string dataset;
  std::size_t horizon = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
  std::size_t count = 0;       ///< |Omega|
  std::size_t mape_count = 0;  ///< entries inside the MAPE inclusion set
  double mape_threshold = 1.0;
  std::uint64_t seed = 0;
  std::string config_hash;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// Metrics of one horizon from paired raw-scale vectors.
MetricReport make_report(std::span<const double> y, std::span<const double> y_hat,
                         double mape_threshold);

KeyValues to_key_values(const MetricReport& report);
MetricReport report_from_key_values(const KeyValues& kv);
void write_report(const MetricReport& report, const std::filesystem::path& path);
MetricReport read_report(const std::filesystem::path& path);
/// "report_<variant>_h<horizon>_s<seed>.txt"
std::string report_filename(const MetricReport& report);

struct ComparisonRow {
  std::string variant;
  std::size_t horizon = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
  std::size_t runs = 0;  ///< seeds averaged
  double impv_mae = 0.0;   ///< percent improvement over the reference
  double impv_rmse = 0.0;
  double impv_mape = 0.0;
  std::size_t rank_mae = 0;  ///< 1 = best within the horizon, reference included
  std::size_t rank_rmse = 0;
  std::size_t rank_mape = 0;
};

/// Averages reports over seeds per (variant, horizon), then expresses every
/// non-reference variant as a percentage improvement (ref - x) / ref * 100
/// over `reference` at the same horizon. Rows are ordered by horizon, then
/// by MAE ascending. Throws if datasets differ or the reference is absent.
std::vector<ComparisonRow> compare_variants(std::span<const MetricReport> reports,
                                            const std::string& reference);

/// Columns: variant,horizon,MAE,RMSE,MAPE,impv_pct_MAE,impv_pct_RMSE,impv_pct_MAPE
void write_comparison_csv(std::span<const ComparisonRow> rows, std::ostream& out);

}  // namespace dastnet
