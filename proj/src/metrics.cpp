// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "dastnet/error.hpp"

namespace dastnet {

namespace {

void check_pair(std::span<const double> y, std::span<const double> y_hat, const char* what) {
  if (y.size() != y_hat.size())
    throw DimensionError(std::string(what) + ": " + std::to_string(y.size()) + " targets vs " +
                         std::to_string(y_hat.size()) + " predictions");
  if (y.empty()) throw DimensionError(std::string(what) + ": empty input");
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

MapeResult mape(std::span<const double> y, std::span<const double> y_hat, double threshold) {
  check_pair(y, y_hat, "mape");
  MapeResult r;
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(std::fabs(y[i]) > threshold)) continue;
    s += std::fabs(y[i] - y_hat[i]) / std::fabs(y[i]);
    ++r.included;
  }
  if (r.included == 0)
    throw DomainError("mape: every target is at or below the threshold " + format_double(threshold));
  r.value = s / static_cast<double>(r.included);
  return r;
}

std::vector<double> ha_forecast(std::span<const double> history, std::size_t horizon) {
  if (history.empty()) throw DimensionError("historical average needs a non-empty history");
  double s = 0.0;
  for (double v : history) s += v;
  return std::vector<double>(horizon, s / static_cast<double>(history.size()));
}

MetricReport make_report(std::span<const double> y, std::span<const double> y_hat,
                         double mape_threshold) {
  MetricReport r;
  r.mae = mae(y, y_hat);
  r.rmse = rmse(y, y_hat);
  const auto m = mape(y, y_hat, mape_threshold);
  r.mape = m.value;
  r.mape_count = m.included;
  r.count = y.size();
  r.mape_threshold = mape_threshold;
  return r;
}

KeyValues to_key_values(const MetricReport& r) {
  return {
      {"variant", r.variant},
      {"dataset", r.dataset},
      {"horizon", std::to_string(r.horizon)},
      {"mae", format_double(r.mae)},
      {"rmse", format_double(r.rmse)},
      {"mape", format_double(r.mape)},
      {"count", std::to_string(r.count)},
      {"mape_count", std::to_string(r.mape_count)},
      {"mape_threshold", format_double(r.mape_threshold)},
      {"seed", std::to_string(r.seed)},
      {"config_hash", r.config_hash},
  };
}

MetricReport report_from_key_values(const KeyValues& kv) {
  MetricReport r;
  for (const auto& [k, v] : kv) {
    const std::string what = "report key '" + k + "'";
    if (k == "variant") r.variant = v;
    else if (k == "dataset") r.dataset = v;
    else if (k == "horizon") r.horizon = parse_size(v, what);
    else if (k == "mae") r.mae = parse_double(v, what);
    else if (k == "rmse") r.rmse = parse_double(v, what);
    else if (k == "mape") r.mape = parse_double(v, what);
    else if (k == "count") r.count = parse_size(v, what);
    else if (k == "mape_count") r.mape_count = parse_size(v, what);
    else if (k == "mape_threshold") r.mape_threshold = parse_double(v, what);
    else if (k == "seed") r.seed = static_cast<std::uint64_t>(parse_int(v, what));
    else if (k == "config_hash") r.config_hash = v;
    else throw FormatError("unknown report key '" + k + "'");
  }
  if (r.variant.empty() || r.horizon == 0) throw FormatError("report lacks variant or horizon");
  return r;
}

void write_report(const MetricReport& report, const std::filesystem::path& path) {
  write_key_values(to_key_values(report), path);
}

MetricReport read_report(const std::filesystem::path& path) {
  return report_from_key_values(read_key_values(path));
}

std::string report_filename(const MetricReport& r) {
  return "report_" + r.variant + "_h" + std::to_string(r.horizon) + "_s" + std::to_string(r.seed) +
         ".txt";
}

std::vector<ComparisonRow> compare_variants(std::span<const MetricReport> reports,
                                            const std::string& reference) {
  if (reports.empty()) throw std::invalid_argument("no reports to compare");
  for (const auto& r : reports)
    if (r.dataset != reports.front().dataset)
      throw std::invalid_argument("reports come from different datasets: '" + r.dataset +
                                  "' vs '" + reports.front().dataset + "'");
  std::map<std::pair<std::size_t, std::string>, ComparisonRow> agg;
  for (const auto& r : reports) {
    auto& row = agg[{r.horizon, r.variant}];
    row.variant = r.variant;
    row.horizon = r.horizon;
    row.mae += r.mae;
    row.rmse += r.rmse;
    row.mape += r.mape;
    ++row.runs;
  }
  std::map<std::size_t, std::vector<ComparisonRow>> by_horizon;
  for (auto& [key, row] : agg) {
    const double n = static_cast<double>(row.runs);
    row.mae /= n;
    row.rmse /= n;
    row.mape /= n;
    by_horizon[key.first].push_back(row);
  }
  auto improvement = [](double ref, double x) { return ref > 0 ? (ref - x) / ref * 100.0 : 0.0; };
  auto rank_by = [](std::vector<ComparisonRow>& rows, auto metric, auto set_rank) {
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return metric(rows[a]) < metric(rows[b]); });
    for (std::size_t r = 0; r < order.size(); ++r) set_rank(rows[order[r]], r + 1);
  };
  std::vector<ComparisonRow> out;
  for (auto& [h, rows] : by_horizon) {
    auto ref = std::find_if(rows.begin(), rows.end(),
                            [&](const ComparisonRow& r) { return r.variant == reference; });
    if (ref == rows.end())
      throw std::invalid_argument("reference variant '" + reference + "' has no report at horizon " +
                                  std::to_string(h));
    const ComparisonRow ref_row = *ref;
    rank_by(rows, [](const ComparisonRow& r) { return r.mae; }, [](ComparisonRow& r, std::size_t k) { r.rank_mae = k; });
    rank_by(rows, [](const ComparisonRow& r) { return r.rmse; }, [](ComparisonRow& r, std::size_t k) { r.rank_rmse = k; });
    rank_by(rows, [](const ComparisonRow& r) { return r.mape; }, [](ComparisonRow& r, std::size_t k) { r.rank_mape = k; });
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ComparisonRow& a, const ComparisonRow& b) { return a.rank_mae < b.rank_mae; });
    for (auto& row : rows) {
      if (row.variant == reference) continue;
      row.impv_mae = improvement(ref_row.mae, row.mae);
      row.impv_rmse = improvement(ref_row.rmse, row.rmse);
      row.impv_mape = improvement(ref_row.mape, row.mape);
      out.push_back(row);
    }
  }
  return out;
}

void write_comparison_csv(std::span<const ComparisonRow> rows, std::ostream& out) {
  out << "variant,horizon,MAE,RMSE,MAPE,impv_pct_MAE,impv_pct_RMSE,impv_pct_MAPE\n";
  for (const auto& r : rows)
    out << r.variant << ',' << r.horizon << ',' << format_double(r.mae) << ','
        << format_double(r.rmse) << ',' << format_double(r.mape) << ',' << format_double(r.impv_mae)
        << ',' << format_double(r.impv_rmse) << ',' << format_double(r.impv_mape) << '\n';
}

}  // namespace dastnet
