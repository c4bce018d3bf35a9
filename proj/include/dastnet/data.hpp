// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dastnet/error.hpp"
#include "dastnet/graph.hpp"
#include "dastnet/kv.hpp"
#include "dastnet/tensor.hpp"

namespace dastnet {

/// Row with the wrong number of columns for the graph.
class ColumnCountError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Timestamps out of order, repeated, or with a gap.
class TimestampError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// NaN, infinite, negative or unparseable cell.
class CellValueError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Seconds since 1970-01-01T00:00:00, naive local time.
using Timestamp = std::int64_t;

/// Accepts "YYYY-MM-DDTHH:MM[:SS]" (a space may replace the 'T').
Timestamp parse_timestamp(const std::string& text);
std::string format_timestamp(Timestamp t);

/// T x N flow observations at a fixed interval.
struct TrafficSeries {
  std::string domain;
  Tensor values;  ///< [T x N]
  std::size_t interval_minutes = 5;
  Timestamp start = 0;

  std::size_t steps() const { return values.rows(); }
  std::size_t nodes() const { return values.cols(); }
  std::size_t intervals_per_day() const { return 24 * 60 / interval_minutes; }
  /// Rows [begin, begin + count) as a new series with the matching start time.
  TrafficSeries slice(std::size_t begin, std::size_t count) const;
};

/// CSV with header "timestamp,node0,...,nodeN-1". Rows must be strictly
/// increasing at one fixed interval (taken from the first two rows).
TrafficSeries load_series(const std::filesystem::path& path, const RoadGraph& graph,
                          const std::string& domain = {});
void write_series(const TrafficSeries& series, const std::filesystem::path& path);

struct NormalizationStats {
  double mean = 0.0;
  double std = 1.0;
  std::string computed_on = "train";
};

/// Population mean and standard deviation over all cells. A zero deviation
/// (constant series) is replaced by 1 with a warning.
NormalizationStats compute_stats(const TrafficSeries& series, const std::string& split = "train");
TrafficSeries normalize(const TrafficSeries& series, const NormalizationStats& stats);
TrafficSeries denormalize(const TrafficSeries& series, const NormalizationStats& stats);
inline double denormalize_value(double v, const NormalizationStats& s) { return v * s.std + s.mean; }
inline double normalize_value(double v, const NormalizationStats& s) { return (v - s.mean) / s.std; }

struct WindowSample {
  std::size_t node = 0;
  std::size_t start = 0;        ///< index of the first input step
  std::vector<double> input;    ///< H' values
  std::vector<double> target;   ///< H values, starting at start + H'
};

struct WindowedDataset {
  std::string split;
  std::size_t history = 0;
  std::size_t horizon = 0;
  std::size_t nodes = 0;
  std::vector<WindowSample> samples;  ///< node-major, then by start

  std::size_t windows_per_node() const { return nodes ? samples.size() / nodes : 0; }
};

/// Stride-1 sliding windows; T - H' - H + 1 per node.
WindowedDataset make_windows(const TrafficSeries& series, std::size_t history,
                             std::size_t horizon, const std::string& split = "train");

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct SeriesSplit {
  TrafficSeries train;
  TrafficSeries val;
  TrafficSeries test;
};

/// Contiguous chronological segments. Lengths are round(train * T),
/// round(val * T) and the remainder. Every segment must hold at least
/// `min_length` steps. If `train_days` > 0 the training segment is cut to
/// that many consecutive whole days, starting at a day boundary chosen by
/// `seed`.
SeriesSplit chrono_split(const TrafficSeries& series, const SplitRatios& ratios,
                         std::size_t min_length, std::size_t train_days = 0,
                         std::uint64_t seed = 0);

enum class Topology { Ring, Grid, RandomGeometric };

std::string topology_name(Topology t);
Topology parse_topology(const std::string& name);

/// Generator parameters for one synthetic city.
///
/// flow_v(t) = s_v * (base + sum_k amp_k * bump(hour(t) - peak_k - phase - jitter_v))
/// smoothed once over neighbors, plus AR(1) noise of stationary deviation
/// noise * base, clamped at zero. bump is a Gaussian of width peak_width
/// (hours) on the 24-hour circle.
struct SyntheticCitySpec {
  std::string name = "city";
  std::size_t nodes = 20;
  Topology topology = Topology::Ring;
  double base_flow = 200.0;
  std::vector<double> peak_amplitudes{180.0, 140.0};
  std::vector<double> peak_hours{8.0, 17.5};
  double peak_width = 1.5;
  double phase_shift = 0.0;
  double phase_jitter = 0.0;
  double node_scale_spread = 0.3;
  double smoothing = 0.3;
  double noise = 0.05;
  double noise_correlation = 0.8;
  std::size_t days = 7;
  std::size_t interval_minutes = 5;
  std::uint64_t seed = 1;
  std::string start = "2024-01-01T00:00:00";
};

/// Unknown keys raise FormatError naming the key.
SyntheticCitySpec parse_synthetic_spec(const KeyValues& kv);
KeyValues to_key_values(const SyntheticCitySpec& spec);

struct SyntheticCity {
  RoadGraph graph;
  TrafficSeries series;
};

SyntheticCity synth_generate(const SyntheticCitySpec& spec);

}  // namespace dastnet
