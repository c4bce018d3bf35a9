// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dastnet/data.hpp"
#include "support.hpp"

namespace dastnet {
namespace {

TrafficSeries ramp_series(std::size_t steps, std::size_t nodes) {
  TrafficSeries s;
  s.domain = "ramp";
  s.values = Tensor({steps, nodes});
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t v = 0; v < nodes; ++v) s.values.at(t, v) = static_cast<double>(t * 10 + v);
  return s;
}

RoadGraph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return RoadGraph(n, edges);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

TEST(Windows, CountsAndAdjacency) {
  const auto ds = make_windows(ramp_series(288, 3), 12, 12);
  EXPECT_EQ(ds.windows_per_node(), 265u);
  EXPECT_EQ(ds.samples.size(), 265u * 3);
  EXPECT_EQ(make_windows(ramp_series(24, 2), 12, 12).windows_per_node(), 1u);
  EXPECT_THROW(make_windows(ramp_series(23, 2), 12, 12), DimensionError);
  const auto series = ramp_series(50, 2);
  for (const auto& s : make_windows(series, 5, 3).samples) {
    EXPECT_EQ(s.target[0], series.values.at(s.start + 5, s.node));
    EXPECT_EQ(s.input.back(), series.values.at(s.start + 4, s.node));
  }
}

TEST(Windows, InputsReconstructSeries) {
  Rng rng(3);
  TrafficSeries s;
  s.values = testing::random_tensor({40, 3}, rng);
  const std::size_t history = 6, horizon = 4;
  const auto ds = make_windows(s, history, horizon);
  for (std::size_t v = 0; v < 3; ++v) {
    std::vector<double> rebuilt;
    for (const auto& w : ds.samples) {
      if (w.node != v) continue;
      if (rebuilt.empty()) rebuilt = w.input;
      else rebuilt.push_back(w.input.back());
    }
    const auto& last = ds.samples[(v + 1) * ds.windows_per_node() - 1];
    rebuilt.insert(rebuilt.end(), last.target.begin(), last.target.end());
    ASSERT_EQ(rebuilt.size(), 40u);
    for (std::size_t t = 0; t < 40; ++t) EXPECT_EQ(rebuilt[t], s.values.at(t, v));
  }
}

TEST(Normalize, HandValueConstantAndRoundTrip) {
  TrafficSeries s;
  s.values = Tensor::matrix(3, 1, {1, 2, 3});
  const auto stats = compute_stats(s);
  EXPECT_DOUBLE_EQ(stats.mean, 2.0);
  EXPECT_NEAR(stats.std, std::sqrt(2.0 / 3.0), 1e-15);
  const auto n = normalize(s, stats);
  EXPECT_NEAR(n.values[0], -1.2247, 1e-4);
  EXPECT_NEAR(n.values[1], 0.0, 1e-15);
  EXPECT_NEAR(n.values[2], 1.2247, 1e-4);

  TrafficSeries flat;
  flat.values = Tensor({5, 2}, 42.0);
  ::testing::internal::CaptureStderr();
  const auto flat_stats = compute_stats(flat);
  EXPECT_NE(::testing::internal::GetCapturedStderr().find("constant"), std::string::npos);
  EXPECT_EQ(flat_stats.std, 1.0);
  const auto flat_norm = normalize(flat, flat_stats);
  for (const double v : flat_norm.values.data()) EXPECT_EQ(v, 0.0);

  Rng rng(9);
  TrafficSeries r;
  r.values = testing::random_tensor({30, 4}, rng, 400.0);
  const auto rs = compute_stats(r);
  const auto back = denormalize(normalize(r, rs), rs);
  for (std::size_t i = 0; i < r.values.size(); ++i) EXPECT_NEAR(back.values[i], r.values[i], 1e-12);
  EXPECT_THROW(normalize(r, NormalizationStats{0.0, 0.0}), DomainError);
}

TEST(Split, RatiosAndTrainDays) {
  const auto s = ramp_series(1000, 1);
  const auto split = chrono_split(s, {0.7, 0.1, 0.2}, 24);
  EXPECT_EQ(split.train.steps(), 700u);
  EXPECT_EQ(split.val.steps(), 100u);
  EXPECT_EQ(split.test.steps(), 200u);
  EXPECT_EQ(split.val.values[0], 7000.0);
  EXPECT_EQ(split.test.values[0], 8000.0);
  EXPECT_THROW(chrono_split(s, {1.0, 0.0, 0.0}, 24), DimensionError);
  EXPECT_THROW(chrono_split(s, {0.5, 0.1, 0.1}, 24), std::invalid_argument);

  const auto week = ramp_series(288 * 7, 1);
  const auto day = chrono_split(week, {0.7, 0.1, 0.2}, 24, 1, 5);
  EXPECT_EQ(day.train.steps(), 288u);
  // Whole days counted back from the end of the training segment.
  EXPECT_EQ((14110 - static_cast<std::size_t>(day.train.values[0])) % 2880, 0u);
}

TEST(Split, SegmentsDisjointAndOrdered) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto s = ramp_series(288 * 10, 1);
    s.start = parse_timestamp("2024-03-01T00:00:00");
    const auto split = chrono_split(s, {0.6, 0.2, 0.2}, 24, 2, seed);
    EXPECT_LT(split.train.start + static_cast<Timestamp>(split.train.steps() * 300), split.val.start + 1);
    EXPECT_EQ(split.val.start + static_cast<Timestamp>(split.val.steps() * 300), split.test.start);
    EXPECT_LT(split.train.values[split.train.values.size() - 1], split.val.values[0]);
    EXPECT_LT(split.val.values[split.val.values.size() - 1], split.test.values[0]);
  }
}

TEST(LoadSeries, RoundTripAndErrors) {
  const auto dir = testing::temp_dir("load_series");
  const RoadGraph g = path_graph(3);
  TrafficSeries s = ramp_series(288, 3);
  s.start = parse_timestamp("2024-01-01T00:00:00");
  write_series(s, dir / "ok.csv");
  const auto loaded = load_series(dir / "ok.csv", g, "ok");
  EXPECT_EQ(loaded.steps(), 288u);
  EXPECT_EQ(loaded.nodes(), 3u);
  EXPECT_EQ(loaded.values, s.values);
  EXPECT_EQ(loaded.interval_minutes, 5u);

  EXPECT_THROW(load_series(dir / "ok.csv", path_graph(4)), ColumnCountError);

  std::vector<std::string> lines;
  std::istringstream text(read_file(dir / "ok.csv"));
  for (std::string line; std::getline(text, line);) lines.push_back(line);
  std::swap(lines[5], lines[40]);
  std::string shuffled;
  for (const auto& l : lines) shuffled += l + "\n";
  write_file(dir / "shuffled.csv", shuffled);
  EXPECT_THROW(load_series(dir / "shuffled.csv", g), TimestampError);

  write_file(dir / "nan.csv",
             "timestamp,node0,node1,node2\n2024-01-01T00:00:00,1,2,3\n2024-01-01T00:05:00,1,nan,3\n");
  try {
    load_series(dir / "nan.csv", g);
    FAIL() << "expected CellValueError";
  } catch (const CellValueError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }

  write_file(dir / "gap.csv",
             "timestamp,node0,node1,node2\n2024-01-01T00:00:00,1,2,3\n2024-01-01T00:05:00,1,2,3\n"
             "2024-01-01T00:15:00,1,2,3\n");
  EXPECT_THROW(load_series(dir / "gap.csv", g), TimestampError);
}

SyntheticCitySpec quiet_spec() {
  SyntheticCitySpec spec;
  spec.nodes = 6;
  spec.peak_amplitudes = {150.0};
  spec.peak_hours = {8.0};
  spec.noise = 0.0;
  spec.days = 2;
  return spec;
}

TEST(Synth, SinglePeakArgmaxAtPeakHour) {
  const auto city = synth_generate(quiet_spec());
  const std::size_t per_day = 288;
  for (std::size_t v = 0; v < 6; ++v) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < per_day; ++k)
      if (city.series.values.at(k, v) > city.series.values.at(best, v)) best = k;
    EXPECT_LE(std::abs(static_cast<long>(best) - 96), 1) << "node " << v;
  }
}

// Flow values observed between 07:00 and 09:00 over every node and day.
std::vector<double> morning_flows(const TrafficSeries& s) {
  const std::size_t per_day = s.intervals_per_day();
  const std::size_t lo = 7 * 60 / s.interval_minutes, hi = 9 * 60 / s.interval_minutes;
  std::vector<double> out;
  for (std::size_t t = 0; t < s.steps(); ++t)
    if (t % per_day >= lo && t % per_day < hi)
      for (std::size_t v = 0; v < s.nodes(); ++v) out.push_back(s.values.at(t, v));
  return out;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

TEST(Synth, KsStatisticOracle) {
  EXPECT_EQ(ks_statistic({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_EQ(ks_statistic({1, 2}, {3, 4}), 1.0);
  EXPECT_DOUBLE_EQ(ks_statistic({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5);
}

TEST(Synth, PhaseShiftChangesWithinDayDistribution) {
  SyntheticCitySpec a;
  a.seed = 4;
  SyntheticCitySpec b = a;
  b.phase_shift = 1.0;
  const auto fa = morning_flows(synth_generate(a).series);
  EXPECT_GT(ks_statistic(fa, morning_flows(synth_generate(b).series)), 0.1);
  EXPECT_EQ(ks_statistic(fa, morning_flows(synth_generate(a).series)), 0.0);
}

TEST(Synth, DeterministicAndNonNegative) {
  SyntheticCitySpec spec;
  spec.noise = 0.5;
  spec.seed = 99;
  const auto x = synth_generate(spec);
  const auto y = synth_generate(spec);
  EXPECT_EQ(x.series.values, y.series.values);
  EXPECT_EQ(x.graph.edges().size(), y.graph.edges().size());
  for (const double v : x.series.values.data()) EXPECT_GE(v, 0.0);
  spec.seed = 100;
  EXPECT_NE(synth_generate(spec).series.values, x.series.values);
}

TEST(Synth, AutocorrelationPeaksAtOneDay) {
  for (const auto topo : {Topology::Ring, Topology::Grid, Topology::RandomGeometric}) {
    SyntheticCitySpec spec;
    spec.topology = topo;
    spec.noise = 0.05;
    spec.phase_jitter = 0.3;
    const auto s = synth_generate(spec).series;
    std::vector<double> avg(s.steps(), 0.0);
    for (std::size_t t = 0; t < s.steps(); ++t)
      for (std::size_t v = 0; v < s.nodes(); ++v) avg[t] += s.values.at(t, v) / s.nodes();
    const double mean = std::accumulate(avg.begin(), avg.end(), 0.0) / avg.size();
    auto acf = [&](std::size_t lag) {
      double num = 0.0, den = 0.0;
      for (std::size_t t = 0; t < avg.size(); ++t) {
        den += (avg[t] - mean) * (avg[t] - mean);
        if (t + lag < avg.size()) num += (avg[t] - mean) * (avg[t + lag] - mean);
      }
      return num / den;
    };
    std::size_t best = 144;
    for (std::size_t lag = 144; lag <= 432; ++lag)
      if (acf(lag) > acf(best)) best = lag;
    EXPECT_LE(std::abs(static_cast<long>(best) - 288), 2) << topology_name(topo);
  }
}

TEST(Synth, SpecKeyValuesRoundTripAndUnknownKey) {
  SyntheticCitySpec spec;
  spec.name = "city_x";
  spec.topology = Topology::Grid;
  spec.phase_shift = 0.75;
  const auto back = parse_synthetic_spec(to_key_values(spec));
  EXPECT_EQ(back.name, "city_x");
  EXPECT_EQ(back.topology, Topology::Grid);
  EXPECT_EQ(back.phase_shift, 0.75);
  EXPECT_EQ(back.peak_hours, spec.peak_hours);
  try {
    parse_synthetic_spec({{"nodez", "3"}});
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("nodez"), std::string::npos);
  }
  EXPECT_THROW(parse_synthetic_spec({{"days", "0"}}), FormatError);
}

TEST(Timestamps, RoundTrip) {
  const auto t = parse_timestamp("2024-02-29T13:45:00");
  EXPECT_EQ(format_timestamp(t), "2024-02-29T13:45:00");
  EXPECT_EQ(parse_timestamp("2024-03-01T00:00:00") - t, (10 * 60 + 15) * 60);
  EXPECT_THROW(parse_timestamp("2024-02-30 x"), FormatError);
}

}  // namespace
}  // namespace dastnet
