// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "dastnet/rng.hpp"

namespace dastnet {

namespace {

// Howard Hinnant's days-from-civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

}  // namespace

Timestamp parse_timestamp(const std::string& text) {
  const std::string t = trim(text);
  auto bad = [&]() { return TimestampError("bad timestamp '" + t + "'"); };
  if (t.size() < 16 || t[4] != '-' || t[7] != '-' || (t[10] != 'T' && t[10] != ' ') ||
      t[13] != ':')
    throw bad();
  auto field = [&](std::size_t pos, std::size_t len) {
    try {
      return parse_int(t.substr(pos, len), "timestamp");
    } catch (const FormatError&) {
      throw bad();
    }
  };
  const auto year = field(0, 4);
  const auto month = field(5, 2);
  const auto day = field(8, 2);
  const auto hour = field(11, 2);
  const auto minute = field(14, 2);
  std::int64_t second = 0;
  if (t.size() > 16) {
    if (t.size() < 19 || t[16] != ':') throw bad();
    second = field(17, 2);
    if (t.size() > 19) throw bad();
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 59)
    throw bad();
  const auto days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  return days * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(Timestamp ts) {
  std::int64_t days = ts / 86400;
  std::int64_t rem = ts % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem % 3600) / 60), static_cast<long long>(rem % 60));
  return buf;
}

TrafficSeries TrafficSeries::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > steps() || count == 0)
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside series of " + std::to_string(steps()) + " steps");
  const std::size_t n = nodes();
  std::vector<double> v(values.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                        values.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * n));
  TrafficSeries out;
  out.domain = domain;
  out.values = Tensor({count, n}, std::move(v));
  out.interval_minutes = interval_minutes;
  out.start = start + static_cast<Timestamp>(begin * interval_minutes * 60);
  return out;
}

TrafficSeries load_series(const std::filesystem::path& path, const RoadGraph& graph,
                          const std::string& domain) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open series " + path.string());
  const std::size_t n = graph.node_count();
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  const auto header = split(line, ',');
  if (header.size() != n + 1)
    throw ColumnCountError(path.string() + ": header has " + std::to_string(header.size()) +
                           " columns, expected " + std::to_string(n + 1) + " (timestamp + " +
                           std::to_string(n) + " nodes)");
  std::vector<double> values;
  std::vector<Timestamp> stamps;
  for (std::size_t row = 1; std::getline(in, line); ++row) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string where = path.string() + ": row " + std::to_string(row);
    if (cells.size() != n + 1)
      throw ColumnCountError(where + " has " + std::to_string(cells.size()) + " columns, expected " +
                             std::to_string(n + 1));
    stamps.push_back(parse_timestamp(cells[0]));
    for (std::size_t c = 1; c <= n; ++c) {
      double v;
      try {
        v = parse_double(cells[c], where);
      } catch (const FormatError&) {
        throw CellValueError(where + ", column " + std::to_string(c) + ": bad value '" + cells[c] + "'");
      }
      if (!std::isfinite(v))
        throw CellValueError(where + ", column " + std::to_string(c) + ": non-finite value");
      if (v < 0) throw CellValueError(where + ", column " + std::to_string(c) + ": negative flow");
      values.push_back(v);
    }
  }
  if (stamps.empty()) throw FormatError(path.string() + ": no data rows");
  std::int64_t interval = 300;
  if (stamps.size() >= 2) {
    interval = stamps[1] - stamps[0];
    if (interval <= 0)
      throw TimestampError(path.string() + ": timestamps not increasing at row 2");
    if (interval % 60 != 0)
      throw TimestampError(path.string() + ": interval must be a whole number of minutes");
  }
  for (std::size_t i = 1; i < stamps.size(); ++i) {
    const auto delta = stamps[i] - stamps[i - 1];
    if (delta <= 0)
      throw TimestampError(path.string() + ": timestamps not increasing at row " +
                           std::to_string(i + 1));
    if (delta != interval)
      throw TimestampError(path.string() + ": irregular interval or gap at row " +
                           std::to_string(i + 1));
  }
  TrafficSeries s;
  s.domain = domain.empty() ? path.stem().string() : domain;
  s.values = Tensor({stamps.size(), n}, std::move(values));
  s.interval_minutes = static_cast<std::size_t>(interval / 60);
  s.start = stamps[0];
  return s;
}

void write_series(const TrafficSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write series " + path.string());
  out << "timestamp";
  for (std::size_t v = 0; v < series.nodes(); ++v) out << ",node" << v;
  out << '\n';
  for (std::size_t t = 0; t < series.steps(); ++t) {
    out << format_timestamp(series.start + static_cast<Timestamp>(t * series.interval_minutes * 60));
    for (std::size_t v = 0; v < series.nodes(); ++v) out << ',' << format_double(series.values.at(t, v));
    out << '\n';
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

NormalizationStats compute_stats(const TrafficSeries& series, const std::string& split) {
  const auto& v = series.values.values();
  if (v.empty()) throw DimensionError("cannot compute statistics of an empty series");
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  NormalizationStats stats{mean, std::sqrt(ss / n), split};
  if (!(stats.std > 0.0)) {
    warn("series '" + series.domain + "' is constant; using std = 1");
    stats.std = 1.0;
  }
  return stats;
}

TrafficSeries normalize(const TrafficSeries& series, const NormalizationStats& stats) {
  if (!(stats.std > 0.0)) throw DomainError("normalization std must be positive");
  TrafficSeries out = series;
  for (auto& x : out.values.data()) x = (x - stats.mean) / stats.std;
  return out;
}

TrafficSeries denormalize(const TrafficSeries& series, const NormalizationStats& stats) {
  TrafficSeries out = series;
  for (auto& x : out.values.data()) x = x * stats.std + stats.mean;
  return out;
}

WindowedDataset make_windows(const TrafficSeries& series, std::size_t history,
                             std::size_t horizon, const std::string& split) {
  if (history == 0 || horizon == 0) throw std::invalid_argument("history and horizon must be positive");
  const std::size_t t_len = series.steps();
  if (t_len < history + horizon)
    throw DimensionError("series of " + std::to_string(t_len) + " steps is shorter than H'+H = " +
                         std::to_string(history + horizon));
  WindowedDataset ds;
  ds.split = split;
  ds.history = history;
  ds.horizon = horizon;
  ds.nodes = series.nodes();
  const std::size_t per_node = t_len - history - horizon + 1;
  ds.samples.reserve(per_node * ds.nodes);
  for (std::size_t v = 0; v < ds.nodes; ++v) {
    for (std::size_t i = 0; i < per_node; ++i) {
      WindowSample s;
      s.node = v;
      s.start = i;
      s.input.resize(history);
      s.target.resize(horizon);
      for (std::size_t k = 0; k < history; ++k) s.input[k] = series.values.at(i + k, v);
      for (std::size_t k = 0; k < horizon; ++k) s.target[k] = series.values.at(i + history + k, v);
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

SeriesSplit chrono_split(const TrafficSeries& series, const SplitRatios& ratios,
                         std::size_t min_length, std::size_t train_days, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::fabs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  const std::size_t t_len = series.steps();
  const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * static_cast<double>(t_len)));
  const auto n_val = static_cast<std::size_t>(std::llround(ratios.val * static_cast<double>(t_len)));
  if (n_train + n_val > t_len) throw DimensionError("split ratios exceed series length");
  const std::size_t n_test = t_len - n_train - n_val;
  const std::size_t minimum = std::max<std::size_t>(min_length, 1);
  auto check = [&](const char* name, std::size_t len) {
    if (len < minimum)
      throw DimensionError(std::string(name) + " segment has " + std::to_string(len) +
                           " steps, needs at least " + std::to_string(minimum));
  };
  check("train", n_train);
  check("validation", n_val);
  check("test", n_test);
  SeriesSplit out{series.slice(0, n_train), series.slice(n_train, n_val),
                  series.slice(n_train + n_val, n_test)};
  if (train_days > 0) {
    const std::size_t per_day = series.intervals_per_day();
    const std::size_t want = train_days * per_day;
    if (want > n_train) {
      warn("training segment of '" + series.domain + "' holds fewer than " +
           std::to_string(train_days) + " days; using all of it");
    } else {
      const std::size_t choices = (n_train - want) / per_day + 1;
      Rng rng(derive_seed(seed, "split.train_days"));
      const std::size_t begin = n_train - want - static_cast<std::size_t>(rng.below(choices)) * per_day;
      out.train = series.slice(begin, want);
      check("train", want);
    }
  }
  return out;
}

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::Ring: return "ring";
    case Topology::Grid: return "grid";
    case Topology::RandomGeometric: return "random_geometric";
  }
  return "?";
}

Topology parse_topology(const std::string& name) {
  if (name == "ring") return Topology::Ring;
  if (name == "grid") return Topology::Grid;
  if (name == "random_geometric" || name == "random-geometric") return Topology::RandomGeometric;
  throw FormatError("unknown topology '" + name + "' (ring | grid | random_geometric)");
}

SyntheticCitySpec parse_synthetic_spec(const KeyValues& kv) {
  SyntheticCitySpec s;
  for (const auto& [key, value] : kv) {
    const std::string what = "synthetic spec key '" + key + "'";
    if (key == "name") s.name = value;
    else if (key == "nodes") s.nodes = parse_size(value, what);
    else if (key == "topology") s.topology = parse_topology(value);
    else if (key == "base_flow") s.base_flow = parse_double(value, what);
    else if (key == "peak_amplitudes") s.peak_amplitudes = parse_double_list(value, what);
    else if (key == "peak_hours") s.peak_hours = parse_double_list(value, what);
    else if (key == "peak_width") s.peak_width = parse_double(value, what);
    else if (key == "phase_shift") s.phase_shift = parse_double(value, what);
    else if (key == "phase_jitter") s.phase_jitter = parse_double(value, what);
    else if (key == "node_scale_spread") s.node_scale_spread = parse_double(value, what);
    else if (key == "smoothing") s.smoothing = parse_double(value, what);
    else if (key == "noise") s.noise = parse_double(value, what);
    else if (key == "noise_correlation") s.noise_correlation = parse_double(value, what);
    else if (key == "days") s.days = parse_size(value, what);
    else if (key == "interval_minutes") s.interval_minutes = parse_size(value, what);
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(value, what));
    else if (key == "start") s.start = value;
    else throw FormatError("unknown synthetic spec key '" + key + "'");
  }
  if (s.nodes == 0) throw FormatError("synthetic spec: nodes must be positive");
  if (s.days == 0) throw FormatError("synthetic spec: days must be at least 1");
  if (s.interval_minutes == 0 || 1440 % s.interval_minutes != 0)
    throw FormatError("synthetic spec: interval_minutes must divide 1440");
  if (s.peak_amplitudes.size() != s.peak_hours.size())
    throw FormatError("synthetic spec: peak_amplitudes and peak_hours differ in length");
  if (!(s.peak_width > 0)) throw FormatError("synthetic spec: peak_width must be positive");
  if (s.noise < 0 || s.smoothing < 0 || s.smoothing > 1 || s.noise_correlation < 0 ||
      s.noise_correlation >= 1 || s.node_scale_spread < 0 || s.node_scale_spread >= 1)
    throw FormatError("synthetic spec: noise/smoothing/correlation/spread out of range");
  for (double v : {s.base_flow, s.peak_width, s.phase_shift, s.phase_jitter, s.noise})
    if (!std::isfinite(v)) throw FormatError("synthetic spec: non-finite parameter");
  parse_timestamp(s.start);
  return s;
}

KeyValues to_key_values(const SyntheticCitySpec& s) {
  auto list = [](const std::vector<double>& v) {
    std::vector<std::string> parts;
    for (double x : v) parts.push_back(format_double(x));
    return join(parts, ',');
  };
  return {
      {"name", s.name},
      {"nodes", std::to_string(s.nodes)},
      {"topology", topology_name(s.topology)},
      {"base_flow", format_double(s.base_flow)},
      {"peak_amplitudes", list(s.peak_amplitudes)},
      {"peak_hours", list(s.peak_hours)},
      {"peak_width", format_double(s.peak_width)},
      {"phase_shift", format_double(s.phase_shift)},
      {"phase_jitter", format_double(s.phase_jitter)},
      {"node_scale_spread", format_double(s.node_scale_spread)},
      {"smoothing", format_double(s.smoothing)},
      {"noise", format_double(s.noise)},
      {"noise_correlation", format_double(s.noise_correlation)},
      {"days", std::to_string(s.days)},
      {"interval_minutes", std::to_string(s.interval_minutes)},
      {"seed", std::to_string(s.seed)},
      {"start", s.start},
  };
}

namespace {

std::vector<Edge> make_topology(const SyntheticCitySpec& spec, Rng& rng) {
  const std::size_t n = spec.nodes;
  std::vector<Edge> edges;
  switch (spec.topology) {
    case Topology::Ring:
      for (std::size_t v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1});
      if (n > 2) edges.push_back({n - 1, 0});
      break;
    case Topology::Grid: {
      const auto rows = static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(static_cast<double>(n)))));
      const std::size_t cols = (n + rows - 1) / rows;
      for (std::size_t v = 0; v < n; ++v) {
        const std::size_t r = v / cols, c = v % cols;
        if (c + 1 < cols && v + 1 < n) edges.push_back({v, v + 1});
        if (r + 1 < rows && v + cols < n) edges.push_back({v, v + cols});
      }
      break;
    }
    case Topology::RandomGeometric: {
      std::vector<double> x(n), y(n);
      for (std::size_t v = 0; v < n; ++v) {
        x[v] = rng.uniform();
        y[v] = rng.uniform();
      }
      const double radius = std::sqrt(2.0 * std::log(static_cast<double>(n) + 1.0) /
                                      (M_PI * static_cast<double>(n)));
      auto dist2 = [&](std::size_t a, std::size_t b) {
        return (x[a] - x[b]) * (x[a] - x[b]) + (y[a] - y[b]) * (y[a] - y[b]);
      };
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
          if (dist2(a, b) <= radius * radius) edges.push_back({a, b});
      // Join components: link each node outside the component of node 0 to
      // its nearest node inside it, until everything is connected.
      std::vector<bool> in_main(n, false);
      auto grow = [&]() {
        RoadGraph g(n, edges);
        std::fill(in_main.begin(), in_main.end(), false);
        std::vector<std::size_t> stack{0};
        in_main[0] = true;
        while (!stack.empty()) {
          const auto v = stack.back();
          stack.pop_back();
          for (auto u : g.neighbors(v))
            if (!in_main[u]) {
              in_main[u] = true;
              stack.push_back(u);
            }
        }
      };
      grow();
      while (std::find(in_main.begin(), in_main.end(), false) != in_main.end()) {
        double best = 1e300;
        Edge link{};
        for (std::size_t a = 0; a < n; ++a) {
          if (in_main[a]) continue;
          for (std::size_t b = 0; b < n; ++b)
            if (in_main[b] && dist2(a, b) < best) {
              best = dist2(a, b);
              link = {a, b};
            }
        }
        edges.push_back(link);
        grow();
      }
      break;
    }
  }
  return edges;
}

double circular_bump(double hours, double width) {
  double d = std::fmod(hours, 24.0);
  if (d < -12.0) d += 24.0;
  if (d >= 12.0) d -= 24.0;
  return std::exp(-d * d / (2.0 * width * width));
}

}  // namespace

SyntheticCity synth_generate(const SyntheticCitySpec& spec) {
  Rng topo_rng(derive_seed(spec.seed, "synth.topology"));
  Rng node_rng(derive_seed(spec.seed, "synth.nodes"));
  Rng noise_rng(derive_seed(spec.seed, "synth.noise"));
  const std::size_t n = spec.nodes;
  RoadGraph graph(n, make_topology(spec, topo_rng));

  std::vector<double> scale(n), jitter(n);
  for (std::size_t v = 0; v < n; ++v) {
    scale[v] = 1.0 + spec.node_scale_spread * (2.0 * node_rng.uniform() - 1.0);
    jitter[v] = spec.phase_jitter * node_rng.normal();
  }

  const std::size_t per_day = 1440 / spec.interval_minutes;
  const std::size_t steps = spec.days * per_day;
  // Deterministic within-day profile per node, then one smoothing pass.
  Tensor profile({per_day, n});
  for (std::size_t k = 0; k < per_day; ++k) {
    const double hour = static_cast<double>(k * spec.interval_minutes) / 60.0;
    for (std::size_t v = 0; v < n; ++v) {
      double f = spec.base_flow;
      for (std::size_t p = 0; p < spec.peak_hours.size(); ++p)
        f += spec.peak_amplitudes[p] *
             circular_bump(hour - spec.peak_hours[p] - spec.phase_shift - jitter[v], spec.peak_width);
      profile.at(k, v) = scale[v] * f;
    }
  }
  if (spec.smoothing > 0) {
    Tensor smoothed = profile;
    for (std::size_t k = 0; k < per_day; ++k)
      for (std::size_t v = 0; v < n; ++v) {
        const auto& nbrs = graph.neighbors(v);
        if (nbrs.empty()) continue;
        double m = 0.0;
        for (auto u : nbrs) m += profile.at(k, u);
        m /= static_cast<double>(nbrs.size());
        smoothed.at(k, v) = (1.0 - spec.smoothing) * profile.at(k, v) + spec.smoothing * m;
      }
    profile = std::move(smoothed);
  }

  const double sigma = spec.noise * spec.base_flow;
  const double phi = spec.noise_correlation;
  const double innovation = sigma * std::sqrt(1.0 - phi * phi);
  std::vector<double> state(n);
  for (std::size_t v = 0; v < n; ++v) state[v] = sigma * noise_rng.normal();
  Tensor values({steps, n});
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t v = 0; v < n; ++v) {
      if (t > 0) state[v] = phi * state[v] + innovation * noise_rng.normal();
      values.at(t, v) = std::max(0.0, profile.at(t % per_day, v) + state[v]);
    }

  SyntheticCity city;
  city.graph = std::move(graph);
  city.series.domain = spec.name;
  city.series.values = std::move(values);
  city.series.interval_minutes = spec.interval_minutes;
  city.series.start = parse_timestamp(spec.start);
  return city;
}

}  // namespace dastnet
