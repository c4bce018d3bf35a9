// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "dastnet/kv.hpp"

namespace dastnet {

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

const Tensor& Checkpoint::get(const std::string& name) const {
  if (const auto* t = find(name)) return *t;
  throw FormatError("checkpoint has no tensor '" + name + "'");
}

void Checkpoint::put(const std::string& name, Tensor value) {
  for (auto& [n, t] : tensors)
    if (n == name) {
      t = std::move(value);
      return;
    }
  tensors.emplace_back(name, std::move(value));
}

bool Checkpoint::has_prefix(const std::string& prefix) const {
  for (const auto& entry : tensors)
    if (entry.first.rfind(prefix, 0) == 0) return true;
  return false;
}

void Checkpoint::store(const ParameterList& params) {
  for (const auto* p : params) put(p->name, p->value);
}

void Checkpoint::restore(const ParameterList& params) const {
  for (auto* p : params) {
    const Tensor& t = get(p->name);
    if (t.shape() != p->value.shape())
      throw CheckpointShapeError("checkpoint tensor '" + p->name + "' has shape " +
                                 shape_string(t.shape()) + ", model expects " +
                                 shape_string(p->value.shape()));
    p->value = t;
  }
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  out += "version=" + std::to_string(ckpt.version) + "\n";
  out += "stage=" + ckpt.stage + "\n";
  out += "config_hash=" + ckpt.config_hash + "\n";
  out += "seed=" + std::to_string(ckpt.seed) + "\n";
  out += "variant=" + ckpt.variant + "\n";
  out += "domains=" + join(ckpt.domains, ',') + "\n";
  for (const auto& [name, t] : ckpt.tensors) {
    out += name + " shape ";
    for (std::size_t i = 0; i < t.rank(); ++i) {
      if (i) out += ',';
      out += std::to_string(t.shape()[i]);
    }
    out += " values";
    for (double v : t.values()) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  out += "end tensors=" + std::to_string(ckpt.tensors.size()) + "\n";
  return out;
}

namespace {

std::string header_value(std::istringstream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw CheckpointTruncatedError("checkpoint ends inside the header");
  const std::string prefix = key + "=";
  if (line.rfind(prefix, 0) != 0)
    throw FormatError("checkpoint header: expected '" + prefix + "...', got '" + line + "'");
  return line.substr(prefix.size());
}

}  // namespace

Checkpoint parse_checkpoint(const std::string& text, const std::optional<std::string>& expected_hash) {
  const auto body_end = text.find_last_not_of('\n');
  const auto last_start = body_end == std::string::npos ? 0 : text.rfind('\n', body_end);
  const std::string last_line =
      body_end == std::string::npos ? "" : text.substr(last_start == std::string::npos ? 0 : last_start + 1);
  if (last_line.rfind("end tensors=", 0) != 0)
    throw CheckpointTruncatedError("checkpoint is truncated (no trailer line)");
  std::istringstream in(text);
  Checkpoint ckpt;
  const std::string version = header_value(in, "version");
  if (version != std::to_string(kCheckpointVersion))
    throw CheckpointVersionError("checkpoint version " + version + " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  ckpt.stage = header_value(in, "stage");
  ckpt.config_hash = header_value(in, "config_hash");
  if (expected_hash && *expected_hash != ckpt.config_hash)
    throw CheckpointHashError("checkpoint was written with config hash " + ckpt.config_hash +
                              ", current config hashes to " + *expected_hash);
  ckpt.seed = static_cast<std::uint64_t>(parse_int(header_value(in, "seed"), "checkpoint seed"));
  ckpt.variant = header_value(in, "variant");
  const std::string domains = header_value(in, "domains");
  if (!domains.empty()) ckpt.domains = split(domains, ',');

  std::string line;
  bool ended = false;
  for (std::size_t lineno = 7; std::getline(in, line); ++lineno) {
    if (line.rfind("end tensors=", 0) == 0) {
      const auto count = parse_size(line.substr(12), "checkpoint trailer");
      if (count != ckpt.tensors.size())
        throw CheckpointTruncatedError("checkpoint trailer announces " + std::to_string(count) +
                                       " tensors, found " + std::to_string(ckpt.tensors.size()));
      ended = true;
      break;
    }
    const std::string where = "checkpoint line " + std::to_string(lineno);
    std::istringstream rec(line);
    std::string name, kw_shape, dims, kw_values;
    if (!(rec >> name >> kw_shape >> dims >> kw_values) || kw_shape != "shape" || kw_values != "values")
      throw CheckpointShapeError(where + ": malformed tensor record");
    Shape shape;
    std::size_t count = 1;
    try {
      for (const auto& d : split(dims, ',')) {
        const auto v = parse_size(d, where);
        if (v == 0) throw FormatError("zero dimension");
        shape.push_back(v);
        count *= v;
      }
    } catch (const FormatError& e) {
      throw CheckpointShapeError(where + ": bad shape header '" + dims + "'");
    }
    std::vector<double> values;
    values.reserve(count);
    std::string tok;
    while (rec >> tok) values.push_back(parse_double(tok, where));
    if (values.size() != count)
      throw CheckpointShapeError(where + ": tensor '" + name + "' has shape " + shape_string(shape) +
                                 " but " + std::to_string(values.size()) + " values");
    ckpt.tensors.emplace_back(name, Tensor(std::move(shape), std::move(values)));
  }
  if (!ended) throw CheckpointTruncatedError("checkpoint is truncated (no trailer line)");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out << serialize_checkpoint(ckpt);
  if (!out) throw FormatError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str(), expected_hash);
}

}  // namespace dastnet
