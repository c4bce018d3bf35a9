// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dastnet/autodiff.hpp"
#include "dastnet/nn.hpp"

namespace dastnet {

/// Probabilities below this are clamped before taking the log.
inline constexpr double kLogFloor = 1e-12;

/// Softmax(MLP_d(f)) with MLP_d = affine -> ReLU -> affine, one output per
/// domain (all sources plus the target).
class DomainClassifier {
 public:
  DomainClassifier() = default;
  DomainClassifier(std::size_t embed_dim, std::size_t hidden, std::size_t domain_count,
                   const std::string& prefix = "cls.");

  void init(Rng& rng);
  void init_zero();

  std::size_t domain_count() const { return out_.out_dim(); }
  std::size_t embed_dim() const { return hidden_.in_dim(); }

  /// [B x D_f] -> [B x domains] unnormalized scores.
  ad::Var logits(ad::Tape& tape, const ad::Var& embeddings);
  /// [B x D_f] -> [B x domains] probabilities.
  ad::Var classify(ad::Tape& tape, const ad::Var& embeddings);
  /// Tape-free convenience form.
  Tensor classify(const Tensor& embeddings);

  ParameterList params();

 private:
  nn::Affine hidden_;
  nn::Affine out_;
};

/// Embeddings of one domain's nodes and that domain's label index.
struct DomainGroup {
  ad::Var embeddings;
  std::size_t domain = 0;
};

/// Sum over domains of the mean cross-entropy of that domain's nodes:
///   sum_{V} -(1/|V|) sum_{v in V} <d_v, log softmax(MLP_d(f_v))>
///
/// With `reversal` set, every group passes through grad_reverse(., *reversal)
/// before the classifier: the classifier sees the plain cross-entropy
/// gradient, the upstream encoders see it negated and scaled.
ad::Var adversarial_loss(ad::Tape& tape, DomainClassifier& classifier,
                         std::span<const DomainGroup> groups, std::optional<double> reversal);

/// Mean over rows of -log(max(p[row][domain], floor)) for a probability matrix.
double domain_cross_entropy(const Tensor& probabilities, std::size_t domain);

/// Tape-free loss from per-group probability matrices (one per domain).
double adversarial_loss(std::span<const Tensor> probabilities, std::span<const std::size_t> domains);

/// Adaptation factor F(P) = 2 / (1 + exp(-eta * P)) - 1. P outside [0,1] is
/// clamped with a warning.
double adaptation_factor(double progress, double eta = 10.0);

}  // namespace dastnet
