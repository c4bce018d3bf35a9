// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "dastnet/error.hpp"

namespace dastnet {

DomainClassifier::DomainClassifier(std::size_t embed_dim, std::size_t hidden,
                                   std::size_t domain_count, const std::string& prefix)
    : hidden_(prefix + "l1", embed_dim, hidden), out_(prefix + "l2", hidden, domain_count) {
  if (domain_count < 2) throw std::invalid_argument("domain classifier needs at least 2 domains");
}

void DomainClassifier::init(Rng& rng) {
  hidden_.init_xavier(rng);
  out_.init_xavier(rng);
}

void DomainClassifier::init_zero() {
  hidden_.init_zero();
  out_.init_zero();
}

ad::Var DomainClassifier::logits(ad::Tape& tape, const ad::Var& embeddings) {
  return out_.forward(tape, ad::relu(hidden_.forward(tape, embeddings)));
}

ad::Var DomainClassifier::classify(ad::Tape& tape, const ad::Var& embeddings) {
  return ad::softmax_rows(logits(tape, embeddings));
}

Tensor DomainClassifier::classify(const Tensor& embeddings) {
  ad::Tape tape;
  return classify(tape, tape.constant(embeddings)).value();
}

ParameterList DomainClassifier::params() {
  return {&hidden_.weight(), &hidden_.bias(), &out_.weight(), &out_.bias()};
}

ad::Var adversarial_loss(ad::Tape& tape, DomainClassifier& classifier,
                         std::span<const DomainGroup> groups, std::optional<double> reversal) {
  const std::size_t domains = classifier.domain_count();
  std::vector<bool> seen(domains, false);
  for (const auto& g : groups) {
    if (g.domain >= domains)
      throw DomainError("domain index " + std::to_string(g.domain) + " >= " +
                        std::to_string(domains));
    if (g.embeddings.value().rank() != 2 || g.embeddings.value().rows() == 0)
      throw DomainError("empty embedding group for domain " + std::to_string(g.domain));
    seen[g.domain] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw DomainError("every domain must contribute embeddings to the adversarial loss");

  ad::Var total;
  for (const auto& g : groups) {
    const ad::Var input = reversal ? ad::grad_reverse(g.embeddings, *reversal) : g.embeddings;
    const ad::Var logp = ad::log(ad::clamp_min(classifier.classify(tape, input), kLogFloor));
    const std::size_t n = logp.value().rows();
    Tensor onehot({n, domains});
    for (std::size_t r = 0; r < n; ++r) onehot.at(r, g.domain) = 1.0;
    const ad::Var term =
        ad::scale(ad::sum(ad::mul(tape.constant(std::move(onehot)), logp)), -1.0 / static_cast<double>(n));
    total = total.valid() ? ad::add(total, term) : term;
  }
  return total;
}

double domain_cross_entropy(const Tensor& probabilities, std::size_t domain) {
  if (probabilities.rank() != 2 || domain >= probabilities.cols())
    throw DomainError("domain " + std::to_string(domain) + " outside probability matrix " +
                      shape_string(probabilities.shape()));
  double s = 0.0;
  for (std::size_t r = 0; r < probabilities.rows(); ++r)
    s -= std::log(std::max(probabilities.at(r, domain), kLogFloor));
  return s / static_cast<double>(probabilities.rows());
}

double adversarial_loss(std::span<const Tensor> probabilities,
                        std::span<const std::size_t> domains) {
  if (probabilities.size() != domains.size())
    throw std::invalid_argument("one domain label per probability group required");
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i].empty()) throw DomainError("empty embedding group");
    total += domain_cross_entropy(probabilities[i], domains[i]);
  }
  return total;
}

double adaptation_factor(double progress, double eta) {
  if (progress < 0.0 || progress > 1.0) {
    warn("adaptation progress " + std::to_string(progress) + " clamped to [0, 1]");
    progress = std::clamp(progress, 0.0, 1.0);
  }
  return 2.0 / (1.0 + std::exp(-eta * progress)) - 1.0;
}

}  // namespace dastnet
