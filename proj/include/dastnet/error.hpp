// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dastnet {

/// Tensor shapes do not conform for the requested operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value lies outside the domain of a function (log of a non-positive
/// number, an out-of-range node id, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file or configuration.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The two-stage transfer protocol was violated (target signals read during
/// pre-training, fine-tuning a checkpoint of the wrong stage, ...).
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

void warn(const std::string& message);

}  // namespace dastnet
