// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace dastnet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dastnet
