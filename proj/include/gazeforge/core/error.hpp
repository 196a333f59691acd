// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace gazeforge {

/// Inconsistent shapes, kernel sizes or model specs. Raised while building or
/// when an op is handed operands that cannot be combined.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller misuse of an otherwise valid object (wrong input width, non-scalar loss, ...).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf produced during a forward or backward pass.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing files, corrupt archives, unreadable datasets.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gazeforge
