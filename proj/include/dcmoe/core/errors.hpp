// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dcmoe {

/// Operand shapes are incompatible with the requested operation.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// An operation produced or received a NaN/Inf.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Misuse of the reverse-mode tape, such as a non-scalar loss or a stale gradient.
class GradientError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Invalid hyperparameters or configuration documents.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace dcmoe
