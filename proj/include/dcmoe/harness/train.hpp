// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dcmoe/analytics/trace.hpp"
#include "dcmoe/harness/config.hpp"

namespace dcmoe::harness {

/// Raised when a training step produces a non-finite value.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(std::uint64_t step, const std::string& what)
        : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
    std::uint64_t step() const noexcept { return step_; }

  private:
    std::uint64_t step_;
};

struct TrainResult {
    std::vector<double> losses;  // one per step, before that step's update
    analytics::RoutingTrace trace;
};

/// Plain gradient descent on the planted-signal task. Each step draws
/// cfg.batch sequences (a fixed set when data.resample is off), runs the train
/// forward and records routing for every layer and token. The update is
/// p -= learning_rate * grad.
TrainResult train(const ToyModelConfig& cfg);

/// Mean of the last `window` losses relative to the first.
double loss_drop_ratio(const std::vector<double>& losses, std::size_t window = 10);

/// "step,loss" header plus one row per step.
void write_loss_csv(const std::vector<double>& losses, std::ostream& out);

}  // namespace dcmoe::harness
