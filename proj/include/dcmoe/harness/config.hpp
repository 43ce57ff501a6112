// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dcmoe/estimator/estimator.hpp"
#include "dcmoe/moe/config.hpp"
#include "dcmoe/rope/positions.hpp"
#include "dcmoe/rope/rotary.hpp"

namespace dcmoe::harness {

/// Synthetic planted-signal data.
struct DataConfig {
    std::vector<rope::Segment> segments;
    std::int64_t theta = 1;
    std::size_t n_classes = 4;
    double noise = 0.1;
    /// Draw a fresh batch every step (otherwise one fixed batch is reused).
    bool resample = true;
};

/// Everything that determines a toy-model run, together with `seed`.
struct ToyModelConfig {
    std::size_t layers = 2;
    std::size_t heads = 1;
    std::size_t head_dim = 24;
    moe::MoEConfig moe;
    rope::RopeFreqConfig rope = rope::RopeFreqConfig::with_default_split(24);
    double learning_rate = 0.1;
    std::size_t steps = 500;
    std::size_t batch = 1;
    std::uint64_t seed = 0;
    /// Routing-gradient estimator used on the training path.
    estimator::Variant estimator = estimator::Variant::Hybrid;
    DataConfig data;

    /// d_model 32, 4 routed + 1 null + 2 shared experts, P = 0.7, sampled routing.
    static ToyModelConfig defaults();
    /// Small two-layer model used by the finite-difference gradient check.
    static ToyModelConfig gradcheck_defaults();

    void validate() const;
};

std::vector<rope::Segment> default_segments();

}  // namespace dcmoe::harness
