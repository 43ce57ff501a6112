// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcmoe/core/rng.hpp"
#include "dcmoe/core/tensor.hpp"
#include "dcmoe/estimator/estimator.hpp"
#include "dcmoe/moe/config.hpp"
#include "dcmoe/moe/experts.hpp"
#include "dcmoe/moe/routing.hpp"

namespace dcmoe::moe {

/// Linear router z = W_r x over all routable slots.
struct Router {
    Tensor weight;  // [routable, d_model]
};

struct RouterOutput {
    Tensor logits;
    Tensor probs;
    std::size_t argmax = 0;  // of the logits, lowest index on ties
};

RouterOutput route(const Tensor& x, const Router& router);

struct MoELayer {
    MoEConfig config;
    Router router;
    ExpertBank bank;

    /// Random parameters; every tensor is a trainable leaf.
    static MoELayer init(const MoEConfig& config, std::uint64_t seed);

    std::vector<NamedTensor> named_parameters(const std::string& prefix) const;
};

/// Sum of p_i * Expert_i(x) over the decision's slots (no renormalization) plus
/// every shared expert with weight 1. Null slots are skipped.
Tensor mix_experts(const Tensor& x, const MoELayer& layer, const Tensor& probs, const RoutingDecision& decision);

/// Inference forward with deterministic Top-P selection.
Tensor moe_forward_infer(const Tensor& x, const MoELayer& layer, RoutingDecision* decision_out = nullptr);

struct TrainOptions {
    estimator::Variant variant = estimator::Variant::Hybrid;
    /// Pins every B instead of drawing it.
    std::optional<bool> force_bernoulli;
};

/// Discrete state of one training forward: the routing decision (including the
/// B draws) and, per choice, the value of the detached estimator offset.
/// Replaying it makes the forward a smooth function of the parameters whose
/// gradient is exactly the estimator's gradient at the captured point.
struct FrozenRouting {
    RoutingDecision decision;
    std::vector<std::vector<double>> offsets;  // empty for null slots
};

struct TrainOutput {
    Tensor y;
    RoutingDecision decision;
    FrozenRouting frozen;
    /// When replaying: whether fresh routing with the same rng stream would
    /// have reproduced the frozen decision.
    bool replay_consistent = true;
};

/// Training forward. Selection follows config.routing_mode; each activated
/// routed slot contributes apply_estimator(p_D * Expert_D(x), delta_D, B).
TrainOutput moe_forward_train(const Tensor& x, const MoELayer& layer, Rng& rng, const TrainOptions& options = {},
                              const FrozenRouting* replay = nullptr);

enum class Phase { Infer, Train };

/// Identifies the per-token rng streams of one layer application.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    std::uint64_t layer = 0;
};

Rng token_stream(const StreamKey& key, std::size_t token_index);

struct LayerOutput {
    Tensor outputs;  // [tokens, d_model]
    std::vector<RoutingDecision> decisions;
    std::vector<FrozenRouting> frozen;  // train phase only
    std::size_t replay_mismatches = 0;
};

/// Routes, selects and mixes every row of `batch` independently.
LayerOutput layer_apply(const Tensor& batch, const MoELayer& layer, Phase phase, const StreamKey& key,
                        const TrainOptions& options = {}, std::span<const FrozenRouting> replay = {});

}  // namespace dcmoe::moe
