// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dcmoe/core/rng.hpp"

namespace dcmoe::moe {

/// One activated routable slot.
struct ExpertChoice {
    std::size_t index = 0;
    double gate_prob = 0.0;
    bool is_argmax = false;
    /// Heun coin; only drawn on the training path.
    std::optional<bool> bernoulli;
    /// max(delta, (1 + 2B)/3) when training, 1 at inference.
    double forward_scale = 1.0;

    bool operator==(const ExpertChoice&) const = default;
};

/// Per-token routing outcome. `choices` is in selection order (descending
/// probability for deterministic routing, draw order for sampled routing).
struct RoutingDecision {
    std::vector<ExpertChoice> choices;

    std::size_t k() const noexcept { return choices.size(); }
    std::vector<std::size_t> active() const;
    /// Sum of the original gate probabilities over the active set.
    double cumulative_prob() const noexcept;
    bool contains(std::size_t index) const noexcept;

    bool operator==(const RoutingDecision&) const = default;
};

/// Lowest index among the maxima.
std::size_t argmax_index(std::span<const double> values);

/// Minimal descending-probability prefix whose cumulative mass reaches
/// threshold. Ties sort by lower index first. If rounding keeps the total
/// below the threshold, every slot is activated.
RoutingDecision select_top_p_deterministic(std::span<const double> probs, double threshold,
                                           std::optional<std::size_t> argmax = std::nullopt);

/// Sampling without replacement: each draw picks among the remaining slots in
/// proportion to their probability, and drawing stops once the original
/// probabilities of the drawn slots sum to at least threshold, every slot is
/// drawn, or only zero-probability slots remain.
RoutingDecision select_top_p_sampled(std::span<const double> probs, double threshold, Rng& rng,
                                     std::optional<std::size_t> argmax = std::nullopt);

}  // namespace dcmoe::moe
