// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/moe/routing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dcmoe/core/errors.hpp"

namespace dcmoe::moe {

namespace {

void validate_inputs(std::span<const double> probs, double threshold) {
    if (probs.empty()) {
        throw ShapeError("routing needs at least one slot");
    }
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ConfigError("Top-P threshold must lie in (0, 1]");
    }
    double total = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0) {
            throw NumericError("routing probabilities must be finite and non-negative");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw NumericError("routing probabilities must sum to 1");
    }
}

ExpertChoice make_choice(std::span<const double> probs, std::size_t index, std::size_t argmax) {
    ExpertChoice c;
    c.index = index;
    c.gate_prob = probs[index];
    c.is_argmax = index == argmax;
    return c;
}

}  // namespace

std::vector<std::size_t> RoutingDecision::active() const {
    std::vector<std::size_t> out;
    out.reserve(choices.size());
    for (const auto& c : choices) {
        out.push_back(c.index);
    }
    return out;
}

double RoutingDecision::cumulative_prob() const noexcept {
    double total = 0.0;
    for (const auto& c : choices) {
        total += c.gate_prob;
    }
    return total;
}

bool RoutingDecision::contains(std::size_t index) const noexcept {
    return std::any_of(choices.begin(), choices.end(), [&](const ExpertChoice& c) { return c.index == index; });
}

std::size_t argmax_index(std::span<const double> values) {
    if (values.empty()) {
        throw ShapeError("argmax of an empty range");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

RoutingDecision select_top_p_deterministic(std::span<const double> probs, double threshold,
                                           std::optional<std::size_t> argmax) {
    validate_inputs(probs, threshold);
    const std::size_t top = argmax.value_or(argmax_index(probs));

    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

    RoutingDecision decision;
    double cumulative = 0.0;
    for (std::size_t idx : order) {
        decision.choices.push_back(make_choice(probs, idx, top));
        cumulative += probs[idx];
        if (cumulative >= threshold) {
            break;
        }
    }
    return decision;
}

RoutingDecision select_top_p_sampled(std::span<const double> probs, double threshold, Rng& rng,
                                     std::optional<std::size_t> argmax) {
    validate_inputs(probs, threshold);
    const std::size_t top = argmax.value_or(argmax_index(probs));

    std::vector<bool> drawn(probs.size(), false);
    RoutingDecision decision;
    double cumulative = 0.0;
    while (decision.k() < probs.size()) {
        double remaining = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (!drawn[i]) remaining += probs[i];
        }
        if (!(remaining > 0.0)) {
            break;
        }
        const double u = rng.uniform() * remaining;
        std::size_t pick = probs.size();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (drawn[i] || probs[i] <= 0.0) continue;
            pick = i;  // last positive candidate absorbs rounding at the top end
            acc += probs[i];
            if (u < acc) break;
        }
        drawn[pick] = true;
        decision.choices.push_back(make_choice(probs, pick, top));
        cumulative += probs[pick];
        if (cumulative >= threshold) {
            break;
        }
    }
    return decision;
}

}  // namespace dcmoe::moe
