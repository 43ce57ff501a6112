// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace dcmoe::moe {

enum class ExpertRole { Routed, Null, Shared };

const char* role_name(ExpertRole role) noexcept;
/// Inverse of role_name; throws ConfigError on unknown names.
ExpertRole role_from_name(const std::string& name);

enum class RoutingMode { Deterministic, Sampled };

const char* mode_name(RoutingMode mode) noexcept;
RoutingMode mode_from_name(const std::string& name);

/// Hyperparameters of one dynamic-capacity MoE layer.
///
/// Routable slots are numbered 0..routable()-1: parameterized routed experts
/// first, then null experts. Shared experts get global ids after that range.
struct MoEConfig {
    std::size_t d_model = 32;
    std::size_t n_routed = 4;
    std::size_t n_null = 1;
    std::size_t n_shared = 2;
    std::size_t expert_hidden = 32;
    /// 0 selects the default, expert_hidden / 8 (at least 1).
    std::size_t shared_hidden = 0;
    double top_p = 0.7;
    RoutingMode routing_mode = RoutingMode::Sampled;
    std::uint64_t seed = 0;

    std::size_t routable() const noexcept { return n_routed + n_null; }
    std::size_t resolved_shared_hidden() const noexcept;
    ExpertRole slot_role(std::size_t slot) const noexcept;
    std::size_t shared_id(std::size_t shared_index) const noexcept { return routable() + shared_index; }

    /// Throws ConfigError when any invariant is violated.
    void validate() const;
};

}  // namespace dcmoe::moe
