// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/moe/config.hpp"

#include <algorithm>
#include <cmath>

#include "dcmoe/core/errors.hpp"

namespace dcmoe::moe {

const char* role_name(ExpertRole role) noexcept {
    switch (role) {
        case ExpertRole::Routed: return "routed";
        case ExpertRole::Null: return "null";
        case ExpertRole::Shared: return "shared";
    }
    return "?";
}

ExpertRole role_from_name(const std::string& name) {
    if (name == "routed") return ExpertRole::Routed;
    if (name == "null") return ExpertRole::Null;
    if (name == "shared") return ExpertRole::Shared;
    throw ConfigError("unknown expert role '" + name + "'");
}

const char* mode_name(RoutingMode mode) noexcept {
    return mode == RoutingMode::Deterministic ? "deterministic" : "sampled";
}

RoutingMode mode_from_name(const std::string& name) {
    if (name == "deterministic") return RoutingMode::Deterministic;
    if (name == "sampled") return RoutingMode::Sampled;
    throw ConfigError("unknown routing mode '" + name + "'");
}

std::size_t MoEConfig::resolved_shared_hidden() const noexcept {
    if (shared_hidden > 0) {
        return shared_hidden;
    }
    return std::max<std::size_t>(1, expert_hidden / 8);
}

ExpertRole MoEConfig::slot_role(std::size_t slot) const noexcept {
    if (slot < n_routed) return ExpertRole::Routed;
    if (slot < routable()) return ExpertRole::Null;
    return ExpertRole::Shared;
}

void MoEConfig::validate() const {
    if (d_model == 0) throw ConfigError("d_model must be positive");
    if (n_routed == 0) throw ConfigError("n_routed must be positive");
    if (expert_hidden == 0) throw ConfigError("expert_hidden must be positive");
    if (!(top_p > 0.0 && top_p <= 1.0) || !std::isfinite(top_p)) {
        throw ConfigError("top_p must lie in (0, 1]");
    }
}

}  // namespace dcmoe::moe
