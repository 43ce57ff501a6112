// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcmoe/analytics/trace.hpp"

namespace dcmoe::analytics {

struct ReportFilter {
    std::optional<std::string> modality;
    std::optional<std::uint64_t> step;
    /// Shared experts fire for every token and are left out unless requested.
    bool include_shared = false;
};

/// Share of assignment slots (token-expert pairs) that name each expert.
struct ActivationReport {
    std::size_t layer = 0;
    std::optional<std::string> modality;
    std::size_t total_slots = 0;
    std::map<std::size_t, std::size_t> counts;
    std::map<std::size_t, double> proportion;
};

class EmptySelectionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Throws EmptySelectionError when no slot matches.
ActivationReport activation_proportions(const RoutingTrace& trace, std::size_t layer, const ReportFilter& filter = {});

/// Fraction of tokens (not slots) that activated k routable slots.
std::map<std::size_t, double> expert_count_histogram(const RoutingTrace& trace, std::size_t layer,
                                                     const ReportFilter& filter = {});

/// activation_proportions for `expert`, evaluated per step in ascending order.
/// Steps where the expert was never chosen report 0.
std::vector<std::pair<std::uint64_t, double>> dynamics_over_steps(const RoutingTrace& trace, std::size_t layer,
                                                                  std::size_t expert,
                                                                  const ReportFilter& filter = {});

std::vector<std::size_t> layers_in(const RoutingTrace& trace);
std::vector<std::string> modalities_in(const RoutingTrace& trace);

}  // namespace dcmoe::analytics
