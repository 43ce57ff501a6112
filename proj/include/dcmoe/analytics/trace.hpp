// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dcmoe/moe/config.hpp"
#include "dcmoe/moe/routing.hpp"

namespace dcmoe::analytics {

/// One (token, expert) assignment.
struct SlotRecord {
    std::size_t expert_id = 0;
    moe::ExpertRole role = moe::ExpertRole::Routed;
    double gate_prob = 0.0;
    /// Position in the routing decision; -1 for shared experts.
    int selected_rank = -1;

    bool operator==(const SlotRecord&) const = default;
};

/// Routing of one token at one layer and step. `slots` lists the k routable
/// assignments in selection order followed by any shared experts.
struct TraceRecord {
    std::uint64_t step = 0;
    std::size_t layer = 0;
    std::size_t token_index = 0;
    std::string modality;
    std::vector<SlotRecord> slots;
    std::size_t k = 0;

    std::vector<std::size_t> active_expert_ids() const;
    std::vector<moe::ExpertRole> roles() const;

    bool operator==(const TraceRecord&) const = default;
};

class DuplicateRecordError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Append-only routing log keyed by (step, layer, token_index).
class RoutingTrace {
  public:
    /// Converts a decision into a record. Roles and shared-expert ids come from
    /// `config`; every shared expert is logged for every token.
    void record(std::uint64_t step, std::size_t layer, std::size_t token_index, const std::string& modality,
                const moe::RoutingDecision& decision, const moe::MoEConfig& config);

    /// Throws DuplicateRecordError on a repeated key and std::invalid_argument
    /// when k disagrees with the routable slots.
    void append(TraceRecord record);

    const std::vector<TraceRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

  private:
    std::vector<TraceRecord> records_;
    std::set<std::tuple<std::uint64_t, std::size_t, std::size_t>> keys_;
};

}  // namespace dcmoe::analytics
