// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/analytics/trace.hpp"

#include <algorithm>

namespace dcmoe::analytics {

std::vector<std::size_t> TraceRecord::active_expert_ids() const {
    std::vector<std::size_t> ids;
    for (const auto& s : slots) {
        if (s.role != moe::ExpertRole::Shared) ids.push_back(s.expert_id);
    }
    return ids;
}

std::vector<moe::ExpertRole> TraceRecord::roles() const {
    std::vector<moe::ExpertRole> out;
    for (const auto& s : slots) {
        if (s.role != moe::ExpertRole::Shared) out.push_back(s.role);
    }
    return out;
}

void RoutingTrace::record(std::uint64_t step, std::size_t layer, std::size_t token_index, const std::string& modality,
                          const moe::RoutingDecision& decision, const moe::MoEConfig& config) {
    TraceRecord r;
    r.step = step;
    r.layer = layer;
    r.token_index = token_index;
    r.modality = modality;
    r.k = decision.k();
    for (std::size_t i = 0; i < decision.k(); ++i) {
        const auto& c = decision.choices[i];
        r.slots.push_back({c.index, config.slot_role(c.index), c.gate_prob, static_cast<int>(i)});
    }
    for (std::size_t s = 0; s < config.n_shared; ++s) {
        r.slots.push_back({config.shared_id(s), moe::ExpertRole::Shared, 1.0, -1});
    }
    append(std::move(r));
}

void RoutingTrace::append(TraceRecord record) {
    const std::size_t routable = static_cast<std::size_t>(std::count_if(
        record.slots.begin(), record.slots.end(), [](const SlotRecord& s) { return s.role != moe::ExpertRole::Shared; }));
    if (routable != record.k || record.k == 0) {
        throw std::invalid_argument("trace record k must equal its (non-zero) number of routable slots");
    }
    auto key = std::make_tuple(record.step, record.layer, record.token_index);
    if (!keys_.insert(key).second) {
        throw DuplicateRecordError("duplicate trace record for step " + std::to_string(record.step) + ", layer " +
                                   std::to_string(record.layer) + ", token " + std::to_string(record.token_index));
    }
    records_.push_back(std::move(record));
}

}  // namespace dcmoe::analytics
