// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/analytics/reports.hpp"

#include <set>

namespace dcmoe::analytics {

namespace {

bool matches(const TraceRecord& r, std::size_t layer, const ReportFilter& filter) {
    if (r.layer != layer) return false;
    if (filter.modality && r.modality != *filter.modality) return false;
    if (filter.step && r.step != *filter.step) return false;
    return true;
}

}  // namespace

ActivationReport activation_proportions(const RoutingTrace& trace, std::size_t layer, const ReportFilter& filter) {
    ActivationReport report;
    report.layer = layer;
    report.modality = filter.modality;
    for (const auto& r : trace.records()) {
        if (!matches(r, layer, filter)) continue;
        for (const auto& s : r.slots) {
            if (s.role == moe::ExpertRole::Shared && !filter.include_shared) continue;
            ++report.counts[s.expert_id];
            ++report.total_slots;
        }
    }
    if (report.total_slots == 0) {
        throw EmptySelectionError("no routing slots recorded for layer " + std::to_string(layer) +
                                  (filter.modality ? " and modality " + *filter.modality : std::string()));
    }
    const double total = static_cast<double>(report.total_slots);
    for (const auto& [id, n] : report.counts) {
        report.proportion[id] = static_cast<double>(n) / total;
    }
    return report;
}

std::map<std::size_t, double> expert_count_histogram(const RoutingTrace& trace, std::size_t layer,
                                                     const ReportFilter& filter) {
    std::map<std::size_t, std::size_t> counts;
    std::size_t tokens = 0;
    for (const auto& r : trace.records()) {
        if (!matches(r, layer, filter)) continue;
        ++counts[r.k];
        ++tokens;
    }
    if (tokens == 0) {
        throw EmptySelectionError("no tokens recorded for layer " + std::to_string(layer));
    }
    std::map<std::size_t, double> out;
    for (const auto& [k, n] : counts) {
        out[k] = static_cast<double>(n) / static_cast<double>(tokens);
    }
    return out;
}

std::vector<std::pair<std::uint64_t, double>> dynamics_over_steps(const RoutingTrace& trace, std::size_t layer,
                                                                  std::size_t expert, const ReportFilter& filter) {
    std::set<std::uint64_t> steps;
    for (const auto& r : trace.records()) {
        if (matches(r, layer, ReportFilter{filter.modality, std::nullopt, filter.include_shared})) {
            steps.insert(r.step);
        }
    }
    std::vector<std::pair<std::uint64_t, double>> series;
    series.reserve(steps.size());
    for (std::uint64_t step : steps) {
        ReportFilter per_step = filter;
        per_step.step = step;
        const ActivationReport rep = activation_proportions(trace, layer, per_step);
        auto it = rep.proportion.find(expert);
        series.emplace_back(step, it == rep.proportion.end() ? 0.0 : it->second);
    }
    return series;
}

std::vector<std::size_t> layers_in(const RoutingTrace& trace) {
    std::set<std::size_t> s;
    for (const auto& r : trace.records()) s.insert(r.layer);
    return {s.begin(), s.end()};
}

std::vector<std::string> modalities_in(const RoutingTrace& trace) {
    std::set<std::string> s;
    for (const auto& r : trace.records()) s.insert(r.modality);
    return {s.begin(), s.end()};
}

}  // namespace dcmoe::analytics
