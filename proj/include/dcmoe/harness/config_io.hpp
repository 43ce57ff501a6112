// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmoe/harness/config.hpp"

namespace dcmoe::harness {

/// Field names mirror ToyModelConfig; missing fields keep their defaults.
ToyModelConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ToyModelConfig& cfg);

ToyModelConfig load_config(const std::filesystem::path& path);

rope::Segment segment_from_json(const nlohmann::json& j);
nlohmann::json segment_to_json(const rope::Segment& segment);

/// Segment-spec document: {"segments": [...], "theta": N}.
struct SegmentSpec {
    std::vector<rope::Segment> segments;
    std::int64_t theta = 1;
};

SegmentSpec segment_spec_from_json(const nlohmann::json& j);
SegmentSpec load_segment_spec(const std::filesystem::path& path);

}  // namespace dcmoe::harness
