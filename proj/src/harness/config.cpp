// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/harness/config.hpp"

#include "dcmoe/core/errors.hpp"

namespace dcmoe::harness {

std::vector<rope::Segment> default_segments() {
    return {
        rope::TextSegment{6},
        rope::ImageSegment{3, 3, 0, 0},
        rope::AudioSegment{3.0},
        rope::VideoSegment{4.0, 0.5, 2, 2, 1, 8, 0, 0},
        rope::TextSegment{4},
    };
}

ToyModelConfig ToyModelConfig::defaults() {
    ToyModelConfig cfg;
    cfg.moe.d_model = 32;
    cfg.moe.n_routed = 4;
    cfg.moe.n_null = 1;
    cfg.moe.n_shared = 2;
    cfg.moe.expert_hidden = 32;
    cfg.moe.top_p = 0.7;
    cfg.moe.routing_mode = moe::RoutingMode::Sampled;
    cfg.head_dim = 24;
    cfg.rope = rope::RopeFreqConfig::with_default_split(cfg.head_dim);
    cfg.data.segments = default_segments();
    return cfg;
}

ToyModelConfig ToyModelConfig::gradcheck_defaults() {
    ToyModelConfig cfg = defaults();
    cfg.moe.d_model = 12;
    cfg.moe.expert_hidden = 8;
    cfg.head_dim = 6;
    cfg.rope = rope::RopeFreqConfig::with_default_split(cfg.head_dim);
    cfg.steps = 1;
    cfg.data.n_classes = 3;
    cfg.data.segments = {
        rope::TextSegment{3},
        rope::ImageSegment{2, 2, 0, 0},
        rope::VideoSegment{2.0, 1.0, 1, 2, 1, 4, 0, 0},
    };
    return cfg;
}

void ToyModelConfig::validate() const {
    moe.validate();
    rope.validate();
    if (layers == 0) throw ConfigError("layers must be positive");
    if (heads != 1) throw ConfigError("only single-head attention is supported");
    if (head_dim != rope.head_dim) throw ConfigError("head_dim disagrees with the rotary configuration");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
    if (batch == 0) throw ConfigError("batch must be positive");
    if (data.segments.empty()) throw ConfigError("data.segments must not be empty");
    if (data.theta <= 0) throw ConfigError("data.theta must be a positive integer");
    if (data.n_classes < 2) throw ConfigError("data.n_classes must be at least 2");
    if (!(data.noise >= 0.0)) throw ConfigError("data.noise must be non-negative");
}

}  // namespace dcmoe::harness
