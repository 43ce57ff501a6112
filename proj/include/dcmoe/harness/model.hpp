// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dcmoe/core/tensor.hpp"
#include "dcmoe/harness/config.hpp"
#include "dcmoe/harness/synthetic.hpp"
#include "dcmoe/moe/experts.hpp"
#include "dcmoe/moe/layer.hpp"

namespace dcmoe::harness {

/// Single-head bidirectional attention with 3D RoPE on queries and keys.
struct Attention {
    Tensor w_q;  // [d_model, head_dim]
    Tensor w_k;
    Tensor w_v;
    Tensor w_o;  // [head_dim, d_model]
};

/// h = x + Attn(x); y = h + MoE(h). No normalization layers.
struct Block {
    Attention attn;
    moe::MoELayer moe;
};

/// Discrete routing state of a full forward, one entry per layer and token.
using FrozenModelRouting = std::vector<std::vector<moe::FrozenRouting>>;

struct ForwardResult {
    Tensor logits;  // [n, n_classes]
    Tensor loss;    // scalar mean cross-entropy
    std::vector<std::vector<moe::RoutingDecision>> decisions;  // [layer][token]
    FrozenModelRouting frozen;                                 // train phase only
    std::size_t replay_mismatches = 0;
};

class ToyModel {
  public:
    /// Parameters are drawn from streams of cfg.seed; validates cfg.
    explicit ToyModel(const ToyModelConfig& cfg);

    const ToyModelConfig& config() const noexcept { return cfg_; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }

    /// Every trainable tensor with a stable dotted name.
    const std::vector<moe::NamedTensor>& parameters() const noexcept { return params_; }

    /// `stream_step` keys the per-token routing streams (with cfg.seed and the
    /// layer index). A non-empty `replay` holds one entry per layer.
    ForwardResult forward(const SyntheticBatch& batch, moe::Phase phase, std::uint64_t stream_step,
                          const moe::TrainOptions& options = {}, const FrozenModelRouting* replay = nullptr) const;

  private:
    ToyModelConfig cfg_;
    std::vector<Block> blocks_;
    Tensor w_out_;  // [d_model, n_classes]
    std::vector<moe::NamedTensor> params_;
};

}  // namespace dcmoe::harness
