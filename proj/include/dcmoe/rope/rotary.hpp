// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "dcmoe/core/tensor.hpp"
#include "dcmoe/rope/positions.hpp"

namespace dcmoe::rope {

/// Split of a head into temporal / height / width rotary blocks.
///
/// Block b of width d_b rotates adjacent pairs (2j, 2j+1) by
/// pos_b * base^(-2j / d_b), where pos_b is the id component for that block.
struct RopeFreqConfig {
    std::size_t head_dim = 24;
    std::size_t d_t = 8;
    std::size_t d_h = 8;
    std::size_t d_w = 8;
    double base = 10000.0;

    /// Equal thirds rounded down to even widths; the remainder goes to the
    /// temporal block.
    static RopeFreqConfig with_default_split(std::size_t head_dim, double base = 10000.0);

    void validate() const;
};

/// Rotates one head vector. Differentiable in `vec`.
Tensor apply_rope3d(const Tensor& vec, const PositionId& id, const RopeFreqConfig& cfg);

/// Rotates every row of [n, head_dim] by its own id. Differentiable.
Tensor apply_rope3d_rows(const Tensor& rows, std::span<const PositionId> ids, const RopeFreqConfig& cfg);

}  // namespace dcmoe::rope
