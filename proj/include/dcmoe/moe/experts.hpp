// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dcmoe/core/tensor.hpp"
#include "dcmoe/moe/config.hpp"

namespace dcmoe::moe {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// Gated feed-forward expert: W_down * (silu(W_gate x) * (W_up x)).
struct GatedExpert {
    Tensor w_gate;  // [hidden, d_model]
    Tensor w_up;    // [hidden, d_model]
    Tensor w_down;  // [d_model, hidden]

    static GatedExpert init(std::size_t d_model, std::size_t hidden, std::uint64_t seed);

    std::size_t hidden() const { return w_gate.dim(0); }
    std::size_t d_model() const { return w_gate.dim(1); }
    Tensor forward(const Tensor& x) const;
    void append_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// Parameters of every expert in one layer. Null slots own no parameters.
struct ExpertBank {
    std::vector<GatedExpert> routed;
    std::size_t n_null = 0;
    std::vector<GatedExpert> shared;

    std::size_t routable() const noexcept { return routed.size() + n_null; }
    ExpertRole slot_role(std::size_t slot) const;
};

/// Output of routable slot `slot`. Null slots return a constant zero vector and
/// add nothing to the tape.
Tensor expert_forward(const Tensor& x, std::size_t slot, const ExpertBank& bank);

Tensor shared_forward(const Tensor& x, std::size_t shared_index, const ExpertBank& bank);

}  // namespace dcmoe::moe
