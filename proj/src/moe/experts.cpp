// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/moe/experts.hpp"

#include <cmath>

#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/ops.hpp"
#include "dcmoe/core/rng.hpp"

namespace dcmoe::moe {

GatedExpert GatedExpert::init(std::size_t d_model, std::size_t hidden, std::uint64_t seed) {
    const double in_std = 1.0 / std::sqrt(static_cast<double>(d_model));
    const double out_std = 1.0 / std::sqrt(static_cast<double>(hidden));
    GatedExpert e;
    e.w_gate = Tensor::randn({hidden, d_model}, mix64(seed + 1), in_std);
    e.w_up = Tensor::randn({hidden, d_model}, mix64(seed + 2), in_std);
    e.w_down = Tensor::randn({d_model, hidden}, mix64(seed + 3), out_std);
    e.w_gate.set_requires_grad();
    e.w_up.set_requires_grad();
    e.w_down.set_requires_grad();
    return e;
}

Tensor GatedExpert::forward(const Tensor& x) const {
    const Tensor gate = ops::silu(ops::matvec(w_gate, x));
    const Tensor up = ops::matvec(w_up, x);
    return ops::matvec(w_down, ops::mul(gate, up));
}

void GatedExpert::append_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const {
    out.push_back({prefix + ".w_gate", w_gate});
    out.push_back({prefix + ".w_up", w_up});
    out.push_back({prefix + ".w_down", w_down});
}

ExpertRole ExpertBank::slot_role(std::size_t slot) const {
    if (slot < routed.size()) return ExpertRole::Routed;
    if (slot < routable()) return ExpertRole::Null;
    throw ShapeError("slot " + std::to_string(slot) + " is not routable");
}

Tensor expert_forward(const Tensor& x, std::size_t slot, const ExpertBank& bank) {
    if (bank.slot_role(slot) == ExpertRole::Null) {
        return Tensor::zeros(x.shape());
    }
    return bank.routed[slot].forward(x);
}

Tensor shared_forward(const Tensor& x, std::size_t shared_index, const ExpertBank& bank) {
    if (shared_index >= bank.shared.size()) {
        throw ShapeError("shared expert " + std::to_string(shared_index) + " does not exist");
    }
    return bank.shared[shared_index].forward(x);
}

}  // namespace dcmoe::moe
