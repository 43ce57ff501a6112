// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dcmoe/core/tensor.hpp"
#include "dcmoe/estimator/estimator.hpp"
#include "dcmoe/moe/experts.hpp"

namespace dcmoe::estimator {

enum class Degree { Linear = 1, Quadratic = 2, Cubic = 3 };

/// Scalar downstream map f(u) = c0 + c1 s + c2 s^2 + c3 s^3 with s = <w, u>,
/// standing in for "the rest of the network". Coefficients above the degree
/// are zero.
struct Downstream {
    Degree degree = Degree::Linear;
    Tensor projection;  // w, [d_model]
    std::array<double, 4> coeffs{};

    static Downstream random(Degree degree, std::size_t d_model, std::uint64_t seed);
    Tensor operator()(const Tensor& u) const;
};

/// Top-1 objective with the sampling expectation written out in closed form:
/// L(z) = sum_i p_i * f(p_i * E_i(x)), p = softmax(z).
struct ClosedFormObjective {
    Downstream f;
    moe::ExpertBank experts;
    Tensor x;

    /// N_r parameterized experts (hidden width = d_model) plus n_null null slots.
    static ClosedFormObjective random(std::size_t n_routed, std::size_t n_null, std::size_t d_model, Degree degree,
                                      std::uint64_t seed);

    std::size_t routable() const noexcept { return experts.routable(); }
    /// Detached E_i(x) per routable slot.
    std::vector<Tensor> expert_outputs() const;
    Tensor loss(const Tensor& z) const;
};

/// dL/dz by reverse mode over the full closed form. No masks, no sampling.
Tensor exact_gradient_oracle(const ClosedFormObjective& objective, const Tensor& z);

/// Exact expectation of the straight-through gradient:
/// sum_D p_D sum_B Pr(B) * d f(o_est(D, B)) / dz with o_est from apply_estimator.
Tensor estimator_expectation(const ClosedFormObjective& objective, const Tensor& z, Variant variant = Variant::Hybrid);

}  // namespace dcmoe::estimator
