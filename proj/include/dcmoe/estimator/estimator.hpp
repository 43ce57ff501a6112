// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>

#include "dcmoe/core/tensor.hpp"

namespace dcmoe::estimator {

/// Probability of B = 1. Fixed: the Heun coefficients below only recombine to a
/// constant gradient multiplier for this value.
inline constexpr double kBernoulliProb = 5.0 / 8.0;

/// Gradient multiplier carried by every estimated expert output.
inline constexpr double kGradientMultiplier = 2.0;

/// Which quadrature picks the forward scale for a drawn expert.
enum class Variant {
    Hybrid,     ///< Euler for the argmax expert, Heun otherwise.
    EulerOnly,  ///< delta forced to 1.
    HeunOnly,   ///< delta forced to 0.
};

/// max(delta, (1 + 2B) / 3).
double hybrid_scale(bool is_argmax, bool bernoulli) noexcept;

bool effective_delta(Variant variant, bool is_argmax) noexcept;

/// "hybrid", "euler" or "heun".
const char* variant_name(Variant variant) noexcept;
Variant variant_from_name(const std::string& name);

/// One expert's estimator draw.
struct Draw {
    std::size_t expert_index = 0;
    bool delta = false;
    bool bernoulli = false;
    double forward_scale = 1.0;

    static Draw make(std::size_t index, bool delta, bool bernoulli) {
        return {index, delta, bernoulli, hybrid_scale(delta, bernoulli)};
    }
};

/// Straight-through construction 2*o + stop_gradient(scale*o - 2*o).
///
/// The forward value is scale*o while the backward pass sees exactly 2*o.
Tensor apply_estimator(const Tensor& o, bool delta, bool bernoulli);
Tensor apply_estimator_with_scale(const Tensor& o, double forward_scale);

/// Coefficients of one quadrature branch: gradient multiplier (outer) applied
/// to d f(inner * o) / dz.
struct CoefficientRow {
    int bernoulli;
    double outer;
    double inner;
};

/// First-order branch: 2 * d f(o) / dz.
std::array<CoefficientRow, 1> euler_scale_reference() noexcept;
/// Third-order branch: (6 - 4B) * d f((1 + 2B)/3 * o) / dz for B in {1, 0}.
std::array<CoefficientRow, 2> heun_scale_reference() noexcept;

/// True iff outer * inner == 2 exactly for every Heun row.
bool coefficient_identity_holds() noexcept;

/// E[6 - 4B] under B ~ Bernoulli(5/8).
double expected_heun_outer() noexcept;

/// a * (g(a)/4 + 3/4 * g(a/3)): integrates g over [0, a], exact for quadratics.
double heun_quadrature(const std::function<double(double)>& g, double a);
/// a * g(a): exact for constants.
double euler_quadrature(const std::function<double(double)>& g, double a);

}  // namespace dcmoe::estimator
