// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/estimator/estimator.hpp"

#include <algorithm>

#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/ops.hpp"

namespace dcmoe::estimator {

double hybrid_scale(bool is_argmax, bool bernoulli) noexcept {
    const double heun = (1.0 + 2.0 * (bernoulli ? 1.0 : 0.0)) / 3.0;
    return std::max(is_argmax ? 1.0 : 0.0, heun);
}

bool effective_delta(Variant variant, bool is_argmax) noexcept {
    switch (variant) {
        case Variant::EulerOnly: return true;
        case Variant::HeunOnly: return false;
        case Variant::Hybrid: break;
    }
    return is_argmax;
}

const char* variant_name(Variant variant) noexcept {
    switch (variant) {
        case Variant::Hybrid: return "hybrid";
        case Variant::EulerOnly: return "euler";
        case Variant::HeunOnly: return "heun";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "hybrid") return Variant::Hybrid;
    if (name == "euler") return Variant::EulerOnly;
    if (name == "heun") return Variant::HeunOnly;
    throw ConfigError("unknown estimator variant '" + name + "'");
}

Tensor apply_estimator_with_scale(const Tensor& o, double forward_scale) {
    const Tensor doubled = ops::scale(o, kGradientMultiplier);
    const Tensor offset = ops::sub(ops::scale(o, forward_scale), doubled);
    return ops::add(doubled, ops::stop_gradient(offset));
}

Tensor apply_estimator(const Tensor& o, bool delta, bool bernoulli) {
    return apply_estimator_with_scale(o, hybrid_scale(delta, bernoulli));
}

std::array<CoefficientRow, 1> euler_scale_reference() noexcept { return {{{1, 2.0, 1.0}}}; }

std::array<CoefficientRow, 2> heun_scale_reference() noexcept {
    // outer = 6 - 4B, inner = (1 + 2B) / 3
    return {{{1, 6.0 - 4.0, (1.0 + 2.0) / 3.0}, {0, 6.0, 1.0 / 3.0}}};
}

bool coefficient_identity_holds() noexcept {
    for (const auto& row : heun_scale_reference()) {
        if (row.outer * row.inner != kGradientMultiplier) {
            return false;
        }
    }
    for (const auto& row : euler_scale_reference()) {
        if (row.outer * row.inner != kGradientMultiplier) {
            return false;
        }
    }
    return true;
}

double expected_heun_outer() noexcept {
    return kBernoulliProb * (6.0 - 4.0) + (1.0 - kBernoulliProb) * 6.0;
}

double heun_quadrature(const std::function<double(double)>& g, double a) {
    return a * (0.25 * g(a) + 0.75 * g(a / 3.0));
}

double euler_quadrature(const std::function<double(double)>& g, double a) { return a * g(a); }

}  // namespace dcmoe::estimator
