// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/estimator/oracle.hpp"

#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/ops.hpp"
#include "dcmoe/core/rng.hpp"
#include "dcmoe/moe/routing.hpp"

namespace dcmoe::estimator {

Downstream Downstream::random(Degree degree, std::size_t d_model, std::uint64_t seed) {
    Downstream f;
    f.degree = degree;
    f.projection = Tensor::randn({d_model}, mix64(seed), 1.0);
    SplitMix64 rng(mix64(seed + 17));
    const int top = static_cast<int>(degree);
    for (int i = 0; i <= top; ++i) {
        f.coeffs[static_cast<std::size_t>(i)] = rng.normal();
    }
    return f;
}

Tensor Downstream::operator()(const Tensor& u) const {
    const Tensor s = ops::dot(projection, u);
    Tensor out = ops::add(Tensor::scalar(coeffs[0]), ops::scale(s, coeffs[1]));
    Tensor power = s;
    for (int i = 2; i <= static_cast<int>(degree); ++i) {
        power = ops::mul(power, s);
        out = ops::add(out, ops::scale(power, coeffs[static_cast<std::size_t>(i)]));
    }
    return out;
}

ClosedFormObjective ClosedFormObjective::random(std::size_t n_routed, std::size_t n_null, std::size_t d_model,
                                                Degree degree, std::uint64_t seed) {
    ClosedFormObjective obj;
    obj.f = Downstream::random(degree, d_model, mix64(seed ^ 0xF00D));
    obj.x = Tensor::randn({d_model}, mix64(seed ^ 0xBEEF), 1.0);
    obj.experts.n_null = n_null;
    for (std::size_t i = 0; i < n_routed; ++i) {
        obj.experts.routed.push_back(moe::GatedExpert::init(d_model, d_model, mix64(seed * 31 + i)));
    }
    return obj;
}

std::vector<Tensor> ClosedFormObjective::expert_outputs() const {
    std::vector<Tensor> out;
    out.reserve(routable());
    for (std::size_t i = 0; i < routable(); ++i) {
        out.push_back(moe::expert_forward(x, i, experts).clone());
    }
    return out;
}

Tensor ClosedFormObjective::loss(const Tensor& z) const {
    if (z.rank() != 1 || z.numel() != routable()) {
        throw ShapeError("objective logits must be a [" + std::to_string(routable()) + "] vector");
    }
    const auto outputs = expert_outputs();
    const Tensor p = ops::softmax(z);
    Tensor total;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const Tensor p_i = ops::element(p, i);
        const Tensor term = ops::mul(p_i, f(ops::scale_by(outputs[i], p_i)));
        total = total.defined() ? ops::add(total, term) : term;
    }
    return total;
}

namespace {
Tensor logits_leaf(const Tensor& z) {
    Tensor leaf = z.clone();
    leaf.set_requires_grad();
    return leaf;
}
}  // namespace

Tensor exact_gradient_oracle(const ClosedFormObjective& objective, const Tensor& z) {
    Tensor leaf = logits_leaf(z);
    backward(objective.loss(leaf));
    return leaf.grad();
}

Tensor estimator_expectation(const ClosedFormObjective& objective, const Tensor& z, Variant variant) {
    const auto outputs = objective.expert_outputs();
    if (z.rank() != 1 || z.numel() != outputs.size()) {
        throw ShapeError("logits do not match the objective's slot count");
    }
    const std::vector<double> probs = ops::softmax(z).to_vector();
    const std::size_t top = moe::argmax_index(z.data());

    std::vector<double> expectation(z.numel(), 0.0);
    for (std::size_t d = 0; d < outputs.size(); ++d) {
        const bool delta = effective_delta(variant, d == top);
        for (const bool b : {true, false}) {
            const double weight = probs[d] * (b ? kBernoulliProb : 1.0 - kBernoulliProb);
            Tensor leaf = logits_leaf(z);
            const Tensor p = ops::softmax(leaf);
            const Tensor o = ops::scale_by(outputs[d], ops::element(p, d));
            backward(objective.f(apply_estimator(o, delta, b)));
            const Tensor grad = leaf.grad();
            const auto g = grad.data();
            for (std::size_t i = 0; i < g.size(); ++i) {
                expectation[i] += weight * g[i];
            }
        }
    }
    return Tensor::from(z.shape(), std::move(expectation));
}

}  // namespace dcmoe::estimator
