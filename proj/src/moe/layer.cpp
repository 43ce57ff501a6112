// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/moe/layer.hpp"

#include <cmath>

#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/ops.hpp"

namespace dcmoe::moe {

RouterOutput route(const Tensor& x, const Router& router) {
    RouterOutput out;
    out.logits = ops::matvec(router.weight, x);
    out.probs = ops::softmax(out.logits);
    out.argmax = argmax_index(out.logits.data());
    return out;
}

MoELayer MoELayer::init(const MoEConfig& config, std::uint64_t seed) {
    config.validate();
    MoELayer layer;
    layer.config = config;
    const double router_std = 1.0 / std::sqrt(static_cast<double>(config.d_model));
    layer.router.weight = Tensor::randn({config.routable(), config.d_model}, mix64(seed), router_std);
    layer.router.weight.set_requires_grad();
    layer.bank.n_null = config.n_null;
    for (std::size_t i = 0; i < config.n_routed; ++i) {
        layer.bank.routed.push_back(
            GatedExpert::init(config.d_model, config.expert_hidden, mix64(seed ^ (0x100 + 16 * i))));
    }
    for (std::size_t i = 0; i < config.n_shared; ++i) {
        layer.bank.shared.push_back(
            GatedExpert::init(config.d_model, config.resolved_shared_hidden(), mix64(seed ^ (0x10000 + 16 * i))));
    }
    return layer;
}

std::vector<NamedTensor> MoELayer::named_parameters(const std::string& prefix) const {
    std::vector<NamedTensor> out;
    out.push_back({prefix + ".router", router.weight});
    for (std::size_t i = 0; i < bank.routed.size(); ++i) {
        bank.routed[i].append_parameters(prefix + ".routed" + std::to_string(i), out);
    }
    for (std::size_t i = 0; i < bank.shared.size(); ++i) {
        bank.shared[i].append_parameters(prefix + ".shared" + std::to_string(i), out);
    }
    return out;
}

namespace {

void check_input(const Tensor& x, const MoELayer& layer) {
    if (x.rank() != 1 || x.dim(0) != layer.config.d_model) {
        throw ShapeError("MoE input must be a [" + std::to_string(layer.config.d_model) + "] vector, got " +
                         shape_to_string(x.shape()));
    }
}

Tensor add_shared(Tensor y, const Tensor& x, const MoELayer& layer) {
    for (std::size_t s = 0; s < layer.bank.shared.size(); ++s) {
        y = ops::add(y, shared_forward(x, s, layer.bank));
    }
    return y;
}

RoutingDecision fresh_selection(const MoELayer& layer, const RouterOutput& ro, Rng& rng,
                                const TrainOptions& options) {
    auto probs = ro.probs.data();
    RoutingDecision d = layer.config.routing_mode == RoutingMode::Sampled
                            ? select_top_p_sampled(probs, layer.config.top_p, rng, ro.argmax)
                            : select_top_p_deterministic(probs, layer.config.top_p, ro.argmax);
    for (auto& c : d.choices) {
        const bool b = options.force_bernoulli ? *options.force_bernoulli : rng.bernoulli(estimator::kBernoulliProb);
        c.bernoulli = b;
        c.forward_scale = estimator::hybrid_scale(estimator::effective_delta(options.variant, c.is_argmax), b);
    }
    return d;
}

bool same_discrete_state(const RoutingDecision& a, const RoutingDecision& b) {
    if (a.k() != b.k()) {
        return false;
    }
    for (std::size_t i = 0; i < a.k(); ++i) {
        const auto& x = a.choices[i];
        const auto& y = b.choices[i];
        if (x.index != y.index || x.is_argmax != y.is_argmax || x.bernoulli != y.bernoulli) {
            return false;
        }
    }
    return true;
}

}  // namespace

Tensor mix_experts(const Tensor& x, const MoELayer& layer, const Tensor& probs, const RoutingDecision& decision) {
    check_input(x, layer);
    Tensor y = Tensor::zeros(x.shape());
    for (const auto& c : decision.choices) {
        if (layer.bank.slot_role(c.index) == ExpertRole::Null) {
            continue;
        }
        y = ops::add(y, ops::scale_by(expert_forward(x, c.index, layer.bank), ops::element(probs, c.index)));
    }
    return add_shared(std::move(y), x, layer);
}

Tensor moe_forward_infer(const Tensor& x, const MoELayer& layer, RoutingDecision* decision_out) {
    check_input(x, layer);
    const RouterOutput ro = route(x, layer.router);
    RoutingDecision decision = select_top_p_deterministic(ro.probs.data(), layer.config.top_p, ro.argmax);
    Tensor y = mix_experts(x, layer, ro.probs, decision);
    if (decision_out) {
        *decision_out = std::move(decision);
    }
    return y;
}

TrainOutput moe_forward_train(const Tensor& x, const MoELayer& layer, Rng& rng, const TrainOptions& options,
                              const FrozenRouting* replay) {
    check_input(x, layer);
    const RouterOutput ro = route(x, layer.router);

    TrainOutput out;
    RoutingDecision fresh = fresh_selection(layer, ro, rng, options);
    if (replay) {
        out.replay_consistent = same_discrete_state(fresh, replay->decision);
        out.decision = replay->decision;
        if (replay->offsets.size() != out.decision.k()) {
            throw ShapeError("frozen routing has mismatched offsets");
        }
    } else {
        out.decision = std::move(fresh);
    }

    Tensor y = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < out.decision.k(); ++i) {
        const ExpertChoice& c = out.decision.choices[i];
        if (layer.bank.slot_role(c.index) == ExpertRole::Null) {
            out.frozen.offsets.emplace_back();
            continue;
        }
        const Tensor o = ops::scale_by(expert_forward(x, c.index, layer.bank), ops::element(ro.probs, c.index));
        Tensor contribution;
        if (replay) {
            contribution = ops::add(ops::scale(o, estimator::kGradientMultiplier),
                                    Tensor::from(o.shape(), replay->offsets[i]));
            out.frozen.offsets.push_back(replay->offsets[i]);
        } else {
            contribution = estimator::apply_estimator_with_scale(o, c.forward_scale);
            std::vector<double> offset(o.numel());
            auto od = o.data();
            for (std::size_t j = 0; j < offset.size(); ++j) {
                offset[j] = c.forward_scale * od[j] - estimator::kGradientMultiplier * od[j];
            }
            out.frozen.offsets.push_back(std::move(offset));
        }
        y = ops::add(y, contribution);
    }
    out.y = add_shared(std::move(y), x, layer);
    out.frozen.decision = out.decision;
    return out;
}

Rng token_stream(const StreamKey& key, std::size_t token_index) {
    return Rng::stream(key.seed, {key.step, key.layer, static_cast<std::uint64_t>(token_index)});
}

LayerOutput layer_apply(const Tensor& batch, const MoELayer& layer, Phase phase, const StreamKey& key,
                        const TrainOptions& options, std::span<const FrozenRouting> replay) {
    if (batch.rank() != 2 || batch.dim(1) != layer.config.d_model) {
        throw ShapeError("layer_apply expects [tokens, " + std::to_string(layer.config.d_model) + "], got " +
                         shape_to_string(batch.shape()));
    }
    const std::size_t n = batch.dim(0);
    if (!replay.empty() && replay.size() != n) {
        throw ShapeError("replay state covers " + std::to_string(replay.size()) + " tokens, batch has " +
                         std::to_string(n));
    }
    LayerOutput out;
    std::vector<Tensor> rows;
    rows.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        const Tensor x = ops::row(batch, t);
        if (phase == Phase::Infer) {
            RoutingDecision d;
            rows.push_back(moe_forward_infer(x, layer, &d));
            out.decisions.push_back(std::move(d));
        } else {
            Rng rng = token_stream(key, t);
            TrainOutput r = moe_forward_train(x, layer, rng, options, replay.empty() ? nullptr : &replay[t]);
            if (!r.replay_consistent) {
                ++out.replay_mismatches;
            }
            rows.push_back(r.y);
            out.decisions.push_back(std::move(r.decision));
            out.frozen.push_back(std::move(r.frozen));
        }
    }
    out.outputs = ops::stack_rows(rows);
    return out;
}

}  // namespace dcmoe::moe
