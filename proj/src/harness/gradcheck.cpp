// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/harness/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dcmoe/core/finite_diff.hpp"
#include "dcmoe/core/rng.hpp"
#include "dcmoe/estimator/oracle.hpp"
#include "dcmoe/harness/model.hpp"
#include "dcmoe/harness/synthetic.hpp"

namespace dcmoe::harness {

bool GradCheckReport::blocks_passed() const {
    return !blocks.empty() && std::all_of(blocks.begin(), blocks.end(), [](const auto& b) { return b.passed; });
}

bool GradCheckReport::unbiasedness_passed() const {
    return std::all_of(unbiasedness.begin(), unbiasedness.end(), [](const auto& u) { return u.passed; });
}

std::vector<std::string> GradCheckReport::failing_blocks() const {
    std::vector<std::string> out;
    for (const auto& b : blocks) {
        if (!b.passed) out.push_back(b.name);
    }
    for (const auto& u : unbiasedness) {
        if (!u.passed) {
            out.push_back("unbiasedness[n_routed=" + std::to_string(u.n_routed) + ",seed=" + std::to_string(u.seed) +
                          "]");
        }
    }
    return out;
}

namespace {

constexpr std::uint64_t kCheckTag = 0xc4ec;

std::vector<BlockCheck> check_blocks(const ToyModelConfig& cfg, const GradCheckOptions& options) {
    const ToyModel model(cfg);
    const SyntheticTask task = SyntheticTask::make(cfg.moe.d_model, cfg.data.n_classes, cfg.seed);
    const SyntheticBatch batch = generate_batch(task, cfg.data.segments, cfg.data.theta, cfg.data.noise,
                                                Rng::stream(cfg.seed, {kCheckTag}).next_u64());
    constexpr std::uint64_t stream_step = 0;

    const ForwardResult base = model.forward(batch, moe::Phase::Train, stream_step);
    const FrozenModelRouting frozen = base.frozen;
    backward(base.loss);

    std::vector<BlockCheck> out;
    for (const auto& p : model.parameters()) {
        Tensor param = p.tensor;
        const std::vector<double> analytic = param.grad().to_vector();
        BlockCheck block;
        block.name = p.name;
        block.coordinates = param.numel();

        std::vector<double> a_kept;
        std::vector<double> fd_kept;
        auto values = param.mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double orig = values[i];
            values[i] = orig + options.eps;
            const ForwardResult plus = model.forward(batch, moe::Phase::Train, stream_step, {}, &frozen);
            values[i] = orig - options.eps;
            const ForwardResult minus = model.forward(batch, moe::Phase::Train, stream_step, {}, &frozen);
            values[i] = orig;
            if (plus.replay_mismatches != 0 || minus.replay_mismatches != 0) {
                ++block.skipped;
                continue;
            }
            a_kept.push_back(analytic[i]);
            fd_kept.push_back((plus.loss.item() - minus.loss.item()) / (2.0 * options.eps));
        }
        for (double g : analytic) block.max_abs_grad = std::max(block.max_abs_grad, std::abs(g));
        if (!a_kept.empty()) {
            block.rel_error = max_relative_error(a_kept, fd_kept);
        }
        block.passed = !a_kept.empty() && block.rel_error <= options.tol;
        out.push_back(std::move(block));
    }
    for (const auto& p : model.parameters()) p.tensor.zero_grad();
    return out;
}

}  // namespace

GradCheckReport grad_check(const ToyModelConfig& cfg, const GradCheckOptions& options) {
    GradCheckReport report;
    report.eps = options.eps;
    report.tol = options.tol;
    report.unbiased_tol = options.unbiased_tol;
    report.blocks = check_blocks(cfg, options);

    for (std::size_t n_routed : options.unbiased_n_routed) {
        for (std::uint64_t s = 0; s < options.unbiased_seeds; ++s) {
            const std::uint64_t seed = Rng::stream(cfg.seed, {kCheckTag, n_routed, s}).next_u64();
            const auto obj = estimator::ClosedFormObjective::random(n_routed, 1, options.unbiased_d_model,
                                                                    estimator::Degree::Linear, seed);
            const Tensor z = Tensor::randn({obj.routable()}, mix64(seed), 1.0);
            const Tensor exact = estimator::exact_gradient_oracle(obj, z);
            const Tensor est = estimator::estimator_expectation(obj, z);
            UnbiasednessCheck u;
            u.n_routed = n_routed;
            u.seed = s;
            u.max_abs_error = max_abs_error(exact.data(), est.data());
            u.passed = u.max_abs_error <= options.unbiased_tol;
            report.unbiasedness.push_back(u);
        }
    }
    return report;
}

}  // namespace dcmoe::harness
