// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/harness/train.hpp"

#include <algorithm>
#include <cmath>

#include "dcmoe/analytics/trace_io.hpp"
#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/ops.hpp"
#include "dcmoe/harness/model.hpp"
#include "dcmoe/harness/synthetic.hpp"

namespace dcmoe::harness {

namespace {

constexpr std::uint64_t kDataTag = 0xda7a;

std::uint64_t batch_seed(const ToyModelConfig& cfg, std::uint64_t step, std::size_t b) {
    const std::uint64_t draw = cfg.data.resample ? step : 0;
    return Rng::stream(cfg.seed, {kDataTag, draw, b}).next_u64();
}

}  // namespace

TrainResult train(const ToyModelConfig& cfg) {
    const ToyModel model(cfg);
    const SyntheticTask task = SyntheticTask::make(cfg.moe.d_model, cfg.data.n_classes, cfg.seed);
    const auto& params = model.parameters();
    std::vector<Tensor> tensors;
    for (const auto& p : params) tensors.push_back(p.tensor);

    TrainResult result;
    result.losses.reserve(cfg.steps);
    moe::TrainOptions options;
    options.variant = cfg.estimator;
    for (std::uint64_t step = 0; step < cfg.steps; ++step) {
        zero_grad(tensors);
        std::vector<Tensor> losses;
        std::vector<ForwardResult> forwards;
        std::vector<SyntheticBatch> batches;
        try {
            for (std::size_t b = 0; b < cfg.batch; ++b) {
                batches.push_back(generate_batch(task, cfg.data.segments, cfg.data.theta, cfg.data.noise,
                                                 batch_seed(cfg, step, b)));
                forwards.push_back(model.forward(batches.back(), moe::Phase::Train, step * cfg.batch + b, options));
                losses.push_back(forwards.back().loss);
            }
            const Tensor loss = ops::scale(ops::sum(ops::stack_rows(losses)), 1.0 / static_cast<double>(cfg.batch));
            backward(loss);
            result.losses.push_back(loss.item());
        } catch (const NumericError& e) {
            throw DivergenceError(step, e.what());
        }

        for (const auto& p : params) {
            const Tensor g = p.tensor.grad();
            const auto gd = g.data();
            if (!all_finite(gd)) {
                throw DivergenceError(step, "non-finite gradient in " + p.name);
            }
            Tensor handle = p.tensor;
            auto w = handle.mutable_data();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * gd[i];
        }

        for (std::size_t b = 0; b < cfg.batch; ++b) {
            const auto& batch = batches[b];
            const std::size_t n = batch.size();
            for (std::size_t l = 0; l < cfg.layers; ++l) {
                for (std::size_t t = 0; t < n; ++t) {
                    result.trace.record(step, l, b * n + t, rope::modality_name(batch.modalities[t]),
                                        forwards[b].decisions[l][t], cfg.moe);
                }
            }
        }
    }
    return result;
}

double loss_drop_ratio(const std::vector<double>& losses, std::size_t window) {
    if (losses.empty() || window == 0) {
        throw std::invalid_argument("loss_drop_ratio needs a non-empty loss curve and window");
    }
    const std::size_t w = std::min(window, losses.size());
    double tail = 0.0;
    for (std::size_t i = losses.size() - w; i < losses.size(); ++i) tail += losses[i];
    return (tail / static_cast<double>(w)) / losses.front();
}

void write_loss_csv(const std::vector<double>& losses, std::ostream& out) {
    out << "step,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) {
        out << i << ',' << analytics::format_double(losses[i]) << '\n';
    }
}

}  // namespace dcmoe::harness
