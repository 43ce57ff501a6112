// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/harness/model.hpp"

#include <cmath>
#include <string>

#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/ops.hpp"
#include "dcmoe/core/rng.hpp"
#include "dcmoe/rope/rotary.hpp"

namespace dcmoe::harness {

namespace {

constexpr std::uint64_t kAttnTag = 0xa77e;
constexpr std::uint64_t kMoeTag = 0x30e;
constexpr std::uint64_t kHeadTag = 0x4ead;

std::uint64_t param_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a, std::uint64_t b = 0) {
    return Rng::stream(seed, {tag, a, b}).next_u64();
}

Tensor trainable(Tensor t) {
    t.set_requires_grad();
    return t;
}

Tensor attention(const Tensor& h, const Attention& a, std::span<const rope::PositionId> ids,
                 const rope::RopeFreqConfig& rope_cfg) {
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(rope_cfg.head_dim));
    const Tensor q = rope::apply_rope3d_rows(ops::matmul(h, a.w_q), ids, rope_cfg);
    const Tensor k = rope::apply_rope3d_rows(ops::matmul(h, a.w_k), ids, rope_cfg);
    const Tensor v = ops::matmul(h, a.w_v);
    const Tensor weights = ops::softmax_rows(ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt));
    return ops::matmul(ops::matmul(weights, v), a.w_o);
}

}  // namespace

ToyModel::ToyModel(const ToyModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg_.moe.d_model;
    const std::size_t hd = cfg_.head_dim;
    const double in_std = 1.0 / std::sqrt(static_cast<double>(d));
    const double out_std = 1.0 / std::sqrt(static_cast<double>(hd));

    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        Block b;
        b.attn.w_q = trainable(Tensor::randn({d, hd}, param_seed(cfg_.seed, kAttnTag, l, 0), in_std));
        b.attn.w_k = trainable(Tensor::randn({d, hd}, param_seed(cfg_.seed, kAttnTag, l, 1), in_std));
        b.attn.w_v = trainable(Tensor::randn({d, hd}, param_seed(cfg_.seed, kAttnTag, l, 2), in_std));
        b.attn.w_o = trainable(Tensor::randn({hd, d}, param_seed(cfg_.seed, kAttnTag, l, 3), out_std));
        b.moe = moe::MoELayer::init(cfg_.moe, param_seed(cfg_.seed, kMoeTag, l, cfg_.moe.seed));
        blocks_.push_back(std::move(b));
    }
    w_out_ = trainable(Tensor::randn({d, cfg_.data.n_classes}, param_seed(cfg_.seed, kHeadTag, 0), in_std));

    for (std::size_t l = 0; l < blocks_.size(); ++l) {
        const std::string p = "layer" + std::to_string(l);
        const Attention& a = blocks_[l].attn;
        params_.push_back({p + ".attn.w_q", a.w_q});
        params_.push_back({p + ".attn.w_k", a.w_k});
        params_.push_back({p + ".attn.w_v", a.w_v});
        params_.push_back({p + ".attn.w_o", a.w_o});
        for (auto& nt : blocks_[l].moe.named_parameters(p + ".moe")) {
            params_.push_back(std::move(nt));
        }
    }
    params_.push_back({"head.w_out", w_out_});
}

ForwardResult ToyModel::forward(const SyntheticBatch& batch, moe::Phase phase, std::uint64_t stream_step,
                                const moe::TrainOptions& options, const FrozenModelRouting* replay) const {
    if (batch.tokens.rank() != 2 || batch.tokens.dim(1) != cfg_.moe.d_model) {
        throw ShapeError("batch tokens must be [n, " + std::to_string(cfg_.moe.d_model) + "], got " +
                         shape_to_string(batch.tokens.shape()));
    }
    if (batch.positions.size() != batch.size() || batch.tokens.dim(0) != batch.size()) {
        throw ShapeError("batch positions, labels and tokens disagree in length");
    }
    if (replay != nullptr && replay->size() != blocks_.size()) {
        throw ShapeError("replay state must hold one entry per layer");
    }

    ForwardResult out;
    Tensor h = batch.tokens;
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
        const Block& b = blocks_[l];
        h = ops::add(h, attention(h, b.attn, batch.positions, cfg_.rope));
        const moe::StreamKey key{cfg_.seed, stream_step, l};
        std::span<const moe::FrozenRouting> layer_replay;
        if (replay != nullptr) layer_replay = (*replay)[l];
        moe::LayerOutput mo = moe::layer_apply(h, b.moe, phase, key, options, layer_replay);
        h = ops::add(h, mo.outputs);
        out.decisions.push_back(std::move(mo.decisions));
        if (phase == moe::Phase::Train) out.frozen.push_back(std::move(mo.frozen));
        out.replay_mismatches += mo.replay_mismatches;
    }
    out.logits = ops::matmul(h, w_out_);
    out.loss = ops::cross_entropy(out.logits, batch.labels);
    return out;
}

}  // namespace dcmoe::harness
