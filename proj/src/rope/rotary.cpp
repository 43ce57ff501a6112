// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/rope/rotary.hpp"

#include <cmath>
#include <vector>

#include "dcmoe/core/errors.hpp"

namespace dcmoe::rope {

RopeFreqConfig RopeFreqConfig::with_default_split(std::size_t head_dim, double base) {
    RopeFreqConfig cfg;
    cfg.head_dim = head_dim;
    cfg.base = base;
    cfg.d_h = 2 * (head_dim / 6);
    cfg.d_w = cfg.d_h;
    cfg.d_t = head_dim - cfg.d_h - cfg.d_w;
    cfg.validate();
    return cfg;
}

void RopeFreqConfig::validate() const {
    if (head_dim == 0 || head_dim % 2 != 0) {
        throw ConfigError("rotary head_dim must be even and positive");
    }
    if (d_t % 2 || d_h % 2 || d_w % 2) {
        throw ConfigError("rotary block widths must be even");
    }
    if (d_t + d_h + d_w != head_dim) {
        throw ConfigError("rotary block widths must sum to head_dim");
    }
    if (!(base > 0.0)) {
        throw ConfigError("rotary base must be positive");
    }
}

namespace {

/// Rotates `in` into `out` by +angle (sign = 1) or by -angle (sign = -1, the
/// transpose used in the backward pass).
void rotate(std::span<const double> in, std::span<double> out, const PositionId& id, const RopeFreqConfig& cfg,
            double sign) {
    const std::size_t widths[3] = {cfg.d_t, cfg.d_h, cfg.d_w};
    const std::int64_t positions[3] = {id.t, id.h, id.w};
    std::size_t offset = 0;
    for (int b = 0; b < 3; ++b) {
        const std::size_t width = widths[b];
        const double pos = static_cast<double>(positions[b]);
        for (std::size_t j = 0; j < width / 2; ++j) {
            const double inv_freq = std::pow(cfg.base, -2.0 * static_cast<double>(j) / static_cast<double>(width));
            const double angle = sign * pos * inv_freq;
            const double c = std::cos(angle), s = std::sin(angle);
            const std::size_t i0 = offset + 2 * j, i1 = i0 + 1;
            const double x0 = in[i0], x1 = in[i1];
            out[i0] = c * x0 - s * x1;
            out[i1] = s * x0 + c * x1;
        }
        offset += width;
    }
}

}  // namespace

Tensor apply_rope3d_rows(const Tensor& rows, std::span<const PositionId> ids, const RopeFreqConfig& cfg) {
    cfg.validate();
    if (rows.rank() != 2 || rows.dim(1) != cfg.head_dim) {
        throw ShapeError("rotary input must be [n, " + std::to_string(cfg.head_dim) + "], got " +
                         shape_to_string(rows.shape()));
    }
    const std::size_t n = rows.dim(0), d = cfg.head_dim;
    if (ids.size() != n) {
        throw ShapeError("rotary needs one position id per row");
    }
    std::vector<double> out(n * d);
    auto in = rows.data();
    for (std::size_t r = 0; r < n; ++r) {
        rotate(in.subspan(r * d, d), std::span<double>(out).subspan(r * d, d), ids[r], cfg, 1.0);
    }
    std::vector<PositionId> kept(ids.begin(), ids.end());
    return make_op(OpKind::Rotary, rows.shape(), std::move(out), {rows},
                   [kept, cfg, n, d](std::span<const double> g, const detail::GradBuffers& grads) {
                       std::vector<double> back(d);
                       for (std::size_t r = 0; r < n; ++r) {
                           rotate(g.subspan(r * d, d), back, kept[r], cfg, -1.0);
                           for (std::size_t j = 0; j < d; ++j) {
                               (*grads[0])[r * d + j] += back[j];
                           }
                       }
                   });
}

Tensor apply_rope3d(const Tensor& vec, const PositionId& id, const RopeFreqConfig& cfg) {
    cfg.validate();
    if (vec.rank() != 1 || vec.dim(0) != cfg.head_dim) {
        throw ShapeError("rotary input must be [" + std::to_string(cfg.head_dim) + "], got " +
                         shape_to_string(vec.shape()));
    }
    const std::size_t d = cfg.head_dim;
    std::vector<double> out(d);
    rotate(vec.data(), out, id, cfg, 1.0);
    return make_op(OpKind::Rotary, vec.shape(), std::move(out), {vec},
                   [id, cfg, d](std::span<const double> g, const detail::GradBuffers& grads) {
                       std::vector<double> back(d);
                       rotate(g, back, id, cfg, -1.0);
                       for (std::size_t j = 0; j < d; ++j) {
                           (*grads[0])[j] += back[j];
                       }
                   });
}

}  // namespace dcmoe::rope
