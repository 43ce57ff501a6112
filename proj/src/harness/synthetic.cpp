// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/harness/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/rng.hpp"

namespace dcmoe::harness {

namespace {

constexpr std::uint64_t kTaskStream = 0x7461736b;   // "task"
constexpr std::uint64_t kBatchStream = 0x62617463;  // "batc"

// Modified Gram-Schmidt over `count` random directions in R^d.
std::vector<std::vector<double>> random_orthonormal(std::size_t d, std::size_t count, Rng& rng) {
    std::vector<std::vector<double>> out;
    while (out.size() < count) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        for (const auto& u : out) {
            double proj = 0.0;
            for (std::size_t i = 0; i < d; ++i) proj += u[i] * v[i];
            for (std::size_t i = 0; i < d; ++i) v[i] -= proj * u[i];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue;  // degenerate draw, try again
        for (auto& x : v) x /= norm;
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

std::size_t SyntheticTask::default_latent_dim(std::size_t d_model) noexcept {
    return std::max<std::size_t>(1, std::min<std::size_t>(4, d_model / kModalityCount));
}

SyntheticTask SyntheticTask::make(std::size_t d_model, std::size_t n_classes, std::uint64_t seed) {
    const std::size_t r = default_latent_dim(d_model);
    if (kModalityCount * r > d_model) {
        throw ConfigError("d_model " + std::to_string(d_model) + " is too small for " +
                          std::to_string(kModalityCount) + " planted subspaces");
    }
    if (n_classes < 2) {
        throw ConfigError("a synthetic task needs at least two classes");
    }
    SyntheticTask task;
    task.d_model = d_model;
    task.latent_dim = r;
    task.n_classes = n_classes;

    Rng rng = Rng::stream(seed, {kTaskStream});
    const auto dirs = random_orthonormal(d_model, kModalityCount * r, rng);
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        auto& q = task.basis[m];
        q.assign(d_model * r, 0.0);
        for (std::size_t j = 0; j < r; ++j) {
            for (std::size_t i = 0; i < d_model; ++i) q[i * r + j] = dirs[m * r + j][i];
        }
        auto& a = task.readout[m];
        a.resize(n_classes * r);
        for (auto& x : a) x = rng.normal();
    }
    return task;
}

std::vector<double> SyntheticTask::linear_probe() const {
    std::vector<double> w(n_classes * d_model, 0.0);
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        for (std::size_t c = 0; c < n_classes; ++c) {
            for (std::size_t i = 0; i < d_model; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < latent_dim; ++j) {
                    acc += readout[m][c * latent_dim + j] * basis[m][i * latent_dim + j];
                }
                w[c * d_model + i] += acc;
            }
        }
    }
    return w;
}

SyntheticBatch generate_batch(const SyntheticTask& task, std::span<const rope::Segment> segments, std::int64_t theta,
                              double noise, std::uint64_t seed) {
    if (!(noise >= 0.0) || !std::isfinite(noise)) {
        throw ConfigError("noise must be finite and non-negative");
    }
    const auto positions = rope::assign_sequence(segments, theta);
    if (positions.empty()) {
        throw ConfigError("segment list produces no tokens");
    }
    const std::size_t n = positions.size();
    const std::size_t d = task.d_model;
    const std::size_t r = task.latent_dim;

    SyntheticBatch batch;
    std::vector<double> values(n * d, 0.0);
    Rng rng = Rng::stream(seed, {kBatchStream});
    std::vector<double> s(r);
    for (std::size_t t = 0; t < n; ++t) {
        const auto m = static_cast<std::size_t>(positions[t].modality);
        for (auto& x : s) x = rng.normal();
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < r; ++j) acc += task.basis[m][i * r + j] * s[j];
            values[t * d + i] = acc + noise * rng.normal();
        }
        std::size_t label = 0;
        double best = -INFINITY;
        for (std::size_t c = 0; c < task.n_classes; ++c) {
            double score = 0.0;
            for (std::size_t j = 0; j < r; ++j) score += task.readout[m][c * r + j] * s[j];
            if (score > best) {
                best = score;
                label = c;
            }
        }
        batch.modalities.push_back(positions[t].modality);
        batch.positions.push_back(positions[t].id);
        batch.padding.push_back(positions[t].padding);
        batch.labels.push_back(label);
    }
    batch.tokens = Tensor::from({n, d}, std::move(values));
    return batch;
}

}  // namespace dcmoe::harness
