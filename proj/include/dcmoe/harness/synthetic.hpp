// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dcmoe/core/tensor.hpp"
#include "dcmoe/rope/positions.hpp"

namespace dcmoe::harness {

inline constexpr std::size_t kModalityCount = 4;

/// Planted-signal classification task. Modality m owns an orthonormal
/// subspace Q_m (mutually orthogonal across modalities) and a readout A_m.
/// A token draws a latent s ~ N(0, I_r), is embedded as Q_m s + noise * eps,
/// and is labelled argmax(A_m s).
struct SyntheticTask {
    std::size_t d_model = 0;
    std::size_t latent_dim = 0;
    std::size_t n_classes = 0;
    std::array<std::vector<double>, kModalityCount> basis;    // Q_m, [d_model, r] row-major
    std::array<std::vector<double>, kModalityCount> readout;  // A_m, [n_classes, r] row-major

    /// Throws ConfigError when the subspaces do not fit in d_model.
    static SyntheticTask make(std::size_t d_model, std::size_t n_classes, std::uint64_t seed);

    /// min(4, d_model / 4), at least 1.
    static std::size_t default_latent_dim(std::size_t d_model) noexcept;

    /// The zero-noise linear probe sum_m A_m Q_m^T, [n_classes, d_model].
    std::vector<double> linear_probe() const;
};

struct SyntheticBatch {
    Tensor tokens;  // [n, d_model], constant
    std::vector<rope::Modality> modalities;
    std::vector<rope::PositionId> positions;
    std::vector<bool> padding;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

/// Positions come from assign_sequence(segments, theta); the content of every
/// token is drawn from its modality's planted subspace.
SyntheticBatch generate_batch(const SyntheticTask& task, std::span<const rope::Segment> segments, std::int64_t theta,
                              double noise, std::uint64_t seed);

}  // namespace dcmoe::harness
