// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>

namespace dcmoe {

/// SplitMix64 generator (Steele, Lea & Flood, 2014).
///
/// State advances by the Weyl increment 0x9E3779B97F4A7C15 and each output is the
/// state passed through the MurmurHash3-style finalizer with shifts 30/27/31.
/// Uniforms and normals are derived here rather than through <random>
/// distributions, so a seed yields identical bits on every standard library.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    /// Independent stream keyed by a base seed and a tuple of stream ids
    /// (e.g. {step, layer, token}). Each id is folded in through the finalizer.
    static SplitMix64 stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform() noexcept;

    /// Standard normal via the cosine branch of Box-Muller (two uniforms per draw).
    double normal() noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

    std::uint64_t state() const noexcept { return state_; }

  private:
    std::uint64_t state_;
};

using Rng = SplitMix64;

/// The SplitMix64 output finalizer, exposed for hashing seeds.
std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace dcmoe
