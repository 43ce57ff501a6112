// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dcmoe/harness/config.hpp"

namespace dcmoe::harness {

struct BlockCheck {
    std::string name;
    std::size_t coordinates = 0;
    /// Coordinates whose routing changed under +-eps; not compared.
    std::size_t skipped = 0;
    double rel_error = 0.0;
    double max_abs_grad = 0.0;
    bool passed = false;
};

struct UnbiasednessCheck {
    std::size_t n_routed = 0;
    std::uint64_t seed = 0;
    double max_abs_error = 0.0;
    bool passed = false;
};

struct GradCheckReport {
    double eps = 0.0;
    double tol = 0.0;
    double unbiased_tol = 0.0;
    std::vector<BlockCheck> blocks;
    std::vector<UnbiasednessCheck> unbiasedness;

    bool blocks_passed() const;
    bool unbiasedness_passed() const;
    bool passed() const { return blocks_passed() && unbiasedness_passed(); }
    std::vector<std::string> failing_blocks() const;
};

struct GradCheckOptions {
    double eps = 1e-6;
    double tol = 1e-4;
    double unbiased_tol = 1e-10;
    std::vector<std::size_t> unbiased_n_routed{2, 3, 4};
    std::size_t unbiased_seeds = 20;
    std::size_t unbiased_d_model = 8;
};

/// (a) Runs one train forward, freezes its routing together with the detached
/// offsets and compares the analytic gradient of every parameter block with
/// central differences under that frozen routing. Coordinates where
/// a fresh selection would differ are skipped and counted.
/// (b) Checks the closed-form Top-1 objective with linear f: the enumerated
/// estimator expectation must equal the exact gradient.
GradCheckReport grad_check(const ToyModelConfig& cfg, const GradCheckOptions& options = {});

}  // namespace dcmoe::harness
