// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>

#include "dcmoe/core/tensor.hpp"

namespace dcmoe {

/// Central-difference gradient of a scalar function:
/// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every coordinate i.
/// f receives a fresh constant tensor per evaluation and must return a scalar.
Tensor finite_diff_grad(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps);

/// Central differences with respect to a leaf parameter, perturbed in place and
/// restored afterwards. `loss` re-evaluates the full objective.
Tensor finite_diff_param(const std::function<double()>& loss, Tensor& param, double eps);

/// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|, floor).
/// Normalizing by the block's largest magnitude keeps near-zero entries from
/// dominating the comparison.
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

double max_abs_error(std::span<const double> a, std::span<const double> b);

}  // namespace dcmoe
