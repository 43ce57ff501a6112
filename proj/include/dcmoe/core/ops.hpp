// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "dcmoe/core/tensor.hpp"

/// Differentiable tensor operations. All functions record a tape node when any
/// operand requires a gradient and raise ShapeError on incompatible operands.
namespace dcmoe::ops {

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// [m,k] x [k] -> [m]
Tensor matvec(const Tensor& a, const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
/// a * s for a single-element tensor s (the only broadcast supported).
Tensor scale_by(const Tensor& a, const Tensor& s);

Tensor sum(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);

/// Numerically stable softmax of a rank-1 tensor (max-subtracted).
Tensor softmax(const Tensor& x);
/// Softmax over the last axis of a rank-2 tensor.
Tensor softmax_rows(const Tensor& x);

/// Sigmoid-weighted linear unit u * sigmoid(u).
Tensor silu(const Tensor& x);

/// Same value as x; contributes no gradient to x.
Tensor stop_gradient(const Tensor& x);

Tensor transpose(const Tensor& a);
/// Row i of a rank-2 tensor as a rank-1 tensor.
Tensor row(const Tensor& a, std::size_t i);
/// Single element of a rank-1 tensor as a [1] tensor.
Tensor element(const Tensor& a, std::size_t i);
/// Stacks equally-sized rank-1 tensors into [rows.size(), n].
Tensor stack_rows(std::span<const Tensor> rows);

/// Mean cross-entropy of row-wise logits [m,c] against class labels.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

}  // namespace dcmoe::ops
