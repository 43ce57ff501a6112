// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dcmoe {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

enum class OpKind {
    Leaf,
    Constant,
    MatMul,
    MatVec,
    Add,
    Sub,
    Mul,
    Scale,
    ScaleBy,
    Sum,
    Dot,
    Softmax,
    SoftmaxRows,
    Silu,
    StopGradient,
    Transpose,
    Row,
    Element,
    StackRows,
    CrossEntropy,
    Rotary,
};

const char* op_name(OpKind kind) noexcept;

namespace init {
struct Zeros {};
struct Constant {
    double value;
};
/// Normal(0, stddev^2) entries drawn in row-major order from SplitMix64(seed).
struct SeededNormal {
    std::uint64_t seed;
    double stddev;
};
}  // namespace init

using Init = std::variant<init::Zeros, init::Constant, init::SeededNormal>;

namespace detail {

/// Per-input gradient buffers handed to a backward closure; null where the
/// input does not require a gradient.
using GradBuffers = std::vector<std::vector<double>*>;
using BackwardFn = std::function<void(std::span<const double> out_grad, const GradBuffers& in_grads)>;

struct Node {
    Shape shape;
    std::vector<double> data;
    std::optional<std::vector<double>> grad;
    bool requires_grad = false;
    OpKind op = OpKind::Leaf;
    std::vector<std::shared_ptr<Node>> inputs;
    BackwardFn backward;

    /// Releases the upstream graph iteratively so long chains cannot exhaust
    /// the stack.
    ~Node();
};

}  // namespace detail

/// Dense row-major float64 array, optionally recorded on the reverse-mode tape.
///
/// Tensors are cheap handles: copies share the underlying node. Every op result
/// is checked for NaN/Inf and raises NumericError instead of propagating them.
class Tensor {
  public:
    Tensor() = default;

    static Tensor create(const Shape& shape, const Init& how);
    static Tensor zeros(const Shape& shape) { return create(shape, init::Zeros{}); }
    static Tensor full(const Shape& shape, double value) { return create(shape, init::Constant{value}); }
    static Tensor randn(const Shape& shape, std::uint64_t seed, double stddev) {
        return create(shape, init::SeededNormal{seed, stddev});
    }
    static Tensor from(const Shape& shape, std::vector<double> values);
    static Tensor vector(std::vector<double> values);
    static Tensor scalar(double value) { return from({1}, {value}); }

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const { return data().size(); }

    /// View into this handle's storage. Not available on temporaries, whose
    /// storage may die with them; bind the tensor to a name first.
    std::span<const double> data() const&;
    std::span<const double> data() const&& = delete;
    /// Writable view for in-place parameter updates. Only leaves may be mutated.
    std::span<double> mutable_data();
    std::vector<double> to_vector() const;
    double item() const;
    double operator[](std::size_t i) const { return data()[i]; }

    bool requires_grad() const;
    /// Marks a leaf as a trainable parameter. Throws GradientError on non-leaves.
    Tensor& set_requires_grad(bool on = true);
    bool is_leaf() const;
    OpKind op() const;
    std::size_t num_inputs() const;

    bool has_grad() const;
    /// Accumulated gradient; zeros if none was written.
    Tensor grad() const;
    void zero_grad() const;

    /// Detached copy of the current value, off the tape.
    Tensor clone() const;

    const std::shared_ptr<detail::Node>& node() const { return node_; }

  private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    friend Tensor make_op(OpKind, Shape, std::vector<double>, std::vector<Tensor>, detail::BackwardFn);

    std::shared_ptr<detail::Node> node_;
};

/// Builds an op result. Validates finiteness; records the backward closure only
/// when at least one input requires a gradient.
Tensor make_op(OpKind kind, Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                      detail::BackwardFn backward);

/// Reverse-mode sweep from a scalar loss. Every reachable leaf with
/// requires_grad receives d(loss)/d(leaf).
///
/// Gradients are not accumulated across calls: if any reachable leaf still holds
/// a gradient from an earlier sweep, GradientError is raised. Reset with
/// zero_grad() between steps.
void backward(const Tensor& loss);

void zero_grad(std::span<const Tensor> params);

bool all_finite(std::span<const double> values) noexcept;

}  // namespace dcmoe
