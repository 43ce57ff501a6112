// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/rng.hpp"

namespace dcmoe {

std::size_t shape_numel(const Shape& shape) {
    if (shape.empty()) {
        throw ShapeError("tensor shape must have at least one dimension");
    }
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) {
            throw ShapeError("tensor dimensions must be positive, got " + shape_to_string(shape));
        }
        n *= d;
    }
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

const char* op_name(OpKind kind) noexcept {
    switch (kind) {
        case OpKind::Leaf: return "leaf";
        case OpKind::Constant: return "constant";
        case OpKind::MatMul: return "matmul";
        case OpKind::MatVec: return "matvec";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::Scale: return "scale";
        case OpKind::ScaleBy: return "scale_by";
        case OpKind::Sum: return "sum";
        case OpKind::Dot: return "dot";
        case OpKind::Softmax: return "softmax";
        case OpKind::SoftmaxRows: return "softmax_rows";
        case OpKind::Silu: return "silu";
        case OpKind::StopGradient: return "stop_gradient";
        case OpKind::Transpose: return "transpose";
        case OpKind::Row: return "row";
        case OpKind::Element: return "element";
        case OpKind::StackRows: return "stack_rows";
        case OpKind::CrossEntropy: return "cross_entropy";
        case OpKind::Rotary: return "rotary";
    }
    return "?";
}

bool all_finite(std::span<const double> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

namespace {

struct InitFiller {
    std::vector<double>& out;

    void operator()(const init::Zeros&) const { std::fill(out.begin(), out.end(), 0.0); }
    void operator()(const init::Constant& c) const { std::fill(out.begin(), out.end(), c.value); }
    void operator()(const init::SeededNormal& n) const {
        if (!(n.stddev >= 0.0) || !std::isfinite(n.stddev)) {
            throw ConfigError("seeded-normal stddev must be finite and non-negative");
        }
        SplitMix64 rng(n.seed);
        for (double& v : out) {
            v = n.stddev * rng.normal();
        }
    }
};

const detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
    if (!node) {
        throw GradientError("use of an undefined tensor");
    }
    return *node;
}

}  // namespace

Tensor Tensor::create(const Shape& shape, const Init& how) {
    auto node = std::make_shared<detail::Node>();
    node->shape = shape;
    node->data.resize(shape_numel(shape));
    std::visit(InitFiller{node->data}, how);
    if (!all_finite(node->data)) {
        throw NumericError("initializer produced non-finite values");
    }
    return Tensor(std::move(node));
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("shape " + shape_to_string(shape) + " does not match " + std::to_string(values.size()) +
                         " values");
    }
    if (!all_finite(values)) {
        throw NumericError("tensor data contains NaN or Inf");
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = shape;
    node->data = std::move(values);
    return Tensor(std::move(node));
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return from({n}, std::move(values));
}

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const Shape& s = shape();
    if (axis >= s.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(s));
    }
    return s[axis];
}

detail::Node::~Node() {
    std::vector<std::shared_ptr<Node>> pending = std::move(inputs);
    // Closures hold handles to the same inputs; dropping them now only lowers
    // counts because `pending` still owns every input.
    backward = nullptr;
    while (!pending.empty()) {
        std::shared_ptr<Node> n = std::move(pending.back());
        pending.pop_back();
        if (n.use_count() == 1) {
            for (auto& in : n->inputs) pending.push_back(std::move(in));
            n->inputs.clear();
            n->backward = nullptr;
        }
    }
}

std::span<const double> Tensor::data() const& { return checked(node_).data; }

std::span<double> Tensor::mutable_data() {
    checked(node_);
    if (node_->op != OpKind::Leaf) {
        throw GradientError("only leaf tensors may be modified in place");
    }
    return node_->data;
}

std::vector<double> Tensor::to_vector() const {
    auto d = data();
    return {d.begin(), d.end()};
}

double Tensor::item() const {
    auto d = data();
    if (d.size() != 1) {
        throw ShapeError("item() requires a single-element tensor, got " + shape_to_string(shape()));
    }
    return d[0];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
    checked(node_);
    if (node_->op != OpKind::Leaf) {
        throw GradientError("requires_grad can only be set on leaf tensors");
    }
    node_->requires_grad = on;
    return *this;
}

bool Tensor::is_leaf() const { return checked(node_).op == OpKind::Leaf; }

OpKind Tensor::op() const { return checked(node_).op; }

std::size_t Tensor::num_inputs() const { return checked(node_).inputs.size(); }

bool Tensor::has_grad() const { return checked(node_).grad.has_value(); }

Tensor Tensor::grad() const {
    const auto& n = checked(node_);
    if (!n.grad) {
        return zeros(n.shape);
    }
    return from(n.shape, *n.grad);
}

void Tensor::zero_grad() const {
    checked(node_);
    node_->grad.reset();
}

Tensor Tensor::clone() const {
    const auto& n = checked(node_);
    return from(n.shape, n.data);
}

Tensor make_op(OpKind kind, Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
               detail::BackwardFn backward) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError(std::string(op_name(kind)) + ": result size does not match shape");
    }
    if (!all_finite(values)) {
        throw NumericError(std::string(op_name(kind)) + " produced a non-finite value");
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    node->op = kind;
    bool any = false;
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) {
        node->inputs.push_back(t.node());
        any = any || checked(t.node()).requires_grad;
    }
    if (any && backward) {
        node->requires_grad = true;
        node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
    const auto& root = checked(loss.node());
    if (root.data.size() != 1) {
        throw GradientError("backward() needs a scalar loss, got shape " + shape_to_string(root.shape));
    }
    if (!root.requires_grad) {
        throw GradientError("loss is not connected to any tensor that requires a gradient");
    }

    // Iterative post-order DFS over the differentiable subgraph.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            detail::Node* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) {
                stack.emplace_back(child, 0);
            }
            continue;
        }
        order.push_back(node);
        stack.pop_back();
    }

    for (detail::Node* n : order) {
        if (n->op == OpKind::Leaf && n->grad) {
            throw GradientError("a leaf still holds a gradient from a previous backward(); call zero_grad() first");
        }
    }

    for (detail::Node* n : order) {
        if (n->op != OpKind::Leaf) {
            n->grad.reset();
        }
    }
    loss.node()->grad = std::vector<double>(1, 1.0);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->op == OpKind::Leaf || !n->grad) {
            continue;
        }
        detail::GradBuffers buffers;
        buffers.reserve(n->inputs.size());
        for (auto& in : n->inputs) {
            if (in->requires_grad) {
                if (!in->grad) {
                    in->grad = std::vector<double>(in->data.size(), 0.0);
                }
                buffers.push_back(&*in->grad);
            } else {
                buffers.push_back(nullptr);
            }
        }
        n->backward(*n->grad, buffers);
        n->grad.reset();
    }
}

void zero_grad(std::span<const Tensor> params) {
    for (const Tensor& p : params) {
        p.zero_grad();
    }
}

}  // namespace dcmoe
