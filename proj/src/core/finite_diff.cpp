// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/core/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "dcmoe/core/errors.hpp"

namespace dcmoe {

namespace {
double scalar_of(const Tensor& t) {
    if (t.numel() != 1) {
        throw GradientError("finite differences need a scalar-valued function, got " + shape_to_string(t.shape()));
    }
    return t.item();
}
}  // namespace

Tensor finite_diff_grad(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
    if (!(eps > 0.0)) {
        throw ConfigError("finite difference step must be positive");
    }
    std::vector<double> base = x.to_vector();
    std::vector<double> grad(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> plus = base;
        std::vector<double> minus = base;
        plus[i] += eps;
        minus[i] -= eps;
        const double fp = scalar_of(f(Tensor::from(x.shape(), std::move(plus))));
        const double fm = scalar_of(f(Tensor::from(x.shape(), std::move(minus))));
        grad[i] = (fp - fm) / (2.0 * eps);
    }
    return Tensor::from(x.shape(), std::move(grad));
}

Tensor finite_diff_param(const std::function<double()>& loss, Tensor& param, double eps) {
    if (!(eps > 0.0)) {
        throw ConfigError("finite difference step must be positive");
    }
    auto data = param.mutable_data();
    std::vector<double> grad(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double saved = data[i];
        data[i] = saved + eps;
        const double fp = loss();
        data[i] = saved - eps;
        const double fm = loss();
        data[i] = saved;
        grad[i] = (fp - fm) / (2.0 * eps);
    }
    return Tensor::from(param.shape(), std::move(grad));
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
    if (a.size() != b.size()) {
        throw ShapeError("max_relative_error: size mismatch");
    }
    double diff = 0.0, scale = floor;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    }
    return diff / scale;
}

double max_abs_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("max_abs_error: size mismatch");
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    return diff;
}

}  // namespace dcmoe
