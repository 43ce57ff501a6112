// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcmoe/core/errors.hpp"

namespace dcmoe::ops {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_to_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    }
}

void require_finite_input(const Tensor& t, const char* op) {
    if (!all_finite(t.data())) {
        throw NumericError(std::string(op) + ": non-finite input");
    }
}

double sigmoid(double u) {
    if (u >= 0.0) {
        return 1.0 / (1.0 + std::exp(-u));
    }
    const double e = std::exp(u);
    return e / (1.0 + e);
}

void softmax_inplace(std::span<const double> in, std::span<double> out) {
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = std::exp(in[i] - mx);
        total += out[i];
    }
    for (double& v : out) {
        v /= total;
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul: inner dimensions differ " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
    }
    auto A = a.data();
    auto B = b.data();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) {
                out[i * n + j] += aip * B[p * n + j];
            }
        }
    }
    return make_op(OpKind::MatMul, {m, n}, std::move(out), {a, b},
                   [a, b, m, k, n](std::span<const double> g, const detail::GradBuffers& in) {
                       auto A = a.data();
                       auto B = b.data();
                       if (in[0]) {
                           auto& ga = *in[0];
                           for (std::size_t i = 0; i < m; ++i) {
                               for (std::size_t p = 0; p < k; ++p) {
                                   double acc = 0.0;
                                   for (std::size_t j = 0; j < n; ++j) {
                                       acc += g[i * n + j] * B[p * n + j];
                                   }
                                   ga[i * k + p] += acc;
                               }
                           }
                       }
                       if (in[1]) {
                           auto& gb = *in[1];
                           for (std::size_t i = 0; i < m; ++i) {
                               for (std::size_t p = 0; p < k; ++p) {
                                   const double aip = A[i * k + p];
                                   for (std::size_t j = 0; j < n; ++j) {
                                       gb[p * n + j] += aip * g[i * n + j];
                                   }
                               }
                           }
                       }
                   });
}

Tensor matvec(const Tensor& a, const Tensor& x) {
    require_rank(a, 2, "matvec");
    require_rank(x, 1, "matvec");
    const std::size_t m = a.dim(0), k = a.dim(1);
    if (x.dim(0) != k) {
        throw ShapeError("matvec: inner dimensions differ " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(x.shape()));
    }
    auto A = a.data();
    auto X = x.data();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            acc += A[i * k + p] * X[p];
        }
        out[i] = acc;
    }
    return make_op(OpKind::MatVec, {m}, std::move(out), {a, x},
                   [a, x, m, k](std::span<const double> g, const detail::GradBuffers& in) {
                       auto A = a.data();
                       auto X = x.data();
                       if (in[0]) {
                           auto& ga = *in[0];
                           for (std::size_t i = 0; i < m; ++i) {
                               for (std::size_t p = 0; p < k; ++p) {
                                   ga[i * k + p] += g[i] * X[p];
                               }
                           }
                       }
                       if (in[1]) {
                           auto& gx = *in[1];
                           for (std::size_t i = 0; i < m; ++i) {
                               for (std::size_t p = 0; p < k; ++p) {
                                   gx[p] += A[i * k + p] * g[i];
                               }
                           }
                       }
                   });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    auto A = a.data();
    auto B = b.data();
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = A[i] + B[i];
    }
    return make_op(OpKind::Add, a.shape(), std::move(out), {a, b},
                   [](std::span<const double> g, const detail::GradBuffers& in) {
                       for (auto* buf : in) {
                           if (buf) {
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   (*buf)[i] += g[i];
                               }
                           }
                       }
                   });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    auto A = a.data();
    auto B = b.data();
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = A[i] - B[i];
    }
    return make_op(OpKind::Sub, a.shape(), std::move(out), {a, b},
                   [](std::span<const double> g, const detail::GradBuffers& in) {
                       for (std::size_t i = 0; i < g.size(); ++i) {
                           if (in[0]) (*in[0])[i] += g[i];
                           if (in[1]) (*in[1])[i] -= g[i];
                       }
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    auto A = a.data();
    auto B = b.data();
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = A[i] * B[i];
    }
    return make_op(OpKind::Mul, a.shape(), std::move(out), {a, b},
                   [a, b](std::span<const double> g, const detail::GradBuffers& in) {
                       auto A = a.data();
                       auto B = b.data();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                           if (in[0]) (*in[0])[i] += g[i] * B[i];
                           if (in[1]) (*in[1])[i] += g[i] * A[i];
                       }
                   });
}

Tensor scale(const Tensor& a, double c) {
    if (!std::isfinite(c)) {
        throw NumericError("scale: non-finite factor");
    }
    auto A = a.data();
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = c * A[i];
    }
    return make_op(OpKind::Scale, a.shape(), std::move(out), {a},
                   [c](std::span<const double> g, const detail::GradBuffers& in) {
                       for (std::size_t i = 0; i < g.size(); ++i) {
                           (*in[0])[i] += c * g[i];
                       }
                   });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
    if (s.numel() != 1) {
        throw ShapeError("scale_by: factor must have a single element, got " + shape_to_string(s.shape()));
    }
    const double c = s.item();
    auto A = a.data();
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = c * A[i];
    }
    return make_op(OpKind::ScaleBy, a.shape(), std::move(out), {a, s},
                   [a, c](std::span<const double> g, const detail::GradBuffers& in) {
                       auto A = a.data();
                       double acc = 0.0;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                           if (in[0]) (*in[0])[i] += c * g[i];
                           acc += g[i] * A[i];
                       }
                       if (in[1]) (*in[1])[0] += acc;
                   });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.data()) {
        total += v;
    }
    return make_op(OpKind::Sum, {1}, {total}, {a}, [](std::span<const double> g, const detail::GradBuffers& in) {
        for (double& v : *in[0]) {
            v += g[0];
        }
    });
}

Tensor dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    auto A = a.data();
    auto B = b.data();
    double total = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
        total += A[i] * B[i];
    }
    return make_op(OpKind::Dot, {1}, {total}, {a, b},
                   [a, b](std::span<const double> g, const detail::GradBuffers& in) {
                       auto A = a.data();
                       auto B = b.data();
                       for (std::size_t i = 0; i < A.size(); ++i) {
                           if (in[0]) (*in[0])[i] += g[0] * B[i];
                           if (in[1]) (*in[1])[i] += g[0] * A[i];
                       }
                   });
}

Tensor softmax(const Tensor& x) {
    require_rank(x, 1, "softmax");
    require_finite_input(x, "softmax");
    std::vector<double> out(x.numel());
    softmax_inplace(x.data(), out);
    auto p = std::make_shared<std::vector<double>>(out);
    return make_op(OpKind::Softmax, x.shape(), std::move(out), {x},
                   [p](std::span<const double> g, const detail::GradBuffers& in) {
                       double inner = 0.0;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                           inner += g[i] * (*p)[i];
                       }
                       for (std::size_t i = 0; i < g.size(); ++i) {
                           (*in[0])[i] += (*p)[i] * (g[i] - inner);
                       }
                   });
}

Tensor softmax_rows(const Tensor& x) {
    require_rank(x, 2, "softmax_rows");
    require_finite_input(x, "softmax_rows");
    const std::size_t m = x.dim(0), n = x.dim(1);
    std::vector<double> out(m * n);
    auto X = x.data();
    for (std::size_t r = 0; r < m; ++r) {
        softmax_inplace(X.subspan(r * n, n), std::span<double>(out).subspan(r * n, n));
    }
    auto p = std::make_shared<std::vector<double>>(out);
    return make_op(OpKind::SoftmaxRows, x.shape(), std::move(out), {x},
                   [p, m, n](std::span<const double> g, const detail::GradBuffers& in) {
                       for (std::size_t r = 0; r < m; ++r) {
                           double inner = 0.0;
                           for (std::size_t j = 0; j < n; ++j) {
                               inner += g[r * n + j] * (*p)[r * n + j];
                           }
                           for (std::size_t j = 0; j < n; ++j) {
                               (*in[0])[r * n + j] += (*p)[r * n + j] * (g[r * n + j] - inner);
                           }
                       }
                   });
}

Tensor silu(const Tensor& x) {
    require_finite_input(x, "silu");
    auto X = x.data();
    std::vector<double> out(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        out[i] = X[i] * sigmoid(X[i]);
    }
    return make_op(OpKind::Silu, x.shape(), std::move(out), {x},
                   [x](std::span<const double> g, const detail::GradBuffers& in) {
                       auto X = x.data();
                       for (std::size_t i = 0; i < X.size(); ++i) {
                           const double s = sigmoid(X[i]);
                           (*in[0])[i] += g[i] * s * (1.0 + X[i] * (1.0 - s));
                       }
                   });
}

Tensor stop_gradient(const Tensor& x) {
    auto d = x.data();
    // No backward closure: the node is recorded but never propagates to x.
    return make_op(OpKind::StopGradient, x.shape(), std::vector<double>(d.begin(), d.end()), {x}, nullptr);
}

Tensor transpose(const Tensor& a) {
    require_rank(a, 2, "transpose");
    const std::size_t m = a.dim(0), n = a.dim(1);
    auto A = a.data();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[j * m + i] = A[i * n + j];
        }
    }
    return make_op(OpKind::Transpose, {n, m}, std::move(out), {a},
                   [m, n](std::span<const double> g, const detail::GradBuffers& in) {
                       for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t j = 0; j < n; ++j) {
                               (*in[0])[i * n + j] += g[j * m + i];
                           }
                       }
                   });
}

Tensor row(const Tensor& a, std::size_t i) {
    require_rank(a, 2, "row");
    const std::size_t m = a.dim(0), n = a.dim(1);
    if (i >= m) {
        throw ShapeError("row: index " + std::to_string(i) + " out of range for " + shape_to_string(a.shape()));
    }
    auto A = a.data().subspan(i * n, n);
    return make_op(OpKind::Row, {n}, std::vector<double>(A.begin(), A.end()), {a},
                   [i, n](std::span<const double> g, const detail::GradBuffers& in) {
                       for (std::size_t j = 0; j < n; ++j) {
                           (*in[0])[i * n + j] += g[j];
                       }
                   });
}

Tensor element(const Tensor& a, std::size_t i) {
    require_rank(a, 1, "element");
    if (i >= a.numel()) {
        throw ShapeError("element: index " + std::to_string(i) + " out of range for " + shape_to_string(a.shape()));
    }
    return make_op(OpKind::Element, {1}, {a[i]}, {a},
                   [i](std::span<const double> g, const detail::GradBuffers& in) { (*in[0])[i] += g[0]; });
}

Tensor stack_rows(std::span<const Tensor> rows) {
    if (rows.empty()) {
        throw ShapeError("stack_rows: no rows");
    }
    const std::size_t n = rows.front().numel();
    std::vector<double> out;
    out.reserve(rows.size() * n);
    std::vector<Tensor> inputs;
    inputs.reserve(rows.size());
    for (const Tensor& r : rows) {
        require_rank(r, 1, "stack_rows");
        if (r.numel() != n) {
            throw ShapeError("stack_rows: rows differ in length");
        }
        auto d = r.data();
        out.insert(out.end(), d.begin(), d.end());
        inputs.push_back(r);
    }
    return make_op(OpKind::StackRows, {rows.size(), n}, std::move(out), std::move(inputs),
                   [n](std::span<const double> g, const detail::GradBuffers& in) {
                       for (std::size_t r = 0; r < in.size(); ++r) {
                           if (!in[r]) continue;
                           for (std::size_t j = 0; j < n; ++j) {
                               (*in[r])[j] += g[r * n + j];
                           }
                       }
                   });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
    require_rank(logits, 2, "cross_entropy");
    require_finite_input(logits, "cross_entropy");
    const std::size_t m = logits.dim(0), c = logits.dim(1);
    if (labels.size() != m) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(m) +
                         " rows");
    }
    auto L = logits.data();
    auto probs = std::make_shared<std::vector<double>>(m * c);
    double total = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        if (labels[r] >= c) {
            throw ShapeError("cross_entropy: label out of range");
        }
        auto row_in = L.subspan(r * c, c);
        const double mx = *std::max_element(row_in.begin(), row_in.end());
        double z = 0.0;
        for (double v : row_in) {
            z += std::exp(v - mx);
        }
        const double log_z = mx + std::log(z);
        total += log_z - row_in[labels[r]];
        for (std::size_t j = 0; j < c; ++j) {
            (*probs)[r * c + j] = std::exp(row_in[j] - log_z);
        }
    }
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    return make_op(OpKind::CrossEntropy, {1}, {total / static_cast<double>(m)}, {logits},
                   [probs, lab, m, c](std::span<const double> g, const detail::GradBuffers& in) {
                       const double w = g[0] / static_cast<double>(m);
                       for (std::size_t r = 0; r < m; ++r) {
                           for (std::size_t j = 0; j < c; ++j) {
                               const double target = (j == lab[r]) ? 1.0 : 0.0;
                               (*in[0])[r * c + j] += w * ((*probs)[r * c + j] - target);
                           }
                       }
                   });
}

}  // namespace dcmoe::ops
