// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "lma/errors.hpp"

namespace lma {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // allocated on first backward / zero_grad
    std::vector<double> adj;  // scratch adjoint, valid only inside backward
    bool requires_grad = false;
};

} // namespace detail

/// Dense row-major tensor of 64-bit floats. Value-semantics handle over a
/// shared node so that recorded operations and the caller see one buffer.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false)
        : node_(std::make_shared<detail::TensorNode>()) {
        node_->shape = std::move(shape);
        node_->data.assign(numel(node_->shape), fill);
        node_->requires_grad = requires_grad;
    }

    static Tensor of(Shape shape, std::vector<double> values, bool requires_grad = false) {
        Tensor t;
        t.node_ = std::make_shared<detail::TensorNode>();
        if (numel(shape) != values.size())
            throw shape_error("tensor literal: shape " + shape_str(shape) + " needs " +
                              std::to_string(numel(shape)) + " values, got " +
                              std::to_string(values.size()));
        t.node_->shape = std::move(shape);
        t.node_->data = std::move(values);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return of({1}, {v}, requires_grad);
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->data.size(); }

    std::size_t rows() const { return node_->shape.size() == 2 ? node_->shape[0] : 1; }
    std::size_t cols() const {
        return node_->shape.size() == 2 ? node_->shape[1] : node_->data.size();
    }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) { node_->requires_grad = b; }

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }

    /// Gradient accumulator; same shape as data, lazily materialized as zeros.
    std::vector<double>& grad() {
        if (node_->grad.size() != node_->data.size())
            node_->grad.assign(node_->data.size(), 0.0);
        return node_->grad;
    }
    bool has_grad() const { return node_->grad.size() == node_->data.size(); }
    void zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

    double item() const {
        if (node_->data.size() != 1)
            throw contract_error("item(): tensor has " + std::to_string(node_->data.size()) +
                                 " elements, expected 1");
        return node_->data[0];
    }

    double& at(std::size_t i) { return node_->data[i]; }
    double at(std::size_t i) const { return node_->data[i]; }
    double& at(std::size_t r, std::size_t c) { return node_->data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

    const std::shared_ptr<detail::TensorNode>& node() const { return node_; }

    static std::size_t numel(const Shape& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

private:
    std::shared_ptr<detail::TensorNode> node_;
};

/// Recorded computation tape. Operations append themselves in execution
/// order; backward() replays them once, in reverse, propagating adjoints.
class Tape {
public:
    /// Register a node so its adjoint buffer is managed across backward().
    void track(const Tensor& t) {
        auto* raw = t.node().get();
        if (seen_.insert(raw).second) nodes_.push_back(t.node());
    }

    void record(std::function<void()> back) { ops_.push_back(std::move(back)); }

    std::size_t num_ops() const { return ops_.size(); }

    /// Reverse-mode sweep from a scalar loss. Every tracked tensor with
    /// requires_grad has the resulting adjoint added into its grad, so
    /// repeated calls accumulate.
    void backward(const Tensor& loss) {
        if (!loss.defined() || loss.size() != 1)
            throw contract_error("backward(): loss must be a scalar tensor");
        if (!seen_.count(loss.node().get()))
            throw contract_error("backward(): loss was not produced on this tape");
        for (auto& n : nodes_) n->adj.assign(n->data.size(), 0.0);
        loss.node()->adj[0] = 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
        for (auto& n : nodes_) {
            if (!n->requires_grad) continue;
            if (n->grad.size() != n->data.size()) n->grad.assign(n->data.size(), 0.0);
            for (std::size_t i = 0; i < n->adj.size(); ++i) n->grad[i] += n->adj[i];
        }
    }

    void clear() {
        ops_.clear();
        nodes_.clear();
        seen_.clear();
    }

private:
    std::vector<std::function<void()>> ops_;
    std::vector<std::shared_ptr<detail::TensorNode>> nodes_;
    std::unordered_set<const detail::TensorNode*> seen_;
};

namespace detail {

inline bool want_grad(const Tensor& t) { return t.requires_grad(); }

template <typename... Ts>
inline bool any_requires_grad(const Ts&... ts) {
    return (ts.requires_grad() || ...);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Core differentiable operations. `tape == nullptr` means pure evaluation.
// ---------------------------------------------------------------------------

/// Matrix product a[m x k] * b[k x n].
inline Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
        throw shape_error("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                          shape_str(b.shape()));
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor out({m, n}, 0.0, detail::any_requires_grad(a, b));
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    double* od = out.data().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ad[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) od[i * n + j] += av * bd[p * n + j];
        }
    if (tape && out.requires_grad()) {
        tape->track(a);
        tape->track(b);
        tape->track(out);
        auto an = a.node(), bn = b.node(), on = out.node();
        tape->record([an, bn, on, m, k, n] {
            const double* g = on->adj.data();
            const double* ad = an->data.data();
            const double* bd = bn->data.data();
            // a.adj += g * b^T
            double* aa = an->adj.data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bd[p * n + j];
                    aa[i * k + p] += acc;
                }
            // b.adj += a^T * g
            double* ba = bn->adj.data();
            for (std::size_t p = 0; p < k; ++p)
                for (std::size_t i = 0; i < m; ++i) {
                    const double av = ad[i * k + p];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) ba[p * n + j] += av * g[i * n + j];
                }
        });
    }
    return out;
}

/// Elementwise sum of two same-shape tensors.
inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw shape_error("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
    Tensor out(a.shape(), 0.0, detail::any_requires_grad(a, b));
    for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = a.at(i) + b.at(i);
    if (tape && out.requires_grad()) {
        tape->track(a);
        tape->track(b);
        tape->track(out);
        auto an = a.node(), bn = b.node(), on = out.node();
        tape->record([an, bn, on] {
            for (std::size_t i = 0; i < on->adj.size(); ++i) {
                an->adj[i] += on->adj[i];
                bn->adj[i] += on->adj[i];
            }
        });
    }
    return out;
}

/// Row-broadcast bias add: x[m x n] + bias[n].
inline Tensor add_rowvec(Tape* tape, const Tensor& x, const Tensor& bias) {
    if (x.shape().size() != 2 || bias.size() != x.shape()[1])
        throw shape_error("add_rowvec: " + shape_str(x.shape()) + " plus row " +
                          shape_str(bias.shape()));
    const std::size_t m = x.shape()[0], n = x.shape()[1];
    Tensor out({m, n}, 0.0, detail::any_requires_grad(x, bias));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = x.at(i, j) + bias.at(j);
    if (tape && out.requires_grad()) {
        tape->track(x);
        tape->track(bias);
        tape->track(out);
        auto xn = x.node(), bn = bias.node(), on = out.node();
        tape->record([xn, bn, on, m, n] {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    xn->adj[i * n + j] += on->adj[i * n + j];
                    bn->adj[j] += on->adj[i * n + j];
                }
        });
    }
    return out;
}

/// Elementwise (Hadamard) product.
inline Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw shape_error("mul: shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
    Tensor out(a.shape(), 0.0, detail::any_requires_grad(a, b));
    for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = a.at(i) * b.at(i);
    if (tape && out.requires_grad()) {
        tape->track(a);
        tape->track(b);
        tape->track(out);
        auto an = a.node(), bn = b.node(), on = out.node();
        tape->record([an, bn, on] {
            for (std::size_t i = 0; i < on->adj.size(); ++i) {
                an->adj[i] += on->adj[i] * bn->data[i];
                bn->adj[i] += on->adj[i] * an->data[i];
            }
        });
    }
    return out;
}

/// Multiply by a constant.
inline Tensor scale(Tape* tape, const Tensor& x, double c) {
    Tensor out(x.shape(), 0.0, x.requires_grad());
    for (std::size_t i = 0; i < x.size(); ++i) out.at(i) = c * x.at(i);
    if (tape && out.requires_grad()) {
        tape->track(x);
        tape->track(out);
        auto xn = x.node(), on = out.node();
        tape->record([xn, on, c] {
            for (std::size_t i = 0; i < on->adj.size(); ++i) xn->adj[i] += c * on->adj[i];
        });
    }
    return out;
}

/// Sum of all elements, as a scalar tensor.
inline Tensor sum(Tape* tape, const Tensor& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x.at(i);
    Tensor out = Tensor::scalar(acc, x.requires_grad());
    if (tape && out.requires_grad()) {
        tape->track(x);
        tape->track(out);
        auto xn = x.node(), on = out.node();
        tape->record([xn, on] {
            for (std::size_t i = 0; i < xn->adj.size(); ++i) xn->adj[i] += on->adj[0];
        });
    }
    return out;
}

namespace detail {

/// Row softmax of logits/tau, written into out (no autodiff).
inline void softmax_rows_into(const std::vector<double>& logits, std::size_t rows,
                              std::size_t cols, double tau, std::vector<double>& out) {
    out.resize(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = logits.data() + r * cols;
        double* o = out.data() + r * cols;
        double mx = in[0];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            o[c] = std::exp((in[c] - mx) / tau);
            z += o[c];
        }
        for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
    }
}

} // namespace detail

/// Copy cut loose from gradient tracking (targets, frozen inputs).
inline Tensor detach(const Tensor& x) { return Tensor::of(x.shape(), x.data(), false); }

/// Row-wise softmax probabilities of logits / tau (pure evaluation).
inline Tensor softmax(const Tensor& logits, double tau = 1.0) {
    if (logits.shape().size() != 2)
        throw shape_error("softmax: expected [batch x classes], got " +
                          shape_str(logits.shape()));
    Tensor out(logits.shape());
    detail::softmax_rows_into(logits.data(), logits.rows(), logits.cols(), tau, out.data());
    return out;
}

/// Mean over the batch of -log softmax(logits)[label]; max-subtraction
/// stabilized. Labels are class indices.
inline Tensor softmax_cross_entropy(Tape* tape, const Tensor& logits,
                                    const std::vector<std::size_t>& labels) {
    if (logits.shape().size() != 2)
        throw shape_error("softmax_cross_entropy: logits must be [batch x classes], got " +
                          shape_str(logits.shape()));
    const std::size_t b = logits.rows(), c = logits.cols();
    if (labels.size() != b)
        throw shape_error("softmax_cross_entropy: " + std::to_string(labels.size()) +
                          " labels for batch of " + std::to_string(b));
    if (b == 0) throw contract_error("softmax_cross_entropy: empty batch");
    for (std::size_t i = 0; i < b; ++i)
        if (labels[i] >= c)
            throw index_error("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                              " out of range [0, " + std::to_string(c) + ")");
    std::vector<double> probs;
    detail::softmax_rows_into(logits.data(), b, c, 1.0, probs);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i)
        loss -= std::log(std::max(probs[i * c + labels[i]], 1e-300));
    loss /= static_cast<double>(b);
    Tensor out = Tensor::scalar(loss, logits.requires_grad());
    if (tape && out.requires_grad()) {
        tape->track(logits);
        tape->track(out);
        auto ln = logits.node(), on = out.node();
        tape->record([ln, on, probs, labels, b, c] {
            const double g = on->adj[0] / static_cast<double>(b);
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < c; ++j) {
                    double p = probs[i * c + j];
                    ln->adj[i * c + j] += g * (p - (labels[i] == j ? 1.0 : 0.0));
                }
        });
    }
    return out;
}

/// Mean over the batch of KL(target || softmax(logits / tau)). The target
/// rows are fixed probabilities (no gradient flows into them).
inline Tensor kl_to_softened(Tape* tape, const Tensor& logits, const Tensor& target_probs,
                             double tau) {
    if (logits.shape() != target_probs.shape())
        throw shape_error("kl_to_softened: shape mismatch " + shape_str(logits.shape()) +
                          " vs " + shape_str(target_probs.shape()));
    if (tau <= 0.0) throw config_error("kl_to_softened: temperature must be positive");
    const std::size_t b = logits.rows(), c = logits.cols();
    std::vector<double> q;
    detail::softmax_rows_into(logits.data(), b, c, tau, q);
    double loss = 0.0;
    for (std::size_t i = 0; i < b * c; ++i) {
        const double p = target_probs.at(i);
        if (p > 0.0) loss += p * (std::log(p) - std::log(std::max(q[i], 1e-300)));
    }
    loss /= static_cast<double>(b);
    Tensor out = Tensor::scalar(loss, logits.requires_grad());
    if (tape && out.requires_grad()) {
        tape->track(logits);
        tape->track(out);
        auto ln = logits.node(), tn = target_probs.node(), on = out.node();
        tape->record([ln, tn, on, q, tau, b, c] {
            const double g = on->adj[0] / (tau * static_cast<double>(b));
            for (std::size_t i = 0; i < b * c; ++i)
                ln->adj[i] += g * (q[i] - tn->data[i]);
        });
    }
    return out;
}

} // namespace lma
