// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "lma/errors.hpp"
#include "lma/quantize.hpp"
#include "lma/rng.hpp"
#include "lma/tensor.hpp"

namespace lma {

/// Per-run execution context threaded through forward passes.
/// tape == nullptr disables gradient recording; training toggles
/// batch-statistics behaviour (dropout masks, LMA/batch-norm stats).
struct RunContext {
    Tape* tape = nullptr;
    Rng* rng = nullptr;
    bool training = false;
    const QuantConfig* quant = nullptr; // weight quantization for dense layers
    std::vector<int>* signature = nullptr; // segment indices, batch-1 eval only
};

/// Named persistent array of a layer: trainable parameters and running
/// statistics alike. Used for serialization and state hashing.
struct NamedBuffer {
    std::string name;
    std::vector<double>* values;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(RunContext& ctx, const Tensor& x) = 0;
    virtual void collect_params(std::vector<Tensor>& /*out*/) {}
    virtual void collect_buffers(const std::string& prefix, std::vector<NamedBuffer>& out) = 0;
    /// Auxiliary elements materialized by the most recent forward pass,
    /// beyond input and output.
    virtual std::size_t workspace_elems() const { return 0; }
    virtual std::string kind() const = 0;
};

/// Fully connected layer: y = x W + b, W[in x out].
class Dense : public Layer {
public:
    Dense(std::size_t in, std::size_t out, Rng& rng) : in_(in), out_(out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::vector<double> w(in * out);
        for (auto& v : w) v = rng.uniform(-limit, limit);
        w_ = Tensor::of({in, out}, std::move(w), true);
        b_ = Tensor({out}, 0.0, true);
    }

    Tensor forward(RunContext& ctx, const Tensor& x) override {
        Tensor weff = w_;
        if (ctx.quant && ctx.quant->enabled()) weff = ste_quantize(ctx.tape, w_, *ctx.quant);
        return add_rowvec(ctx.tape, matmul(ctx.tape, x, weff), b_);
    }

    void collect_params(std::vector<Tensor>& out) override {
        out.push_back(w_);
        out.push_back(b_);
    }

    void collect_buffers(const std::string& prefix, std::vector<NamedBuffer>& out) override {
        out.push_back({prefix + ".w", &w_.data()});
        out.push_back({prefix + ".b", &b_.data()});
    }

    std::string kind() const override { return "dense"; }

    Tensor& weight() { return w_; }
    Tensor& bias() { return b_; }
    std::size_t in_dim() const { return in_; }
    std::size_t out_dim() const { return out_; }

private:
    std::size_t in_, out_;
    Tensor w_, b_;
};

/// Inverted dropout: keeps are scaled by 1/(1-p) at train time, identity
/// at eval time.
class Dropout : public Layer {
public:
    explicit Dropout(double p) : p_(p) {
        if (p < 0.0 || p >= 1.0) throw config_error("dropout rate must be in [0, 1)");
    }

    Tensor forward(RunContext& ctx, const Tensor& x) override {
        workspace_ = 0;
        if (!ctx.training || p_ == 0.0) return x;
        if (!ctx.rng) throw contract_error("dropout: training forward needs an rng");
        const double keep = 1.0 - p_;
        std::vector<double> mask(x.size());
        for (auto& m : mask) m = (ctx.rng->uniform() < p_) ? 0.0 : 1.0 / keep;
        workspace_ = mask.size();
        Tensor out(x.shape(), 0.0, x.requires_grad());
        for (std::size_t i = 0; i < x.size(); ++i) out.at(i) = x.at(i) * mask[i];
        if (ctx.tape && out.requires_grad()) {
            ctx.tape->track(x);
            ctx.tape->track(out);
            auto xn = x.node(), on = out.node();
            ctx.tape->record([xn, on, mask] {
                for (std::size_t i = 0; i < on->adj.size(); ++i)
                    xn->adj[i] += on->adj[i] * mask[i];
            });
        }
        return out;
    }

    void collect_buffers(const std::string&, std::vector<NamedBuffer>&) override {}
    std::size_t workspace_elems() const override { return workspace_; }
    std::string kind() const override { return "dropout"; }
    double rate() const { return p_; }

private:
    double p_;
    std::size_t workspace_ = 0;
};

/// Batch normalization over features, with EMA running statistics for
/// eval (retained mass on the running value, first batch initializes).
class BatchNorm : public Layer {
public:
    BatchNorm(std::size_t n, double ema_factor = 0.99) : n_(n), ema_factor_(ema_factor) {
        gamma_ = Tensor({n}, 1.0, true);
        beta_ = Tensor({n}, 0.0, true);
        run_mean_.assign(n, 0.0);
        run_var_.assign(n, 1.0);
    }

    Tensor forward(RunContext& ctx, const Tensor& x) override {
        if (x.shape().size() != 2 || x.shape()[1] != n_)
            throw shape_error("batchnorm: expected [batch x " + std::to_string(n_) +
                              "], got " + shape_str(x.shape()));
        const std::size_t b = x.rows(), n = n_;
        std::vector<double> mean(n, 0.0), var(n, 0.0);
        if (ctx.training) {
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < n; ++j) mean[j] += x.at(i, j);
            for (auto& m : mean) m /= static_cast<double>(b);
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double d = x.at(i, j) - mean[j];
                    var[j] += d * d;
                }
            for (auto& v : var) v /= static_cast<double>(b);
            if (!ema_init_) {
                run_mean_ = mean;
                run_var_ = var;
                ema_init_ = true;
            } else {
                for (std::size_t j = 0; j < n; ++j) {
                    run_mean_[j] = ema_factor_ * run_mean_[j] + (1.0 - ema_factor_) * mean[j];
                    run_var_[j] = ema_factor_ * run_var_[j] + (1.0 - ema_factor_) * var[j];
                }
            }
        } else {
            mean = run_mean_;
            var = run_var_;
        }
        std::vector<double> inv_std(n);
        for (std::size_t j = 0; j < n; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + eps_);
        std::vector<double> xhat(b * n);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < n; ++j)
                xhat[i * n + j] = (x.at(i, j) - mean[j]) * inv_std[j];
        Tensor out({b, n}, 0.0, x.requires_grad() || gamma_.requires_grad());
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out.at(i, j) = gamma_.at(j) * xhat[i * n + j] + beta_.at(j);
        workspace_ = ctx.training ? 2 * n : 0;
        if (ctx.tape && out.requires_grad()) {
            ctx.tape->track(x);
            ctx.tape->track(gamma_);
            ctx.tape->track(beta_);
            ctx.tape->track(out);
            auto xn = x.node(), gn = gamma_.node(), bn = beta_.node(), on = out.node();
            const bool through_stats = ctx.training;
            ctx.tape->record([xn, gn, bn, on, xhat, inv_std, b, n, through_stats] {
                for (std::size_t j = 0; j < n; ++j) {
                    double sum_g = 0.0, sum_gx = 0.0;
                    for (std::size_t i = 0; i < b; ++i) {
                        const double g = on->adj[i * n + j];
                        sum_g += g;
                        sum_gx += g * xhat[i * n + j];
                    }
                    bn->adj[j] += sum_g;
                    gn->adj[j] += sum_gx;
                    const double gamma = gn->data[j];
                    for (std::size_t i = 0; i < b; ++i) {
                        const double gh = on->adj[i * n + j] * gamma; // d/dxhat
                        double dx;
                        if (through_stats) {
                            dx = inv_std[j] / static_cast<double>(b) *
                                 (static_cast<double>(b) * gh - gamma * sum_g -
                                  xhat[i * n + j] * gamma * sum_gx);
                        } else {
                            dx = gh * inv_std[j];
                        }
                        xn->adj[i * n + j] += dx;
                    }
                }
            });
        }
        return out;
    }

    void collect_params(std::vector<Tensor>& out) override {
        out.push_back(gamma_);
        out.push_back(beta_);
    }

    void collect_buffers(const std::string& prefix, std::vector<NamedBuffer>& out) override {
        out.push_back({prefix + ".gamma", &gamma_.data()});
        out.push_back({prefix + ".beta", &beta_.data()});
        out.push_back({prefix + ".run_mean", &run_mean_});
        out.push_back({prefix + ".run_var", &run_var_});
    }

    std::size_t workspace_elems() const override { return workspace_; }
    std::string kind() const override { return "batchnorm"; }

    const std::vector<double>& running_mean() const { return run_mean_; }
    const std::vector<double>& running_var() const { return run_var_; }

    /// Treat the current running statistics as established (set after
    /// deserialization so training resumes the EMA instead of resetting it).
    void mark_loaded() { ema_init_ = true; }

private:
    std::size_t n_;
    double ema_factor_;
    double eps_ = 1e-5;
    Tensor gamma_, beta_;
    std::vector<double> run_mean_, run_var_;
    bool ema_init_ = false;
    std::size_t workspace_ = 0;
};

} // namespace lma
