// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lma/errors.hpp"
#include "lma/tensor.hpp"

namespace lma {

enum class OptKind { sgd_momentum, adam };

inline OptKind opt_kind_from_string(const std::string& s) {
    if (s == "sgd") return OptKind::sgd_momentum;
    if (s == "adam") return OptKind::adam;
    throw config_error("unknown optimizer '" + s + "' (expected sgd | adam)");
}

/// First-order optimizer over a fixed parameter list. Holds per-parameter
/// moment buffers; step count is monotone.
class Optimizer {
public:
    static Optimizer sgd(std::vector<Tensor> params, double lr, double momentum = 0.9,
                         double weight_decay = 0.0) {
        Optimizer o(std::move(params));
        o.kind_ = OptKind::sgd_momentum;
        o.lr_ = lr;
        o.momentum_ = momentum;
        o.weight_decay_ = weight_decay;
        return o;
    }

    static Optimizer adam(std::vector<Tensor> params, double lr, double beta1 = 0.9,
                          double beta2 = 0.999, double eps = 1e-8,
                          double weight_decay = 0.0) {
        Optimizer o(std::move(params));
        o.kind_ = OptKind::adam;
        o.lr_ = lr;
        o.beta1_ = beta1;
        o.beta2_ = beta2;
        o.eps_ = eps;
        o.weight_decay_ = weight_decay;
        return o;
    }

    /// Apply one update from the parameters' accumulated grads. Grads are
    /// left untouched; the caller zeroes them.
    void step() {
        for (auto& p : params_)
            if (!p.has_grad())
                throw contract_error("optimizer step: parameter has no gradient; "
                                     "run backward() or zero_grad() first");
        ++step_count_;
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& data = params_[k].data();
            auto& grad = params_[k].grad();
            auto& m = m_[k];
            if (kind_ == OptKind::sgd_momentum) {
                for (std::size_t i = 0; i < data.size(); ++i) {
                    const double g = grad[i] + weight_decay_ * data[i];
                    m[i] = momentum_ * m[i] + g;
                    data[i] -= lr_ * m[i];
                }
            } else {
                auto& v = v_[k];
                const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
                const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
                for (std::size_t i = 0; i < data.size(); ++i) {
                    const double g = grad[i] + weight_decay_ * data[i];
                    m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
                    v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
                    const double mhat = m[i] / bc1;
                    const double vhat = v[i] / bc2;
                    data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
                }
            }
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    std::int64_t step_count() const { return step_count_; }
    OptKind kind() const { return kind_; }
    const std::vector<Tensor>& params() const { return params_; }

private:
    explicit Optimizer(std::vector<Tensor> params) : params_(std::move(params)) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t k = 0; k < params_.size(); ++k) {
            m_[k].assign(params_[k].size(), 0.0);
            v_[k].assign(params_[k].size(), 0.0);
        }
    }

    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    OptKind kind_ = OptKind::sgd_momentum;
    double lr_ = 0.01;
    double momentum_ = 0.9;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    double weight_decay_ = 0.0;
    std::int64_t step_count_ = 0;
};

} // namespace lma
