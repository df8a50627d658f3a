// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "lma/rng.hpp"
#include "lma/tensor.hpp"

namespace lma::testing {

/// Central finite-difference gradient check. loss_fn must rebuild its
/// graph from the current parameter values on every call; the returned
/// value is the worst relative disagreement between the tape gradient
/// and (f(x+h) - f(x-h)) / 2h over every coordinate of every parameter.
/// This oracle never touches the backward rules it is checking.
inline double gradcheck_max_rel_err(const std::function<Tensor(Tape*)>& loss_fn,
                                    std::vector<Tensor> params, double h = 1e-5) {
    for (auto& p : params) p.zero_grad();
    Tape tape;
    Tensor loss = loss_fn(&tape);
    tape.backward(loss);

    double worst = 0.0;
    for (auto& p : params) {
        const std::vector<double> grad = p.grad();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double v = p.data()[i];
            p.data()[i] = v + h;
            const double fp = loss_fn(nullptr).item();
            p.data()[i] = v - h;
            const double fm = loss_fn(nullptr).item();
            p.data()[i] = v;
            const double fd = (fp - fm) / (2.0 * h);
            const double rel =
                std::fabs(grad[i] - fd) / std::max({1.0, std::fabs(grad[i]), std::fabs(fd)});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
    Tensor t(std::move(shape), 0.0, requires_grad);
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(lo, hi);
    return t;
}

/// Keep sampled coordinates clear of activation breakpoints so the
/// finite-difference stencil (width 2h) never straddles a kink.
inline double away_from(Rng& rng, const std::vector<double>& breakpoints, double lo,
                        double hi, double margin) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double x = rng.uniform(lo, hi);
        bool ok = true;
        for (double b : breakpoints)
            if (std::fabs(x - b) <= margin) ok = false;
        if (ok) return x;
    }
    return 0.5 * (lo + hi);
}

} // namespace lma::testing
