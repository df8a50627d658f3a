// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "lma/errors.hpp"
#include "lma/tensor.hpp"

namespace lma {

/// k-bit uniform weight quantization, per-tensor min-max range.
struct QuantConfig {
    int bits = 0; // 0 disables quantization

    bool enabled() const { return bits != 0; }
    void validate() const {
        if (bits != 0 && (bits < 2 || bits > 8))
            throw config_error("quant bits must be 0 (off) or in [2, 8], got " +
                               std::to_string(bits));
    }
};

namespace detail {

/// Level i of a 2^bits-point uniform grid over [mn, mx]. Endpoints are
/// returned exactly so that requantizing a quantized tensor is a no-op.
inline double quant_level(double mn, double mx, double levels_minus_one, double i) {
    if (i <= 0.0) return mn;
    if (i >= levels_minus_one) return mx;
    return ((levels_minus_one - i) * mn + i * mx) / levels_minus_one;
}

} // namespace detail

/// Map each value to the nearest of 2^bits levels uniformly spanning
/// [min(w), max(w)]. Ties round half away from zero. A constant tensor
/// is returned unchanged.
inline std::vector<double> quantize_values(const std::vector<double>& w,
                                           const QuantConfig& cfg) {
    cfg.validate();
    if (!cfg.enabled() || w.empty()) return w;
    double mn = w[0], mx = w[0];
    for (double v : w) {
        if (!std::isfinite(v)) throw contract_error("quantize: non-finite weight value");
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    if (mn == mx) return w;
    const double K = static_cast<double>((1 << cfg.bits) - 1);
    const double range = mx - mn;
    std::vector<double> out(w.size());
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
        const double t = (w[idx] - mn) * K / range;
        double i0 = std::floor(t);
        if (i0 < 0.0) i0 = 0.0;
        if (i0 > K) i0 = K;
        const double frac = t - i0;
        double i;
        if (frac > 0.5) {
            i = i0 + 1.0;
        } else if (frac < 0.5) {
            i = i0;
        } else {
            // Tie: pick the level farther from zero; exact mirror pair
            // resolves to the upper level.
            const double lo = detail::quant_level(mn, mx, K, i0);
            const double hi = detail::quant_level(mn, mx, K, i0 + 1.0);
            i = (std::fabs(lo) > std::fabs(hi)) ? i0 : i0 + 1.0;
        }
        if (i > K) i = K;
        out[idx] = detail::quant_level(mn, mx, K, i);
    }
    return out;
}

inline Tensor quantize_uniform(const Tensor& w, const QuantConfig& cfg) {
    return Tensor::of(w.shape(), quantize_values(w.data(), cfg));
}

/// Straight-through estimator: the surrogate Jacobian of the rounding is
/// the identity, so the incoming gradient passes through unchanged.
inline Tensor ste_backward(const Tensor& g) { return g; }

/// Quantize w for the forward pass while routing the gradient to the
/// full-precision shadow tensor unchanged (straight-through estimator).
inline Tensor ste_quantize(Tape* tape, const Tensor& w, const QuantConfig& cfg) {
    Tensor out = Tensor::of(w.shape(), quantize_values(w.data(), cfg), w.requires_grad());
    if (tape && w.requires_grad()) {
        tape->track(w);
        tape->track(out);
        auto wn = w.node(), on = out.node();
        tape->record([wn, on] {
            for (std::size_t i = 0; i < on->adj.size(); ++i) wn->adj[i] += on->adj[i];
        });
    }
    return out;
}

} // namespace lma
