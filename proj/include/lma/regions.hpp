// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lma/activations.hpp"
#include "lma/errors.hpp"
#include "lma/model.hpp"
#include "lma/rng.hpp"

namespace lma {

/// Result of an empirical linear-region count.
struct RegionCount {
    std::string arch;
    int input_dim = 1;
    std::string method; // exact-1d | grid-signature-2d
    std::size_t regions = 1;
    std::vector<double> breakpoints; // 1-D only, refined locations
    bool degenerate = false;         // breakpoints closer than 1e-9
};

/// Closed-form lower bound on linear regions.
struct BoundResult {
    int layers = 1;
    int width = 1;
    int rank = 2;
    boost::multiprecision::cpp_int bound;
};

/// Lower bound k^(L-1) * k^n on the linear regions of an L-layer,
/// width-n, rank-k maxout network, exact in arbitrary precision. ReLU
/// networks are the rank-2 special case.
inline BoundResult maxout_region_bound(int layers, int width, int rank) {
    if (layers < 1 || width < 1 || rank < 2)
        throw config_error("maxout_region_bound: need L >= 1, n >= 1, k >= 2");
    BoundResult r{layers, width, rank, 0};
    r.bound = boost::multiprecision::pow(boost::multiprecision::cpp_int(rank),
                                         static_cast<unsigned>(layers - 1 + width));
    return r;
}

namespace detail {

inline void require_pla(const Mlp& model, const char* op) {
    if (!is_piecewise_linear(model.arch().activation))
        throw unsupported_error(std::string(op) +
                                ": model activation is not piecewise linear (" +
                                to_string(model.arch().activation) + ")");
}

/// Scalarized network output: sum of logits. A linear functional of a
/// piecewise-affine map is piecewise affine with the same region fabric
/// (up to measure-zero coincidences at generic weights).
inline double scalar_eval(Mlp& model, double x) {
    RunContext ctx;
    Tensor in({1, 1});
    in.at(0) = x;
    Tensor out = model.forward(ctx, in);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.at(i);
    return s;
}

inline std::vector<double> scalar_eval_batch(Mlp& model, const std::vector<double>& xs) {
    RunContext ctx;
    Tensor in({xs.size(), 1});
    for (std::size_t i = 0; i < xs.size(); ++i) in.at(i, 0) = xs[i];
    Tensor out = model.forward(ctx, in);
    std::vector<double> f(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t c = 0; c < out.cols(); ++c) f[i] += out.at(i, c);
    return f;
}

/// Does the chord over [a, b] miss f at the midpoint? True iff the map
/// is not affine there, i.e. a breakpoint (kink or jump) lies inside.
inline bool nonaffine(Mlp& model, double a, double b) {
    const double m = 0.5 * (a + b);
    const auto f = scalar_eval_batch(model, {a, m, b});
    const double dev = std::fabs(f[1] - 0.5 * (f[0] + f[2]));
    const double scl = std::max({1.0, std::fabs(f[0]), std::fabs(f[1]), std::fabs(f[2])});
    return dev > 1e-10 * scl;
}

/// Bisection refinement of a breakpoint bracketed by [a, b].
inline double refine_breakpoint(Mlp& model, double a, double b) {
    while (b - a > 1e-9) {
        const double m = 0.5 * (a + b);
        if (nonaffine(model, a, m)) {
            b = m;
        } else if (nonaffine(model, m, b)) {
            a = m;
        } else {
            return m; // both halves affine: the breakpoint is m itself
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

/// Exact 1-D region count: maximal intervals on which the scalarized
/// network output is affine. Secant slopes over a dense grid flag
/// breakpoint brackets (relative slope change or jump above 1e-6);
/// each bracket is refined by bisection to 1e-9. Counted regions are
/// breakpoints + 1.
inline RegionCount count_regions_1d(Mlp& model, double lo, double hi,
                                    std::size_t resolution = 4096) {
    detail::require_pla(model, "count_regions_1d");
    if (model.arch().input_dim() != 1)
        throw contract_error("count_regions_1d: model input dimension must be 1");
    if (!(hi > lo)) throw contract_error("count_regions_1d: empty interval");
    if (resolution < 8) throw contract_error("count_regions_1d: resolution too small");

    const std::size_t n = resolution;
    const double h = (hi - lo) / static_cast<double>(n);
    std::vector<double> xs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) xs[i] = lo + h * static_cast<double>(i);
    const auto f = detail::scalar_eval_batch(model, xs);

    std::vector<double> secant(n);
    for (std::size_t i = 0; i < n; ++i) secant[i] = (f[i + 1] - f[i]) / h;

    // Boundary i sits between secants i and i+1 (grid point x_{i+1}).
    std::vector<bool> flagged(n - 1, false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = std::fabs(secant[i + 1] - secant[i]);
        const double scl = std::max({1.0, std::fabs(secant[i]), std::fabs(secant[i + 1])});
        flagged[i] = d > 1e-6 * scl;
    }

    // A breakpoint strictly inside a grid interval flags two consecutive
    // boundaries; group runs of flags into one bracket each.
    RegionCount rc;
    rc.arch = model.arch().label();
    rc.input_dim = 1;
    rc.method = "exact-1d";
    std::size_t i = 0;
    while (i + 1 < n) {
        if (!flagged[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 2 < n && flagged[j + 1]) ++j;
        const double a = xs[i];
        const double b = xs[std::min(j + 2, n)];
        rc.breakpoints.push_back(detail::refine_breakpoint(model, a, b));
        i = j + 1;
    }
    std::sort(rc.breakpoints.begin(), rc.breakpoints.end());
    // Twin flags of one breakpoint refine to the same location; merge.
    std::vector<double> merged;
    for (double p : rc.breakpoints)
        if (merged.empty() || p - merged.back() > 1e-8)
            merged.push_back(p);
        else
            rc.degenerate = rc.degenerate || (p - merged.back() < 1e-9);
    for (std::size_t a = 1; a < merged.size(); ++a)
        if (merged[a] - merged[a - 1] < 1e-9) rc.degenerate = true;
    rc.breakpoints = std::move(merged);
    rc.regions = rc.breakpoints.size() + 1;
    return rc;
}

/// 2-D lower bound via activation-pattern signatures: each grid cell is
/// tagged with the segment indices of every unit at its center; counted
/// regions are the connected components of equal signatures under
/// 4-adjacency.
inline RegionCount count_regions_2d(Mlp& model, std::array<double, 4> box,
                                    std::size_t grid = 64) {
    detail::require_pla(model, "count_regions_2d");
    if (model.arch().input_dim() != 2)
        throw contract_error("count_regions_2d: model input dimension must be 2");
    if (grid < 2) throw contract_error("count_regions_2d: grid too small");
    const double lo0 = box[0], hi0 = box[1], lo1 = box[2], hi1 = box[3];
    if (!(hi0 > lo0 && hi1 > lo1)) throw contract_error("count_regions_2d: empty box");

    const std::size_t m = grid;
    std::map<std::vector<int>, int> pattern_ids;
    std::vector<int> cell_id(m * m);
    for (std::size_t iy = 0; iy < m; ++iy)
        for (std::size_t ix = 0; ix < m; ++ix) {
            const double cx =
                lo0 + (static_cast<double>(ix) + 0.5) * (hi0 - lo0) / static_cast<double>(m);
            const double cy =
                lo1 + (static_cast<double>(iy) + 0.5) * (hi1 - lo1) / static_cast<double>(m);
            std::vector<int> sig;
            RunContext ctx;
            ctx.signature = &sig;
            Tensor in({1, 2});
            in.at(0) = cx;
            in.at(1) = cy;
            model.forward(ctx, in);
            auto [it, inserted] =
                pattern_ids.emplace(std::move(sig), static_cast<int>(pattern_ids.size()));
            cell_id[iy * m + ix] = it->second;
        }

    // Connected components of equal patterns, 4-adjacency.
    std::vector<int> comp(m * m, -1);
    std::size_t components = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < m * m; ++start) {
        if (comp[start] != -1) continue;
        ++components;
        comp[start] = static_cast<int>(components);
        stack.assign(1, start);
        while (!stack.empty()) {
            const std::size_t c = stack.back();
            stack.pop_back();
            const std::size_t ix = c % m, iy = c / m;
            const std::size_t neighbors[4][2] = {{ix + 1, iy}, {ix - 1, iy},
                                                 {ix, iy + 1}, {ix, iy - 1}};
            for (const auto& nb : neighbors) {
                if (nb[0] >= m || nb[1] >= m) continue; // unsigned wrap covers < 0
                const std::size_t idx = nb[1] * m + nb[0];
                if (comp[idx] == -1 && cell_id[idx] == cell_id[c]) {
                    comp[idx] = comp[c];
                    stack.push_back(idx);
                }
            }
        }
    }

    RegionCount rc;
    rc.arch = model.arch().label();
    rc.input_dim = 2;
    rc.method = "grid-signature-2d";
    rc.regions = components;
    return rc;
}

// ---------------------------------------------------------------------------
// Generic-position model generation for region analysis
// ---------------------------------------------------------------------------

namespace detail {

/// Redraw dense weights and biases at scales that keep every unit's
/// breakpoint fabric inside the analysis domain: weights in +-[0.5, 1.5],
/// biases in [-1, 1].
inline void randomize_dense_for_regions(Mlp& net, Rng& rng) {
    for (auto& layer : net.layers()) {
        if (auto* d = dynamic_cast<Dense*>(layer.get())) {
            for (auto& w : d->weight().data()) {
                const double mag = rng.uniform(0.5, 1.5);
                w = (rng.uniform() < 0.5 ? -mag : mag);
            }
            for (auto& b : d->bias().data()) b = rng.uniform(-1.0, 1.0);
        } else if (auto* mx = dynamic_cast<MaxoutDense*>(layer.get())) {
            std::vector<Tensor> params;
            mx->collect_params(params);
            for (auto& p : params) {
                const bool is_bias = p.shape().size() == 1;
                for (auto& v : p.data()) {
                    if (is_bias) {
                        v = rng.uniform(-1.0, 1.0);
                    } else {
                        const double mag = rng.uniform(0.5, 1.5);
                        v = rng.uniform() < 0.5 ? -mag : mag;
                    }
                }
            }
        }
    }
}

/// Give LMA generic distinct slopes and biases, and randomize hinge
/// scales for APLU so no two units coincide.
inline void randomize_activations_for_regions(Mlp& net, Rng& rng) {
    for (auto& layer : net.layers()) {
        if (auto* l = dynamic_cast<Lma*>(layer.get())) {
            for (auto& a : l->state().alpha.data()) a = rng.normal();
            for (auto& b : l->state().beta.data()) b = rng.normal(0.0, 0.5);
        } else if (auto* ap = dynamic_cast<Aplu*>(layer.get())) {
            for (auto& a : ap->slopes().data()) a = rng.uniform(-0.9, 0.9);
            for (auto& b : ap->hinge_locations().data()) b = rng.normal(0.0, 0.6);
        }
    }
}

/// Run one train-mode calibration pass over samples covering the domain
/// so LMA cut points exist for eval-mode counting.
inline void calibrate_cuts(Mlp& net, const Tensor& samples) {
    Rng unused(0);
    RunContext ctx{nullptr, &unused, true, nullptr, nullptr};
    net.forward(ctx, samples);
}

} // namespace detail

/// Build a network in generic position for region analysis over
/// [lo, hi] (1-D input). LMA cut points are calibrated from a uniform
/// batch over the inner third of the interval so every interior cut's
/// pre-image lands inside it.
inline Mlp make_pla_net_1d(const ArchSpec& arch, std::uint64_t seed, double lo, double hi) {
    Mlp net(arch, seed);
    Rng rng(seed, 555);
    detail::randomize_dense_for_regions(net, rng);
    detail::randomize_activations_for_regions(net, rng);
    const std::size_t m = 257;
    Tensor samples({m, 1});
    const double clo = lo + (hi - lo) / 3.0, chi = hi - (hi - lo) / 3.0;
    for (std::size_t i = 0; i < m; ++i)
        samples.at(i, 0) = clo + (chi - clo) * static_cast<double>(i) / static_cast<double>(m - 1);
    detail::calibrate_cuts(net, samples);
    return net;
}

/// 2-D analogue over an axis-aligned box.
inline Mlp make_pla_net_2d(const ArchSpec& arch, std::uint64_t seed,
                           std::array<double, 4> box) {
    Mlp net(arch, seed);
    Rng rng(seed, 555);
    detail::randomize_dense_for_regions(net, rng);
    detail::randomize_activations_for_regions(net, rng);
    const std::size_t g = 17;
    Tensor samples({g * g, 2});
    for (std::size_t iy = 0; iy < g; ++iy)
        for (std::size_t ix = 0; ix < g; ++ix) {
            const double fx = (static_cast<double>(ix) + 0.5) / static_cast<double>(g);
            const double fy = (static_cast<double>(iy) + 0.5) / static_cast<double>(g);
            samples.at(iy * g + ix, 0) = box[0] + (box[1] - box[0]) * (1.0 / 3 + fx / 3);
            samples.at(iy * g + ix, 1) = box[2] + (box[3] - box[2]) * (1.0 / 3 + fy / 3);
        }
    detail::calibrate_cuts(net, samples);
    return net;
}

/// Analytic breakpoint pre-images of a {1, n, 1}-shaped net with an
/// elementwise piecewise-linear activation: every input x where some
/// hidden unit crosses one of its activation boundaries. Returns an
/// empty list when the architecture is outside this closed form
/// (maxout, deeper nets).
inline std::vector<double> hidden_unit_breakpoints_1d(Mlp& net) {
    const ArchSpec& arch = net.arch();
    if (arch.widths.size() != 3 || arch.widths[0] != 1) return {};
    auto& layers = net.layers();
    auto* dense = dynamic_cast<Dense*>(layers[0].get());
    if (!dense) return {};
    Layer* act = layers[1].get();
    std::vector<double> points;
    const std::size_t n = dense->out_dim();
    for (std::size_t u = 0; u < n; ++u) {
        const double w = dense->weight().at(u); // [1 x n]
        const double b = dense->bias().at(u);
        if (w == 0.0) continue;
        std::vector<double> unit_cuts;
        if (dynamic_cast<Relu*>(act) || dynamic_cast<PRelu*>(act)) {
            unit_cuts.push_back(0.0);
        } else if (auto* l = dynamic_cast<Lma*>(act)) {
            unit_cuts = l->state().cuts_ema;
        } else if (auto* ap = dynamic_cast<Aplu*>(act)) {
            unit_cuts.push_back(0.0);
            for (std::size_t j = 0; j < static_cast<std::size_t>(ap->segments() - 2); ++j)
                unit_cuts.push_back(ap->hinge_locations().at(j, u));
        } else {
            return {};
        }
        for (double c : unit_cuts) points.push_back((c - b) / w);
    }
    std::sort(points.begin(), points.end());
    return points;
}

/// Count regions of a randomly drawn net, resampling up to 10 times when
/// the draw is in degenerate position (refined breakpoints within 1e-9,
/// or, where the closed form applies, coincident analytic pre-images).
/// The last attempt is returned with its degeneracy flag set when the
/// retries never escape.
inline RegionCount count_regions_1d_generic(const ArchSpec& arch, std::uint64_t seed,
                                            double lo, double hi,
                                            std::size_t resolution = 4096) {
    RegionCount rc;
    for (int attempt = 0; attempt < 10; ++attempt) {
        Mlp net = make_pla_net_1d(arch, seed + 7919ULL * static_cast<std::uint64_t>(attempt),
                                  lo, hi);
        bool coincident = false;
        const auto analytic = hidden_unit_breakpoints_1d(net);
        for (std::size_t i = 1; i < analytic.size(); ++i)
            if (analytic[i] - analytic[i - 1] < 1e-9) coincident = true;
        rc = count_regions_1d(net, lo, hi, resolution);
        rc.degenerate = rc.degenerate || coincident;
        if (!rc.degenerate) return rc;
    }
    return rc;
}

} // namespace lma
