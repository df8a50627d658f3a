// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "lma/errors.hpp"
#include "lma/layers.hpp"
#include "lma/rng.hpp"
#include "lma/tensor.hpp"

namespace lma {

enum class ActivationKind { relu, prelu, swish, maxout, aplu, lma };

inline ActivationKind activation_from_string(const std::string& s) {
    if (s == "relu") return ActivationKind::relu;
    if (s == "prelu") return ActivationKind::prelu;
    if (s == "swish") return ActivationKind::swish;
    if (s == "maxout") return ActivationKind::maxout;
    if (s == "aplu") return ActivationKind::aplu;
    if (s == "lma") return ActivationKind::lma;
    throw config_error("unknown activation '" + s +
                       "' (expected relu | prelu | swish | maxout | aplu | lma)");
}

inline std::string to_string(ActivationKind k) {
    switch (k) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::prelu: return "prelu";
    case ActivationKind::swish: return "swish";
    case ActivationKind::maxout: return "maxout";
    case ActivationKind::aplu: return "aplu";
    case ActivationKind::lma: return "lma";
    }
    throw config_error("bad activation kind");
}

inline bool is_piecewise_linear(ActivationKind k) { return k != ActivationKind::swish; }

inline bool is_multi_segment(ActivationKind k) {
    return k == ActivationKind::maxout || k == ActivationKind::aplu || k == ActivationKind::lma;
}

// ---------------------------------------------------------------------------
// Batch segmentation
// ---------------------------------------------------------------------------

struct BatchStats {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Two-pass mean and population standard deviation over a whole batch.
inline BatchStats batch_stats(const std::vector<double>& values) {
    if (values.empty()) throw contract_error("batch_stats: empty batch");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) {
        const double d = v - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

/// Interior segment cut points b_1..b_{k-1} from batch statistics: the
/// range [mu - 3*sigma, mu + 3*sigma] is divided into k equal-width
/// segments whose outermost pieces extend to +-infinity. A degenerate
/// batch (sigma == 0) is floored at sigma = 1e-8 so cuts stay distinct.
inline std::vector<double> lma_cut_points(const std::vector<double>& batch, int k) {
    if (k < 2) throw config_error("segment count must be >= 2, got " + std::to_string(k));
    const BatchStats st = batch_stats(batch);
    const double sigma = std::max(st.stddev, 1e-8);
    const double b0 = st.mean - 3.0 * sigma;
    const double step = 6.0 * sigma / static_cast<double>(k);
    std::vector<double> cuts(static_cast<std::size_t>(k - 1));
    for (int j = 1; j < k; ++j) cuts[static_cast<std::size_t>(j - 1)] = b0 + step * j;
    return cuts;
}

/// Equal-count alternative: cut points are batch quantiles, so each
/// segment holds roughly the same number of inputs. Kept as a comparison
/// mode; the value-based scheme above is the default.
inline std::vector<double> lma_cut_points_frequency(const std::vector<double>& batch, int k) {
    if (k < 2) throw config_error("segment count must be >= 2, got " + std::to_string(k));
    if (batch.empty()) throw contract_error("lma_cut_points_frequency: empty batch");
    std::vector<double> sorted = batch;
    std::sort(sorted.begin(), sorted.end());
    const double nm1 = static_cast<double>(sorted.size() - 1);
    std::vector<double> cuts(static_cast<std::size_t>(k - 1));
    for (int j = 1; j < k; ++j) {
        const double pos = nm1 * static_cast<double>(j) / static_cast<double>(k);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        cuts[static_cast<std::size_t>(j - 1)] = sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    }
    // Ties in the batch can collapse quantiles; nudge to keep cuts strict.
    for (std::size_t j = 1; j < cuts.size(); ++j)
        if (cuts[j] <= cuts[j - 1])
            cuts[j] = cuts[j - 1] + 1e-12 * std::max(1.0, std::fabs(cuts[j - 1]));
    return cuts;
}

/// Segment index of x for interior cuts c: segment 0 is (-inf, c_0],
/// segment j is (c_{j-1}, c_j], the last segment is (c_last, +inf).
/// A value equal to a cut belongs to the lower segment.
inline int lma_segment_index(double x, const std::vector<double>& cuts) {
    return static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
}

inline void validate_cuts(const std::vector<double>& cuts, const char* what) {
    for (std::size_t j = 1; j < cuts.size(); ++j)
        if (!(cuts[j] > cuts[j - 1]))
            throw invariant_error(std::string(what) + ": cut points must be strictly increasing");
}

// ---------------------------------------------------------------------------
// LMA
// ---------------------------------------------------------------------------

/// Per-layer LMA state: k trainable slopes and biases shared by every
/// unit of the layer, current-batch cut points, and their EMA used at
/// eval time.
struct LmaState {
    enum class Mode { train, eval };

    int k = 8;
    Tensor alpha; // [k]
    Tensor beta;  // [k]
    std::vector<double> cuts;     // b_1..b_{k-1} of the current batch
    std::vector<double> cuts_ema; // moving average for the test phase
    bool ema_init = false;
    double ema_factor = 0.99;
    Mode mode = Mode::train;
};

/// Fold the current batch cuts into the EMA: retained mass stays on the
/// running value; the first batch initializes the average.
inline void lma_update_ema(LmaState& state, const std::vector<double>& cuts_batch) {
    if (state.mode == LmaState::Mode::eval)
        throw contract_error("lma_update_ema: cut-point EMA may only move in train mode");
    if (!state.ema_init) {
        state.cuts_ema = cuts_batch;
        state.ema_init = true;
        return;
    }
    if (cuts_batch.size() != state.cuts_ema.size())
        throw shape_error("lma_update_ema: cut count changed");
    const double f = state.ema_factor;
    for (std::size_t j = 0; j < cuts_batch.size(); ++j)
        state.cuts_ema[j] = f * state.cuts_ema[j] + (1.0 - f) * cuts_batch[j];
}

/// Light Multi-segment Activation. Train mode derives cut points from
/// the batch, eval mode replays the EMA cut points; each element is
/// mapped to alpha_j * x + beta_j for its segment j. No gradient flows
/// into the batch statistics or the cut points.
class Lma : public Layer {
public:
    explicit Lma(int k, double ema_factor = 0.99, bool frequency_mode = false)
        : frequency_(frequency_mode) {
        if (k < 2) throw config_error("LMA needs k >= 2 segments, got " + std::to_string(k));
        if (k % 2 != 0)
            throw config_error("LMA segment count must be even so the ReLU-style "
                               "initialization can split the slopes, got " +
                               std::to_string(k));
        state_.k = k;
        state_.ema_factor = ema_factor;
        // ReLU at init: zero biases, left half slopes 0, right half 1.
        std::vector<double> slopes(static_cast<std::size_t>(k), 0.0);
        for (int j = k / 2; j < k; ++j) slopes[static_cast<std::size_t>(j)] = 1.0;
        state_.alpha = Tensor::of({static_cast<std::size_t>(k)}, std::move(slopes), true);
        state_.beta = Tensor({static_cast<std::size_t>(k)}, 0.0, true);
    }

    Tensor forward(RunContext& ctx, const Tensor& x) override {
        const std::vector<double>* cuts;
        if (ctx.training) {
            state_.mode = LmaState::Mode::train;
            state_.cuts = frequency_ ? lma_cut_points_frequency(x.data(), state_.k)
                                     : lma_cut_points(x.data(), state_.k);
            lma_update_ema(state_, state_.cuts);
            cuts = &state_.cuts;
        } else {
            state_.mode = LmaState::Mode::eval;
            if (!state_.ema_init)
                throw contract_error("LMA eval: cut points unset; train a batch or call "
                                     "set_cut_points() first");
            cuts = &state_.cuts_ema;
        }
        validate_cuts(*cuts, "lma_forward");

        // The belonging segment index per element is the only auxiliary
        // storage LMA materializes.
        std::vector<int> idx(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            idx[i] = lma_segment_index(x.at(i), *cuts);
        workspace_ = idx.size();
        if (ctx.signature)
            ctx.signature->insert(ctx.signature->end(), idx.begin(), idx.end());

        Tensor out(x.shape(), 0.0, x.requires_grad() || state_.alpha.requires_grad());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto j = static_cast<std::size_t>(idx[i]);
            out.at(i) = state_.alpha.at(j) * x.at(i) + state_.beta.at(j);
        }
        if (ctx.tape && out.requires_grad()) {
            ctx.tape->track(x);
            ctx.tape->track(state_.alpha);
            ctx.tape->track(state_.beta);
            ctx.tape->track(out);
            auto xn = x.node(), an = state_.alpha.node(), bn = state_.beta.node(),
                 on = out.node();
            ctx.tape->record([xn, an, bn, on, idx] {
                for (std::size_t i = 0; i < on->adj.size(); ++i) {
                    const double g = on->adj[i];
                    const auto j = static_cast<std::size_t>(idx[i]);
                    xn->adj[i] += g * an->data[j];
                    an->adj[j] += g * xn->data[i];
                    bn->adj[j] += g;
                }
            });
        }
        return out;
    }

    void collect_params(std::vector<Tensor>& out) override {
        out.push_back(state_.alpha);
        out.push_back(state_.beta);
    }

    void collect_buffers(const std::string& prefix, std::vector<NamedBuffer>& out) override {
        out.push_back({prefix + ".alpha", &state_.alpha.data()});
        out.push_back({prefix + ".beta", &state_.beta.data()});
        out.push_back({prefix + ".cuts_ema", &state_.cuts_ema});
    }

    std::size_t workspace_elems() const override { return workspace_; }
    std::string kind() const override { return "lma"; }

    LmaState& state() { return state_; }
    const LmaState& state() const { return state_; }

    /// Pin eval-time cut points directly (used by region analysis and by
    /// deserialization).
    void set_cut_points(std::vector<double> cuts) {
        validate_cuts(cuts, "set_cut_points");
        if (static_cast<int>(cuts.size()) != state_.k - 1)
            throw shape_error("set_cut_points: expected " + std::to_string(state_.k - 1) +
                              " interior cuts, got " + std::to_string(cuts.size()));
        state_.cuts_ema = std::move(cuts);
        state_.ema_init = true;
    }

    void mark_ema_init() { state_.ema_init = !state_.cuts_ema.empty(); }

private:
    LmaState state_;
    bool frequency_;
    std::size_t workspace_ = 0;
};

// ---------------------------------------------------------------------------
// APLU
// ---------------------------------------------------------------------------

/// Adaptive piecewise linear unit: h(x) = max(0,x) + sum_j a_j * max(0, b_j - x)
/// with per-unit trainable slopes and hinge locations. A k-segment APLU
/// carries k-2 hinges.
class Aplu : public Layer {
public:
    Aplu(int k, std::size_t units, Rng& rng) : k_(k), units_(units) {
        if (k < 2) throw config_error("APLU needs k >= 2 segments, got " + std::to_string(k));
        const auto hinges = static_cast<std::size_t>(k - 2);
        std::vector<double> a(hinges * units), b(hinges * units);
        for (auto& v : a) v = rng.uniform(-0.5, 0.5);
        for (auto& v : b) v = rng.normal();
        a_ = Tensor::of({hinges, units}, std::move(a), true);
        b_ = Tensor::of({hinges, units}, std::move(b), true);
    }

    Tensor forward(RunContext& ctx, const Tensor& x) override {
        if (x.cols() != units_)
            throw shape_error("aplu: layer built for " + std::to_string(units_) +
                              " units, input has " + std::to_string(x.cols()));
        const std::size_t rows = x.rows(), n = units_;
        const auto hinges = static_cast<std::size_t>(k_ - 2);

        // One hinge term per element per hinge is materialized; this is
        // the accumulation workspace that grows linearly in k.
        std::vector<std::vector<double>> hinge(hinges);
        for (std::size_t j = 0; j < hinges; ++j) {
            hinge[j].resize(rows * n);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t u = 0; u < n; ++u)
                    hinge[j][i * n + u] = std::max(0.0, -x.at(i, u) + b_.at(j, u));
        }
        workspace_ = hinges * rows * n;

        Tensor out(x.shape(), 0.0, x.requires_grad() || a_.requires_grad());
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t u = 0; u < n; ++u) {
                double v = std::max(0.0, x.at(i, u));
                for (std::size_t j = 0; j < hinges; ++j) v += a_.at(j, u) * hinge[j][i * n + u];
                out.at(i, u) = v;
            }

        if (ctx.signature) {
            for (std::size_t i = 0; i < rows * n; ++i) {
                int code = x.at(i) > 0.0 ? 1 : 0;
                for (std::size_t j = 0; j < hinges; ++j)
                    if (hinge[j][i] > 0.0) code |= 1 << (j + 1);
                ctx.signature->push_back(code);
            }
        }

        if (ctx.tape && out.requires_grad()) {
            ctx.tape->track(x);
            ctx.tape->track(a_);
            ctx.tape->track(b_);
            ctx.tape->track(out);
            auto xn = x.node(), an = a_.node(), bn = b_.node(), on = out.node();
            ctx.tape->record([xn, an, bn, on, hinge, rows, n, hinges] {
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t u = 0; u < n; ++u) {
                        const std::size_t e = i * n + u;
                        const double g = on->adj[e];
                        double dx = xn->data[e] > 0.0 ? 1.0 : 0.0;
                        for (std::size_t j = 0; j < hinges; ++j) {
                            const bool active = hinge[j][e] > 0.0;
                            const double aju = an->data[j * n + u];
                            if (active) {
                                dx -= aju;
                                bn->adj[j * n + u] += g * aju;
                            }
                            an->adj[j * n + u] += g * hinge[j][e];
                        }
                        xn->adj[e] += g * dx;
                    }
            });
        }
        return out;
    }

    void collect_params(std::vector<Tensor>& out) override {
        out.push_back(a_);
        out.push_back(b_);
    }

    void collect_buffers(const std::string& prefix, std::vector<NamedBuffer>& out) override {
        out.push_back({prefix + ".a", &a_.data()});
        out.push_back({prefix + ".b", &b_.data()});
    }

    std::size_t workspace_elems() const override { return workspace_; }
    std::string kind() const override { return "aplu"; }

    Tensor& slopes() { return a_; }
    Tensor& hinge_locations() { return b_; }
    int segments() const { return k_; }

private:
    int k_;
    std::size_t units_;
    Tensor a_, b_;
    std::size_t workspace_ = 0;
};

// ---------------------------------------------------------------------------
// Maxout
// ---------------------------------------------------------------------------

/// Maxout block: k affine candidates per layer, elementwise max. Replaces
/// the usual dense-plus-activation pair; the gradient is routed to the
/// argmax candidate, ties to the lowest index.
class MaxoutDense : public Layer {
public:
    MaxoutDense(std::size_t in, std::size_t out, int k, Rng& rng)
        : in_(in), out_(out), k_(k) {
        if (k < 2) throw config_error("maxout rank must be >= 2, got " + std::to_string(k));
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        for (int j = 0; j < k; ++j) {
            std::vector<double> w(in * out);
            for (auto& v : w) v = rng.uniform(-limit, limit);
            w_.push_back(Tensor::of({in, out}, std::move(w), true));
            b_.push_back(Tensor({out}, 0.0, true));
        }
    }

    Tensor forward(RunContext& ctx, const Tensor& x) override {
        if (x.shape().size() != 2 || x.shape()[1] != in_)
            throw shape_error("maxout: expected [batch x " + std::to_string(in_) + "], got " +
                              shape_str(x.shape()));
        const std::size_t rows = x.rows();
        const auto k = static_cast<std::size_t>(k_);

        std::vector<std::vector<double>> weff(k);
        for (std::size_t j = 0; j < k; ++j)
            weff[j] = (ctx.quant && ctx.quant->enabled())
                          ? quantize_values(w_[j].data(), *ctx.quant)
                          : w_[j].data();

        // All k candidates are materialized before the max is taken.
        std::vector<std::vector<double>> cand(k);
        for (std::size_t j = 0; j < k; ++j) {
            cand[j].assign(rows * out_, 0.0);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t p = 0; p < in_; ++p) {
                    const double xv = x.at(i, p);
                    if (xv == 0.0) continue;
                    for (std::size_t o = 0; o < out_; ++o)
                        cand[j][i * out_ + o] += xv * weff[j][p * out_ + o];
                }
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t o = 0; o < out_; ++o) cand[j][i * out_ + o] += b_[j].at(o);
        }
        workspace_ = k * rows * out_;

        std::vector<int> best(rows * out_, 0);
        Tensor out({rows, out_}, 0.0, true);
        for (std::size_t e = 0; e < rows * out_; ++e) {
            double mx = cand[0][e];
            int arg = 0;
            for (std::size_t j = 1; j < k; ++j)
                if (cand[j][e] > mx) {
                    mx = cand[j][e];
                    arg = static_cast<int>(j);
                }
            best[e] = arg;
            out.at(e) = mx;
        }
        if (ctx.signature) ctx.signature->insert(ctx.signature->end(), best.begin(), best.end());

        if (ctx.tape) {
            ctx.tape->track(x);
            for (std::size_t j = 0; j < k; ++j) {
                ctx.tape->track(w_[j]);
                ctx.tape->track(b_[j]);
            }
            ctx.tape->track(out);
            auto xn = x.node();
            auto on = out.node();
            std::vector<std::shared_ptr<detail::TensorNode>> wn, bn;
            for (std::size_t j = 0; j < k; ++j) {
                wn.push_back(w_[j].node());
                bn.push_back(b_[j].node());
            }
            const std::size_t in = in_, outd = out_;
            ctx.tape->record([xn, on, wn, bn, weff, best, rows, in, outd] {
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t o = 0; o < outd; ++o) {
                        const std::size_t e = i * outd + o;
                        const double g = on->adj[e];
                        if (g == 0.0) continue;
                        const auto j = static_cast<std::size_t>(best[e]);
                        bn[j]->adj[o] += g;
                        for (std::size_t p = 0; p < in; ++p) {
                            wn[j]->adj[p * outd + o] += xn->data[i * in + p] * g;
                            xn->adj[i * in + p] += weff[j][p * outd + o] * g;
                        }
                    }
            });
        }
        return out;
    }

    void collect_params(std::vector<Tensor>& out) override {
        for (auto& w : w_) out.push_back(w);
        for (auto& b : b_) out.push_back(b);
    }

    void collect_buffers(const std::string& prefix, std::vector<NamedBuffer>& out) override {
        for (std::size_t j = 0; j < w_.size(); ++j) {
            out.push_back({prefix + ".w" + std::to_string(j), &w_[j].data()});
            out.push_back({prefix + ".b" + std::to_string(j), &b_[j].data()});
        }
    }

    std::size_t workspace_elems() const override { return workspace_; }
    std::string kind() const override { return "maxout"; }
    int rank() const { return k_; }

private:
    std::size_t in_, out_;
    int k_;
    std::vector<Tensor> w_, b_;
    std::size_t workspace_ = 0;
};

// ---------------------------------------------------------------------------
// ReLU / PReLU / Swish
// ---------------------------------------------------------------------------

class Relu : public Layer {
public:
    Tensor forward(RunContext& ctx, const Tensor& x) override {
        Tensor out(x.shape(), 0.0, x.requires_grad());
        for (std::size_t i = 0; i < x.size(); ++i) out.at(i) = std::max(0.0, x.at(i));
        if (ctx.signature)
            for (std::size_t i = 0; i < x.size(); ++i)
                ctx.signature->push_back(x.at(i) > 0.0 ? 1 : 0);
        if (ctx.tape && out.requires_grad()) {
            ctx.tape->track(x);
            ctx.tape->track(out);
            auto xn = x.node(), on = out.node();
            ctx.tape->record([xn, on] {
                for (std::size_t i = 0; i < on->adj.size(); ++i)
                    if (xn->data[i] > 0.0) xn->adj[i] += on->adj[i];
            });
        }
        return out;
    }

    void collect_buffers(const std::string&, std::vector<NamedBuffer>&) override {}
    std::string kind() const override { return "relu"; }
};

/// Parametric ReLU h(x) = min(0, a*x) + max(0, x) with one trainable
/// slope per layer, initialized to 0.25.
class PRelu : public Layer {
public:
    PRelu() { a_ = Tensor::of({1}, {0.25}, true); }

    Tensor forward(RunContext& ctx, const Tensor& x) override {
        const double a = a_.at(0);
        Tensor out(x.shape(), 0.0, true);
        for (std::size_t i = 0; i < x.size(); ++i)
            out.at(i) = std::min(0.0, a * x.at(i)) + std::max(0.0, x.at(i));
        if (ctx.signature)
            for (std::size_t i = 0; i < x.size(); ++i)
                ctx.signature->push_back(x.at(i) > 0.0 ? 1 : 0);
        if (ctx.tape) {
            ctx.tape->track(x);
            ctx.tape->track(a_);
            ctx.tape->track(out);
            auto xn = x.node(), an = a_.node(), on = out.node();
            ctx.tape->record([xn, an, on] {
                const double a = an->data[0];
                for (std::size_t i = 0; i < on->adj.size(); ++i) {
                    const double g = on->adj[i];
                    const double xv = xn->data[i];
                    double dx = xv > 0.0 ? 1.0 : 0.0;
                    if (a * xv < 0.0) {
                        dx += a;
                        an->adj[0] += g * xv;
                    }
                    xn->adj[i] += g * dx;
                }
            });
        }
        return out;
    }

    void collect_params(std::vector<Tensor>& out) override { out.push_back(a_); }
    void collect_buffers(const std::string& prefix, std::vector<NamedBuffer>& out) override {
        out.push_back({prefix + ".a", &a_.data()});
    }
    std::string kind() const override { return "prelu"; }
    Tensor& slope() { return a_; }

private:
    Tensor a_;
};

/// Swish h(x) = x * sigmoid(beta * x) with a trainable per-layer beta,
/// initialized to 1. Not piecewise linear.
class Swish : public Layer {
public:
    Swish() { beta_ = Tensor::of({1}, {1.0}, true); }

    Tensor forward(RunContext& ctx, const Tensor& x) override {
        const double beta = beta_.at(0);
        Tensor out(x.shape(), 0.0, true);
        std::vector<double> sig(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            sig[i] = 1.0 / (1.0 + std::exp(-beta * x.at(i)));
            out.at(i) = x.at(i) * sig[i];
        }
        if (ctx.tape) {
            ctx.tape->track(x);
            ctx.tape->track(beta_);
            ctx.tape->track(out);
            auto xn = x.node(), bn = beta_.node(), on = out.node();
            ctx.tape->record([xn, bn, on, sig] {
                const double beta = bn->data[0];
                for (std::size_t i = 0; i < on->adj.size(); ++i) {
                    const double g = on->adj[i];
                    const double xv = xn->data[i];
                    const double s = sig[i];
                    const double sp = s * (1.0 - s);
                    xn->adj[i] += g * (s + xv * beta * sp);
                    bn->adj[0] += g * xv * xv * sp;
                }
            });
        }
        return out;
    }

    void collect_params(std::vector<Tensor>& out) override { out.push_back(beta_); }
    void collect_buffers(const std::string& prefix, std::vector<NamedBuffer>& out) override {
        out.push_back({prefix + ".beta", &beta_.data()});
    }
    std::string kind() const override { return "swish"; }
    Tensor& beta() { return beta_; }

private:
    Tensor beta_;
};

/// Elementwise activation factory. Maxout is structural (it replaces the
/// dense layer) and is handled by the network builder instead.
inline std::unique_ptr<Layer> make_activation(ActivationKind kind, int segments,
                                              std::size_t units, Rng& rng,
                                              double lma_ema = 0.99,
                                              bool lma_frequency = false) {
    switch (kind) {
    case ActivationKind::relu: return std::make_unique<Relu>();
    case ActivationKind::prelu: return std::make_unique<PRelu>();
    case ActivationKind::swish: return std::make_unique<Swish>();
    case ActivationKind::aplu: return std::make_unique<Aplu>(segments, units, rng);
    case ActivationKind::lma:
        return std::make_unique<Lma>(segments, lma_ema, lma_frequency);
    case ActivationKind::maxout:
        throw config_error("maxout is a dense-layer replacement, not an elementwise activation");
    }
    throw config_error("bad activation kind");
}

} // namespace lma
