// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "lma/activations.hpp"
#include "lma/errors.hpp"
#include "lma/layers.hpp"
#include "lma/rng.hpp"
#include "lma/tensor.hpp"

namespace lma {

/// Multilayer perceptron description: widths[0] is the input dimension,
/// widths.back() the class count; every width in between is a hidden
/// layer wearing the configured activation.
struct ArchSpec {
    std::vector<std::size_t> widths;
    ActivationKind activation = ActivationKind::relu;
    int segments = 8;
    double dropout = 0.0;
    bool batchnorm = false;
    bool lma_frequency = false; // equal-count segmentation comparison mode
    double ema_factor = 0.99;

    void validate() const {
        if (widths.size() < 2)
            throw config_error("arch: need at least input and output widths");
        for (std::size_t w : widths)
            if (w == 0) throw config_error("arch: zero-width layer");
        if (is_multi_segment(activation) && segments < 2)
            throw config_error("arch: segments must be >= 2");
    }

    std::size_t input_dim() const { return widths.front(); }
    std::size_t num_classes() const { return widths.back(); }
    std::size_t hidden_layers() const { return widths.size() - 2; }

    std::string label() const {
        std::string s;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            if (i) s += "-";
            s += std::to_string(widths[i]);
        }
        s += "/" + to_string(activation);
        if (is_multi_segment(activation)) s += "-" + std::to_string(segments);
        return s;
    }

    nlohmann::json to_json() const {
        return {{"widths", widths},
                {"activation", to_string(activation)},
                {"segments", segments},
                {"dropout", dropout},
                {"batchnorm", batchnorm},
                {"lma_frequency", lma_frequency},
                {"ema_factor", ema_factor}};
    }

    static ArchSpec from_json(const nlohmann::json& j) {
        static const std::vector<std::string> known = {
            "widths", "activation", "segments",     "dropout",
            "batchnorm", "lma_frequency", "ema_factor"};
        for (auto it = j.begin(); it != j.end(); ++it)
            if (std::find(known.begin(), known.end(), it.key()) == known.end())
                throw config_error("arch: unknown key '" + it.key() + "'");
        ArchSpec a;
        if (j.contains("widths")) a.widths = j.at("widths").get<std::vector<std::size_t>>();
        if (j.contains("activation"))
            a.activation = activation_from_string(j.at("activation").get<std::string>());
        if (j.contains("segments")) a.segments = j.at("segments").get<int>();
        if (j.contains("dropout")) a.dropout = j.at("dropout").get<double>();
        if (j.contains("batchnorm")) a.batchnorm = j.at("batchnorm").get<bool>();
        if (j.contains("lma_frequency")) a.lma_frequency = j.at("lma_frequency").get<bool>();
        if (j.contains("ema_factor")) a.ema_factor = j.at("ema_factor").get<double>();
        return a;
    }
};

/// A feed-forward network assembled from an ArchSpec. Layer parameters
/// are drawn from per-layer random streams, so two architectures that
/// share their dense backbone start from byte-identical dense weights
/// regardless of what their activations consume.
class Mlp {
public:
    Mlp(ArchSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
        spec_.validate();
        for (std::size_t i = 0; i + 1 < spec_.widths.size(); ++i) {
            const std::size_t in = spec_.widths[i], out = spec_.widths[i + 1];
            const bool is_hidden = i + 2 < spec_.widths.size();
            Rng dense_rng(seed, 100 + i);
            Rng act_rng(seed, 200 + i);
            if (is_hidden && spec_.activation == ActivationKind::maxout) {
                layers_.push_back(
                    std::make_unique<MaxoutDense>(in, out, spec_.segments, dense_rng));
            } else {
                layers_.push_back(std::make_unique<Dense>(in, out, dense_rng));
                if (is_hidden) {
                    if (spec_.batchnorm)
                        layers_.push_back(std::make_unique<BatchNorm>(out, spec_.ema_factor));
                    layers_.push_back(make_activation(spec_.activation, spec_.segments, out,
                                                      act_rng, spec_.ema_factor,
                                                      spec_.lma_frequency));
                }
            }
            if (is_hidden && spec_.dropout > 0.0)
                layers_.push_back(std::make_unique<Dropout>(spec_.dropout));
        }
        dense_init_hash_ = hash_dense();
    }

    Tensor forward(RunContext& ctx, const Tensor& x) {
        Tensor h = x;
        for (auto& layer : layers_) h = layer->forward(ctx, h);
        return h;
    }

    /// Argmax class per row, eval mode, ties to the lowest index.
    std::vector<std::size_t> predict(const Tensor& x) {
        RunContext ctx;
        Tensor logits = forward(ctx, x);
        std::vector<std::size_t> out(logits.rows());
        for (std::size_t i = 0; i < logits.rows(); ++i) {
            std::size_t arg = 0;
            for (std::size_t c = 1; c < logits.cols(); ++c)
                if (logits.at(i, c) > logits.at(i, arg)) arg = c;
            out[i] = arg;
        }
        return out;
    }

    std::vector<Tensor> params() {
        std::vector<Tensor> out;
        for (auto& layer : layers_) layer->collect_params(out);
        return out;
    }

    std::vector<NamedBuffer> buffers() {
        std::vector<NamedBuffer> out;
        for (std::size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->collect_buffers("layer" + std::to_string(i) + "." + layers_[i]->kind(),
                                        out);
        return out;
    }

    const ArchSpec& arch() const { return spec_; }
    std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }

    /// Auxiliary elements materialized across all layers by the most
    /// recent forward pass.
    std::size_t last_workspace() const {
        std::size_t total = 0;
        for (const auto& layer : layers_) total += layer->workspace_elems();
        return total;
    }

    /// Fingerprint of the dense-layer weights as initialized; equal
    /// across runs that share seed and dense backbone.
    std::uint64_t dense_init_hash() const { return dense_init_hash_; }

    /// Fingerprint of the complete current state.
    std::uint64_t state_hash() {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (auto& b : buffers()) {
            h = fnv1a64(b.name.data(), b.name.size(), h);
            h = fnv1a64(*b.values, h);
        }
        return h;
    }

private:
    std::uint64_t hash_dense() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& layer : layers_)
            if (auto* d = dynamic_cast<const Dense*>(layer.get())) {
                h = fnv1a64(const_cast<Dense*>(d)->weight().data(), h);
                h = fnv1a64(const_cast<Dense*>(d)->bias().data(), h);
            }
        return h;
    }

    ArchSpec spec_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::uint64_t dense_init_hash_ = 0;
};

} // namespace lma
