// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "lma/activations.hpp"
#include "lma/errors.hpp"
#include "lma/model.hpp"

namespace lma {

/// Exact parameter and activation-workspace accounting for one network.
/// Workspace is counted in auxiliary f64/index elements materialized
/// during a batch-1 forward pass, a portable stand-in for bytes.
struct CostReport {
    struct LayerCost {
        std::string layer;
        std::size_t backbone_params = 0;   // dense weights + biases (+ batchnorm)
        std::size_t activation_params = 0; // extra trainables the activation brings
        std::size_t workspace = 0;
    };

    ActivationKind activation = ActivationKind::relu;
    int segments = 0;
    std::vector<LayerCost> per_layer;
    std::size_t backbone_params = 0;
    std::size_t activation_params = 0;
    std::size_t workspace = 0;

    std::size_t total_params() const { return backbone_params + activation_params; }
};

/// Trainable scalars an activation adds to one hidden layer of n_out
/// units fed from n_in inputs. Maxout is counted as the extra (k-1)
/// affine maps beyond the single map a plain layer would carry.
inline std::size_t activation_params_added(ActivationKind kind, int k, std::size_t n_in,
                                           std::size_t n_out) {
    switch (kind) {
    case ActivationKind::relu: return 0;
    case ActivationKind::prelu: return 1;
    case ActivationKind::swish: return 1;
    case ActivationKind::lma: return 2 * static_cast<std::size_t>(k);
    case ActivationKind::aplu: return 2 * static_cast<std::size_t>(k - 2) * n_out;
    case ActivationKind::maxout:
        return static_cast<std::size_t>(k - 1) * (n_in * n_out + n_out);
    }
    throw config_error("bad activation kind");
}

/// Auxiliary elements one activation materializes for n units at batch
/// size 1: LMA stores a segment index per unit, APLU one hinge term per
/// unit per hinge, Maxout all k candidates per unit.
inline std::size_t activation_workspace(ActivationKind kind, int k, std::size_t n) {
    switch (kind) {
    case ActivationKind::relu:
    case ActivationKind::prelu:
    case ActivationKind::swish: return 0;
    case ActivationKind::lma: return n;
    case ActivationKind::aplu: return static_cast<std::size_t>(k - 2) * n;
    case ActivationKind::maxout: return static_cast<std::size_t>(k) * n;
    }
    throw config_error("bad activation kind");
}

/// Closed-form cost walk over an architecture spec.
inline CostReport param_count(const ArchSpec& spec) {
    spec.validate();
    CostReport report;
    report.activation = spec.activation;
    report.segments = spec.segments;
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        const std::size_t in = spec.widths[i], out = spec.widths[i + 1];
        const bool is_hidden = i + 2 < spec.widths.size();
        CostReport::LayerCost lc;
        lc.layer = "layer" + std::to_string(i);
        lc.backbone_params = in * out + out;
        if (is_hidden) {
            if (spec.batchnorm) lc.backbone_params += 2 * out;
            lc.activation_params =
                activation_params_added(spec.activation, spec.segments, in, out);
            lc.workspace = activation_workspace(spec.activation, spec.segments, out);
        }
        report.backbone_params += lc.backbone_params;
        report.activation_params += lc.activation_params;
        report.workspace += lc.workspace;
        report.per_layer.push_back(std::move(lc));
    }
    return report;
}

/// Instrumented cost: parameters counted from the live tensors, workspace
/// measured from the buffers a batch-1 eval forward actually materializes.
inline CostReport measure_workspace(Mlp& model, const Tensor& sample) {
    if (sample.rows() != 1)
        throw contract_error("measure_workspace: batch size must be 1");
    RunContext ctx; // eval
    model.forward(ctx, sample);

    CostReport report;
    report.activation = model.arch().activation;
    report.segments = model.arch().segments;
    auto& layers = model.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        CostReport::LayerCost lc;
        lc.layer = "layer" + std::to_string(i) + "." + layers[i]->kind();
        std::vector<Tensor> params;
        layers[i]->collect_params(params);
        std::size_t count = 0;
        for (auto& p : params) count += p.size();
        const std::string kind = layers[i]->kind();
        if (kind == "dense" || kind == "batchnorm") {
            lc.backbone_params = count;
        } else if (kind == "maxout") {
            auto* mx = dynamic_cast<MaxoutDense*>(layers[i].get());
            const std::size_t base = count / static_cast<std::size_t>(mx->rank());
            lc.backbone_params = base;
            lc.activation_params = count - base;
        } else {
            lc.activation_params = count;
        }
        lc.workspace = layers[i]->workspace_elems();
        report.backbone_params += lc.backbone_params;
        report.activation_params += lc.activation_params;
        report.workspace += lc.workspace;
        report.per_layer.push_back(std::move(lc));
    }
    return report;
}

} // namespace lma
