// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "lma/data.hpp"
#include "lma/errors.hpp"
#include "lma/model.hpp"
#include "lma/optim.hpp"
#include "lma/quantize.hpp"
#include "lma/tensor.hpp"

namespace lma {

/// Optimizer and schedule settings shared by teacher and student runs.
/// The learning rate is halved when validation accuracy stops improving.
struct TrainSettings {
    std::string optimizer = "sgd"; // sgd | adam
    double lr = 0.1;
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double weight_decay = 0.0;
    int epochs = 200;
    int batch_size = 64;
    double lr_decay_factor = 0.5;
    int plateau_patience = 10;
    int plateau_cooldown = 8;
    int max_decays = 11;
    double val_fraction = 0.1;

    void validate() const {
        if (lr <= 0.0) throw config_error("train: lr must be positive");
        if (epochs < 0) throw config_error("train: epochs must be >= 0");
        if (batch_size < 1) throw config_error("train: batch_size must be >= 1");
        if (val_fraction < 0.0 || val_fraction >= 1.0)
            throw config_error("train: val_fraction must be in [0, 1)");
        opt_kind_from_string(optimizer);
    }

    nlohmann::json to_json() const {
        return {{"optimizer", optimizer},
                {"lr", lr},
                {"momentum", momentum},
                {"adam_beta1", adam_beta1},
                {"adam_beta2", adam_beta2},
                {"weight_decay", weight_decay},
                {"epochs", epochs},
                {"batch_size", batch_size},
                {"lr_decay_factor", lr_decay_factor},
                {"plateau_patience", plateau_patience},
                {"plateau_cooldown", plateau_cooldown},
                {"max_decays", max_decays},
                {"val_fraction", val_fraction}};
    }

    static TrainSettings from_json(const nlohmann::json& j) {
        static const std::vector<std::string> known = {
            "optimizer",      "lr",       "momentum",        "adam_beta1",
            "adam_beta2",     "weight_decay", "epochs",      "batch_size",
            "lr_decay_factor", "plateau_patience", "plateau_cooldown", "max_decays",
            "val_fraction"};
        for (auto it = j.begin(); it != j.end(); ++it)
            if (std::find(known.begin(), known.end(), it.key()) == known.end())
                throw config_error("train: unknown key '" + it.key() + "'");
        TrainSettings t;
        if (j.contains("optimizer")) t.optimizer = j.at("optimizer").get<std::string>();
        if (j.contains("lr")) t.lr = j.at("lr").get<double>();
        if (j.contains("momentum")) t.momentum = j.at("momentum").get<double>();
        if (j.contains("adam_beta1")) t.adam_beta1 = j.at("adam_beta1").get<double>();
        if (j.contains("adam_beta2")) t.adam_beta2 = j.at("adam_beta2").get<double>();
        if (j.contains("weight_decay")) t.weight_decay = j.at("weight_decay").get<double>();
        if (j.contains("epochs")) t.epochs = j.at("epochs").get<int>();
        if (j.contains("batch_size")) t.batch_size = j.at("batch_size").get<int>();
        if (j.contains("lr_decay_factor"))
            t.lr_decay_factor = j.at("lr_decay_factor").get<double>();
        if (j.contains("plateau_patience"))
            t.plateau_patience = j.at("plateau_patience").get<int>();
        if (j.contains("plateau_cooldown"))
            t.plateau_cooldown = j.at("plateau_cooldown").get<int>();
        if (j.contains("max_decays")) t.max_decays = j.at("max_decays").get<int>();
        if (j.contains("val_fraction")) t.val_fraction = j.at("val_fraction").get<double>();
        t.validate();
        return t;
    }
};

/// Weighted distillation loss settings: weight alpha on the teacher
/// term, soften temperature tau, and the tau^2 rescaling of the KL term
/// that keeps gradient magnitudes temperature-invariant.
struct DistillConfig {
    double alpha = 0.7;
    double tau = 2.0;
    bool tau_squared = true;
    TrainSettings train;

    void validate() const {
        if (alpha < 0.0 || alpha > 1.0)
            throw config_error("distill: alpha must be in [0, 1]");
        if (tau <= 0.0) throw config_error("distill: tau must be positive");
        train.validate();
    }

    nlohmann::json to_json() const {
        return {{"alpha", alpha},
                {"tau", tau},
                {"tau_squared", tau_squared},
                {"train", train.to_json()}};
    }

    static DistillConfig from_json(const nlohmann::json& j) {
        static const std::vector<std::string> known = {"alpha", "tau", "tau_squared", "train"};
        for (auto it = j.begin(); it != j.end(); ++it)
            if (std::find(known.begin(), known.end(), it.key()) == known.end())
                throw config_error("distill: unknown key '" + it.key() + "'");
        DistillConfig d;
        if (j.contains("alpha")) d.alpha = j.at("alpha").get<double>();
        if (j.contains("tau")) d.tau = j.at("tau").get<double>();
        if (j.contains("tau_squared")) d.tau_squared = j.at("tau_squared").get<bool>();
        if (j.contains("train")) d.train = TrainSettings::from_json(j.at("train"));
        d.validate();
        return d;
    }
};

/// logits / tau, feeding a softmax downstream.
inline Tensor soften_logits(Tape* tape, const Tensor& logits, double tau) {
    if (tau <= 0.0)
        throw config_error("soften_logits: temperature must be positive, got " +
                           std::to_string(tau));
    return scale(tape, logits, 1.0 / tau);
}

/// (1 - alpha) * CE(student, labels) + alpha * [tau^2] * KL(teacher || student),
/// the KL term computed between distributions softened at tau. Teacher
/// logits are targets only; no gradient may flow into them.
inline Tensor distill_loss(Tape* tape, const Tensor& student_logits,
                           const Tensor& teacher_logits,
                           const std::vector<std::size_t>& labels, const DistillConfig& cfg) {
    cfg.validate();
    if (teacher_logits.requires_grad())
        throw contract_error("distill_loss: teacher logits must not require gradients");
    if (student_logits.shape() != teacher_logits.shape())
        throw shape_error("distill_loss: student " + shape_str(student_logits.shape()) +
                          " vs teacher " + shape_str(teacher_logits.shape()));
    const Tensor teacher_soft = softmax(teacher_logits, cfg.tau);
    Tensor ce = softmax_cross_entropy(tape, student_logits, labels);
    Tensor kl = kl_to_softened(tape, student_logits, teacher_soft, cfg.tau);
    const double kl_weight = cfg.alpha * (cfg.tau_squared ? cfg.tau * cfg.tau : 1.0);
    return add(tape, scale(tape, ce, 1.0 - cfg.alpha), scale(tape, kl, kl_weight));
}

/// A model with its training record.
struct TrainedModel {
    std::shared_ptr<Mlp> net;
    double test_accuracy = 0.0;
    double final_train_loss = 0.0;
    std::vector<double> epoch_loss;
    std::vector<double> epoch_test_acc;
    std::uint64_t init_hash = 0; // dense backbone fingerprint at init
    double wall_seconds = 0.0;
};

/// Fraction of correctly argmax-classified rows; quantized weights are
/// used when a quant config is supplied.
inline double accuracy(Mlp& net, const Dataset& data, const QuantConfig* quant = nullptr) {
    if (data.size() == 0) return 0.0;
    RunContext ctx;
    ctx.quant = quant;
    Tensor logits = net.forward(ctx, data.all_x());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        std::size_t arg = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c)
            if (logits.at(i, c) > logits.at(i, arg)) arg = c;
        if (arg == data.ys[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace detail {

/// Shared training loop. A null teacher means plain supervised training;
/// with a teacher the loss is the weighted distillation loss. Random
/// streams depend only on (seed, stream id), so two runs over the same
/// data and schedule consume identical batches.
inline TrainedModel fit(const ArchSpec& arch, const DataSplit& data, const TrainSettings& ts,
                        std::uint64_t seed, Mlp* teacher, const DistillConfig* dcfg,
                        const QuantConfig* qcfg) {
    ts.validate();
    if (qcfg) qcfg->validate();
    const auto t0 = std::chrono::steady_clock::now();

    TrainedModel result;
    result.net = std::make_shared<Mlp>(arch, seed);
    Mlp& net = *result.net;
    result.init_hash = net.dense_init_hash();

    auto params = net.params();
    Optimizer opt = (opt_kind_from_string(ts.optimizer) == OptKind::adam)
                        ? Optimizer::adam(params, ts.lr, ts.adam_beta1, ts.adam_beta2, 1e-8,
                                          ts.weight_decay)
                        : Optimizer::sgd(params, ts.lr, ts.momentum, ts.weight_decay);

    Rng shuffle_rng(seed, 300);
    Rng dropout_rng(seed, 301);
    Rng split_rng(seed, 302);

    // Hold out a validation slice of the training set for the plateau
    // schedule; the test set never steers training.
    const std::size_t n = data.train.size();
    auto perm = split_rng.permutation(n);
    const auto n_val = static_cast<std::size_t>(ts.val_fraction * static_cast<double>(n));
    std::vector<std::size_t> train_idx(perm.begin(), perm.end() - static_cast<long>(n_val));
    std::vector<std::size_t> val_idx(perm.end() - static_cast<long>(n_val), perm.end());

    const QuantConfig* quant = (qcfg && qcfg->enabled()) ? qcfg : nullptr;

    double best_val = -1.0;
    int since_improve = 0, cooldown = 0, decays = 0;

    for (int epoch = 0; epoch < ts.epochs; ++epoch) {
        shuffle_rng.shuffle(train_idx);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(ts.batch_size)) {
            const std::size_t stop =
                std::min(train_idx.size(), start + static_cast<std::size_t>(ts.batch_size));
            std::vector<std::size_t> batch(train_idx.begin() + static_cast<long>(start),
                                           train_idx.begin() + static_cast<long>(stop));
            Tensor x = data.train.batch_x(batch);
            auto y = data.train.batch_y(batch);

            Tape tape;
            RunContext ctx{&tape, &dropout_rng, true, quant, nullptr};
            Tensor logits = net.forward(ctx, x);
            Tensor loss;
            if (teacher) {
                RunContext teacher_ctx; // eval: EMA statistics, no tape
                Tensor teacher_logits = detach(teacher->forward(teacher_ctx, x));
                loss = distill_loss(&tape, logits, teacher_logits, y, *dcfg);
            } else {
                loss = softmax_cross_entropy(&tape, logits, y);
            }
            const double lv = loss.item();
            if (!std::isfinite(lv))
                throw training_failure("training diverged: non-finite loss at epoch " +
                                           std::to_string(epoch),
                                       epoch, lv);
            tape.backward(loss);
            opt.step();
            opt.zero_grad();
            epoch_loss += lv * static_cast<double>(batch.size());
            seen += batch.size();
        }
        epoch_loss /= static_cast<double>(seen ? seen : 1);
        result.epoch_loss.push_back(epoch_loss);
        result.epoch_test_acc.push_back(accuracy(net, data.test, quant));

        if (!val_idx.empty() && ts.plateau_patience > 0) {
            Dataset val;
            val.input_dim = data.train.input_dim;
            val.num_classes = data.train.num_classes;
            val.xs.reserve(val_idx.size() * val.input_dim);
            for (std::size_t i : val_idx) {
                for (std::size_t k = 0; k < val.input_dim; ++k)
                    val.xs.push_back(data.train.xs[i * val.input_dim + k]);
                val.ys.push_back(data.train.ys[i]);
            }
            const double val_acc = accuracy(net, val, quant);
            if (cooldown > 0) --cooldown;
            if (val_acc > best_val + 1e-12) {
                best_val = val_acc;
                since_improve = 0;
            } else if (cooldown == 0) {
                ++since_improve;
                if (since_improve >= ts.plateau_patience && decays < ts.max_decays) {
                    opt.set_lr(opt.lr() * ts.lr_decay_factor);
                    ++decays;
                    cooldown = ts.plateau_cooldown;
                    since_improve = 0;
                }
            }
        }
    }

    result.final_train_loss = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
    result.test_accuracy = accuracy(net, data.test, quant);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

} // namespace detail

/// Plain supervised training of the (teacher) architecture.
inline TrainedModel train_teacher(const ArchSpec& arch, const DataSplit& data,
                                  const TrainSettings& ts, std::uint64_t seed) {
    return detail::fit(arch, data, ts, seed, nullptr, nullptr, nullptr);
}

/// Student training under the weighted distillation loss. The teacher is
/// only ever run in eval mode, so its parameters and running statistics
/// stay frozen.
inline TrainedModel train_student(const ArchSpec& arch, Mlp& teacher, const DataSplit& data,
                                  const DistillConfig& cfg, std::uint64_t seed,
                                  const QuantConfig* qcfg = nullptr) {
    cfg.validate();
    return detail::fit(arch, data, cfg.train, seed, &teacher, &cfg, qcfg);
}

/// Distillation with k-bit weight quantization: forward passes use the
/// quantized weights, updates move the full-precision shadows.
inline TrainedModel quantized_distill_train(const ArchSpec& arch, Mlp& teacher,
                                            const DataSplit& data, const DistillConfig& dcfg,
                                            const QuantConfig& qcfg, std::uint64_t seed) {
    qcfg.validate();
    if (!qcfg.enabled())
        throw config_error("quantized_distill_train: quant bits must be set");
    return train_student(arch, teacher, data, dcfg, seed, &qcfg);
}

} // namespace lma
