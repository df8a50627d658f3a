// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lma/costmodel.hpp"
#include "lma/data.hpp"
#include "lma/distill.hpp"
#include "lma/errors.hpp"
#include "lma/model.hpp"
#include "lma/serialize.hpp"

namespace lma {

/// One experiment: a task, a teacher, and a set of student activation
/// arms trained under identical seeds and schedules. Every field has a
/// default; unknown config keys are rejected.
struct ExperimentConfig {
    // task
    std::string task = "two-spirals"; // two-spirals | grid-classes | idx
    std::size_t n_samples = 1600;
    double noise = 0.04;
    std::size_t classes = 4;    // grid-classes only
    std::size_t grid_cells = 4; // grid-classes only
    std::string idx_images;    // task == idx
    std::string idx_labels;

    // architectures; input and class widths come from the task
    std::vector<std::size_t> teacher_hidden = {64, 64};
    std::string teacher_activation = "relu";
    double teacher_dropout = 0.0;
    bool teacher_batchnorm = false;
    std::vector<std::size_t> student_hidden = {8};
    double student_dropout = 0.0;
    bool student_batchnorm = false;

    // student arms
    std::vector<std::string> activations = {"relu", "prelu", "swish", "lma"};
    int segments = 8;
    bool lma_frequency = false;
    double ema_factor = 0.99;

    TrainSettings teacher_train;
    DistillConfig distill;
    QuantConfig quant;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<int> sweep_segments = {4, 6, 8, 10, 12};
    std::string out_dir = "out";

    ExperimentConfig() {
        teacher_train.lr = 0.2;
        distill.train.lr = 0.2;
    }

    void validate() const {
        if (task != "two-spirals" && task != "grid-classes" && task != "idx")
            throw config_error("task must be two-spirals | grid-classes | idx, got '" + task +
                               "'");
        if (task == "idx" && (idx_images.empty() || idx_labels.empty()))
            throw config_error("idx task needs idx_images and idx_labels paths");
        if (activations.empty()) throw config_error("at least one student activation arm");
        for (const auto& a : activations) activation_from_string(a);
        activation_from_string(teacher_activation);
        if (seeds.empty()) throw config_error("at least one seed");
        teacher_train.validate();
        distill.validate();
        quant.validate();
    }

    nlohmann::json to_json() const {
        return {{"task", task},
                {"n_samples", n_samples},
                {"noise", noise},
                {"classes", classes},
                {"grid_cells", grid_cells},
                {"idx_images", idx_images},
                {"idx_labels", idx_labels},
                {"teacher_hidden", teacher_hidden},
                {"teacher_activation", teacher_activation},
                {"teacher_dropout", teacher_dropout},
                {"teacher_batchnorm", teacher_batchnorm},
                {"student_hidden", student_hidden},
                {"student_dropout", student_dropout},
                {"student_batchnorm", student_batchnorm},
                {"activations", activations},
                {"segments", segments},
                {"lma_frequency", lma_frequency},
                {"ema_factor", ema_factor},
                {"teacher_train", teacher_train.to_json()},
                {"distill", distill.to_json()},
                {"quant_bits", quant.bits},
                {"seeds", seeds},
                {"sweep_segments", sweep_segments},
                {"out_dir", out_dir}};
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        static const std::vector<std::string> known = {
            "task",          "n_samples",       "noise",           "classes",
            "grid_cells",    "idx_images",      "idx_labels",      "teacher_hidden",
            "teacher_activation", "teacher_dropout", "teacher_batchnorm", "student_hidden",
            "student_dropout", "student_batchnorm", "activations",  "segments",
            "lma_frequency", "ema_factor",      "teacher_train",   "distill",
            "quant_bits",    "seeds",           "sweep_segments",  "out_dir"};
        for (auto it = j.begin(); it != j.end(); ++it)
            if (std::find(known.begin(), known.end(), it.key()) == known.end())
                throw config_error("config: unknown key '" + it.key() + "'");
        ExperimentConfig c;
        if (j.contains("task")) c.task = j.at("task").get<std::string>();
        if (j.contains("n_samples")) c.n_samples = j.at("n_samples").get<std::size_t>();
        if (j.contains("noise")) c.noise = j.at("noise").get<double>();
        if (j.contains("classes")) c.classes = j.at("classes").get<std::size_t>();
        if (j.contains("grid_cells")) c.grid_cells = j.at("grid_cells").get<std::size_t>();
        if (j.contains("idx_images")) c.idx_images = j.at("idx_images").get<std::string>();
        if (j.contains("idx_labels")) c.idx_labels = j.at("idx_labels").get<std::string>();
        if (j.contains("teacher_hidden"))
            c.teacher_hidden = j.at("teacher_hidden").get<std::vector<std::size_t>>();
        if (j.contains("teacher_activation"))
            c.teacher_activation = j.at("teacher_activation").get<std::string>();
        if (j.contains("teacher_dropout"))
            c.teacher_dropout = j.at("teacher_dropout").get<double>();
        if (j.contains("teacher_batchnorm"))
            c.teacher_batchnorm = j.at("teacher_batchnorm").get<bool>();
        if (j.contains("student_hidden"))
            c.student_hidden = j.at("student_hidden").get<std::vector<std::size_t>>();
        if (j.contains("student_dropout"))
            c.student_dropout = j.at("student_dropout").get<double>();
        if (j.contains("student_batchnorm"))
            c.student_batchnorm = j.at("student_batchnorm").get<bool>();
        if (j.contains("activations"))
            c.activations = j.at("activations").get<std::vector<std::string>>();
        if (j.contains("segments")) c.segments = j.at("segments").get<int>();
        if (j.contains("lma_frequency")) c.lma_frequency = j.at("lma_frequency").get<bool>();
        if (j.contains("ema_factor")) c.ema_factor = j.at("ema_factor").get<double>();
        if (j.contains("teacher_train"))
            c.teacher_train = TrainSettings::from_json(j.at("teacher_train"));
        if (j.contains("distill")) c.distill = DistillConfig::from_json(j.at("distill"));
        if (j.contains("quant_bits")) c.quant.bits = j.at("quant_bits").get<int>();
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("sweep_segments"))
            c.sweep_segments = j.at("sweep_segments").get<std::vector<int>>();
        if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
        c.validate();
        return c;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw config_error("cannot open config '" + path + "'");
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw config_error("config parse error in '" + path + "': " + e.what());
        }
        return from_json(j);
    }
};

/// One trained run: a (seed, arm) cell of the experiment grid.
struct SeedRow {
    std::string task;
    std::string arm;
    std::string activation;
    int segments = 0;
    int quant_bits = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    double test_accuracy = 0.0;
    double final_train_loss = 0.0;
    double wall_seconds = 0.0; // reported in JSON only, never in the CSV
    std::size_t params_total = 0;
    std::size_t activation_params = 0;
    std::size_t workspace = 0;
    std::uint64_t init_hash = 0;
    std::uint64_t teacher_hash = 0;
};

/// Mean and n-1 standard deviation of completed seeds per arm.
struct ArmSummary {
    std::string arm;
    std::size_t completed = 0;
    std::size_t failed = 0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double mean_loss = 0.0;
};

struct ExperimentReport {
    nlohmann::json config;
    std::vector<SeedRow> rows;
    std::vector<ArmSummary> aggregates;
};

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_hex(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace detail

/// Aggregates are a pure function of the rows.
inline std::vector<ArmSummary> summarize(const std::vector<SeedRow>& rows) {
    std::vector<ArmSummary> out;
    std::vector<std::string> order;
    for (const auto& r : rows)
        if (std::find(order.begin(), order.end(), r.arm) == order.end())
            order.push_back(r.arm);
    for (const auto& arm : order) {
        ArmSummary s;
        s.arm = arm;
        std::vector<double> accs, losses;
        for (const auto& r : rows)
            if (r.arm == arm) {
                if (r.failed) {
                    ++s.failed;
                    continue;
                }
                accs.push_back(r.test_accuracy);
                losses.push_back(r.final_train_loss);
            }
        s.completed = accs.size();
        if (!accs.empty()) {
            for (double a : accs) s.mean_accuracy += a;
            s.mean_accuracy /= static_cast<double>(accs.size());
            for (double l : losses) s.mean_loss += l;
            s.mean_loss /= static_cast<double>(losses.size());
            if (accs.size() > 1) {
                double ss = 0.0;
                for (double a : accs) ss += (a - s.mean_accuracy) * (a - s.mean_accuracy);
                s.std_accuracy = std::sqrt(ss / static_cast<double>(accs.size() - 1));
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline const char* kCsvHeader =
    "task,arm,activation,segments,quant_bits,seed,failed,test_accuracy,"
    "final_train_loss,params_total,activation_params_added,workspace_elems,"
    "init_hash,teacher_hash";

inline std::string rows_to_csv(const std::vector<SeedRow>& rows) {
    std::string out = kCsvHeader;
    out += "\n";
    for (const auto& r : rows) {
        out += r.task + "," + r.arm + "," + r.activation + "," + std::to_string(r.segments) +
               "," + std::to_string(r.quant_bits) + "," + std::to_string(r.seed) + "," +
               (r.failed ? "1" : "0") + "," + detail::fmt_g17(r.test_accuracy) + "," +
               detail::fmt_g17(r.final_train_loss) + "," + std::to_string(r.params_total) +
               "," + std::to_string(r.activation_params) + "," + std::to_string(r.workspace) +
               "," + detail::fmt_hex(r.init_hash) + "," + detail::fmt_hex(r.teacher_hash) +
               "\n";
    }
    return out;
}

inline std::vector<SeedRow> rows_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw format_error("rows csv: empty", 0);
    if (line != kCsvHeader) throw format_error("rows csv: unexpected header", 0);
    std::vector<SeedRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 14)
            throw format_error("rows csv: expected 14 cells, got " +
                               std::to_string(cells.size()), 0);
        SeedRow r;
        r.task = cells[0];
        r.arm = cells[1];
        r.activation = cells[2];
        r.segments = std::stoi(cells[3]);
        r.quant_bits = std::stoi(cells[4]);
        r.seed = std::stoull(cells[5]);
        r.failed = cells[6] == "1";
        r.test_accuracy = std::stod(cells[7]);
        r.final_train_loss = std::stod(cells[8]);
        r.params_total = std::stoull(cells[9]);
        r.activation_params = std::stoull(cells[10]);
        r.workspace = std::stoull(cells[11]);
        r.init_hash = std::stoull(cells[12], nullptr, 16);
        r.teacher_hash = std::stoull(cells[13], nullptr, 16);
        rows.push_back(std::move(r));
    }
    return rows;
}

inline nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"task", r.task},
                        {"arm", r.arm},
                        {"activation", r.activation},
                        {"segments", r.segments},
                        {"quant_bits", r.quant_bits},
                        {"seed", r.seed},
                        {"failed", r.failed},
                        {"test_accuracy", r.test_accuracy},
                        {"final_train_loss", r.final_train_loss},
                        {"wall_seconds", r.wall_seconds},
                        {"params_total", r.params_total},
                        {"activation_params_added", r.activation_params},
                        {"workspace_elems", r.workspace},
                        {"init_hash", detail::fmt_hex(r.init_hash)},
                        {"teacher_hash", detail::fmt_hex(r.teacher_hash)}});
    nlohmann::json aggs = nlohmann::json::array();
    for (const auto& a : report.aggregates)
        aggs.push_back({{"arm", a.arm},
                        {"completed", a.completed},
                        {"failed", a.failed},
                        {"mean_accuracy", a.mean_accuracy},
                        {"std_accuracy", a.std_accuracy},
                        {"mean_loss", a.mean_loss}});
    return {{"config", report.config}, {"rows", rows}, {"aggregates", aggs}};
}

namespace detail {

inline DataSplit make_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.task == "idx") {
        Dataset full = load_idx(cfg.idx_images, cfg.idx_labels);
        return split_80_20(full, seed);
    }
    return gen_synthetic(cfg.task, cfg.n_samples, cfg.noise, seed, cfg.classes,
                         cfg.grid_cells);
}

inline ArchSpec teacher_arch(const ExperimentConfig& cfg, const DataSplit& data) {
    ArchSpec a;
    a.widths.push_back(data.train.input_dim);
    for (std::size_t w : cfg.teacher_hidden) a.widths.push_back(w);
    a.widths.push_back(data.train.num_classes);
    a.activation = activation_from_string(cfg.teacher_activation);
    a.segments = cfg.segments;
    a.dropout = cfg.teacher_dropout;
    a.batchnorm = cfg.teacher_batchnorm;
    a.ema_factor = cfg.ema_factor;
    return a;
}

inline ArchSpec student_arch(const ExperimentConfig& cfg, const DataSplit& data,
                             const std::string& activation, int segments) {
    ArchSpec a;
    a.widths.push_back(data.train.input_dim);
    for (std::size_t w : cfg.student_hidden) a.widths.push_back(w);
    a.widths.push_back(data.train.num_classes);
    a.activation = activation_from_string(activation);
    a.segments = segments;
    a.dropout = cfg.student_dropout;
    a.batchnorm = cfg.student_batchnorm;
    a.lma_frequency = cfg.lma_frequency;
    a.ema_factor = cfg.ema_factor;
    return a;
}

inline std::string arm_name(const std::string& activation, int segments, int quant_bits) {
    std::string name = activation;
    if (is_multi_segment(activation_from_string(activation)))
        name += "-" + std::to_string(segments);
    if (quant_bits) name += "@" + std::to_string(quant_bits) + "bit";
    return name;
}

} // namespace detail

/// Train the teacher once per seed and every student arm under the
/// identical protocol; rows carry the cost-model columns. A failed seed
/// (diverged training) is marked and excluded from aggregates.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       bool write_files = true) {
    cfg.validate();
    ExperimentReport report;
    report.config = cfg.to_json();

    for (std::uint64_t seed : cfg.seeds) {
        const DataSplit data = detail::make_data(cfg, seed);
        const ArchSpec t_arch = detail::teacher_arch(cfg, data);
        TrainedModel teacher = train_teacher(t_arch, data, cfg.teacher_train, seed);
        const std::uint64_t teacher_hash = teacher.net->state_hash();

        SeedRow trow;
        trow.task = cfg.task;
        trow.arm = "teacher";
        trow.activation = cfg.teacher_activation;
        trow.segments = is_multi_segment(t_arch.activation) ? cfg.segments : 0;
        trow.seed = seed;
        trow.test_accuracy = teacher.test_accuracy;
        trow.final_train_loss = teacher.final_train_loss;
        trow.wall_seconds = teacher.wall_seconds;
        trow.params_total = param_count(t_arch).total_params();
        trow.init_hash = teacher.init_hash;
        trow.teacher_hash = teacher_hash;
        report.rows.push_back(trow);

        for (const auto& act : cfg.activations) {
            const ArchSpec s_arch = detail::student_arch(cfg, data, act, cfg.segments);
            SeedRow row;
            row.task = cfg.task;
            row.activation = act;
            row.segments = is_multi_segment(s_arch.activation) ? cfg.segments : 0;
            row.quant_bits = cfg.quant.bits;
            row.arm = detail::arm_name(act, cfg.segments, cfg.quant.bits);
            row.seed = seed;
            row.teacher_hash = teacher_hash;
            const CostReport cost = param_count(s_arch);
            row.params_total = cost.total_params();
            row.activation_params = cost.activation_params;
            try {
                TrainedModel student =
                    train_student(s_arch, *teacher.net, data, cfg.distill, seed,
                                  cfg.quant.enabled() ? &cfg.quant : nullptr);
                row.test_accuracy = student.test_accuracy;
                row.final_train_loss = student.final_train_loss;
                row.wall_seconds = student.wall_seconds;
                row.init_hash = student.init_hash;
                Tensor sample({1, data.train.input_dim});
                for (std::size_t d = 0; d < data.train.input_dim; ++d)
                    sample.at(d) = data.train.xs[d];
                row.workspace = measure_workspace(*student.net, sample).workspace;
            } catch (const training_failure&) {
                row.failed = true;
                row.workspace = cost.workspace;
            }
            if (teacher.net->state_hash() != teacher_hash)
                throw invariant_error("teacher parameters changed during student training");
            report.rows.push_back(row);
        }
    }

    report.aggregates = summarize(report.rows);

    if (write_files && !cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_file_atomic(cfg.out_dir + "/report.csv", rows_to_csv(report.rows));
        write_file_atomic(cfg.out_dir + "/report.json", report_to_json(report).dump(2) + "\n");
    }
    return report;
}

/// One full experiment per segment count; combined rows keep the
/// segments and workspace columns so the cost trend is in the output.
inline ExperimentReport sweep_segments(const ExperimentConfig& cfg,
                                       const std::vector<int>& k_values,
                                       bool write_files = true) {
    cfg.validate();
    std::vector<std::string> arms;
    for (const auto& a : cfg.activations)
        if (activation_from_string(a) == ActivationKind::lma ||
            activation_from_string(a) == ActivationKind::aplu)
            arms.push_back(a);
    if (arms.empty())
        throw config_error("sweep-segments: needs an lma or aplu activation arm");
    for (int k : k_values) {
        if (k < 2) throw config_error("sweep-segments: k must be >= 2");
        for (const auto& a : arms)
            if (activation_from_string(a) == ActivationKind::lma && k % 2 != 0)
                throw config_error("sweep-segments: LMA needs even k, got " +
                                   std::to_string(k));
    }

    ExperimentReport combined;
    combined.config = cfg.to_json();
    combined.config["sweep_segments"] = k_values;
    for (int k : k_values) {
        ExperimentConfig sub = cfg;
        sub.activations = arms;
        sub.segments = k;
        sub.out_dir.clear();
        ExperimentReport r = run_experiment(sub, false);
        for (auto& row : r.rows)
            if (row.arm != "teacher") combined.rows.push_back(row);
    }
    combined.aggregates = summarize(combined.rows);
    if (write_files && !cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_file_atomic(cfg.out_dir + "/sweep.csv", rows_to_csv(combined.rows));
        write_file_atomic(cfg.out_dir + "/sweep.json",
                          report_to_json(combined).dump(2) + "\n");
    }
    return combined;
}

/// Cost-model sweep CSV: closed-form parameter additions and measured
/// workspace per activation over widths and segment counts.
inline std::string bench_memory_csv(const std::vector<std::size_t>& widths = {4, 16, 64},
                                    const std::vector<int>& ks = {4, 8, 12}) {
    std::string csv = "activation,n,k,params_added,workspace_elems\n";
    for (const auto kind :
         {ActivationKind::relu, ActivationKind::prelu, ActivationKind::swish,
          ActivationKind::lma, ActivationKind::aplu, ActivationKind::maxout}) {
        for (std::size_t n : widths)
            for (int k : ks) {
                ArchSpec arch;
                arch.widths = {2, n, 2};
                arch.activation = kind;
                arch.segments = k;
                Mlp net(arch, 1);
                // One train-mode pass so batch-statistics layers hold
                // eval-time state before measuring.
                Rng rng(1, 99);
                Tensor calib({16, 2});
                for (std::size_t i = 0; i < calib.size(); ++i) calib.at(i) = rng.normal();
                RunContext train_ctx{nullptr, &rng, true, nullptr, nullptr};
                net.forward(train_ctx, calib);
                Tensor sample({1, 2}, 0.5);
                const CostReport measured = measure_workspace(net, sample);
                csv += to_string(kind) + "," + std::to_string(n) + "," + std::to_string(k) +
                       "," + std::to_string(measured.activation_params) + "," +
                       std::to_string(measured.workspace) + "\n";
            }
    }
    return csv;
}

} // namespace lma
