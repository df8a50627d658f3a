// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: teacher training, distillation experiments,
// segment sweeps, quantized distillation, region counting, cost-model
// sweeps, and report aggregation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lma/lma.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string seeds_csv;
    std::string activation;
    std::optional<int> segments;
    std::optional<int> quant_bits;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file");
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_option("--seed", f.seed, "single seed");
    cmd->add_option("--seeds", f.seeds_csv, "comma-separated seed list");
    cmd->add_option("--activation", f.activation, "student activation kind");
    cmd->add_option("--segments", f.segments, "segment count for multi-segment kinds");
    cmd->add_option("--quant-bits", f.quant_bits, "weight quantization bits (0 = off)");
}

lma::ExperimentConfig resolve_config(const CommonFlags& f) {
    lma::ExperimentConfig cfg;
    if (!f.config_path.empty()) cfg = lma::ExperimentConfig::load(f.config_path);
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    if (f.seed) cfg.seeds = {*f.seed};
    if (!f.seeds_csv.empty()) {
        cfg.seeds.clear();
        std::stringstream ss(f.seeds_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) cfg.seeds.push_back(std::stoull(tok));
    }
    if (!f.activation.empty()) cfg.activations = {f.activation};
    if (f.segments) cfg.segments = *f.segments;
    if (f.quant_bits) cfg.quant.bits = *f.quant_bits;
    cfg.validate();
    return cfg;
}

void print_aggregates(const lma::ExperimentReport& report) {
    std::printf("%-16s %9s %9s %9s %6s\n", "arm", "mean_acc", "std_acc", "mean_loss",
                "n");
    for (const auto& a : report.aggregates)
        std::printf("%-16s %9.4f %9.4f %9.4f %6zu\n", a.arm.c_str(), a.mean_accuracy,
                    a.std_accuracy, a.mean_loss, a.completed);
}

int cmd_train_teacher(const CommonFlags& f) {
    lma::ExperimentConfig cfg = resolve_config(f);
    std::filesystem::create_directories(cfg.out_dir);
    for (std::uint64_t seed : cfg.seeds) {
        const lma::DataSplit data = lma::detail::make_data(cfg, seed);
        const lma::ArchSpec arch = lma::detail::teacher_arch(cfg, data);
        lma::TrainedModel tm = lma::train_teacher(arch, data, cfg.teacher_train, seed);
        const std::string path =
            cfg.out_dir + "/teacher-seed" + std::to_string(seed) + ".model";
        lma::save_model(*tm.net, path,
                        {{"seed", seed},
                         {"test_accuracy", tm.test_accuracy},
                         {"final_train_loss", tm.final_train_loss}});
        std::printf("teacher seed=%llu acc=%.4f loss=%.4f -> %s\n",
                    static_cast<unsigned long long>(seed), tm.test_accuracy,
                    tm.final_train_loss, path.c_str());
    }
    return 0;
}

int cmd_distill(const CommonFlags& f, bool require_quant) {
    lma::ExperimentConfig cfg = resolve_config(f);
    if (require_quant && !cfg.quant.enabled()) cfg.quant.bits = 8;
    lma::ExperimentReport report = lma::run_experiment(cfg);
    print_aggregates(report);
    std::printf("rows -> %s/report.csv\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_sweep(const CommonFlags& f) {
    lma::ExperimentConfig cfg = resolve_config(f);
    if (f.activation.empty() && cfg.activations.size() > 1) cfg.activations = {"lma"};
    lma::ExperimentReport report = lma::sweep_segments(cfg, cfg.sweep_segments);
    print_aggregates(report);
    std::printf("rows -> %s/sweep.csv\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_count_regions(const CommonFlags& f) {
    const std::string act = f.activation.empty() ? "lma" : f.activation;
    const lma::ActivationKind kind = lma::activation_from_string(act);
    const int segments = f.segments.value_or(8);
    const std::uint64_t seed = f.seed.value_or(1);

    lma::ArchSpec arch;
    arch.widths = {1, 8, 1};
    arch.activation = kind;
    arch.segments = segments;
    lma::RegionCount rc = lma::count_regions_1d_generic(arch, seed, -3.0, 3.0);

    const int rank = lma::is_multi_segment(kind) ? segments : 2;
    lma::BoundResult bound = lma::maxout_region_bound(
        static_cast<int>(arch.hidden_layers()), static_cast<int>(arch.widths[1]), rank);

    nlohmann::json out = {{"arch", rc.arch},
                          {"k", rank},
                          {"method", rc.method},
                          {"regions", rc.regions},
                          {"bound", bound.bound.str()},
                          {"degenerate", rc.degenerate},
                          {"seed", seed}};
    std::cout << out.dump(2) << "\n";
    if (!f.out_dir.empty()) {
        std::filesystem::create_directories(f.out_dir);
        lma::write_file_atomic(f.out_dir + "/regions.json", out.dump(2) + "\n");
    }
    return 0;
}

int cmd_bench_memory(const CommonFlags& f) {
    const std::string csv = lma::bench_memory_csv();
    std::cout << csv;
    if (!f.out_dir.empty()) {
        std::filesystem::create_directories(f.out_dir);
        lma::write_file_atomic(f.out_dir + "/memory.csv", csv);
    }
    return 0;
}

int cmd_report(const std::string& rows_path, const CommonFlags& f) {
    std::ifstream is(rows_path);
    if (!is) {
        std::fprintf(stderr, "cannot open %s\n", rows_path.c_str());
        return 1;
    }
    std::string csv((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    lma::ExperimentReport report;
    report.rows = lma::rows_from_csv(csv);
    report.aggregates = lma::summarize(report.rows);
    print_aggregates(report);
    if (!f.out_dir.empty()) {
        std::filesystem::create_directories(f.out_dir);
        lma::write_file_atomic(f.out_dir + "/summary.json",
                               lma::report_to_json(report).dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale experiments for multi-segment piecewise-linear activations"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string rows_path;

    auto* train_teacher = app.add_subcommand("train-teacher", "train and save teacher models");
    add_common(train_teacher, flags);
    auto* distill = app.add_subcommand("distill", "teacher + student arms experiment");
    add_common(distill, flags);
    auto* quant = app.add_subcommand("quant-distill", "distillation with weight quantization");
    add_common(quant, flags);
    auto* sweep = app.add_subcommand("sweep-segments", "segment-count study");
    add_common(sweep, flags);
    auto* regions = app.add_subcommand("count-regions", "empirical linear-region count");
    add_common(regions, flags);
    auto* bench = app.add_subcommand("bench-memory", "cost-model sweep CSV");
    add_common(bench, flags);
    auto* report = app.add_subcommand("report", "recompute aggregates from a rows CSV");
    report->add_option("rows", rows_path, "rows CSV file")->required();
    add_common(report, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_teacher->parsed()) return cmd_train_teacher(flags);
        if (distill->parsed()) return cmd_distill(flags, false);
        if (quant->parsed()) return cmd_distill(flags, true);
        if (sweep->parsed()) return cmd_sweep(flags);
        if (regions->parsed()) return cmd_count_regions(flags);
        if (bench->parsed()) return cmd_bench_memory(flags);
        if (report->parsed()) return cmd_report(rows_path, flags);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
