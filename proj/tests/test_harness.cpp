// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lma/data.hpp"
#include "lma/experiment.hpp"

using namespace lma;

namespace {

// 1-NN classifier, the oracle for the noise-free spirals split.
std::size_t nearest_neighbor(const Dataset& train, double px, double py) {
    double best = 1e300;
    std::size_t label = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double dx = train.xs[2 * i] - px, dy = train.xs[2 * i + 1] - py;
        const double d = dx * dx + dy * dy;
        if (d < best) {
            best = d;
            label = train.ys[i];
        }
    }
    return label;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
}

void push_be_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

// 3 images of 2x2 pixels plus matching labels.
std::pair<std::string, std::string> make_idx_pair() {
    std::vector<unsigned char> img;
    push_be_u32(img, 0x00000803);
    push_be_u32(img, 3);
    push_be_u32(img, 2);
    push_be_u32(img, 2);
    for (unsigned char p : {0, 51, 102, 153, 204, 255, 10, 20, 30, 40, 50, 60})
        img.push_back(p);
    std::vector<unsigned char> lab;
    push_be_u32(lab, 0x00000801);
    push_be_u32(lab, 3);
    for (unsigned char y : {7, 0, 3}) lab.push_back(y);
    const std::string ip = temp_path("lma_test_images.idx");
    const std::string lp = temp_path("lma_test_labels.idx");
    write_bytes(ip, img);
    write_bytes(lp, lab);
    return {ip, lp};
}

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.n_samples = 200;
    cfg.noise = 0.05;
    cfg.teacher_hidden = {16};
    cfg.student_hidden = {4};
    cfg.activations = {"relu", "lma"};
    cfg.segments = 4;
    cfg.teacher_train.epochs = 6;
    cfg.distill.train.epochs = 6;
    cfg.seeds = {1, 2};
    cfg.out_dir.clear();
    return cfg;
}

} // namespace

TEST_CASE("synthetic generation is deterministic in the seed") {
    DataSplit a = gen_synthetic("two-spirals", 300, 0.1, 42);
    DataSplit b = gen_synthetic("two-spirals", 300, 0.1, 42);
    CHECK(a.train.xs == b.train.xs);
    CHECK(a.train.ys == b.train.ys);
    CHECK(a.test.xs == b.test.xs);
    DataSplit c = gen_synthetic("two-spirals", 300, 0.1, 43);
    CHECK(a.train.xs != c.train.xs);
}

TEST_CASE("split is 80/20 through a fixed permutation") {
    DataSplit d = gen_synthetic("two-spirals", 500, 0.1, 1);
    CHECK(d.train.size() == 400);
    CHECK(d.test.size() == 100);
    CHECK(d.train.input_dim == 2);
    CHECK(d.train.num_classes == 2);
}

TEST_CASE("noise-free spirals are disjoint: 1-NN classifies the test set") {
    DataSplit d = gen_synthetic("two-spirals", 1000, 0.0, 9);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < d.test.size(); ++i)
        if (nearest_neighbor(d.train, d.test.xs[2 * i], d.test.xs[2 * i + 1]) == d.test.ys[i])
            ++hits;
    CHECK(hits == d.test.size());
}

TEST_CASE("grid-classes labels are the parity pair of the cell indices") {
    DataSplit d = gen_synthetic("grid-classes", 600, 0.0, 5, 4, 4);
    auto check_set = [](const Dataset& ds) {
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double px = ds.xs[2 * i], py = ds.xs[2 * i + 1];
            auto cell = [](double v) {
                long c = static_cast<long>(std::floor((v + 1.0) * 0.5 * 4.0));
                return static_cast<std::size_t>(std::clamp(c, 0L, 3L));
            };
            const std::size_t expected = (cell(px) % 2) * 2 + (cell(py) % 2);
            REQUIRE(ds.ys[i] == expected);
        }
    };
    check_set(d.train);
    check_set(d.test);
}

TEST_CASE("too few samples for the class count is a config error") {
    CHECK_THROWS_AS(gen_synthetic("two-spirals", 15, 0.0, 1), config_error);
    CHECK_THROWS_AS(gen_synthetic("grid-classes", 30, 0.0, 1, 4), config_error);
    CHECK_THROWS_AS(gen_synthetic("nope", 100, 0.0, 1), config_error);
}

TEST_CASE("IDX pair loads with scaled pixels") {
    auto [ip, lp] = make_idx_pair();
    Dataset d = load_idx(ip, lp);
    CHECK(d.size() == 3);
    CHECK(d.input_dim == 4);
    CHECK(d.num_classes == 8); // max label 7
    CHECK(d.ys == std::vector<std::size_t>{7, 0, 3});
    CHECK(d.xs[0] == 0.0);
    CHECK(d.xs[5] == 1.0); // byte 255 scaled
    CHECK_THAT(d.xs[1], Catch::Matchers::WithinAbs(51.0 / 255.0, 1e-15));
    std::remove(ip.c_str());
    std::remove(lp.c_str());
}

TEST_CASE("IDX magic mismatches are format errors") {
    auto [ip, lp] = make_idx_pair();
    // Labels file offered where images are expected, and vice versa.
    CHECK_THROWS_AS(load_idx_images(lp), format_error);
    CHECK_THROWS_AS(load_idx_labels(ip), format_error);
    std::remove(ip.c_str());
    std::remove(lp.c_str());
}

TEST_CASE("truncated IDX payload reports the byte offset") {
    std::vector<unsigned char> img;
    push_be_u32(img, 0x00000803);
    push_be_u32(img, 2);
    push_be_u32(img, 2);
    push_be_u32(img, 2);
    img.push_back(1); // 1 of 8 payload bytes
    const std::string p = temp_path("lma_test_trunc.idx");
    write_bytes(p, img);
    try {
        load_idx_images(p);
        FAIL("expected format_error");
    } catch (const format_error& e) {
        CHECK(e.byte_offset() == 17); // where the file actually ends
    }
    std::remove(p.c_str());
}

TEST_CASE("IDX header arithmetic must match the file length exactly") {
    std::vector<unsigned char> lab;
    push_be_u32(lab, 0x00000801);
    push_be_u32(lab, 2);
    for (unsigned char y : {1, 0, 9}) lab.push_back(y); // one byte too many
    const std::string p = temp_path("lma_test_trail.idx");
    write_bytes(p, lab);
    try {
        load_idx_labels(p);
        FAIL("expected format_error");
    } catch (const format_error& e) {
        CHECK(e.byte_offset() == 10); // first trailing byte
    }
    std::remove(p.c_str());
}

TEST_CASE("experiment config defaults parse from an empty document") {
    ExperimentConfig cfg = ExperimentConfig::from_json(nlohmann::json::object());
    CHECK(cfg.task == "two-spirals");
    CHECK(cfg.seeds.size() == 5);
    CHECK(cfg.segments == 8);
    CHECK(cfg.distill.alpha == 0.7);
    CHECK(cfg.distill.tau == 2.0);
}

TEST_CASE("unknown config keys are rejected, including nested ones") {
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"tusk", "two-spirals"}}), config_error);
    CHECK_THROWS_AS(
        ExperimentConfig::from_json({{"distill", {{"aplha", 0.5}}}}), config_error);
    CHECK_THROWS_AS(
        ExperimentConfig::from_json({{"teacher_train", {{"lr_decay", 0.5}}}}),
        config_error);
}

TEST_CASE("config survives a json round trip") {
    ExperimentConfig cfg = tiny_config();
    ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("summary statistics use the n-1 denominator") {
    std::vector<SeedRow> rows(2);
    rows[0].arm = rows[1].arm = "x";
    rows[0].test_accuracy = 0.5;
    rows[1].test_accuracy = 0.7;
    auto s = summarize(rows);
    REQUIRE(s.size() == 1);
    CHECK_THAT(s[0].mean_accuracy, Catch::Matchers::WithinAbs(0.6, 1e-15));
    CHECK_THAT(s[0].std_accuracy,
               Catch::Matchers::WithinAbs(std::sqrt(0.02), 1e-15));

    // A single completed row has zero std by convention.
    rows.pop_back();
    CHECK(summarize(rows)[0].std_accuracy == 0.0);
}

TEST_CASE("failed rows are excluded from aggregates but counted") {
    std::vector<SeedRow> rows(3);
    for (auto& r : rows) r.arm = "x";
    rows[0].test_accuracy = 0.8;
    rows[1].test_accuracy = 0.6;
    rows[2].failed = true;
    auto s = summarize(rows);
    CHECK(s[0].completed == 2);
    CHECK(s[0].failed == 1);
    CHECK_THAT(s[0].mean_accuracy, Catch::Matchers::WithinAbs(0.7, 1e-15));
}

TEST_CASE("rows survive a CSV round trip exactly") {
    ExperimentConfig cfg = tiny_config();
    ExperimentReport report = run_experiment(cfg, false);
    const std::string csv = rows_to_csv(report.rows);
    const auto parsed = rows_from_csv(csv);
    REQUIRE(parsed.size() == report.rows.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].arm == report.rows[i].arm);
        CHECK(parsed[i].seed == report.rows[i].seed);
        CHECK(parsed[i].test_accuracy == report.rows[i].test_accuracy);
        CHECK(parsed[i].final_train_loss == report.rows[i].final_train_loss);
        CHECK(parsed[i].init_hash == report.rows[i].init_hash);
    }
    // Aggregates recomputed from the parsed rows match the stored ones.
    const auto recomputed = summarize(parsed);
    REQUIRE(recomputed.size() == report.aggregates.size());
    for (std::size_t i = 0; i < recomputed.size(); ++i) {
        CHECK(std::fabs(recomputed[i].mean_accuracy - report.aggregates[i].mean_accuracy) <
              1e-12);
        CHECK(std::fabs(recomputed[i].std_accuracy - report.aggregates[i].std_accuracy) <
              1e-12);
    }
}

TEST_CASE("experiment protocol: shared teacher, matched initializations") {
    ExperimentConfig cfg = tiny_config();
    ExperimentReport report = run_experiment(cfg, false);
    REQUIRE(report.rows.size() == 2 * 3); // per seed: teacher + 2 arms

    for (std::uint64_t seed : cfg.seeds) {
        std::uint64_t teacher_hash = 0, init_hash = 0;
        for (const auto& r : report.rows) {
            if (r.seed != seed) continue;
            if (teacher_hash == 0) teacher_hash = r.teacher_hash;
            CHECK(r.teacher_hash == teacher_hash);
            if (r.arm == "teacher") continue;
            if (init_hash == 0) init_hash = r.init_hash;
            CHECK(r.init_hash == init_hash); // dense backbone matches across arms
        }
    }
}

TEST_CASE("identical runs produce byte-identical CSV") {
    ExperimentConfig cfg = tiny_config();
    const std::string a = rows_to_csv(run_experiment(cfg, false).rows);
    const std::string b = rows_to_csv(run_experiment(cfg, false).rows);
    CHECK(a == b);
}

TEST_CASE("experiment writes report files atomically") {
    ExperimentConfig cfg = tiny_config();
    cfg.seeds = {1};
    cfg.out_dir = temp_path("lma_test_out");
    run_experiment(cfg, true);
    CHECK(std::filesystem::exists(cfg.out_dir + "/report.csv"));
    CHECK(std::filesystem::exists(cfg.out_dir + "/report.json"));
    CHECK_FALSE(std::filesystem::exists(cfg.out_dir + "/report.csv.tmp"));
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("segment sweep validates k and carries workspace columns") {
    ExperimentConfig cfg = tiny_config();
    cfg.activations = {"lma"};
    CHECK_THROWS_AS(sweep_segments(cfg, {4, 5}, false), config_error);
    CHECK_THROWS_AS(sweep_segments(cfg, {1}, false), config_error);

    ExperimentReport sweep = sweep_segments(cfg, {4, 6}, false);
    REQUIRE(sweep.rows.size() == 4); // 2 seeds x 2 k values, teachers dropped
    for (const auto& r : sweep.rows) {
        CHECK((r.segments == 4 || r.segments == 6));
        CHECK(r.workspace == 4); // LMA workspace is the hidden width, k-free
    }
}

TEST_CASE("sweep on a cross-entropy-only arm set is rejected") {
    ExperimentConfig cfg = tiny_config();
    cfg.activations = {"relu"};
    CHECK_THROWS_AS(sweep_segments(cfg, {4}, false), config_error);
}

TEST_CASE("bench-memory CSV carries the closed-form columns") {
    const std::string csv = bench_memory_csv();
    CHECK(csv.find("activation,n,k,params_added,workspace_elems") == 0);
    CHECK(csv.find("lma,64,8,16,64") != std::string::npos);
    CHECK(csv.find("aplu,64,8,768,384") != std::string::npos);
    CHECK(csv.find("maxout,16,4,144,64") != std::string::npos);
    CHECK(csv.find("relu,4,4,0,0") != std::string::npos);
}

TEST_CASE("atomic write replaces content and leaves no temp file") {
    const std::string p = temp_path("lma_test_atomic.txt");
    write_file_atomic(p, "one");
    write_file_atomic(p, "two");
    std::ifstream is(p);
    std::string content((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
    CHECK(content == "two");
    CHECK_FALSE(std::filesystem::exists(p + ".tmp"));
    std::remove(p.c_str());
}
