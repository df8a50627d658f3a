// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "lma/distill.hpp"
#include "lma/serialize.hpp"

using namespace lma;
using lma::testing::gradcheck_max_rel_err;
using lma::testing::random_tensor;

namespace {

// 2-D toy labeled by a fixed separating line with a margin; the line
// itself is the oracle showing 100% accuracy is attainable.
DataSplit separable_toy(std::size_t n, std::uint64_t seed) {
    Rng rng(seed, 77);
    DataSplit data;
    for (Dataset* d : {&data.train, &data.test}) {
        d->input_dim = 2;
        d->num_classes = 2;
    }
    const double w0 = 1.0, w1 = -0.7, margin = 0.15;
    std::size_t made = 0;
    while (made < n) {
        const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
        const double score = w0 * a + w1 * b;
        if (std::fabs(score) < margin) continue;
        Dataset& d = (made % 5 == 0) ? data.test : data.train;
        d.xs.push_back(a);
        d.xs.push_back(b);
        d.ys.push_back(score > 0 ? 1 : 0);
        ++made;
    }
    // Oracle check: the generating line classifies everything.
    for (const Dataset* d : {&data.train, &data.test})
        for (std::size_t i = 0; i < d->size(); ++i) {
            const double score = w0 * d->xs[2 * i] + w1 * d->xs[2 * i + 1];
            REQUIRE((score > 0 ? 1u : 0u) == d->ys[i]);
        }
    return data;
}

DistillConfig quick_distill(int epochs) {
    DistillConfig dc;
    dc.train.epochs = epochs;
    dc.train.batch_size = 32;
    dc.train.lr = 0.1;
    return dc;
}

} // namespace

TEST_CASE("soften at tau=1 is the identity") {
    Tensor logits = Tensor::of({1, 3}, {1.5, -2.0, 0.25});
    Tensor out = soften_logits(nullptr, logits, 1.0);
    CHECK(out.data() == logits.data());
}

TEST_CASE("soften divides by the temperature") {
    Tensor logits = Tensor::of({1, 2}, {2.0, 4.0});
    Tensor out = soften_logits(nullptr, logits, 2.0);
    CHECK(out.data() == std::vector<double>{1.0, 2.0});
}

TEST_CASE("softmax of strongly softened logits approaches uniform") {
    // |p - 1/2| for a two-class gap g at temperature tau is g/(4 tau) to
    // first order, so tau = 1e6 leaves 2.5e-6; the 1e-6 target needs 1e7.
    Tensor logits = Tensor::of({1, 2}, {10.0, 0.0});
    Tensor at_1e6 = softmax(soften_logits(nullptr, logits, 1e6));
    CHECK(std::fabs(at_1e6.at(0) - 0.5) < 10.0 / (4.0 * 1e6) * 1.001);
    Tensor at_1e7 = softmax(soften_logits(nullptr, logits, 1e7));
    CHECK(std::fabs(at_1e7.at(0) - 0.5) < 1e-6);
    CHECK(std::fabs(at_1e7.at(1) - 0.5) < 1e-6);
}

TEST_CASE("non-positive temperature is a configuration error") {
    Tensor logits({1, 2});
    CHECK_THROWS_AS(soften_logits(nullptr, logits, 0.0), config_error);
    CHECK_THROWS_AS(soften_logits(nullptr, logits, -1.0), config_error);
}

TEST_CASE("identical student and teacher logits zero the KL term") {
    Rng rng(1);
    Tensor logits = random_tensor({4, 3}, rng, -2, 2, true);
    Tensor teacher = detach(logits);
    DistillConfig cfg;
    Tensor loss = distill_loss(nullptr, logits, teacher, {0, 1, 2, 0}, cfg);
    Tensor ce = softmax_cross_entropy(nullptr, logits, {0, 1, 2, 0});
    CHECK_THAT(loss.item(), Catch::Matchers::WithinAbs((1.0 - cfg.alpha) * ce.item(), 1e-15));
}

TEST_CASE("alpha=0 reduces to plain cross entropy") {
    Rng rng(2);
    Tensor logits = random_tensor({3, 4}, rng, -2, 2, true);
    Tensor teacher = random_tensor({3, 4}, rng, -2, 2);
    DistillConfig cfg;
    cfg.alpha = 0.0;
    Tensor loss = distill_loss(nullptr, logits, teacher, {1, 0, 3}, cfg);
    Tensor ce = softmax_cross_entropy(nullptr, logits, {1, 0, 3});
    CHECK(loss.item() == ce.item());
}

TEST_CASE("two-class hand-computed KL value") {
    // teacher [1,0], student [0,1], tau=1, alpha=1:
    //   p = softmax([1,0]) = [e,1]/(e+1), q = [1,e]/(e+1)
    //   KL(p||q) = p0*ln(p0/q0) + p1*ln(p1/q1) = p0 - p1 = (e-1)/(e+1) = tanh(1/2)
    Tensor student = Tensor::of({1, 2}, {0.0, 1.0}, true);
    Tensor teacher = Tensor::of({1, 2}, {1.0, 0.0});
    DistillConfig cfg;
    cfg.alpha = 1.0;
    cfg.tau = 1.0;
    Tensor loss = distill_loss(nullptr, student, teacher, {0}, cfg);
    CHECK_THAT(loss.item(), Catch::Matchers::WithinAbs(std::tanh(0.5), 1e-14));
    CHECK_THAT(loss.item(), Catch::Matchers::WithinAbs(0.4621171572600098, 1e-14));
}

TEST_CASE("loss decomposition is exact") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor student = random_tensor({5, 3}, rng, -3, 3, true);
        Tensor teacher = random_tensor({5, 3}, rng, -3, 3);
        const std::vector<std::size_t> labels = {0, 2, 1, 1, 0};
        DistillConfig cfg;
        cfg.alpha = rng.uniform(0, 1);
        cfg.tau = rng.uniform(0.5, 4.0);
        Tensor loss = distill_loss(nullptr, student, teacher, labels, cfg);
        const double ce = softmax_cross_entropy(nullptr, student, labels).item();
        const double kl =
            kl_to_softened(nullptr, student, softmax(teacher, cfg.tau), cfg.tau).item();
        const double expected =
            (1.0 - cfg.alpha) * ce + cfg.alpha * cfg.tau * cfg.tau * kl;
        CHECK(std::fabs(loss.item() - expected) < 1e-12);
    }
}

TEST_CASE("KL term is non-negative and zero only at matching distributions") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor student = random_tensor({2, 5}, rng, -4, 4);
        Tensor teacher = random_tensor({2, 5}, rng, -4, 4);
        const double kl = kl_to_softened(nullptr, student, softmax(teacher, 2.0), 2.0).item();
        CHECK(kl >= 0.0);
    }
    Tensor logits = random_tensor({2, 5}, rng, -4, 4);
    CHECK(kl_to_softened(nullptr, logits, softmax(logits, 2.0), 2.0).item() == 0.0);
}

TEST_CASE("distill loss gradient matches finite differences") {
    Rng rng(5);
    Tensor student = random_tensor({4, 3}, rng, -2, 2, true);
    Tensor teacher = random_tensor({4, 3}, rng, -2, 2);
    const std::vector<std::size_t> labels = {2, 0, 1, 2};
    DistillConfig cfg; // alpha 0.7, tau 2, tau^2 on
    auto loss_fn = [&](Tape* tape) {
        return distill_loss(tape, student, teacher, labels, cfg);
    };
    CHECK(gradcheck_max_rel_err(loss_fn, {student}) < 1e-5);
}

TEST_CASE("teacher logits attached to a tape are rejected") {
    Tensor student({2, 2}, 0.0, true);
    Tensor teacher({2, 2}, 0.0, true); // still flagged as differentiable
    DistillConfig cfg;
    CHECK_THROWS_AS(distill_loss(nullptr, student, teacher, {0, 1}, cfg), contract_error);
}

TEST_CASE("shape mismatch between student and teacher is a dimension error") {
    Tensor student({2, 3}, 0.0, true);
    Tensor teacher({2, 4});
    DistillConfig cfg;
    CHECK_THROWS_AS(distill_loss(nullptr, student, teacher, {0, 1}, cfg), shape_error);
}

TEST_CASE("teacher reaches 100% on a separable toy within 50 epochs") {
    DataSplit data = separable_toy(250, 1);
    ArchSpec arch;
    arch.widths = {2, 2}; // linear model, like the probe
    TrainSettings ts;
    ts.epochs = 50;
    ts.batch_size = 16;
    ts.lr = 0.5;
    ts.val_fraction = 0.0;
    TrainedModel tm = train_teacher(arch, data, ts, 3);
    CHECK(tm.test_accuracy == 1.0);
}

TEST_CASE("zero training epochs returns the initialized model") {
    DataSplit data = separable_toy(200, 2);
    ArchSpec arch;
    arch.widths = {2, 8, 2};
    TrainSettings ts;
    ts.epochs = 0;
    TrainedModel tm = train_teacher(arch, data, ts, 4);
    CHECK(tm.epoch_loss.empty());
    CHECK(tm.test_accuracy > 0.2);
    CHECK(tm.test_accuracy < 0.8);
    // Parameters still at their seeded initialization.
    Mlp fresh(arch, 4);
    CHECK(tm.net->state_hash() == fresh.state_hash());
}

TEST_CASE("same seed gives a bit-identical training trajectory") {
    DataSplit data = separable_toy(200, 5);
    ArchSpec arch;
    arch.widths = {2, 6, 2};
    TrainSettings ts;
    ts.epochs = 12;
    TrainedModel a = train_teacher(arch, data, ts, 9);
    TrainedModel b = train_teacher(arch, data, ts, 9);
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(a.net->state_hash() == b.net->state_hash());
    TrainedModel c = train_teacher(arch, data, ts, 10);
    CHECK(a.net->state_hash() != c.net->state_hash());
}

TEST_CASE("training failure is reported, not swallowed") {
    DataSplit data = separable_toy(100, 6);
    ArchSpec arch;
    arch.widths = {2, 4, 2};
    TrainSettings ts;
    ts.epochs = 40;
    ts.lr = 1e18; // guaranteed blow-up
    ts.val_fraction = 0.0;
    CHECK_THROWS_AS(train_teacher(arch, data, ts, 7), training_failure);
}

TEST_CASE("teacher parameters are bit-identical across student training") {
    DataSplit data = separable_toy(250, 8);
    ArchSpec teacher_arch;
    teacher_arch.widths = {2, 16, 2};
    TrainSettings ts;
    ts.epochs = 30;
    TrainedModel teacher = train_teacher(teacher_arch, data, ts, 11);
    const std::uint64_t before = teacher.net->state_hash();

    ArchSpec student_arch;
    student_arch.widths = {2, 4, 2};
    student_arch.activation = ActivationKind::lma;
    student_arch.segments = 4;
    train_student(student_arch, *teacher.net, data, quick_distill(20), 11);
    CHECK(teacher.net->state_hash() == before);
}

TEST_CASE("alpha=0 distillation equals plain supervised training exactly") {
    DataSplit data = separable_toy(300, 9);
    ArchSpec arch;
    arch.widths = {2, 6, 2};
    TrainSettings ts;
    ts.epochs = 25;

    ArchSpec teacher_arch;
    teacher_arch.widths = {2, 12, 2};
    TrainedModel teacher = train_teacher(teacher_arch, data, ts, 13);

    DistillConfig dc;
    dc.alpha = 0.0;
    dc.train = ts;
    TrainedModel distilled = train_student(arch, *teacher.net, data, dc, 13);
    TrainedModel supervised = train_teacher(arch, data, ts, 13);

    CHECK(distilled.epoch_loss == supervised.epoch_loss);
    CHECK(distilled.net->state_hash() == supervised.net->state_hash());
}

TEST_CASE("self-distillation lands near the teacher") {
    DataSplit data = gen_synthetic("two-spirals", 800, 0.04, 21);
    ArchSpec arch;
    arch.widths = {2, 64, 64, 2};
    TrainSettings ts;
    ts.epochs = 150;
    TrainedModel teacher = train_teacher(arch, data, ts, 21);
    REQUIRE(teacher.test_accuracy > 0.9);

    DistillConfig dc;
    dc.alpha = 1.0;
    dc.tau = 1.0;
    dc.train = ts;
    TrainedModel student = train_student(arch, *teacher.net, data, dc, 21);
    CHECK(student.test_accuracy >= teacher.test_accuracy - 0.02);
}

TEST_CASE("model files round-trip bit-exactly") {
    DataSplit data = separable_toy(200, 10);
    ArchSpec arch;
    arch.widths = {2, 5, 2};
    arch.activation = ActivationKind::lma;
    arch.segments = 6;
    TrainSettings ts;
    ts.epochs = 10;
    TrainedModel tm = train_teacher(arch, data, ts, 15);

    const std::string path = "roundtrip-test.model";
    save_model(*tm.net, path, {{"note", "test"}});
    LoadedModel loaded = load_model(path);
    std::remove(path.c_str());

    CHECK(loaded.net->arch().to_json() == tm.net->arch().to_json());
    CHECK(loaded.net->state_hash() == tm.net->state_hash());
    CHECK(loaded.meta.at("note") == "test");

    // Eval behaviour is preserved, including LMA's EMA cut points.
    RunContext ctx;
    Tensor x = data.test.all_x();
    Tensor a = tm.net->forward(ctx, x);
    Tensor b = loaded.net->forward(ctx, x);
    CHECK(a.data() == b.data());
}
