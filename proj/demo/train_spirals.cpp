// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal library walkthrough: train a wide teacher on the two-spirals
// task, then distill it into an 8-unit student once with ReLU and once
// with LMA-8, printing the accuracy gap.

#include <cstdio>

#include "lma/lma.hpp"

int main() {
    const std::uint64_t seed = 1;
    const lma::DataSplit data = lma::gen_synthetic("two-spirals", 1200, 0.06, seed);

    lma::ArchSpec teacher_arch;
    teacher_arch.widths = {2, 64, 64, 2};

    lma::TrainSettings ts;
    ts.epochs = 120;
    lma::TrainedModel teacher = lma::train_teacher(teacher_arch, data, ts, seed);
    std::printf("teacher  %-14s acc %.4f\n", teacher_arch.label().c_str(),
                teacher.test_accuracy);

    lma::DistillConfig dc;
    dc.train.epochs = 120;
    for (const char* act : {"relu", "lma"}) {
        lma::ArchSpec student_arch;
        student_arch.widths = {2, 8, 2};
        student_arch.activation = lma::activation_from_string(act);
        student_arch.segments = 8;
        lma::TrainedModel student =
            lma::train_student(student_arch, *teacher.net, data, dc, seed);
        std::printf("student  %-14s acc %.4f\n", student_arch.label().c_str(),
                    student.test_accuracy);
    }
    return 0;
}
