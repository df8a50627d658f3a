// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0
//
// Expressiveness comparison: exact 1-D linear-region counts for a
// single hidden layer of 8 units under each piecewise-linear activation.

#include <cstdio>

#include "lma/lma.hpp"

int main() {
    for (const char* act : {"relu", "prelu", "maxout", "aplu", "lma"}) {
        lma::ArchSpec arch;
        arch.widths = {1, 8, 1};
        arch.activation = lma::activation_from_string(act);
        arch.segments = 8;
        lma::RegionCount rc = lma::count_regions_1d_generic(arch, /*seed=*/3, -3.0, 3.0);
        const int rank = lma::is_multi_segment(arch.activation) ? arch.segments : 2;
        lma::BoundResult bound = lma::maxout_region_bound(1, 8, rank);
        std::printf("%-8s regions=%-4zu bound>=%s%s\n", act, rc.regions,
                    bound.bound.str().c_str(), rc.degenerate ? " (degenerate)" : "");
    }
    return 0;
}
