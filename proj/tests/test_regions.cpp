// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>

#include "lma/regions.hpp"

using namespace lma;

namespace {

ArchSpec arch_1d(ActivationKind kind, std::size_t n, int k = 8) {
    ArchSpec a;
    a.widths = {1, n, 1};
    a.activation = kind;
    a.segments = k;
    return a;
}

ArchSpec arch_2d(ActivationKind kind, std::size_t n, int k = 8) {
    ArchSpec a;
    a.widths = {2, n, 1};
    a.activation = kind;
    a.segments = k;
    return a;
}

// Independent brute-force oracle for {1, n, 1} ReLU nets: the kink of
// unit u sits where its pre-activation w*x + b crosses zero.
std::vector<double> relu_breakpoints_oracle(Mlp& net, double lo, double hi) {
    auto* dense = dynamic_cast<Dense*>(net.layers()[0].get());
    REQUIRE(dense != nullptr);
    std::vector<double> pts;
    for (std::size_t u = 0; u < dense->out_dim(); ++u) {
        const double w = dense->weight().at(u);
        const double b = dense->bias().at(u);
        if (w == 0.0) continue;
        const double x = -b / w;
        if (x > lo && x < hi) pts.push_back(x);
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

const std::array<double, 4> kBox = {-2.0, 2.0, -2.0, 2.0};

} // namespace

TEST_CASE("single relu unit has two regions") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        Mlp net = make_pla_net_1d(arch_1d(ActivationKind::relu, 1), seed, -3, 3);
        RegionCount rc = count_regions_1d(net, -3, 3);
        CHECK(rc.regions == 2);
        CHECK(rc.method == "exact-1d");
        const auto oracle = relu_breakpoints_oracle(net, -3, 3);
        REQUIRE(oracle.size() == 1);
        REQUIRE(rc.breakpoints.size() == 1);
        CHECK_THAT(rc.breakpoints[0], Catch::Matchers::WithinAbs(oracle[0], 1e-6));
    }
}

TEST_CASE("one hidden relu layer of n units has n+1 regions") {
    for (std::size_t n : {1u, 2u, 4u, 8u}) {
        for (std::uint64_t seed : {11, 12, 13}) {
            Mlp net = make_pla_net_1d(arch_1d(ActivationKind::relu, n), seed, -3, 3);
            const auto oracle = relu_breakpoints_oracle(net, -3, 3);
            if (oracle.size() != n) continue; // kink drifted outside; not generic here
            bool distinct = true;
            for (std::size_t i = 1; i < oracle.size(); ++i)
                if (oracle[i] - oracle[i - 1] < 1e-6) distinct = false;
            if (!distinct) continue;
            RegionCount rc = count_regions_1d(net, -3, 3);
            INFO("n=" << n << " seed=" << seed);
            CHECK(rc.regions == n + 1);
            REQUIRE(rc.breakpoints.size() == oracle.size());
            for (std::size_t i = 0; i < oracle.size(); ++i)
                CHECK_THAT(rc.breakpoints[i], Catch::Matchers::WithinAbs(oracle[i], 1e-6));
        }
    }
}

TEST_CASE("a single LMA unit with k segments makes k regions, relu only 2") {
    for (int k : {4, 8}) {
        RegionCount rc = count_regions_1d_generic(arch_1d(ActivationKind::lma, 1, k), 7,
                                                  -3, 3);
        INFO("k=" << k);
        CHECK_FALSE(rc.degenerate);
        CHECK(rc.regions == static_cast<std::size_t>(k));
    }
    RegionCount relu_rc = count_regions_1d_generic(arch_1d(ActivationKind::relu, 1), 7,
                                                   -3, 3);
    CHECK(relu_rc.regions == 2);
}

TEST_CASE("counted regions never exceed breakpoints + 1") {
    for (std::uint64_t seed : {21, 22}) {
        RegionCount rc =
            count_regions_1d_generic(arch_1d(ActivationKind::aplu, 4, 6), seed, -3, 3);
        CHECK(rc.regions == rc.breakpoints.size() + 1);
    }
}

TEST_CASE("exactly coincident kinks merge into one breakpoint") {
    // Two units with identical pre-activations: the composite function
    // genuinely has one kink, and the counter must report two regions.
    ArchSpec arch = arch_1d(ActivationKind::relu, 2);
    Mlp net(arch, 1);
    auto* dense = dynamic_cast<Dense*>(net.layers()[0].get());
    dense->weight().data() = {1.0, 1.0};
    dense->bias().data() = {-0.5, -0.5};
    auto* out = dynamic_cast<Dense*>(net.layers()[2].get());
    out->weight().data() = {1.0, 0.5};
    out->bias().data() = {0.0};
    RegionCount rc = count_regions_1d(net, -3, 3);
    CHECK(rc.regions == 2);
    REQUIRE(rc.breakpoints.size() == 1);
    CHECK_THAT(rc.breakpoints[0], Catch::Matchers::WithinAbs(0.5, 1e-6));
}

TEST_CASE("LMA jumps count as region boundaries") {
    // A discontinuous single-unit LMA: generic biases produce jumps at
    // the cut pre-images; each jump bounds a region.
    ArchSpec arch = arch_1d(ActivationKind::lma, 1, 4);
    Mlp net(arch, 2);
    auto* dense = dynamic_cast<Dense*>(net.layers()[0].get());
    dense->weight().data() = {1.0};
    dense->bias().data() = {0.0};
    auto* act = dynamic_cast<Lma*>(net.layers()[1].get());
    act->state().alpha.data() = {0.5, 0.5, 0.5, 0.5}; // same slope everywhere
    act->state().beta.data() = {0.0, 1.0, -1.0, 2.0}; // jumps only
    act->set_cut_points({-1.0, 0.0, 1.0});
    auto* out = dynamic_cast<Dense*>(net.layers()[2].get());
    out->weight().data() = {1.0};
    out->bias().data() = {0.0};
    RegionCount rc = count_regions_1d(net, -3, 3);
    CHECK(rc.regions == 4);
}

TEST_CASE("swish models are rejected by the region counters") {
    ArchSpec arch = arch_1d(ActivationKind::swish, 2);
    Mlp net(arch, 1);
    CHECK_THROWS_AS(count_regions_1d(net, -3, 3), unsupported_error);
    ArchSpec arch2 = arch_2d(ActivationKind::swish, 2);
    Mlp net2(arch2, 1);
    CHECK_THROWS_AS(count_regions_2d(net2, kBox), unsupported_error);
}

TEST_CASE("affine 2-D model is one region") {
    ArchSpec a;
    a.widths = {2, 1}; // no hidden layer at all
    Mlp net(a, 1);
    RegionCount rc = count_regions_2d(net, kBox, 32);
    CHECK(rc.regions == 1);
    CHECK(rc.method == "grid-signature-2d");
}

TEST_CASE("one and two hidden relu units in 2-D: hyperplane arrangement counts") {
    // Oracle: r(1,2) = 2 regions for one line through the box; r(2,2) = 4
    // when the two lines cross inside it.
    std::size_t checked_pairs = 0;
    for (std::uint64_t seed = 31; seed < 40 && checked_pairs < 3; ++seed) {
        Mlp one = make_pla_net_2d(arch_2d(ActivationKind::relu, 1), seed, kBox);
        auto* d1 = dynamic_cast<Dense*>(one.layers()[0].get());
        const double w0 = d1->weight().at(0, 0), w1 = d1->weight().at(1, 0);
        const double b = d1->bias().at(0);
        // Line crosses the box iff the sign of w.x + b differs at corners.
        int pos = 0, neg = 0;
        for (double cx : {kBox[0], kBox[1]})
            for (double cy : {kBox[2], kBox[3]})
                ((w0 * cx + w1 * cy + b) > 0 ? pos : neg)++;
        if (pos == 0 || neg == 0) continue;
        CHECK(count_regions_2d(one, kBox, 64).regions == 2);

        Mlp two = make_pla_net_2d(arch_2d(ActivationKind::relu, 2), seed, kBox);
        auto* d2 = dynamic_cast<Dense*>(two.layers()[0].get());
        const double a0 = d2->weight().at(0, 0), a1 = d2->weight().at(1, 0);
        const double c0 = d2->weight().at(0, 1), c1 = d2->weight().at(1, 1);
        const double e0 = d2->bias().at(0), e1 = d2->bias().at(1);
        const double det = a0 * c1 - a1 * c0;
        if (std::fabs(det) < 1e-9) continue;
        const double ix = (-e0 * c1 + e1 * a1) / det;
        const double iy = (-a0 * e1 + c0 * e0) / det;
        const bool crossing = ix > kBox[0] + 0.1 && ix < kBox[1] - 0.1 &&
                              iy > kBox[2] + 0.1 && iy < kBox[3] - 0.1;
        if (!crossing) continue;
        CHECK(count_regions_2d(two, kBox, 64).regions == 4);
        ++checked_pairs;
    }
    CHECK(checked_pairs >= 1);
}

TEST_CASE("maxout bound formula values") {
    CHECK(maxout_region_bound(1, 2, 2).bound == 4);
    CHECK(maxout_region_bound(1, 1, 5).bound == 5);
    CHECK(maxout_region_bound(2, 3, 4).bound == 256); // 4^(1+3)
    CHECK_THROWS_AS(maxout_region_bound(0, 1, 2), config_error);
    CHECK_THROWS_AS(maxout_region_bound(1, 1, 1), config_error);
}

TEST_CASE("bound is exact in arbitrary precision") {
    // 12^52 has floor(52*log10(12)) + 1 = 57 digits and starts with 13.
    BoundResult r = maxout_region_bound(3, 50, 12);
    const std::string s = r.bound.str();
    CHECK(s.size() == 57);
    CHECK(s.substr(0, 2) == "13");
    // Multiplicativity across depth.
    CHECK(maxout_region_bound(4, 50, 12).bound == r.bound * 12);
}

TEST_CASE("relu is the rank-2 maxout special case") {
    for (int L : {1, 2, 3})
        for (int n : {1, 4, 9}) {
            boost::multiprecision::cpp_int expected = 1;
            for (int i = 0; i < L - 1 + n; ++i) expected *= 2;
            CHECK(maxout_region_bound(L, n, 2).bound == expected);
        }
}

TEST_CASE("bound matches the empirical count on the 2-unit crossing case") {
    // k=2, L=1, n=2: the bound says 4; a generic two-unit relu net whose
    // kink lines cross inside the box realizes exactly 4.
    const BoundResult bound = maxout_region_bound(1, 2, 2);
    bool verified = false;
    for (std::uint64_t seed = 51; seed < 70 && !verified; ++seed) {
        Mlp net = make_pla_net_2d(arch_2d(ActivationKind::relu, 2), seed, kBox);
        auto* d = dynamic_cast<Dense*>(net.layers()[0].get());
        const double a0 = d->weight().at(0, 0), a1 = d->weight().at(1, 0);
        const double c0 = d->weight().at(0, 1), c1 = d->weight().at(1, 1);
        const double e0 = d->bias().at(0), e1 = d->bias().at(1);
        const double det = a0 * c1 - a1 * c0;
        if (std::fabs(det) < 1e-6) continue;
        const double ix = (-e0 * c1 + e1 * a1) / det;
        const double iy = (-a0 * e1 + c0 * e0) / det;
        if (!(ix > kBox[0] + 0.2 && ix < kBox[1] - 0.2 && iy > kBox[2] + 0.2 &&
              iy < kBox[3] - 0.2))
            continue;
        RegionCount rc = count_regions_2d(net, kBox, 96);
        CHECK(rc.regions == bound.bound);
        verified = true;
    }
    CHECK(verified);
}

TEST_CASE("median LMA region count is non-decreasing from k=4 to k=8") {
    auto median_count = [](int k) {
        std::vector<std::size_t> counts;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            RegionCount rc =
                count_regions_1d_generic(arch_1d(ActivationKind::lma, 4, k), seed, -3, 3);
            counts.push_back(rc.regions);
        }
        std::sort(counts.begin(), counts.end());
        return counts[counts.size() / 2];
    };
    const std::size_t at4 = median_count(4);
    const std::size_t at8 = median_count(8);
    INFO("median k=4: " << at4 << ", k=8: " << at8);
    CHECK(at8 >= at4);
}

TEST_CASE("doubling the 2-D grid never decreases the count") {
    // Holds for arrangements whose regions are fat relative to the grid.
    // Sliver regions thinner than a cell fragment under 4-adjacency at
    // coarse grids and heal on refinement, so the property is asserted
    // on two-line arrangements crossing at a wide angle, where every
    // region is a fat wedge.
    std::size_t tested = 0;
    for (std::uint64_t seed = 81; seed < 121 && tested < 6; ++seed) {
        Mlp net = make_pla_net_2d(arch_2d(ActivationKind::relu, 2), seed, kBox);
        auto* d = dynamic_cast<Dense*>(net.layers()[0].get());
        const double ux = d->weight().at(0, 0), uy = d->weight().at(1, 0);
        const double vx = d->weight().at(0, 1), vy = d->weight().at(1, 1);
        const double cosang = std::fabs(ux * vx + uy * vy) /
                              (std::hypot(ux, uy) * std::hypot(vx, vy));
        if (cosang > 0.86) continue; // keep crossings wider than ~30 degrees
        const auto c32 = count_regions_2d(net, kBox, 32).regions;
        const auto c64 = count_regions_2d(net, kBox, 64).regions;
        const auto c128 = count_regions_2d(net, kBox, 128).regions;
        INFO("seed=" << seed << " counts " << c32 << " " << c64 << " " << c128);
        CHECK(c64 >= c32);
        CHECK(c128 >= c64);
        ++tested;
    }
    CHECK(tested >= 4);
}

TEST_CASE("single-layer maxout stays under the attainable arrangement maximum") {
    for (std::uint64_t seed : {91, 92, 93}) {
        const std::size_t n = 3;
        const int k = 4;
        Mlp net = make_pla_net_2d(arch_2d(ActivationKind::maxout, n, k), seed, kBox);
        RegionCount rc = count_regions_2d(net, kBox, 64);
        // Each unit's argmax boundaries lie on at most C(k,2) lines; H
        // lines partition the plane into at most 1 + H + H(H-1)/2 cells.
        const std::size_t H = n * (static_cast<std::size_t>(k) * (k - 1)) / 2;
        const std::size_t arrangement_max = 1 + H + H * (H - 1) / 2;
        CHECK(rc.regions <= arrangement_max);
    }
}
