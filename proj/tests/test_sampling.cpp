#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "castopt/sampling.hpp"

using namespace castopt;

TEST_CASE("every dimension is stratified exactly once per stratum", "[sampling]") {
    const std::vector<Interval> bounds{{900.0, 1100.0}, {500.0, 700.0}, {-1.0, 1.0}};
    const std::size_t n = 64;
    const auto pts = latin_hypercube(n, bounds, 17);
    REQUIRE(pts.size() == n);
    for (const auto& p : pts) REQUIRE(p.size() == bounds.size());

    for (std::size_t d = 0; d < bounds.size(); ++d) {
        std::vector<int> hits(n, 0);
        for (const auto& p : pts) {
            REQUIRE(p[d] >= bounds[d].lo);
            REQUIRE(p[d] <= bounds[d].hi);
            auto stratum = static_cast<std::size_t>((p[d] - bounds[d].lo) / bounds[d].width() *
                                                    static_cast<double>(n));
            stratum = std::min(stratum, n - 1);
            ++hits[stratum];
        }
        for (int h : hits) CHECK(h == 1);
    }
}

TEST_CASE("samples are reproducible by seed and differ across seeds", "[sampling]") {
    const std::vector<Interval> bounds{{0.0, 1.0}, {10.0, 20.0}};
    const auto a = latin_hypercube(16, bounds, 5);
    const auto b = latin_hypercube(16, bounds, 5);
    const auto c = latin_hypercube(16, bounds, 6);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("a single sample lands inside the box", "[sampling]") {
    const std::vector<Interval> bounds{{2.0, 4.0}};
    const auto pts = latin_hypercube(1, bounds, 1);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0][0] >= 2.0);
    CHECK(pts[0][0] <= 4.0);
}

TEST_CASE("degenerate requests are rejected", "[sampling]") {
    CHECK_THROWS_AS(latin_hypercube(0, {{0.0, 1.0}}, 1), ValidationError);
    CHECK_THROWS_AS(latin_hypercube(4, {{1.0, 1.0}}, 1), ValidationError);
    CHECK_THROWS_AS(latin_hypercube(4, {{2.0, 1.0}}, 1), ValidationError);
}

TEST_CASE("dimensions are permuted independently", "[sampling]") {
    // With one shared permutation all coordinates would be comonotone; an
    // independent shuffle per dimension destroys that alignment.
    const std::vector<Interval> bounds{{0.0, 1.0}, {0.0, 1.0}};
    const auto pts = latin_hypercube(32, bounds, 23);
    std::size_t aligned = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if ((pts[i][0] < pts[j][0]) == (pts[i][1] < pts[j][1])) ++aligned;
    const std::size_t total = pts.size() * (pts.size() - 1) / 2;
    CHECK(aligned > total / 5);
    CHECK(aligned < 4 * total / 5);
}

TEST_CASE("design box lays out melt then wall intervals", "[sampling]") {
    DesignBounds b;
    const auto box = design_box(b, 10);
    REQUIRE(box.size() == 11);
    CHECK(box[0].lo == 900.0);
    CHECK(box[0].hi == 1100.0);
    for (std::size_t d = 1; d < box.size(); ++d) {
        CHECK(box[d].lo == 500.0);
        CHECK(box[d].hi == 700.0);
    }
}
