#include <cmath>

#include <doctest.h>

#include "flowgeom/errors.hpp"
#include "flowgeom/smooth.hpp"

using namespace flowgeom;

TEST_CASE("bump function") {
    CHECK(bump(-0.25, 0.25) == 0.0);
    CHECK(bump(-1.0, 0.25) == 0.0);
    CHECK(bump(0.25, 0.25) == 1.0);
    CHECK(bump(0.0, 0.25) == doctest::Approx(0.5));
    CHECK(bump(0.1, 0.25) + bump(-0.1, 0.25) == doctest::Approx(1.0));
    double prev = 0;
    for (int i = -30; i <= 30; ++i) {
        const double v = bump(i / 100.0, 0.25);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK_THROWS_AS(bump(0.0, 0.0), InvalidArgument);
}

TEST_CASE("mask is the hard prefix at sentence boundaries") {
    MaskSchedule s{{3, 7, 12}, 0.25};
    for (std::size_t t = 0; t < 3; ++t) {
        const double st = s.boundary_position(t);
        for (std::size_t i = 1; i <= 12; ++i) CHECK(s.mask(st, i) == (i <= s.boundaries[t] ? 1.0 : 0.0));
    }
    CHECK_THROWS_AS((MaskSchedule{{3, 3}, 0.25}.validate()), InvalidArgument);
    CHECK_THROWS_AS((MaskSchedule{{3}, 0.5}.validate()), InvalidArgument);
}

TEST_CASE("masked encoder ignores zero-weight tokens") {
    ToyEncoder enc({8, 12, 3, 1.0, 1.0});
    const Eigen::MatrixXd emb = embed_tokens({"a", "b", "c", "d"}, 8, 3);
    const std::vector<double> m = {1, 1, 0, 0};
    CHECK((enc.encode(emb, m) - enc.encode(emb.topRows(2), std::vector<double>{1, 1})).norm() == 0.0);
    CHECK_THROWS_AS(enc.encode(emb, std::vector<double>{1, 1}), InvalidArgument);
}

TEST_CASE("relaxed trajectory: exact at boundaries, first differences halve") {
    const std::vector<std::string> tokens = {"the", "soil", "is", "dry", "so", "plants", "wilt", "and", "then",
                                             "the", "gardener", "waters"};
    const Eigen::MatrixXd emb = embed_tokens(tokens, 16, 1);
    const ToyEncoder enc({16, 32, 1, 1.0, 1.0});
    const MaskSchedule s{{3, 7, 12}, 0.25};
    const C1Report r = c1_report(emb, s, enc, 256, 3);
    CHECK(r.boundary_error <= 1e-10);
    REQUIRE(r.first_difference_ratios.size() == 2);
    for (double ratio : r.first_difference_ratios) {
        CHECK(ratio >= 1.6);
        CHECK(ratio <= 2.5);
    }
    // bounded second differences: the curve is C^1 with a bounded derivative change
    CHECK(r.levels[2].max_second_difference < 4 * r.levels[0].max_second_difference + 1.0);
    CHECK_THROWS_AS(c1_report(emb, s, enc, 50), InvalidArgument);
}
