#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "flowgeom/analysis.hpp"
#include "flowgeom/errors.hpp"

using namespace flowgeom;

namespace {

Flow make_flow(std::string logic, std::string topic, std::string lang, Eigen::MatrixXd pts) {
    Flow f;
    f.points = std::move(pts);
    f.meta.logic_id = std::move(logic);
    f.meta.topic = std::move(topic);
    f.meta.language = std::move(lang);
    return f;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("cosine and pearson") {
    CHECK(*cosine(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
    CHECK(*cosine(vec({1, 2}), vec({2, 4})) == doctest::Approx(1.0));
    CHECK(*cosine(vec({1, 1}), vec({1, 0})) == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK_FALSE(cosine(vec({0, 0}), vec({1, 0})).has_value());

    CHECK(*pearson(vec({1, 2, 3, 4}), vec({1, 3, 2, 4})) == doctest::Approx(0.8));
    CHECK(*pearson(vec({1, 2, 3}), vec({3, 2, 1})) == doctest::Approx(-1.0));
    CHECK_FALSE(pearson(vec({1, 1, 1}), vec({1, 2, 3})).has_value());
    CHECK_THROWS_AS(pearson(vec({1, 2, 3}), vec({1, 2})), InvalidArgument);
    CHECK_THROWS_AS(pearson(vec({1, 2}), vec({1, 2})), TooShort);
}

TEST_CASE("alignment") {
    const auto p = nearest_index_pairs(3, 5);
    REQUIRE(p.size() == 3);
    CHECK(p[0] == std::make_pair<Eigen::Index, Eigen::Index>(0, 0));
    CHECK(p[1] == std::make_pair<Eigen::Index, Eigen::Index>(1, 2));
    CHECK(p[2] == std::make_pair<Eigen::Index, Eigen::Index>(2, 4));
    const auto q = nearest_index_pairs(5, 3);
    CHECK(q[1] == std::make_pair<Eigen::Index, Eigen::Index>(2, 1));

    Eigen::MatrixXd s(3, 1);
    s << 0, 10, 20;
    const Eigen::MatrixXd r = resample_linear(s, 5);
    CHECK(r(1, 0) == doctest::Approx(5.0));
    CHECK(r(4, 0) == doctest::Approx(20.0));
}

TEST_CASE("position and velocity similarity") {
    Eigen::MatrixXd a(3, 2), b(3, 2);
    a << 1, 0, 1, 1, 2, 1;
    b << 0, 1, 1, 1, 1, 2;
    // rows: cos((1,0),(0,1)) = 0, cos((1,1),(1,1)) = 1, cos((2,1),(1,2)) = 4/5
    const Flow fa = make_flow("L", "t", "en", a), fb = make_flow("M", "t", "en", b);
    CHECK(*position_similarity(fa, fb, AlignmentPolicy::nearest()).value == doctest::Approx((0 + 1 + 0.8) / 3));
    // velocities: (0,1),(1,0) vs (1,0),(0,1)
    CHECK(*velocity_similarity(fa, fb, AlignmentPolicy::nearest()).value == doctest::Approx(0.0));
    CHECK(*velocity_similarity(fa, fa, AlignmentPolicy::nearest()).value == doctest::Approx(1.0));

    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 2);
    z(1, 0) = 1;
    const PairScore ps = position_similarity(make_flow("L", "t", "en", z), fa, AlignmentPolicy::nearest());
    CHECK(ps.undefined_steps == 2);
    CHECK(*ps.value == doctest::Approx(1 / std::sqrt(2.0)));

    const PairScore zero = position_similarity(make_flow("L", "t", "en", Eigen::MatrixXd::Zero(3, 2)), fa,
                                               AlignmentPolicy::nearest());
    CHECK(zero.reason == SkipReason::ZeroVector);
}

TEST_CASE("curvature similarity") {
    CHECK(*curvature_similarity(vec({1, 2, 3, 4}), vec({1, 3, 2, 4}), AlignmentPolicy::resample()).value ==
          doctest::Approx(0.8));
    // unequal lengths go through the resample grid
    const auto s = curvature_similarity(vec({1, 2, 3}), vec({2, 4, 6, 8, 10}), AlignmentPolicy::resample(16));
    CHECK(*s.value == doctest::Approx(1.0));
    CHECK(curvature_similarity(vec({1, 1, 1}), vec({1, 2, 3}), AlignmentPolicy::resample()).reason ==
          SkipReason::ConstantSeries);
    CHECK(curvature_similarity(vec({1, 2}), vec({1, 2}), AlignmentPolicy::resample()).reason == SkipReason::TooShort);
}

TEST_CASE("grouping exclusivity") {
    const FlowKey a{"L1", "rail", "en"}, b{"L1", "rail", "de"}, c{"L2", "rail", "en"}, d{"L1", "rail", "en"};
    CHECK(pair_matches(a, b, Criterion::Logic, false));
    CHECK_FALSE(pair_matches(a, d, Criterion::Logic, false));
    CHECK(pair_matches(a, d, Criterion::Logic, true));
    CHECK(pair_matches(a, c, Criterion::Topic, false));
    CHECK_FALSE(pair_matches(a, b, Criterion::Topic, false));
    CHECK(pair_matches(a, b, Criterion::Topic, true));
    CHECK(pair_matches(a, c, Criterion::Language, false));
    CHECK_FALSE(pair_matches(a, b, Criterion::Language, true));
}

TEST_CASE("pairwise matrix and group summary") {
    // Four flows: two logics x two topics. Rows are chosen so cosines are
    // easy: logic sets the velocity direction, topic sets the offset.
    std::vector<Flow> flows;
    auto pts = [](double ox, double oy, int axis) {
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(5, 4);
        for (int t = 0; t < 5; ++t) {
            p(t, 0) = ox;
            p(t, 1) = oy;
            p(t, 2 + axis) = t;
        }
        return p;
    };
    flows.push_back(make_flow("L2", "b", "en", pts(0, 5, 1)));
    flows.push_back(make_flow("L1", "a", "en", pts(5, 0, 0)));
    flows.push_back(make_flow("L1", "b", "en", pts(0, 5, 0)));
    flows.push_back(make_flow("L2", "a", "en", pts(5, 0, 1)));

    const AnalysisPolicies pol;
    const auto vel = pairwise_matrix(flows, Measure::Velocity, pol, 2);
    REQUIRE(vel.size() == 4);
    CHECK(vel.ids == std::vector<std::string>{"L1/a/en", "L1/b/en", "L2/a/en", "L2/b/en"});
    REQUIRE(vel.blocks.size() == 2);
    CHECK(vel.blocks[1].begin == 2);
    CHECK(vel.scores(0, 1) == doctest::Approx(1.0));
    CHECK(vel.scores(0, 2) == doctest::Approx(0.0));
    CHECK(vel.scores(1, 0) == vel.scores(0, 1));

    const auto keys = flow_keys(flows);
    const auto rep = group_summary(vel, keys, {Criterion::Logic, Criterion::Topic, Criterion::Language});
    CHECK(*rep.at(Measure::Velocity, Criterion::Logic).mean == doctest::Approx(1.0));
    CHECK(rep.at(Measure::Velocity, Criterion::Logic).pairs == 2);
    CHECK(*rep.at(Measure::Velocity, Criterion::Topic).mean == doctest::Approx(0.0));
    CHECK(rep.at(Measure::Velocity, Criterion::Language).pairs == 4);

    const auto ordered = group_summary(vel, keys, {Criterion::Logic}, {false, true});
    CHECK(ordered.at(Measure::Velocity, Criterion::Logic).pairs == 4);
    CHECK(*ordered.at(Measure::Velocity, Criterion::Logic).mean == doctest::Approx(1.0));

    std::map<std::string, FlowKey> partial = keys;
    partial.erase("L2/a/en");
    CHECK_THROWS_AS(group_summary(vel, partial, {Criterion::Logic}), UnknownFlowId);

    // curvature: every flow here is a straight line, so all pairs are skipped
    const auto curv = pairwise_matrix(flows, Measure::Curvature, pol);
    CHECK(std::isnan(curv.scores(0, 1)));
    CHECK(curv.skipped.at("constant-series") > 0);
    const auto crep = group_summary(curv, keys, {Criterion::Logic});
    CHECK_FALSE(crep.at(Measure::Curvature, Criterion::Logic).mean.has_value());
    CHECK(crep.at(Measure::Curvature, Criterion::Logic).excluded.at("constant-series") == 2);
}

TEST_CASE("matrix CSV round trip") {
    std::vector<Flow> flows;
    Eigen::MatrixXd p(3, 2);
    p << 1, 0, 0, 1, 1, 1;
    flows.push_back(make_flow("L1", "a", "en", p));
    flows.push_back(make_flow("L1", "b,c", "en", p * 2));
    flows.push_back(make_flow("L2", "a", "en", p.rowwise().reverse()));
    const auto m = pairwise_matrix(flows, Measure::Position, {});
    const auto path = (std::filesystem::temp_directory_path() / "flowgeom_matrix.csv").string();
    write_matrix_csv(m, path);
    write_matrix_sidecar(m, path + ".json");
    const auto back = read_matrix_csv(path);
    CHECK(back.ids == m.ids);
    CHECK((back.scores - m.scores).cwiseAbs().maxCoeff() < 1e-15);
}
