#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>
#include <Eigen/Eigenvalues>

#include "flowgeom/errors.hpp"
#include "flowgeom/project.hpp"

using namespace flowgeom;

namespace {

// Deflated power iteration on the explicit covariance: slow but simple,
// used as an independent reference for the top eigenpairs.
void power_oracle(const Eigen::MatrixXd& points, int k, Eigen::MatrixXd& vecs, Eigen::VectorXd& vals) {
    const Eigen::MatrixXd x = points.rowwise() - points.colwise().mean();
    Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(points.rows() - 1);
    vecs.resize(k, cov.cols());
    vals.resize(k);
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd v = Eigen::VectorXd::Ones(cov.cols()).normalized();
        for (int it = 0; it < 20000; ++it) v = (cov * v).normalized();
        vals[i] = v.dot(cov * v);
        vecs.row(i) = v.transpose();
        cov -= vals[i] * v * v.transpose();
    }
}

Eigen::MatrixXd anisotropic_cloud(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd pts(n, d);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < d; ++c) pts(r, c) = g(rng) * (c == 0 ? 5.0 : c == 1 ? 3.0 : c == 2 ? 1.5 : 0.3) + 1.0;
    }
    return pts;
}

}  // namespace

TEST_CASE("pca matches a power-iteration reference") {
    const Eigen::MatrixXd pts = anisotropic_cloud(200, 6, 4);
    const Projection p = pca_fit(pts, 3);
    Eigen::MatrixXd vecs;
    Eigen::VectorXd vals;
    power_oracle(pts, 3, vecs, vals);
    for (int i = 0; i < 3; ++i) {
        CHECK(p.explained_variance[i] == doctest::Approx(vals[i]).epsilon(1e-8));
        CHECK(std::abs(p.loadings.row(i).dot(vecs.row(i))) == doctest::Approx(1.0).epsilon(1e-8));
    }
    CHECK_FALSE(p.rank_deficient);
    CHECK(p.explained_ratio.sum() <= 1.0 + 1e-12);
    CHECK((p.loadings * p.loadings.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("pca sign rule") {
    const Eigen::MatrixXd pts = anisotropic_cloud(50, 4, 9);
    const Projection p = pca_fit(pts, 2);
    for (Eigen::Index r = 0; r < 2; ++r) {
        Eigen::Index best;
        p.loadings.row(r).cwiseAbs().maxCoeff(&best);
        CHECK(p.loadings(r, best) > 0);
    }
    // flipping the data does not flip the loadings
    const Projection q = pca_fit(Eigen::MatrixXd(-pts), 2);
    CHECK((p.loadings - q.loadings).norm() < 1e-10);
}

TEST_CASE("pca on a line is rank deficient") {
    Eigen::MatrixXd pts(5, 3);
    for (int i = 0; i < 5; ++i) pts.row(i) << i, 2 * i, -i;
    const Projection p = pca_fit(pts, 2);
    CHECK(p.rank_deficient);
    CHECK(p.explained_ratio[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(pca_fit(pts, 4), InvalidArgument);
    CHECK_THROWS_AS(pca_fit(pts.topRows(1), 1), TooShort);
}

TEST_CASE("large-d path agrees with the dense solver") {
    const int d = kDenseEigenMaxDim + 40;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd basis(3, d);
    for (int i = 0; i < basis.size(); ++i) basis.data()[i] = g(rng);
    Eigen::MatrixXd pts(60, d);
    for (int r = 0; r < 60; ++r) {
        pts.row(r) = 6 * g(rng) * basis.row(0) + 3 * g(rng) * basis.row(1) + 1 * g(rng) * basis.row(2);
        for (int c = 0; c < d; ++c) pts(r, c) += 0.01 * g(rng);
    }
    const Projection big = pca_fit(pts, 2, 7);
    // dense reference through the n x n Gram matrix
    const Eigen::MatrixXd x = pts.rowwise() - pts.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x * x.transpose() / 59.0);
    const Eigen::VectorXd ref = es.eigenvalues().reverse().head(2);
    CHECK(big.explained_variance[0] == doctest::Approx(ref[0]).epsilon(1e-8));
    CHECK(big.explained_variance[1] == doctest::Approx(ref[1]).epsilon(1e-8));
    CHECK(pca_fit(pts, 2, 7).loadings == big.loadings);
}

TEST_CASE("coords CSV and SVG outputs") {
    Flow a, b;
    a.points = anisotropic_cloud(4, 5, 1);
    b.points = anisotropic_cloud(3, 5, 2);
    a.meta = {"L1", "t", "en"};
    b.meta = {"L2", "t", "de"};
    const std::vector<Flow> flows = {a, b};
    const Projection p = pca_fit(stack_points(flows), 2);
    std::vector<Eigen::MatrixXd> coords = {project(a.points, p), project(b.points, p)};
    const auto dir = std::filesystem::temp_directory_path() / "flowgeom_project";
    std::filesystem::create_directories(dir);
    write_coords_csv(flows, coords, (dir / "coords.csv").string());
    write_trajectory_svg(flows, coords, (dir / "traj.svg").string());
    std::ifstream in(dir / "coords.csv");
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "flow_id,step,coord_1,coord_2,logic_id,topic,language");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 7);
    CHECK(std::filesystem::file_size(dir / "traj.svg") > 100);
}
