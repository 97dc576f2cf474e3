#ifndef FLOWGEOM_PROJECT_HPP
#define FLOWGEOM_PROJECT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flowgeom/analysis.hpp"
#include "flowgeom/flow.hpp"

namespace flowgeom {

/// Principal axes of a point cloud.
struct Projection {
    Eigen::VectorXd mean;
    Eigen::MatrixXd loadings;               // k x d, orthonormal rows
    Eigen::VectorXd explained_variance;     // eigenvalues of the sample covariance
    Eigen::VectorXd explained_ratio;        // descending, in [0, 1]
    double total_variance = 0;
    bool rank_deficient = false;

    Eigen::Index components() const { return loadings.rows(); }
};

/// Above this dimension the covariance is never formed; the top-k subspace is
/// found by seeded orthogonal iteration instead.
inline constexpr Eigen::Index kDenseEigenMaxDim = 512;

/// PCA of the rows of `points` (n x d): centre, then take the top-k
/// eigenvectors of the sample covariance (n - 1 normalisation). Each loading
/// is signed so that its largest-magnitude coordinate is positive (lowest
/// index on ties). Sets rank_deficient rather than failing when fewer than k
/// directions carry variance.
Projection pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Index k, std::uint64_t seed = 0);

/// loadings * (x - mean) for every row; result is n x k.
Eigen::MatrixXd project(const Eigen::Ref<const Eigen::MatrixXd>& points, const Projection& proj);

/// All step points of `flows`, stacked in flow order.
Eigen::MatrixXd stack_points(const std::vector<Flow>& flows);

/// CSV: flow_id, step, coord_1..coord_k, logic_id, topic, language.
/// `coords[i]` holds the projected rows of `flows[i]`.
void write_coords_csv(const std::vector<Flow>& flows, const std::vector<Eigen::MatrixXd>& coords,
                      const std::string& path);

/// One polyline per flow over the first two coordinates.
void write_trajectory_svg(const std::vector<Flow>& flows, const std::vector<Eigen::MatrixXd>& coords,
                          const std::string& path);

/// Heatmap with separators between logic blocks (ids are "logic/topic/lang").
void write_heatmap_svg(const std::vector<std::string>& ids, const Eigen::MatrixXd& scores, const std::string& path);

}  // namespace flowgeom

#endif  // FLOWGEOM_PROJECT_HPP
