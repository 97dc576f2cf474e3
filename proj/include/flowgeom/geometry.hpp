#ifndef FLOWGEOM_GEOMETRY_HPP
#define FLOWGEOM_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "flowgeom/errors.hpp"

namespace flowgeom {

/// Relative cutoff below which a triple is treated as degenerate.
inline constexpr double kDegenerateEps = 1e-12;

template <typename Scalar>
struct Curvature {
    Scalar value = 0;
    bool degenerate = false;
};

/// Menger curvature of the triple (p, q, r): the reciprocal circumradius,
/// evaluated as 2 sin(theta) / |r - p| where theta is the turning angle between
/// u = q - p and v = r - q. sin(theta) comes from the half-angle products of
/// the unit vectors, which stay accurate for nearly collinear triples where
/// sqrt(1 - cos^2) does not.
///
/// Returns 0 flagged degenerate when any pairwise distance falls below
/// kDegenerateEps times the largest one (coincident or collinear points).
template <typename DerivedP, typename DerivedQ, typename DerivedR>
Curvature<typename DerivedP::Scalar> menger_curvature(const Eigen::MatrixBase<DerivedP>& p,
                                                      const Eigen::MatrixBase<DerivedQ>& q,
                                                      const Eigen::MatrixBase<DerivedR>& r) {
    using Scalar = typename DerivedP::Scalar;
    if (p.size() != q.size() || q.size() != r.size()) {
        throw DimensionMismatch(static_cast<std::size_t>(p.size()),
                                static_cast<std::size_t>(q.size() != p.size() ? q.size() : r.size()));
    }
    const auto u = (q - p).eval();
    const auto v = (r - q).eval();
    const Scalar a = u.norm();
    const Scalar b = v.norm();
    const Scalar c = (r - p).norm();
    const Scalar scale = std::max({a, b, c});
    const Scalar cutoff = Scalar(kDegenerateEps) * scale;
    if (scale == Scalar(0) || a <= cutoff || b <= cutoff || c <= cutoff) return {Scalar(0), true};

    const auto uh = (u / a).eval();
    const auto vh = (v / b).eval();
    // |u^ - v^| = 2 sin(theta/2) and |u^ + v^| = 2 cos(theta/2)
    const Scalar sine = Scalar(0.5) * (uh - vh).norm() * (uh + vh).norm();
    if (sine <= Scalar(kDegenerateEps)) return {Scalar(0), true};  // collinear
    return {Scalar(2) * sine / c, false};
}

/// Circumradius abc / (4 Area), with the area |R00 R11| / 2 from a
/// Householder QR of the d x 2 matrix [q - p, r - p]. Independent of
/// menger_curvature; used as its oracle. Throws DegenerateTriple when the area
/// vanishes.
template <typename DerivedP, typename DerivedQ, typename DerivedR>
typename DerivedP::Scalar circumradius(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q,
                                       const Eigen::MatrixBase<DerivedR>& r) {
    using Scalar = typename DerivedP::Scalar;
    if (p.size() != q.size() || q.size() != r.size()) {
        throw DimensionMismatch(static_cast<std::size_t>(p.size()), static_cast<std::size_t>(q.size()));
    }
    if (p.size() < 2) throw DegenerateTriple();  // collinear by construction
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
    Mat m(p.size(), 2);
    m.col(0) = q - p;
    m.col(1) = r - p;
    const Eigen::HouseholderQR<Mat> qr(m);
    const auto& rr = qr.matrixQR();
    const Scalar a = m.col(0).norm();
    const Scalar b = (r - q).norm();
    const Scalar c = m.col(1).norm();
    const Scalar area = Scalar(0.5) * std::abs(rr(0, 0) * rr(1, 1));
    // same relative cutoff as menger_curvature applies to the sine
    if (!(area > Scalar(0)) || Scalar(2) * area <= Scalar(kDegenerateEps) * a * c) throw DegenerateTriple();
    return a * b * c / (Scalar(4) * area);
}

/// Rows of `points` are y_1..y_T; returns the (T-1) x d matrix of
/// differences y_t - y_{t-1}. Throws TooShort when T < 2.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> velocities(
    const Eigen::MatrixBase<Derived>& points) {
    const Eigen::Index t = points.rows();
    if (t < 2) throw TooShort(static_cast<std::size_t>(t), 2);
    return points.bottomRows(t - 1) - points.topRows(t - 1);
}

template <typename Scalar>
struct Kinematics {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> velocities;  // (T-1) x d
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> curvatures;                 // T-2, interior points
    std::vector<bool> degenerate;                                        // one flag per curvature
};

/// Velocities and the interior curvature series kappa_t = c(y_{t-1}, y_t, y_{t+1}).
/// T = 2 gives velocities with an empty curvature series.
template <typename Derived>
Kinematics<typename Derived::Scalar> kinematics(const Eigen::MatrixBase<Derived>& points) {
    using Scalar = typename Derived::Scalar;
    Kinematics<Scalar> k;
    k.velocities = velocities(points);
    const Eigen::Index t = points.rows();
    const Eigen::Index n = std::max<Eigen::Index>(0, t - 2);
    k.curvatures.resize(n);
    k.degenerate.assign(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto c = menger_curvature(points.row(i).transpose(), points.row(i + 1).transpose(),
                                        points.row(i + 2).transpose());
        k.curvatures[i] = c.value;
        k.degenerate[static_cast<std::size_t>(i)] = c.degenerate;
    }
    return k;
}

/// Rows minus their mean; for plotting only, never for similarity inputs.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> centered(
    const Eigen::MatrixBase<Derived>& points) {
    return points.rowwise() - points.colwise().mean();
}

}  // namespace flowgeom

#endif  // FLOWGEOM_GEOMETRY_HPP
