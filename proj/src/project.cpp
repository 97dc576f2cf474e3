#include "flowgeom/project.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "flowgeom/errors.hpp"
#include "flowgeom/number_format.hpp"

namespace flowgeom {

namespace {

constexpr double kRankTol = 1e-12;

void fix_signs(Eigen::MatrixXd& loadings) {
    for (Eigen::Index r = 0; r < loadings.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < loadings.cols(); ++c) {
            if (std::abs(loadings(r, c)) > std::abs(loadings(r, best))) best = c;
        }
        if (loadings(r, best) < 0) loadings.row(r) *= -1.0;
    }
}

// Top-k eigenpairs of X^T X / (n - 1) without forming the d x d matrix.
// Orthogonal iteration with Rayleigh-Ritz, a few extra guard vectors, and a
// seeded start so results are reproducible.
void subspace_iteration(const Eigen::MatrixXd& x, Eigen::Index k, std::uint64_t seed, Eigen::MatrixXd& vecs,
                        Eigen::VectorXd& vals) {
    const Eigen::Index d = x.cols();
    const double denom = static_cast<double>(x.rows() - 1);
    const Eigen::Index m = std::min<Eigen::Index>(d, k + 8);
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd q(d, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index r = 0; r < d; ++r) {
            // Raw engine output keeps the start vectors portable across
            // standard libraries.
            q(r, c) = static_cast<double>(rng() >> 11) / 9007199254740992.0 - 0.5;
        }
    }
    q = Eigen::HouseholderQR<Eigen::MatrixXd>(q).householderQ() * Eigen::MatrixXd::Identity(d, m);
    Eigen::VectorXd prev = Eigen::VectorXd::Constant(m, -1.0);
    for (int iter = 0; iter < 5000; ++iter) {
        Eigen::MatrixXd z = x.transpose() * (x * q) / denom;
        q = Eigen::HouseholderQR<Eigen::MatrixXd>(z).householderQ() * Eigen::MatrixXd::Identity(d, m);
        const Eigen::MatrixXd small = q.transpose() * (x.transpose() * (x * q)) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
        const Eigen::VectorXd cur = es.eigenvalues().reverse();
        q = q * es.eigenvectors().rowwise().reverse();
        const double scale = std::max(std::abs(cur[0]), 1e-300);
        if ((cur.head(k) - prev.head(k)).cwiseAbs().maxCoeff() <= 1e-10 * scale) {
            // Eigenvalues settle quadratically faster than vectors; confirm
            // with the residual before stopping.
            const Eigen::MatrixXd qk = q.leftCols(k);
            const Eigen::MatrixXd res = x.transpose() * (x * qk) / denom - qk * cur.head(k).asDiagonal();
            if (res.norm() <= 1e-10 * scale) {
                prev = cur;
                break;
            }
        }
        prev = cur;
    }
    vecs = q.leftCols(k).transpose();
    vals = prev.head(k);
}

}  // namespace

Projection pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Index k, std::uint64_t seed) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (k < 1 || k > d) throw InvalidArgument("pca_fit: need 1 <= k <= d, got k=" + std::to_string(k));
    if (n < 2) throw TooShort(static_cast<std::size_t>(n), 2);

    Projection proj;
    proj.mean = points.colwise().mean().transpose();
    const Eigen::MatrixXd x = points.rowwise() - proj.mean.transpose();
    proj.total_variance = x.squaredNorm() / static_cast<double>(n - 1);

    Eigen::VectorXd vals;
    if (d <= kDenseEigenMaxDim) {
        const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        if (es.info() != Eigen::Success) throw Error("pca_fit: eigendecomposition failed");
        // Ascending order from the solver; take the last k, largest first.
        proj.loadings = es.eigenvectors().rightCols(k).rowwise().reverse().transpose();
        vals = es.eigenvalues().tail(k).reverse();
    } else {
        subspace_iteration(x, k, seed, proj.loadings, vals);
    }
    vals = vals.cwiseMax(0.0);
    fix_signs(proj.loadings);

    proj.explained_variance = vals;
    proj.explained_ratio = proj.total_variance > 0 ? Eigen::VectorXd(vals / proj.total_variance)
                                                   : Eigen::VectorXd::Zero(k);
    const double top = vals.size() ? vals[0] : 0.0;
    proj.rank_deficient = n < k + 1 || top <= 0 || vals[k - 1] <= kRankTol * top;
    return proj;
}

Eigen::MatrixXd project(const Eigen::Ref<const Eigen::MatrixXd>& points, const Projection& proj) {
    if (points.cols() != proj.mean.size()) {
        throw DimensionMismatch(static_cast<std::size_t>(points.cols()), static_cast<std::size_t>(proj.mean.size()));
    }
    return (points.rowwise() - proj.mean.transpose()) * proj.loadings.transpose();
}

Eigen::MatrixXd stack_points(const std::vector<Flow>& flows) {
    Eigen::Index rows = 0;
    const Eigen::Index d = flows.empty() ? 0 : flows.front().dim();
    for (const auto& f : flows) {
        if (f.dim() != d) throw DimensionMismatch(static_cast<std::size_t>(d), static_cast<std::size_t>(f.dim()));
        rows += f.steps();
    }
    Eigen::MatrixXd out(rows, d);
    Eigen::Index r = 0;
    for (const auto& f : flows) {
        out.middleRows(r, f.steps()) = f.points;
        r += f.steps();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plot data

namespace {

std::ofstream open_out(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

void write_coords_csv(const std::vector<Flow>& flows, const std::vector<Eigen::MatrixXd>& coords,
                      const std::string& path) {
    if (flows.size() != coords.size()) throw InvalidArgument("write_coords_csv: flows and coords differ in length");
    const Eigen::Index k = coords.empty() ? 0 : coords.front().cols();
    auto out = open_out(path);
    out << "flow_id,step";
    for (Eigen::Index c = 1; c <= k; ++c) out << ",coord_" << c;
    out << ",logic_id,topic,language\n";
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& m = flows[i].meta;
        for (Eigen::Index t = 0; t < coords[i].rows(); ++t) {
            out << flows[i].id() << ',' << (t + 1);
            for (Eigen::Index c = 0; c < k; ++c) out << ',' << format_number(coords[i](t, c));
            out << ',' << m.logic_id << ',' << m.topic << ',' << m.language << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_trajectory_svg(const std::vector<Flow>& flows, const std::vector<Eigen::MatrixXd>& coords,
                          const std::string& path) {
    if (flows.size() != coords.size()) throw InvalidArgument("write_trajectory_svg: flows and coords differ in length");
    constexpr double kW = 800, kH = 600, kPad = 40;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    auto y_of = [](const Eigen::MatrixXd& c, Eigen::Index t) { return c.cols() > 1 ? c(t, 1) : 0.0; };
    for (const auto& c : coords) {
        for (Eigen::Index t = 0; t < c.rows(); ++t) {
            const double x = c(t, 0), y = y_of(c, t);
            if (first) {
                x0 = x1 = x;
                y0 = y1 = y;
                first = false;
            }
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    }
    const double sx = (kW - 2 * kPad) / std::max(x1 - x0, 1e-12);
    const double sy = (kH - 2 * kPad) / std::max(y1 - y0, 1e-12);

    std::map<std::string, std::size_t> logic_color;
    for (const auto& f : flows) logic_color.emplace(f.meta.logic_id, logic_color.size());

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
        << kW << ' ' << kH << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& c = coords[i];
        const char* color = kPalette[logic_color[flows[i].meta.logic_id] % std::size(kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (Eigen::Index t = 0; t < c.rows(); ++t) {
            if (t) out << ' ';
            out << fixed(kPad + (c(t, 0) - x0) * sx) << ',' << fixed(kH - kPad - (y_of(c, t) - y0) * sy);
        }
        out << "\"><title>" << xml_escape(flows[i].id()) << "</title></polyline>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

void write_heatmap_svg(const std::vector<std::string>& ids, const Eigen::MatrixXd& scores, const std::string& path) {
    const auto n = static_cast<Eigen::Index>(ids.size());
    if (scores.rows() != n || scores.cols() != n) throw InvalidArgument("write_heatmap_svg: matrix size mismatch");
    constexpr double kCell = 12, kPad = 10;
    const double side = kPad * 2 + kCell * static_cast<double>(n);

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(side) << "\" height=\"" << fixed(side)
        << "\">\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = scores(i, j);
            std::string fill = "#bbbbbb";
            if (!std::isnan(v)) {
                // Diverging map: -1 blue, 0 white, +1 red.
                const double t = std::clamp(v, -1.0, 1.0);
                const int r = t < 0 ? static_cast<int>(std::lround(255 * (1 + t))) : 255;
                const int b = t > 0 ? static_cast<int>(std::lround(255 * (1 - t))) : 255;
                const int g = static_cast<int>(std::lround(255 * (1 - std::abs(t))));
                char buf[8];
                std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
                fill = buf;
            }
            out << "<rect x=\"" << fixed(kPad + kCell * static_cast<double>(j)) << "\" y=\""
                << fixed(kPad + kCell * static_cast<double>(i)) << "\" width=\"" << fixed(kCell) << "\" height=\""
                << fixed(kCell) << "\" fill=\"" << fill << "\"><title>" << xml_escape(ids[static_cast<std::size_t>(i)])
                << " | " << xml_escape(ids[static_cast<std::size_t>(j)]) << ": " << format_number(v)
                << "</title></rect>\n";
        }
    }
    auto logic_of = [](const std::string& id) { return id.substr(0, id.find('/')); };
    for (Eigen::Index i = 1; i < n; ++i) {
        if (logic_of(ids[static_cast<std::size_t>(i)]) == logic_of(ids[static_cast<std::size_t>(i - 1)])) continue;
        const double p = kPad + kCell * static_cast<double>(i);
        out << "<line class=\"block\" x1=\"" << fixed(kPad) << "\" y1=\"" << fixed(p) << "\" x2=\"" << fixed(side - kPad)
            << "\" y2=\"" << fixed(p) << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
        out << "<line class=\"block\" x1=\"" << fixed(p) << "\" y1=\"" << fixed(kPad) << "\" x2=\"" << fixed(p)
            << "\" y2=\"" << fixed(side - kPad) << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace flowgeom
