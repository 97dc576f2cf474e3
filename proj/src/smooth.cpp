#include "flowgeom/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "flowgeom/errors.hpp"
#include "flowgeom/provider.hpp"

namespace flowgeom {

namespace {

double flat_exp(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }

}  // namespace

double bump(double x, double delta) {
    if (!(delta > 0)) throw InvalidArgument("bump: delta must be positive");
    if (x <= -delta) return 0.0;
    if (x >= delta) return 1.0;
    const double l = flat_exp((x + delta) / (2 * delta));
    const double r = flat_exp((delta - x) / (2 * delta));
    return l / (l + r);
}

double MaskSchedule::boundary_position(std::size_t t) const {
    return static_cast<double>(boundaries.at(t)) / static_cast<double>(total());
}

void MaskSchedule::validate() const {
    if (!(delta > 0 && delta < 0.5)) throw InvalidArgument("mask delta must lie in (0, 1/2)");
    if (boundaries.empty()) throw InvalidArgument("mask schedule needs at least one boundary");
    std::size_t prev = 0;
    for (std::size_t b : boundaries) {
        if (b <= prev) throw InvalidArgument("sentence boundaries must be positive and strictly increasing");
        prev = b;
    }
}

double MaskSchedule::mask(double s, std::size_t i) const {
    return bump(s * static_cast<double>(total()) - static_cast<double>(i) + 0.5, delta);
}

// ---------------------------------------------------------------------------
// Toy encoder

namespace {

// Uniform in [-scale, scale) from raw engine output, portable across
// standard libraries.
void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, std::mt19937_64& rng, double scale) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const double u = static_cast<double>(rng() >> 11) / 9007199254740992.0;
            m(r, c) = (2.0 * u - 1.0) * scale;
        }
    }
}

}  // namespace

ToyEncoder::ToyEncoder(const ToyEncoderConfig& cfg) : cfg_(cfg) {
    if (cfg_.dim < 2 || cfg_.hidden < 1) throw InvalidArgument("toy encoder needs dim >= 2 and hidden >= 1");
    if (!(cfg_.temperature > 0)) throw InvalidArgument("toy encoder temperature must be positive");
    std::mt19937_64 rng(cfg_.seed);
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(cfg_.dim));
    const double hid_scale = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden));
    w_token_.resize(cfg_.hidden, cfg_.dim);
    w_pos_.resize(cfg_.hidden, cfg_.dim);
    bias_.resize(cfg_.hidden);
    attend_.resize(cfg_.hidden);
    w_out_.resize(cfg_.dim, cfg_.hidden);
    out_bias_.resize(cfg_.dim);
    fill_uniform(w_token_, rng, 2.0 * in_scale);
    fill_uniform(w_pos_, rng, in_scale);
    fill_uniform(bias_, rng, 0.1);
    fill_uniform(attend_, rng, 2.0);
    fill_uniform(w_out_, rng, hid_scale);
    fill_uniform(out_bias_, rng, 0.1);
    w_out_ *= cfg_.readout_scale;
}

Eigen::VectorXd ToyEncoder::encode(const Eigen::Ref<const Eigen::MatrixXd>& tokens, std::span<const double> masks) const {
    if (tokens.cols() != cfg_.dim) {
        throw DimensionMismatch(static_cast<std::size_t>(cfg_.dim), static_cast<std::size_t>(tokens.cols()));
    }
    if (static_cast<std::size_t>(tokens.rows()) != masks.size()) throw InvalidArgument("one mask weight per token required");

    // Softmax pooling over the tokens plus a fixed null slot (score 0, value
    // 0). Each token weight is scaled by its mask, so a zero-mask token adds
    // exactly nothing and the output is continuous as masks vanish.
    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(cfg_.hidden);
    double norm = 1.0;  // null slot
    for (Eigen::Index i = 0; i < tokens.rows(); ++i) {
        const double m = masks[static_cast<std::size_t>(i)];
        if (m == 0.0) continue;
        const Eigen::VectorXd pre = w_token_ * (m * tokens.row(i).transpose()) +
                                    w_pos_ * (m * positional_encoding(static_cast<std::size_t>(i) + 1, cfg_.dim)) + bias_;
        const Eigen::VectorXd h = pre.array().tanh();
        const double w = m * std::exp(attend_.dot(h) / cfg_.temperature);
        pooled += w * h;
        norm += w;
    }
    return w_out_ * (pooled / norm) + out_bias_;
}

Eigen::VectorXd positional_encoding(std::size_t i, Eigen::Index dim) {
    Eigen::VectorXd p(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        const double freq = std::pow(100.0, -static_cast<double>(2 * (j / 2)) / static_cast<double>(dim));
        const double angle = static_cast<double>(i) * freq;
        p[j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
    return p;
}

Eigen::MatrixXd embed_tokens(const std::vector<std::string>& tokens, Eigen::Index dim, std::uint64_t seed) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(tokens.size()), dim);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = synth_embed(tokens[i], static_cast<std::size_t>(dim), seed).transpose();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trajectory

Eigen::VectorXd trajectory_point(const Eigen::Ref<const Eigen::MatrixXd>& token_embeddings, const MaskSchedule& schedule,
                                 const MaskedEncoder& encoder, double s) {
    schedule.validate();
    const std::size_t n = schedule.total();
    if (static_cast<std::size_t>(token_embeddings.rows()) < n) {
        throw InvalidArgument("schedule covers " + std::to_string(n) + " tokens but only " +
                              std::to_string(token_embeddings.rows()) + " are given");
    }
    if (!(s > 0 && s <= 1)) throw InvalidArgument("progress s must lie in (0, 1]");
    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(s * static_cast<double>(n))), 1, n);
    std::vector<double> masks(k);
    for (std::size_t i = 0; i < k; ++i) masks[i] = schedule.mask(s, i + 1);
    return encoder.encode(token_embeddings.topRows(static_cast<Eigen::Index>(k)), masks);
}

Eigen::VectorXd hard_prefix(const Eigen::Ref<const Eigen::MatrixXd>& token_embeddings, const MaskedEncoder& encoder,
                            std::size_t n) {
    if (n < 1 || n > static_cast<std::size_t>(token_embeddings.rows())) throw InvalidArgument("hard_prefix: bad length");
    const std::vector<double> ones(n, 1.0);
    return encoder.encode(token_embeddings.topRows(static_cast<Eigen::Index>(n)), ones);
}

C1Report c1_report(const Eigen::Ref<const Eigen::MatrixXd>& token_embeddings, const MaskSchedule& schedule,
                   const MaskedEncoder& encoder, std::size_t grid, std::size_t levels) {
    if (grid < 100) throw InvalidArgument("c1_report: grid must be >= 100");
    if (levels < 1) throw InvalidArgument("c1_report: need at least one level");
    schedule.validate();

    C1Report report;
    for (std::size_t l = 0; l < levels; ++l) {
        const std::size_t g = grid << l;
        const double h = 1.0 / static_cast<double>(g);
        std::vector<Eigen::VectorXd> samples;
        samples.reserve(g);
        for (std::size_t j = 1; j <= g; ++j) {
            samples.push_back(trajectory_point(token_embeddings, schedule, encoder, static_cast<double>(j) * h));
        }
        SmoothLevel level;
        level.grid = g;
        for (std::size_t j = 1; j < g; ++j) {
            level.max_first_difference = std::max(level.max_first_difference, (samples[j] - samples[j - 1]).norm());
        }
        for (std::size_t j = 1; j + 1 < g; ++j) {
            const double second = (samples[j + 1] - 2.0 * samples[j] + samples[j - 1]).norm() / (h * h);
            level.max_second_difference = std::max(level.max_second_difference, second);
        }
        report.levels.push_back(level);
    }
    for (std::size_t l = 0; l + 1 < report.levels.size(); ++l) {
        const auto& a = report.levels[l];
        const auto& b = report.levels[l + 1];
        report.first_difference_ratios.push_back(b.max_first_difference > 0 ? a.max_first_difference / b.max_first_difference
                                                                            : 0.0);
        report.second_difference_ratios.push_back(
            b.max_second_difference > 0 ? a.max_second_difference / b.max_second_difference : 0.0);
    }
    for (std::size_t t = 0; t < schedule.boundaries.size(); ++t) {
        const Eigen::VectorXd relaxed =
            trajectory_point(token_embeddings, schedule, encoder, schedule.boundary_position(t));
        const Eigen::VectorXd exact = hard_prefix(token_embeddings, encoder, schedule.boundaries[t]);
        report.boundary_error = std::max(report.boundary_error, (relaxed - exact).norm());
    }
    return report;
}

nlohmann::json to_json(const C1Report& report) {
    nlohmann::json j;
    j["levels"] = nlohmann::json::array();
    for (const auto& l : report.levels) {
        j["levels"].push_back({{"grid", l.grid},
                               {"max_first_difference", l.max_first_difference},
                               {"max_second_difference", l.max_second_difference}});
    }
    j["first_difference_ratios"] = report.first_difference_ratios;
    j["second_difference_ratios"] = report.second_difference_ratios;
    j["boundary_error"] = report.boundary_error;
    return j;
}

}  // namespace flowgeom
