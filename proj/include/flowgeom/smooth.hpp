#ifndef FLOWGEOM_SMOOTH_HPP
#define FLOWGEOM_SMOOTH_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace flowgeom {

/// C-infinity transition with flat tails: 0 for x <= -delta, 1 for
/// x >= delta, 1/2 at 0. Built from h(t) = exp(-1/t) (t > 0, else 0) as
/// h((x + delta) / 2delta) / (h((x + delta) / 2delta) + h((delta - x) / 2delta)).
double bump(double x, double delta);

/// Token stream split into sentences at cumulative counts N_1 < ... < N_T = N.
struct MaskSchedule {
    std::vector<std::size_t> boundaries;
    double delta = 0.25;

    std::size_t total() const { return boundaries.empty() ? 0 : boundaries.back(); }
    /// s_t = N_t / N.
    double boundary_position(std::size_t t) const;
    /// Throws InvalidArgument unless 0 < delta < 1/2 and boundaries are
    /// strictly increasing and positive.
    void validate() const;

    /// Relaxed inclusion of 1-based token i at progress s:
    /// bump(s N - i + 1/2, delta). Exactly 1 for i <= sN - 1/2 + delta and 0
    /// for i >= sN + 1/2 - delta, so at s_t it is the hard prefix mask.
    double mask(double s, std::size_t i) const;
};

/// Sequence encoder that accepts a per-token inclusion weight in [0, 1].
/// A weight of 0 must make the token indistinguishable from absent.
class MaskedEncoder {
public:
    virtual ~MaskedEncoder() = default;
    virtual Eigen::Index dim() const = 0;
    /// `tokens` holds token embeddings (rows); `masks` one weight per row.
    virtual Eigen::VectorXd encode(const Eigen::Ref<const Eigen::MatrixXd>& tokens, std::span<const double> masks) const = 0;
};

struct ToyEncoderConfig {
    Eigen::Index dim = 16;
    Eigen::Index hidden = 32;
    std::uint64_t seed = 0;
    double temperature = 1.0;
    double readout_scale = 1.0;
};

/// affine -> tanh -> masked softmax-weighted pooling -> affine readout.
/// Masks scale the token and positional inputs and the pooling weights.
class ToyEncoder final : public MaskedEncoder {
public:
    explicit ToyEncoder(const ToyEncoderConfig& cfg);
    Eigen::Index dim() const override { return cfg_.dim; }
    Eigen::VectorXd encode(const Eigen::Ref<const Eigen::MatrixXd>& tokens, std::span<const double> masks) const override;

private:
    ToyEncoderConfig cfg_;
    Eigen::MatrixXd w_token_;   // hidden x dim
    Eigen::MatrixXd w_pos_;     // hidden x dim
    Eigen::VectorXd bias_;      // hidden
    Eigen::VectorXd attend_;    // hidden
    Eigen::MatrixXd w_out_;     // dim x hidden
    Eigen::VectorXd out_bias_;  // dim
};

/// Sinusoidal encoding of 1-based position i.
Eigen::VectorXd positional_encoding(std::size_t i, Eigen::Index dim);

/// Token embeddings (one row per token) via the synthetic hash embedding.
Eigen::MatrixXd embed_tokens(const std::vector<std::string>& tokens, Eigen::Index dim, std::uint64_t seed);

/// Relaxed-mask trajectory at progress s in (0, 1]: the first ceil(sN)
/// tokens, each weighted by schedule.mask(s, i), through the encoder.
Eigen::VectorXd trajectory_point(const Eigen::Ref<const Eigen::MatrixXd>& token_embeddings, const MaskSchedule& schedule,
                                 const MaskedEncoder& encoder, double s);

/// Encoding of the first n tokens with every weight 1.
Eigen::VectorXd hard_prefix(const Eigen::Ref<const Eigen::MatrixXd>& token_embeddings, const MaskedEncoder& encoder,
                            std::size_t n);

struct SmoothLevel {
    std::size_t grid = 0;
    double max_first_difference = 0;
    /// max |P(s+h) - 2P(s) + P(s-h)| / h^2.
    double max_second_difference = 0;
};

struct C1Report {
    std::vector<SmoothLevel> levels;  // grid, 2 grid, 4 grid, ...
    /// levels[i].max_first_difference / levels[i+1].max_first_difference.
    std::vector<double> first_difference_ratios;
    std::vector<double> second_difference_ratios;
    double boundary_error = 0;  // max_t |P(s_t) - y_t|
};

/// Samples the trajectory at s = j / G, j = 1..G, for G = grid * 2^l,
/// l < levels. Throws InvalidArgument if grid < 100.
C1Report c1_report(const Eigen::Ref<const Eigen::MatrixXd>& token_embeddings, const MaskSchedule& schedule,
                   const MaskedEncoder& encoder, std::size_t grid, std::size_t levels = 3);

nlohmann::json to_json(const C1Report& report);

}  // namespace flowgeom

#endif  // FLOWGEOM_SMOOTH_HPP
