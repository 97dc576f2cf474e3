#ifndef FLOWGEOM_SYNTHCORPUS_HPP
#define FLOWGEOM_SYNTHCORPUS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flowgeom/analysis.hpp"
#include "flowgeom/corpus.hpp"
#include "flowgeom/flow.hpp"

namespace flowgeom {

struct SynthSpec {
    std::size_t logics = 3;
    std::size_t topics = 4;
    std::size_t languages = 2;
    std::size_t min_steps = 8;
    std::size_t max_steps = 12;
    std::uint64_t seed = 7;
    double beta = 10.0;   // topic base magnitude
    double gamma = 1.0;   // mean step length along logic directions
    double sigma = 0.01;  // per-coordinate noise
    /// Language offset magnitude as a fraction of beta.
    double language_ratio = 0.5;
    Eigen::Index dim = 64;

    /// Throws InvalidArgument on empty axes, negative magnitudes, a bad step
    /// range, more topics or languages than the vocab tables hold, or d too
    /// small for the orthonormal construction.
    void validate() const;
    /// logics * max_steps + topics + languages.
    Eigen::Index required_dim() const;
};

/// Vocab table sizes.
std::size_t synth_topic_capacity();
std::size_t synth_language_capacity();

std::string synth_logic_id(std::size_t l);
std::string synth_topic(std::size_t m);
std::string synth_language(std::size_t k);

/// Step count of each logic, drawn from [min_steps, max_steps] by seed.
std::vector<std::size_t> synth_step_counts(const SynthSpec& spec);

/// One abstract template per logic plus topics * languages carrier rewrites
/// of each. Templates chain implications, instantiate a universal and close
/// with conjunctions, so every justified step is derivable.
std::vector<ReasoningRecord> generate_corpus(const SynthSpec& spec);

/// Carrier flows, in logic/topic/language order:
/// y_t = base(topic) + offset(language) + sum_{k<=t} a(l,k) v(l,k) + sigma n_t
/// with base, offset and every v(l,k) drawn from one seeded orthonormal set.
/// |base| = beta, |offset| = language_ratio * beta and the step lengths
/// a(l,k) vary in [gamma/2, 3 gamma/2] so each logic has its own curvature
/// profile.
std::vector<Flow> generate_flows(const SynthSpec& spec);

/// Thresholds the grouped report of generate_flows(spec) is expected to meet.
struct SynthThresholds {
    double velocity_logic_min = 0.9;
    double velocity_topic_max = 0.2;
    double velocity_language_max = 0.2;
    double position_topic_min = 0.8;
    double curvature_logic_margin = 0.3;  // over curvature(topic)
};

struct ThresholdCheck {
    std::string name;
    double value = 0;
    double bound = 0;
    bool passed = false;
};

std::vector<ThresholdCheck> check_thresholds(const GroupReport& report, const SynthThresholds& t = {});

/// Group means of the noise-free flows, thresholds, step counts and the spec.
nlohmann::json expected_report(const SynthSpec& spec, const SynthThresholds& t = {});

nlohmann::json to_json(const SynthSpec& spec);

}  // namespace flowgeom

#endif  // FLOWGEOM_SYNTHCORPUS_HPP
