#ifndef FLOWGEOM_ANALYSIS_HPP
#define FLOWGEOM_ANALYSIS_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flowgeom/flow.hpp"

namespace flowgeom {

enum class Measure { Position, Velocity, Curvature };
std::string_view to_string(Measure m);
Measure parse_measure(std::string_view text);

enum class AlignKind { NearestIndex, ResampleLinear };
std::string_view to_string(AlignKind k);

struct AlignmentPolicy {
    AlignKind kind = AlignKind::NearestIndex;
    std::size_t grid = 16;  // resample only

    void validate() const;  // grid >= 3

    static AlignmentPolicy nearest() { return {AlignKind::NearestIndex, 16}; }
    static AlignmentPolicy resample(std::size_t grid = 16) { return {AlignKind::ResampleLinear, grid}; }
};

/// Why a pair (or a step within a pair) contributed no score.
enum class SkipReason { None, ZeroVector, ConstantSeries, TooShort };
std::string_view to_string(SkipReason r);

/// <u, v> / (|u| |v|), clamped to [-1, 1]; nullopt when either norm < 1e-300.
std::optional<double> cosine(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Centered correlation of two equal-length series (length >= 3); nullopt
/// when either variance < 1e-300. Throws InvalidArgument on length mismatch.
std::optional<double> pearson(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Index of the longer series paired with index j of the shorter one:
/// round(j (long - 1) / (short - 1)).
std::vector<std::pair<Eigen::Index, Eigen::Index>> nearest_index_pairs(Eigen::Index len_a, Eigen::Index len_b);

/// Linear interpolation of the rows of `series` onto `grid` evenly spaced
/// positions of [0, 1].
Eigen::MatrixXd resample_linear(const Eigen::Ref<const Eigen::MatrixXd>& series, std::size_t grid);

/// Row-aligned copies of `a` and `b` with equal row counts. Nearest-index
/// on equal lengths is the identity pairing. Throws TooShort below
/// `min_length` rows.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> align(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                                  const Eigen::Ref<const Eigen::MatrixXd>& b,
                                                  const AlignmentPolicy& policy, Eigen::Index min_length = 2);

struct PairScore {
    std::optional<double> value;
    SkipReason reason = SkipReason::None;
    /// Aligned steps dropped from the mean (zero vectors).
    std::size_t undefined_steps = 0;
};

/// Mean cosine over aligned rows; undefined rows are skipped and counted.
PairScore mean_cosine(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                      const AlignmentPolicy& policy);

PairScore position_similarity(const Flow& a, const Flow& b, const AlignmentPolicy& policy);
PairScore velocity_similarity(const Flow& a, const Flow& b, const AlignmentPolicy& policy);
/// Pearson over curvature series; equal lengths are compared raw, unequal
/// lengths through `policy`.
PairScore curvature_similarity(const Flow& a, const Flow& b, const AlignmentPolicy& policy);
PairScore curvature_similarity(const Eigen::Ref<const Eigen::VectorXd>& ka, const Eigen::Ref<const Eigen::VectorXd>& kb,
                               const AlignmentPolicy& policy);

struct AnalysisPolicies {
    AlignmentPolicy position = AlignmentPolicy::nearest();
    AlignmentPolicy velocity = AlignmentPolicy::nearest();
    AlignmentPolicy curvature = AlignmentPolicy::resample(16);

    const AlignmentPolicy& for_measure(Measure m) const;
};

PairScore similarity(const Flow& a, const Flow& b, Measure m, const AnalysisPolicies& policies);

struct FlowKey {
    std::string logic_id;
    std::string topic;
    std::string language;
};

struct Block {
    std::string logic_id;
    std::size_t begin;  // first row
    std::size_t end;    // one past the last row
};

struct SimilarityMatrix {
    Measure measure = Measure::Position;
    /// Flow ids in block order: logic_id, then topic, then language.
    std::vector<std::string> ids;
    std::vector<FlowKey> keys;
    /// NaN where the pair was skipped.
    Eigen::MatrixXd scores;
    std::vector<std::vector<SkipReason>> reasons;
    std::vector<Block> blocks;
    /// Skipped unordered pairs (i <= j) by reason.
    std::map<std::string, std::size_t> skipped;

    std::size_t size() const { return ids.size(); }
    bool defined(std::size_t i, std::size_t j) const { return reasons[i][j] == SkipReason::None; }
};

/// Symmetric matrix over all flows (>= 2, shared d), upper triangle computed
/// and mirrored.
SimilarityMatrix pairwise_matrix(const std::vector<Flow>& flows, Measure measure, const AnalysisPolicies& policies,
                                 std::size_t jobs = 1);

enum class Criterion { Logic, Topic, Language };
std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view text);

struct GroupingOptions {
    /// Exclusive (default): logic = same logic and a different topic or
    /// language; topic/language = same attribute and a different logic.
    /// Inclusive: same attribute only.
    bool inclusive = false;
    /// Counts (i, j) and (j, i) separately; means are unchanged.
    bool ordered_pairs = false;
};

/// Whether the unordered pair (a, b) is eligible under `c`.
bool pair_matches(const FlowKey& a, const FlowKey& b, Criterion c, bool inclusive);

struct GroupStat {
    std::optional<double> mean;
    double sum = 0;
    std::size_t pairs = 0;     // included
    std::size_t eligible = 0;  // included + excluded
    std::map<std::string, std::size_t> excluded;
};

struct GroupReport {
    GroupingOptions options;
    /// stats[measure][criterion]
    std::map<Measure, std::map<Criterion, GroupStat>> stats;

    const GroupStat& at(Measure m, Criterion c) const { return stats.at(m).at(c); }
};

/// Table-style means over eligible pairs i < j (never i = j). `metadata`
/// maps every matrix id to its key; missing ids raise UnknownFlowId.
void group_summary(const SimilarityMatrix& matrix, const std::map<std::string, FlowKey>& metadata,
                   const std::vector<Criterion>& criteria, const GroupingOptions& options, GroupReport& report);

GroupReport group_summary(const SimilarityMatrix& matrix, const std::map<std::string, FlowKey>& metadata,
                          const std::vector<Criterion>& criteria, const GroupingOptions& options = {});

std::map<std::string, FlowKey> flow_keys(const std::vector<Flow>& flows);

nlohmann::json to_json(const GroupReport& report);

/// CSV with a header row and a leading id column; skipped cells are empty.
void write_matrix_csv(const SimilarityMatrix& m, const std::string& path);
/// Block boundaries and skip tallies.
void write_matrix_sidecar(const SimilarityMatrix& m, const std::string& path);

struct MatrixCsv {
    std::vector<std::string> ids;
    Eigen::MatrixXd scores;  // NaN for empty cells
};
MatrixCsv read_matrix_csv(const std::string& path);

}  // namespace flowgeom

#endif  // FLOWGEOM_ANALYSIS_HPP
