#ifndef FLOWGEOM_FLOW_HPP
#define FLOWGEOM_FLOW_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flowgeom/corpus.hpp"
#include "flowgeom/flow_file.hpp"
#include "flowgeom/provider.hpp"

namespace flowgeom {

enum class FlowMode { PrefixEmbedding, StepSpan };

std::string_view to_string(FlowMode mode);
FlowMode parse_flow_mode(std::string_view text);

struct FlowOptions {
    bool include_prompt = false;
    std::string prompt;
    std::string joiner = "\n";
    FlowMode mode = FlowMode::PrefixEmbedding;
};

struct FlowMeta {
    std::string logic_id;
    std::string topic;
    std::string language;
    std::string record_mode = "carrier";
    std::string provider;
    FlowMode mode = FlowMode::PrefixEmbedding;
    std::string pooling = "prefix";
    std::string joiner = "\n";
    bool include_prompt = false;
};

/// A trajectory y_1..y_T, one row per step, kept in double precision.
struct Flow {
    Eigen::MatrixXd points;  // T x d
    FlowMeta meta;

    Eigen::Index steps() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
    /// "logic_id/topic/language".
    std::string id() const;
};

nlohmann::json to_json(const FlowMeta& meta);
FlowMeta flow_meta_from_json(const nlohmann::json& j);

/// Narrows to float32 for storage.
FlowFile to_flow_file(const Flow& flow);
Flow from_flow_file(const FlowFile& file);

/// S_1..S_T: optional prompt, then steps joined by `opts.joiner`.
std::vector<std::string> cumulative_prefixes(const ReasoningRecord& rec, const FlowOptions& opts);

/// y_t = embed(S_t) for t = 1..T. Provider errors are rethrown as
/// ProviderError annotated with the record id and step. Providers that serve
/// pre-built flows are used as-is after a length check.
Flow build_cumulative_flow(const ReasoningRecord& rec, EmbeddingProvider& provider, const FlowOptions& opts);

struct BuildEntry {
    std::string file;  // relative to the output directory
    std::string record_id;
    std::size_t steps = 0;
    std::size_t dim = 0;
};

struct BuildFailure {
    std::string record_id;
    std::string error;
};

struct BuildResult {
    std::vector<BuildEntry> written;  // sorted by file
    std::vector<BuildFailure> failures;  // sorted by record id
};

/// Embeds every carrier of the index (plus templates when asked) into
/// `<out_dir>/<logic>/<topic>/<language>.rflw` and writes
/// `<out_dir>/manifest.json`. Per-record failures are collected, not thrown.
BuildResult batch_build(const CorpusIndex& index, EmbeddingProvider& provider, const FlowOptions& opts,
                        const std::string& out_dir, bool include_templates = false, std::size_t jobs = 1);

/// Every `*.rflw` below `dir`, sorted by relative path.
std::vector<Flow> load_flows(const std::string& dir);

}  // namespace flowgeom

#endif  // FLOWGEOM_FLOW_HPP
