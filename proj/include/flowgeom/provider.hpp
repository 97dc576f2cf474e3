#ifndef FLOWGEOM_PROVIDER_HPP
#define FLOWGEOM_PROVIDER_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "flowgeom/corpus.hpp"
#include "flowgeom/flow_file.hpp"

namespace flowgeom {

enum class ProviderKind { Synth, Http, File };

std::string_view to_string(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view text);

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Synth;

    // synth
    std::size_t dimension = 64;
    std::uint64_t seed = 0;

    // http
    std::string endpoint;  // e.g. http://localhost:8080/v1/embeddings
    std::string model;
    std::string api_key_env = "RFLOW_API_KEY";
    std::size_t max_batch = 64;
    std::size_t max_parallel = 4;
    int retry_budget = 3;
    double backoff_base_seconds = 0.5;
    double timeout_seconds = 60.0;

    // file
    std::string directory;

    /// Throws InvalidArgument when an invariant for the selected kind fails.
    void validate() const;
};

/// Text -> vector backend.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// One vector per input, in input order. Throws ProviderError subtypes
    /// and DimensionMismatch.
    virtual std::vector<Eigen::VectorXd> embed_batch(const std::vector<std::string>& texts) = 0;

    /// Stable identifier written into flow metadata.
    virtual std::string id() const = 0;

    /// Backends that serve pre-built trajectories return one here; the flow
    /// builder then skips prefix embedding for that record.
    virtual std::optional<FlowFile> lookup_flow(const ReasoningRecord& rec) const;
};

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& cfg);

/// Deterministic hash embedding used for tests and reproducible runs.
///
/// Tokens are maximal runs of non-whitespace (Unicode White_Space). For
/// token w and coordinate j, h = FNV-1a-64 over the UTF-8 bytes of w, then j
/// and `seed` as 8-byte little-endian integers; the coordinate gains
/// (h mod 2^53) / 2^53 * 2 - 1. The sum is L2-normalised; an empty sum maps
/// to e_0.
Eigen::VectorXd synth_embed(std::string_view text, std::size_t dimension, std::uint64_t seed);

/// Splits on Unicode White_Space code points.
std::vector<std::string_view> split_unicode_whitespace(std::string_view text);

class SynthProvider final : public EmbeddingProvider {
public:
    SynthProvider(std::size_t dimension, std::uint64_t seed);
    std::vector<Eigen::VectorXd> embed_batch(const std::vector<std::string>& texts) override;
    std::string id() const override;

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

/// Client for the common embeddings endpoint shape:
/// request {"model", "input": [...]}, response {"data": [{"index", "embedding"}]}.
/// Batches of at most max_batch texts are sent over up to max_parallel
/// connections; 429 and 5xx responses are retried with exponential backoff
/// (factor 2, ±20% jitter).
class HttpProvider final : public EmbeddingProvider {
public:
    explicit HttpProvider(ProviderConfig cfg);
    std::vector<Eigen::VectorXd> embed_batch(const std::vector<std::string>& texts) override;
    std::string id() const override;

private:
    std::vector<Eigen::VectorXd> request_batch(const std::vector<std::string>& texts, std::size_t offset) const;

    ProviderConfig cfg_;
    std::string base_;  // scheme://host[:port]
    std::string path_;
};

/// Serves flow files from `<directory>/<logic_id>/<topic>/<language>.rflw`,
/// e.g. the output of an external hidden-state extractor.
class FileProvider final : public EmbeddingProvider {
public:
    explicit FileProvider(std::string directory);
    /// Always throws: arbitrary text cannot be looked up.
    std::vector<Eigen::VectorXd> embed_batch(const std::vector<std::string>& texts) override;
    std::string id() const override;
    std::optional<FlowFile> lookup_flow(const ReasoningRecord& rec) const override;

private:
    std::string directory_;
};

/// Relative location of a record's flow file.
std::string flow_file_name(const std::string& logic_id, const std::string& topic, const std::string& language);

}  // namespace flowgeom

#endif  // FLOWGEOM_PROVIDER_HPP
