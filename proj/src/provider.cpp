#include "flowgeom/provider.hpp"

#include <filesystem>

#include "flowgeom/errors.hpp"

namespace flowgeom {

std::string_view to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::Synth: return "synth";
        case ProviderKind::Http: return "http";
        default: return "file";
    }
}

ProviderKind parse_provider_kind(std::string_view text) {
    if (text == "synth") return ProviderKind::Synth;
    if (text == "http") return ProviderKind::Http;
    if (text == "file") return ProviderKind::File;
    throw InvalidArgument("unknown provider kind '" + std::string(text) + "'");
}

void ProviderConfig::validate() const {
    switch (kind) {
        case ProviderKind::Synth:
            if (dimension < 2) throw InvalidArgument("synth provider needs dimension >= 2");
            break;
        case ProviderKind::Http:
            if (endpoint.empty()) throw InvalidArgument("http provider needs an endpoint");
            if (max_batch < 1) throw InvalidArgument("max batch must be >= 1");
            if (max_parallel < 1) throw InvalidArgument("max parallel must be >= 1");
            if (retry_budget < 0) throw InvalidArgument("retry budget must be >= 0");
            break;
        case ProviderKind::File:
            if (directory.empty()) throw InvalidArgument("file provider needs a directory");
            break;
    }
}

std::optional<FlowFile> EmbeddingProvider::lookup_flow(const ReasoningRecord&) const { return std::nullopt; }

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& cfg) {
    cfg.validate();
    switch (cfg.kind) {
        case ProviderKind::Synth: return std::make_unique<SynthProvider>(cfg.dimension, cfg.seed);
        case ProviderKind::Http: return std::make_unique<HttpProvider>(cfg);
        default: return std::make_unique<FileProvider>(cfg.directory);
    }
}

std::string flow_file_name(const std::string& logic_id, const std::string& topic, const std::string& language) {
    return logic_id + "/" + topic + "/" + language + ".rflw";
}

// ---------------------------------------------------------------------------
// synth

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a_bytes(std::uint64_t h, const unsigned char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t fnv1a_u64_le(std::uint64_t h, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    return fnv1a_bytes(h, bytes, 8);
}

bool is_white_space(char32_t c) {
    return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

// Decodes one UTF-8 sequence at `pos`; malformed bytes decode as U+FFFD with
// length 1 so they stay inside tokens.
char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& len) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    auto cont = [&](std::size_t k) -> int {
        if (pos + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[pos + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    len = 1;
    if (b0 < 0x80) return b0;
    if ((b0 & 0xE0) == 0xC0) {
        const int c1 = cont(1);
        if (c1 < 0) return 0xFFFD;
        len = 2;
        return (char32_t{b0 & 0x1Fu} << 6) | static_cast<char32_t>(c1);
    }
    if ((b0 & 0xF0) == 0xE0) {
        const int c1 = cont(1), c2 = cont(2);
        if (c1 < 0 || c2 < 0) return 0xFFFD;
        len = 3;
        return (char32_t{b0 & 0x0Fu} << 12) | (static_cast<char32_t>(c1) << 6) | static_cast<char32_t>(c2);
    }
    if ((b0 & 0xF8) == 0xF0) {
        const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
        if (c1 < 0 || c2 < 0 || c3 < 0) return 0xFFFD;
        len = 4;
        return (char32_t{b0 & 0x07u} << 18) | (static_cast<char32_t>(c1) << 12) | (static_cast<char32_t>(c2) << 6) |
               static_cast<char32_t>(c3);
    }
    return 0xFFFD;
}

}  // namespace

std::vector<std::string_view> split_unicode_whitespace(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t start = std::string_view::npos;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t len = 1;
        const char32_t c = decode_utf8(text, pos, len);
        if (is_white_space(c)) {
            if (start != std::string_view::npos) {
                tokens.push_back(text.substr(start, pos - start));
                start = std::string_view::npos;
            }
        } else if (start == std::string_view::npos) {
            start = pos;
        }
        pos += len;
    }
    if (start != std::string_view::npos) tokens.push_back(text.substr(start));
    return tokens;
}

Eigen::VectorXd synth_embed(std::string_view text, std::size_t dimension, std::uint64_t seed) {
    if (dimension < 1) throw InvalidArgument("synth_embed: dimension must be positive");
    constexpr double kTwo53 = 9007199254740992.0;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension));
    for (std::string_view token : split_unicode_whitespace(text)) {
        const std::uint64_t h_token =
            fnv1a_bytes(kFnvOffset, reinterpret_cast<const unsigned char*>(token.data()), token.size());
        for (std::size_t j = 0; j < dimension; ++j) {
            const std::uint64_t h = fnv1a_u64_le(fnv1a_u64_le(h_token, j), seed);
            const double unit = static_cast<double>(h & ((std::uint64_t{1} << 53) - 1)) / kTwo53;
            acc[static_cast<Eigen::Index>(j)] += unit * 2.0 - 1.0;
        }
    }
    const double norm = acc.norm();
    if (norm == 0.0) {
        acc.setZero();
        acc[0] = 1.0;
        return acc;
    }
    return acc / norm;
}

SynthProvider::SynthProvider(std::size_t dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
    if (dimension_ < 2) throw InvalidArgument("synth provider needs dimension >= 2");
}

std::vector<Eigen::VectorXd> SynthProvider::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) throw InvalidArgument("embed_batch: no texts");
    std::vector<Eigen::VectorXd> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty()) throw InvalidArgument("embed_batch: text " + std::to_string(i) + " is empty");
        out.push_back(synth_embed(texts[i], dimension_, seed_));
    }
    return out;
}

std::string SynthProvider::id() const {
    return "synth:d=" + std::to_string(dimension_) + ":seed=" + std::to_string(seed_);
}

// ---------------------------------------------------------------------------
// file

FileProvider::FileProvider(std::string directory) : directory_(std::move(directory)) {}

std::vector<Eigen::VectorXd> FileProvider::embed_batch(const std::vector<std::string>&) {
    throw ProviderError("file provider serves pre-built flows only; it cannot embed text");
}

std::string FileProvider::id() const { return "file:" + directory_; }

std::optional<FlowFile> FileProvider::lookup_flow(const ReasoningRecord& rec) const {
    const auto path = std::filesystem::path(directory_) / flow_file_name(rec.logic_id, rec.topic, rec.language);
    if (!std::filesystem::exists(path)) {
        throw ProviderError("no flow file for " + rec.id() + " under " + directory_);
    }
    return read_flow(path.string());
}

}  // namespace flowgeom
