#ifndef FLOWGEOM_FLOW_FILE_HPP
#define FLOWGEOM_FLOW_FILE_HPP

#include <cstdint>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace flowgeom {

/// Binary trajectory interchange file ("RFLW").
///
/// Layout, all little-endian:
///
///     "RFLW" | u32 version=1 | u32 d | u32 T      16-byte header
///     T*d float32, row-major (row t holds step t+1)
///     u64 metadata length | UTF-8 JSON metadata
struct FlowFile {
    using Payload = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    static constexpr std::uint32_t kVersion = 1;
    static constexpr std::size_t kHeaderBytes = 16;

    Payload payload;  // T x d
    nlohmann::json metadata = nlohmann::json::object();

    std::uint32_t steps() const { return static_cast<std::uint32_t>(payload.rows()); }
    std::uint32_t dim() const { return static_cast<std::uint32_t>(payload.cols()); }

    friend bool operator==(const FlowFile& a, const FlowFile& b);
};

std::string encode_flow(const FlowFile& file);
/// Throws BadMagic, UnsupportedVersion, TruncatedPayload, FormatError.
FlowFile decode_flow(const std::string& bytes);

/// Creates parent directories as needed. Throws IoError.
void write_flow(const FlowFile& file, const std::string& path);
FlowFile read_flow(const std::string& path);

}  // namespace flowgeom

#endif  // FLOWGEOM_FLOW_FILE_HPP
