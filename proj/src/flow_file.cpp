#include "flowgeom/flow_file.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "flowgeom/errors.hpp"

namespace flowgeom {

static_assert(std::endian::native == std::endian::little, "flow files are written with native little-endian stores");
static_assert(sizeof(float) == 4);

namespace {

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos, const char* what) {
    if (in.size() - pos < sizeof(T)) throw TruncatedPayload(what);
    T value;
    std::memcpy(&value, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

}  // namespace

bool operator==(const FlowFile& a, const FlowFile& b) {
    if (a.payload.rows() != b.payload.rows() || a.payload.cols() != b.payload.cols()) return false;
    // Bitwise, so NaN payloads and signed zeros compare as stored.
    const auto bytes = static_cast<std::size_t>(a.payload.size()) * sizeof(float);
    if (bytes && std::memcmp(a.payload.data(), b.payload.data(), bytes) != 0) return false;
    return a.metadata == b.metadata;
}

std::string encode_flow(const FlowFile& file) {
    const std::string meta = file.metadata.dump();
    std::string out;
    out.reserve(FlowFile::kHeaderBytes + static_cast<std::size_t>(file.payload.size()) * 4 + 8 + meta.size());
    out.append("RFLW", 4);
    put<std::uint32_t>(out, FlowFile::kVersion);
    put<std::uint32_t>(out, file.dim());
    put<std::uint32_t>(out, file.steps());
    out.append(reinterpret_cast<const char*>(file.payload.data()),
               static_cast<std::size_t>(file.payload.size()) * sizeof(float));
    put<std::uint64_t>(out, meta.size());
    out += meta;
    return out;
}

FlowFile decode_flow(const std::string& bytes) {
    if (bytes.size() < 4) throw TruncatedPayload("header");
    if (bytes.compare(0, 4, "RFLW") != 0) throw BadMagic();
    std::size_t pos = 4;
    const auto version = get<std::uint32_t>(bytes, pos, "header");
    if (version != FlowFile::kVersion) throw UnsupportedVersion(version);
    const auto d = get<std::uint32_t>(bytes, pos, "header");
    const auto t = get<std::uint32_t>(bytes, pos, "header");

    const std::uint64_t count = std::uint64_t{d} * t;
    if ((bytes.size() - pos) / sizeof(float) < count) throw TruncatedPayload("payload");
    FlowFile file;
    file.payload.resize(t, d);
    std::memcpy(file.payload.data(), bytes.data() + pos, count * sizeof(float));
    pos += count * sizeof(float);

    const auto meta_len = get<std::uint64_t>(bytes, pos, "metadata length");
    if (bytes.size() - pos < meta_len) throw TruncatedPayload("metadata");
    const std::string meta = bytes.substr(pos, meta_len);
    pos += meta_len;
    if (pos != bytes.size()) throw FormatError("flow file: trailing bytes after metadata");
    try {
        file.metadata = nlohmann::json::parse(meta);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("flow file: metadata is not JSON: ") + e.what());
    }
    return file;
}

void write_flow(const FlowFile& file, const std::string& path) {
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write flow file " + path);
    const std::string bytes = encode_flow(file);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

FlowFile read_flow(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open flow file " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_flow(bytes);
}

}  // namespace flowgeom
