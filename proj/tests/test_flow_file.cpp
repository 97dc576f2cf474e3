#include <filesystem>

#include <doctest.h>

#include "flowgeom/errors.hpp"
#include "flowgeom/flow_file.hpp"

using namespace flowgeom;

namespace {

FlowFile sample() {
    FlowFile f;
    f.payload.resize(2, 3);
    f.payload << 1.0f, -2.5f, 0.125f, 3.0f, 4.0f, 1e-7f;
    f.metadata = {{"logic_id", "L1"}, {"topic", "t"}, {"language", "en"}};
    return f;
}

}  // namespace

TEST_CASE("RFLW byte layout") {
    const std::string bytes = encode_flow(sample());
    REQUIRE(bytes.size() >= 16 + 24 + 8);
    CHECK(bytes.substr(0, 4) == "RFLW");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // version, LE
    CHECK(static_cast<unsigned char>(bytes[8]) == 3);  // d
    CHECK(static_cast<unsigned char>(bytes[12]) == 2);  // T
    // first float is 1.0f = 0x3f800000, little-endian
    CHECK(static_cast<unsigned char>(bytes[16]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[19]) == 0x3f);
    // second row starts at 16 + 3 * 4: 3.0f = 0x40400000
    CHECK(static_cast<unsigned char>(bytes[31]) == 0x40);
    const std::string meta = sample().metadata.dump();
    CHECK(bytes.size() == 16 + 24 + 8 + meta.size());
    CHECK(bytes.substr(48) == meta);
}

TEST_CASE("RFLW round trip is the identity on bytes") {
    const FlowFile f = sample();
    const std::string bytes = encode_flow(f);
    const FlowFile g = decode_flow(bytes);
    CHECK(g == f);
    CHECK(encode_flow(g) == bytes);

    const auto path = (std::filesystem::temp_directory_path() / "flowgeom_ff" / "a" / "b.rflw").string();
    write_flow(f, path);
    CHECK(read_flow(path) == f);
}

TEST_CASE("RFLW decoding errors") {
    std::string bytes = encode_flow(sample());
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_flow(bad), BadMagic);
    bad = bytes;
    bad[4] = 2;
    CHECK_THROWS_AS(decode_flow(bad), UnsupportedVersion);
    CHECK_THROWS_AS(decode_flow(bytes.substr(0, 30)), TruncatedPayload);
    CHECK_THROWS_AS(decode_flow(bytes.substr(0, 10)), FormatError);
    CHECK_THROWS_AS(decode_flow(bytes + "x"), FormatError);
    CHECK_THROWS_AS(read_flow("/nonexistent/x.rflw"), IoError);
}
