#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(FLOWGEOM_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("flowgeom_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("validate the sample corpus") {
    const fs::path dir = scratch("validate");
    const std::string corpus = std::string(FLOWGEOM_DATA_DIR) + "/sample_corpus.jsonl";
    CHECK(run("validate --corpus " + corpus + " --check-derivations --report " + (dir / "v.json").string()) == 0);
    const auto rj = read_json(dir / "run.json");
    CHECK(rj.at("subcommand") == "validate");
    CHECK(rj.at("exit_code") == 0);
}

TEST_CASE("usage and I/O exit codes") {
    CHECK(run("frobnicate") == 64);
    CHECK(run("analyze") == 64);
    const fs::path dir = scratch("io");
    CHECK(run("analyze --flows /nonexistent/flowgeom/dir --out " + (dir / "report.json").string()) == 2);
    CHECK(read_json(dir / "run.json").at("exit_code") == 2);
    CHECK(run("validate --corpus /nonexistent/corpus.jsonl --run-json " + (dir / "v.run.json").string()) == 2);
}

TEST_CASE("synth, embed from file, analyze") {
    const fs::path dir = scratch("pipeline");
    const std::string synth = (dir / "synth").string();
    REQUIRE(run("synth --logics 2 --topics 2 --langs 2 --out " + synth) == 0);
    CHECK(fs::exists(dir / "synth" / "expected_report.json"));
    CHECK(run("validate --corpus " + synth + "/corpus.jsonl --check-derivations --run-json " +
              (dir / "validate.run.json").string()) == 0);
    const std::string flows = (dir / "flows").string();
    REQUIRE(run("embed --corpus " + synth + "/corpus.jsonl --provider file --dir " + synth + "/flows --out " + flows +
                " --jobs 2") == 0);
    REQUIRE(run("analyze --flows " + flows + " --out " + (dir / "report.json").string() + " --matrices " +
                (dir / "m").string()) == 0);
    const auto report = read_json(dir / "report.json");
    CHECK(report.at("flows") == 8);
    const double v = report.at("report").at("measures").at("velocity").at("logic").at("mean").get<double>();
    CHECK(v > 0.9);
    CHECK(fs::exists(dir / "m" / "curvature.csv"));
    const auto rj = read_json(dir / "run.json");
    CHECK(rj.at("subcommand") == "analyze");
    CHECK(rj.at("status") == "ok");
}

TEST_CASE("corrupt corpus exits with a validation failure") {
    const fs::path dir = scratch("bad");
    std::ofstream(dir / "bad.jsonl") << R"({"logic_id":"l","topic":"abstract","language":"und","mode":"abstract","steps":["[1] A","[3] B"]})"
                                     << "\n";
    CHECK(run("validate --corpus " + (dir / "bad.jsonl").string() + " --run-json " + (dir / "run.json").string()) == 1);
    const auto rj = read_json(dir / "run.json");
    CHECK(rj.at("status") == "validation-error");
}
