#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "flowgeom/corpus.hpp"
#include "flowgeom/errors.hpp"

using namespace flowgeom;

namespace {

RawRecord raw(std::string logic, std::string topic, std::string lang, std::string mode, std::vector<std::string> steps) {
    return {std::move(logic), std::move(topic), std::move(lang), std::move(mode), std::move(steps)};
}

const std::vector<std::string> kChain9 = {
    "[1] A → B", "[2] B → C", "[3] ∀x(H(x) → J(x))", "[4] H(a)", "[5] A",
    "[6] B (from [1], [5])", "[7] C (from [2], [6])", "[8] J(a) (from [3], [4])", "[9] C ∧ J(a) (from [7], [8])"};

std::vector<std::string> carrier_lines(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= n; ++i) out.push_back("[" + std::to_string(i) + "] step " + std::to_string(i) + ".");
    return out;
}

bool has_code(const ValidationReport& r, const std::string& code) {
    for (const auto& f : r.findings) {
        if (f.code == code) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("parse_record") {
    const auto rec = parse_record(raw("L1", "abstract", "und", "abstract", kChain9));
    CHECK(rec.n_steps() == 9);
    CHECK(rec.id() == "L1/abstract/und");
    CHECK(rec.steps[5].body == "B");
    CHECK(rec.steps[5].justification == std::vector<int>{1, 5});
    REQUIRE(rec.steps[8].formula.has_value());
    CHECK(rec.steps[8].formula->kind() == FormulaKind::And);

    CHECK_THROWS_AS(parse_record(raw("L1", "t", "en", "carrier", {})), MissingField);
    CHECK_THROWS_AS(parse_record(raw("", "t", "en", "carrier", {"[1] x"})), MissingField);
    CHECK_THROWS_AS(parse_record(raw("L1", "t", "en", "carrier", {"[1] a", "[2] b", "[2] c"})), DuplicateIndex);
    CHECK_THROWS_AS(parse_record(raw("L1", "t", "en", "carrier", {"1. a"})), BadStepPrefix);
    CHECK_THROWS_AS(parse_record(raw("L1", "t", "en", "carrier", {"[0] a"})), BadStepPrefix);
}

TEST_CASE("justification ranges expand") {
    const auto rec = parse_record(raw("L", "abstract", "und", "abstract",
                                      {"[1] A", "[2] B", "[3] C", "[4] A ∧ B (from [1-2])", "[5] C (from [1-3] and [4])"}));
    CHECK(rec.steps[3].justification == std::vector<int>{1, 2});
    CHECK(rec.steps[4].justification == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("validate_record structure checks") {
    SUBCASE("gap") {
        const auto rec = parse_record(raw("L", "t", "en", "carrier", {"[1] a", "[2] b", "[4] d"}));
        CHECK(has_code(validate_record(rec), "NonContiguous"));
    }
    SUBCASE("forward reference") {
        const auto rec = parse_record(raw("L", "abstract", "und", "abstract", {"[1] A", "[2] B", "[3] A (from [7])"}));
        const auto r = validate_record(rec);
        CHECK(has_code(r, "ForwardReference"));
        CHECK(r.has_errors());
    }
    SUBCASE("bad formula") {
        const auto rec = parse_record(raw("L", "abstract", "und", "abstract", {"[1] A →"}));
        CHECK(has_code(validate_record(rec), "BadFormula"));
    }
    SUBCASE("template alignment") {
        const auto tmpl = parse_record(raw("L", "abstract", "und", "abstract", kChain9));
        const auto ok = parse_record(raw("L", "t", "en", "carrier", carrier_lines(9)));
        const auto bad = parse_record(raw("L", "t", "en", "carrier", carrier_lines(8)));
        CHECK_FALSE(validate_record(ok, &tmpl).has_errors());
        CHECK(has_code(validate_record(bad, &tmpl), "StepCountMismatch"));
    }
    SUBCASE("soft length bound is a warning") {
        const auto rec = parse_record(raw("L", "t", "en", "carrier", carrier_lines(5)));
        const auto r = validate_record(rec);
        CHECK_FALSE(r.has_errors());
        CHECK(r.count(Severity::Warning) >= 1);
    }
}

TEST_CASE("check_derivation on the nine-step pattern") {
    const auto rec = parse_record(raw("L", "abstract", "und", "abstract", kChain9));
    const auto r = check_derivation(rec);
    REQUIRE(r.derivations.size() == 4);
    for (const auto& d : r.derivations) CHECK(d.status == DerivationStatus::Valid);
    CHECK(r.derivations[0].rules == std::vector<Rule>{Rule::ImplicationElim});
    CHECK(r.derivations[2].rules == std::vector<Rule>{Rule::ForallElim, Rule::ImplicationElim});
    CHECK(r.derivations[3].rules == std::vector<Rule>{Rule::ConjunctionIntro});
}

TEST_CASE("check_derivation invalid and unchecked") {
    // wrong conclusion
    auto rec = parse_record(raw("L", "abstract", "und", "abstract", {"[1] A → B", "[2] A", "[3] C (from [1], [2])"}));
    CHECK(check_derivation(rec).derivations.at(0).status == DerivationStatus::Invalid);
    // missing premise citation
    rec = parse_record(raw("L", "abstract", "und", "abstract", {"[1] A → B", "[2] A", "[3] B (from [1])"}));
    CHECK(check_derivation(rec).derivations.at(0).status == DerivationStatus::Invalid);
    // disjunction is outside the checked rules
    rec = parse_record(raw("L", "abstract", "und", "abstract", {"[1] A", "[2] A ∨ B (from [1])"}));
    CHECK(check_derivation(rec).derivations.at(0).status == DerivationStatus::Unchecked);
}

TEST_CASE("rule checker on generated instances") {
    const char* atoms[] = {"P", "Q", "R", "S", "T"};
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            if (i == j) continue;
            const std::string a = atoms[i], b = atoms[j];
            auto ok = parse_record(raw("L", "abstract", "und", "abstract",
                                       {"[1] " + a + " -> " + b, "[2] " + a, "[3] " + b + " (from [1], [2])",
                                        "[4] " + a + " & " + b + " (from [2], [3])"}));
            for (const auto& d : check_derivation(ok).derivations) CHECK(d.status == DerivationStatus::Valid);
            // corrupted conclusion: swap the roles
            auto bad = parse_record(raw("L", "abstract", "und", "abstract",
                                        {"[1] " + a + " -> " + b, "[2] " + b, "[3] " + a + " (from [1], [2])"}));
            CHECK(check_derivation(bad).derivations.at(0).status == DerivationStatus::Invalid);
        }
    }
    const char* consts[] = {"a", "b", "c"};
    for (const char* c : consts) {
        const std::string k = c;
        auto ok = parse_record(raw("L", "abstract", "und", "abstract",
                                   {"[1] forall y (F(y) -> G(y))", "[2] F(" + k + ")", "[3] G(" + k + ") (from [1], [2])"}));
        CHECK(check_derivation(ok).derivations.at(0).status == DerivationStatus::Valid);
        auto bad = parse_record(raw("L", "abstract", "und", "abstract",
                                    {"[1] forall y (F(y) -> G(y))", "[2] F(" + k + ")", "[3] G(z) (from [1], [2])"}));
        CHECK(check_derivation(bad).derivations.at(0).status == DerivationStatus::Invalid);
    }
}

TEST_CASE("build_index groups and excludes") {
    std::vector<ReasoningRecord> recs;
    recs.push_back(parse_record(raw("L2", "abstract", "und", "abstract", kChain9)));
    for (const char* topic : {"rail", "garden"}) {
        recs.push_back(parse_record(raw("L1", topic, "en", "carrier", carrier_lines(8))));
        recs.push_back(parse_record(raw("L2", topic, "en", "carrier", carrier_lines(9))));
    }
    recs.push_back(parse_record(raw("L2", "sea", "en", "carrier", carrier_lines(10))));  // wrong length
    const CorpusIndex idx = build_index(recs);
    CHECK(idx.groups.size() == 2);
    CHECK(idx.groups.at("L1").carriers.size() == 2);
    CHECK(idx.groups.at("L2").carriers.size() == 2);
    CHECK(idx.groups.at("L2").n_steps == 9);
    CHECK(idx.groups.at("L1").carriers[0].topic == "garden");
    REQUIRE(idx.excluded.size() == 1);
    CHECK(idx.excluded[0].record_id == "L2/sea/en");
    CHECK(idx.record_count() == 5);
    CHECK(idx.carriers().size() == 4);

    CHECK_THROWS_AS(build_index({}), EmptyCorpus);
}

TEST_CASE("corpus JSONL round trip and the shipped sample") {
    const auto lines = load_corpus(std::string(FLOWGEOM_DATA_DIR) + "/sample_corpus.jsonl");
    std::vector<ReasoningRecord> recs;
    for (const auto& l : lines) {
        REQUIRE(l.record.has_value());
        recs.push_back(*l.record);
    }
    CHECK(recs.size() == 10);
    const auto path = (std::filesystem::temp_directory_path() / "flowgeom_corpus_rt.jsonl").string();
    write_corpus(path, recs);
    const auto again = load_corpus(path);
    REQUIRE(again.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(again[i].record->id() == recs[i].id());
        CHECK(again[i].record->n_steps() == recs[i].n_steps());
        CHECK(again[i].record->steps.back().raw == recs[i].steps.back().raw);
    }

    std::ofstream(path) << "{\"logic_id\": \"x\"}\nnot json\n\n";
    const auto broken = load_corpus(path);
    REQUIRE(broken.size() == 2);
    CHECK_FALSE(broken[0].record.has_value());
    CHECK(broken[1].line_number == 2);
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), IoError);
}
