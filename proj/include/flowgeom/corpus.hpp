#ifndef FLOWGEOM_CORPUS_HPP
#define FLOWGEOM_CORPUS_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowgeom/formula.hpp"

namespace flowgeom {

enum class RecordMode { Abstract, Carrier };

std::string_view to_string(RecordMode mode);
RecordMode parse_record_mode(std::string_view text);

/// One bracketed line of a reasoning record, e.g. "[6] B (from [1], [5])".
struct StepLine {
    int index = 0;
    /// Body with any trailing "(from ...)" justification removed.
    std::string body;
    /// Parsed body; only set in abstract mode when the body parses.
    std::optional<Formula> formula;
    /// Parser message when an abstract body fails to parse.
    std::string syntax_error;
    /// Cited step indices, in order of appearance; ranges are expanded.
    std::vector<int> justification;
    std::string raw;
};

struct ReasoningRecord {
    std::string logic_id;
    std::string topic;
    std::string language;
    RecordMode mode = RecordMode::Carrier;
    std::vector<StepLine> steps;

    std::size_t n_steps() const { return steps.size(); }
    /// "logic_id/topic/language"; also the flow file stem.
    std::string id() const;
};

/// Unparsed record fields, as stored on disk.
struct RawRecord {
    std::string logic_id;
    std::string topic;
    std::string language;
    std::string mode;
    std::vector<std::string> steps;
};

/// Throws MissingField, BadStepPrefix, DuplicateIndex. Formula syntax errors in
/// abstract bodies are kept on the StepLine and surface in validation.
ReasoningRecord parse_record(const RawRecord& raw);

/// Reads the JSON object form; absent keys raise MissingField.
ReasoningRecord parse_record(const nlohmann::json& object);

nlohmann::json to_json(const ReasoningRecord& rec);

enum class Severity { Error, Warning, Info };
std::string_view to_string(Severity s);

struct Finding {
    Severity severity;
    int step;  // 0 when the finding concerns the whole record
    std::string code;
    std::string message;
};

enum class DerivationStatus { Valid, Unchecked, Invalid };
std::string_view to_string(DerivationStatus s);

enum class Rule { ImplicationElim, ForallElim, ConjunctionIntro };
/// Conventional symbol: "→E", "∀E", "∧I".
std::string_view to_string(Rule r);

struct DerivationFinding {
    int step;
    DerivationStatus status;
    /// Rules in order of first use when status is Valid.
    std::vector<Rule> rules;
    std::string message;
};

struct ValidationReport {
    std::string record_id;
    std::vector<Finding> findings;
    std::vector<DerivationFinding> derivations;

    bool has_errors() const;
    std::size_t count(Severity s) const;
};

/// Soft bounds on record length; outside them is a warning only.
inline constexpr std::size_t kMinSteps = 8;
inline constexpr std::size_t kMaxSteps = 16;

/// Structural checks: contiguous 1..N indices, backward-only citations,
/// parseable abstract bodies and, when a template is given, equal length.
ValidationReport validate_record(const ReasoningRecord& rec, const ReasoningRecord* tmpl = nullptr);

/// Tags every justified step of an abstract record as valid, invalid or
/// unchecked against →E, ∀E and ∧I applied to its cited premises.
ValidationReport check_derivation(const ReasoningRecord& tmpl);

struct LogicGroup {
    std::optional<ReasoningRecord> templ;
    /// Sorted by (topic, language).
    std::vector<ReasoningRecord> carriers;
    std::size_t n_steps = 0;
};

struct IndexNote {
    std::string record_id;
    std::string code;
    std::string message;
};

struct CorpusIndex {
    /// Keyed and iterated in lexicographic logic_id order.
    std::map<std::string, LogicGroup> groups;
    std::map<std::string, std::size_t> topic_counts;
    std::map<std::string, std::size_t> language_counts;
    std::vector<IndexNote> excluded;

    std::size_t record_count() const;
    /// Carriers of every group, in group order.
    std::vector<const ReasoningRecord*> carriers() const;
};

/// Groups records by logic_id. Records with validation errors and carriers
/// whose length disagrees with their group are excluded and noted.
/// Throws EmptyCorpus when nothing is accepted.
CorpusIndex build_index(const std::vector<ReasoningRecord>& records);

struct CorpusLine {
    std::size_t line_number;
    std::optional<ReasoningRecord> record;
    std::string error;  // set when the line failed to parse
};

/// Reads line-delimited JSON records. Blank lines are skipped; malformed
/// lines are returned with `error` set. Throws IoError if unreadable.
std::vector<CorpusLine> load_corpus(const std::string& path);

void write_corpus(const std::string& path, const std::vector<ReasoningRecord>& records);

}  // namespace flowgeom

#endif  // FLOWGEOM_CORPUS_HPP
