#include "flowgeom/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "flowgeom/errors.hpp"

namespace flowgeom {

std::string_view to_string(RecordMode mode) {
    return mode == RecordMode::Abstract ? "abstract" : "carrier";
}

RecordMode parse_record_mode(std::string_view text) {
    if (text == "abstract") return RecordMode::Abstract;
    if (text == "carrier") return RecordMode::Carrier;
    throw RecordError("unknown record mode '" + std::string(text) + "'");
}

std::string ReasoningRecord::id() const { return logic_id + "/" + topic + "/" + language; }

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::Error: return "error";
        case Severity::Warning: return "warning";
        default: return "info";
    }
}

std::string_view to_string(DerivationStatus s) {
    switch (s) {
        case DerivationStatus::Valid: return "valid";
        case DerivationStatus::Invalid: return "invalid";
        default: return "unchecked";
    }
}

std::string_view to_string(Rule r) {
    switch (r) {
        case Rule::ImplicationElim: return "\xE2\x86\x92" "E";
        case Rule::ForallElim: return "\xE2\x88\x80" "E";
        default: return "\xE2\x88\xA7" "I";
    }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

const std::regex& step_prefix_re() {
    static const std::regex re(R"(^\s*\[(\d+)\]\s*(.*)$)");
    return re;
}

// Trailing "(from [1], [5])" / "(from [1-3] and [6])".
const std::regex& justification_re() {
    static const std::regex re(R"(^(.*?)\s*\(\s*from\s+((?:\[\s*\d+\s*(?:-\s*\d+\s*)?\]|,|and|\s)+)\)\s*$)");
    return re;
}

std::vector<int> parse_refs(const std::string& inner) {
    static const std::regex ref_re(R"(\[\s*(\d+)\s*(?:-\s*(\d+)\s*)?\])");
    std::vector<int> refs;
    for (auto it = std::sregex_iterator(inner.begin(), inner.end(), ref_re); it != std::sregex_iterator(); ++it) {
        const int lo = std::stoi((*it)[1].str());
        const int hi = (*it)[2].matched ? std::stoi((*it)[2].str()) : lo;
        for (int k = lo; k <= hi; ++k) refs.push_back(k);
    }
    return refs;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

StepLine parse_step(const std::string& line, RecordMode mode) {
    std::smatch m;
    if (!std::regex_match(line, m, step_prefix_re())) throw BadStepPrefix(line);
    StepLine step;
    step.raw = line;
    try {
        step.index = std::stoi(m[1].str());
    } catch (const std::out_of_range&) {
        throw BadStepPrefix(line);
    }
    if (step.index < 1) throw BadStepPrefix(line);
    std::string body = trim(m[2].str());
    if (mode == RecordMode::Abstract) {
        std::smatch j;
        if (std::regex_match(body, j, justification_re())) {
            step.justification = parse_refs(j[2].str());
            body = trim(j[1].str());
        }
        try {
            step.formula = parse_formula(body);
        } catch (const SyntaxError& e) {
            step.syntax_error = e.what();
        }
    }
    step.body = std::move(body);
    return step;
}

}  // namespace

ReasoningRecord parse_record(const RawRecord& raw) {
    if (raw.logic_id.empty()) throw MissingField("logic_id");
    if (raw.topic.empty()) throw MissingField("topic");
    if (raw.language.empty()) throw MissingField("language");
    if (raw.mode.empty()) throw MissingField("mode");
    if (raw.steps.empty()) throw MissingField("steps");

    ReasoningRecord rec;
    rec.logic_id = raw.logic_id;
    rec.topic = raw.topic;
    rec.language = raw.language;
    rec.mode = parse_record_mode(raw.mode);
    std::set<int> seen;
    for (const auto& line : raw.steps) {
        StepLine step = parse_step(line, rec.mode);
        if (!seen.insert(step.index).second) throw DuplicateIndex(step.index);
        rec.steps.push_back(std::move(step));
    }
    return rec;
}

ReasoningRecord parse_record(const nlohmann::json& object) {
    if (!object.is_object()) throw RecordError("record is not a JSON object");
    RawRecord raw;
    auto field = [&](const char* key) -> std::string {
        auto it = object.find(key);
        if (it == object.end() || !it->is_string()) throw MissingField(key);
        return it->get<std::string>();
    };
    raw.logic_id = field("logic_id");
    raw.topic = field("topic");
    raw.language = field("language");
    raw.mode = field("mode");
    auto steps = object.find("steps");
    if (steps == object.end() || !steps->is_array()) throw MissingField("steps");
    for (const auto& s : *steps) {
        if (!s.is_string()) throw RecordError("steps must be strings");
        raw.steps.push_back(s.get<std::string>());
    }
    return parse_record(raw);
}

nlohmann::json to_json(const ReasoningRecord& rec) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : rec.steps) steps.push_back(s.raw);
    return {{"logic_id", rec.logic_id},
            {"topic", rec.topic},
            {"language", rec.language},
            {"mode", std::string(to_string(rec.mode))},
            {"steps", std::move(steps)}};
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::has_errors() const { return count(Severity::Error) > 0; }

std::size_t ValidationReport::count(Severity s) const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [s](const Finding& f) { return f.severity == s; }));
}

ValidationReport validate_record(const ReasoningRecord& rec, const ReasoningRecord* tmpl) {
    ValidationReport report;
    report.record_id = rec.id();
    auto add = [&](Severity sev, int step, std::string code, std::string msg) {
        report.findings.push_back({sev, step, std::move(code), std::move(msg)});
    };

    if (rec.steps.empty()) add(Severity::Error, 0, "Empty", "record has no steps");

    // Contiguity: the sorted index set must be exactly 1..N.
    std::vector<int> indices;
    for (const auto& s : rec.steps) indices.push_back(s.index);
    std::vector<int> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    int expected = 1;
    for (int k : sorted) {
        while (expected < k) {
            add(Severity::Error, expected, "NonContiguous", "step [" + std::to_string(expected) + "] is missing");
            ++expected;
        }
        expected = k + 1;
    }
    if (indices != sorted) add(Severity::Error, 0, "OutOfOrder", "step lines are not in ascending order");

    for (const auto& s : rec.steps) {
        for (int ref : s.justification) {
            if (ref >= s.index) {
                add(Severity::Error, s.index, "ForwardReference",
                    "step [" + std::to_string(s.index) + "] cites [" + std::to_string(ref) + "]");
            } else if (ref < 1 || !std::binary_search(sorted.begin(), sorted.end(), ref)) {
                add(Severity::Error, s.index, "DanglingReference",
                    "step [" + std::to_string(s.index) + "] cites missing [" + std::to_string(ref) + "]");
            }
        }
        if (rec.mode == RecordMode::Abstract && !s.formula) {
            add(Severity::Error, s.index, "BadFormula", s.syntax_error.empty() ? "empty body" : s.syntax_error);
        }
    }

    if (tmpl && tmpl->n_steps() != rec.n_steps()) {
        add(Severity::Error, 0, "StepCountMismatch",
            "record has " + std::to_string(rec.n_steps()) + " steps, template has " +
                std::to_string(tmpl->n_steps()));
    }
    if (!rec.steps.empty() && (rec.n_steps() < kMinSteps || rec.n_steps() > kMaxSteps)) {
        add(Severity::Warning, 0, "StepCountRange",
            std::to_string(rec.n_steps()) + " steps is outside the usual " + std::to_string(kMinSteps) + ".." +
                std::to_string(kMaxSteps));
    }
    static const std::regex lang_re(R"(^[a-z]{2,3}(-[A-Za-z0-9]{1,8})*$)");
    if (!std::regex_match(rec.language, lang_re)) {
        add(Severity::Warning, 0, "LanguageCode", "'" + rec.language + "' is not a BCP-47-style code");
    }
    return report;
}

// ---------------------------------------------------------------------------
// Derivation checking

namespace {

void append_rules(std::vector<Rule>& into, const std::vector<Rule>& from) {
    for (Rule r : from) {
        if (std::find(into.begin(), into.end(), r) == into.end()) into.push_back(r);
    }
}

// Forward closure of the cited premises under →E and ∀E, with goal-directed
// ∧I for conjunctive goals and antecedents.
class Closure {
public:
    Closure(const std::vector<Formula>& premises, const Formula& goal) {
        for (const auto& p : premises) {
            known_.emplace(p, std::vector<Rule>{});
            p.collect_terms(terms_);
        }
        goal.collect_terms(terms_);
        saturate();
    }

    std::optional<std::vector<Rule>> prove(const Formula& goal) const {
        auto it = known_.find(goal);
        if (it != known_.end()) return it->second;
        if (goal.kind() == FormulaKind::And) {
            auto l = prove(goal.lhs());
            if (!l) return std::nullopt;
            auto r = prove(goal.rhs());
            if (!r) return std::nullopt;
            std::vector<Rule> rules = *l;
            append_rules(rules, *r);
            append_rules(rules, {Rule::ConjunctionIntro});
            return rules;
        }
        return std::nullopt;
    }

private:
    void saturate() {
        // Each round only adds subformulas of the premises (or their
        // instances), so this terminates; the cap guards pathological input.
        for (int round = 0; round < 64; ++round) {
            std::vector<std::pair<Formula, std::vector<Rule>>> fresh;
            for (const auto& [f, rules] : known_) {
                if (f.kind() == FormulaKind::Forall) {
                    for (const auto& t : terms_) {
                        std::vector<Rule> r = rules;
                        append_rules(r, {Rule::ForallElim});
                        fresh.emplace_back(f.lhs().substitute(f.name(), t), std::move(r));
                    }
                } else if (f.kind() == FormulaKind::Implies) {
                    if (auto ante = prove(f.lhs())) {
                        std::vector<Rule> r = rules;
                        append_rules(r, *ante);
                        append_rules(r, {Rule::ImplicationElim});
                        fresh.emplace_back(f.rhs(), std::move(r));
                    }
                }
            }
            bool changed = false;
            for (auto& [f, r] : fresh) changed |= known_.emplace(std::move(f), std::move(r)).second;
            if (!changed) return;
        }
    }

    std::map<Formula, std::vector<Rule>> known_;
    std::set<std::string> terms_;
};

bool outside_checked_fragment(const Formula& f) {
    return f.uses_connective(FormulaKind::Not) || f.uses_connective(FormulaKind::Or) ||
           f.uses_connective(FormulaKind::Iff) || f.uses_connective(FormulaKind::Exists);
}

std::string rules_text(const std::vector<Rule>& rules) {
    std::string out;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (i) out += ", ";
        out += to_string(rules[i]);
    }
    return out;
}

}  // namespace

ValidationReport check_derivation(const ReasoningRecord& tmpl) {
    ValidationReport report;
    report.record_id = tmpl.id();
    if (tmpl.mode != RecordMode::Abstract) {
        report.findings.push_back({Severity::Info, 0, "NotAbstract", "carrier records are not derivation-checked"});
        return report;
    }
    std::map<int, const StepLine*> by_index;
    for (const auto& s : tmpl.steps) by_index.emplace(s.index, &s);

    for (const auto& step : tmpl.steps) {
        if (step.justification.empty()) continue;
        DerivationFinding finding{step.index, DerivationStatus::Invalid, {}, {}};
        if (!step.formula) {
            finding.message = "conclusion does not parse";
            report.derivations.push_back(std::move(finding));
            continue;
        }
        std::vector<Formula> premises;
        std::string missing;
        for (int ref : step.justification) {
            auto it = by_index.find(ref);
            if (ref >= step.index || it == by_index.end() || !it->second->formula) {
                missing = "[" + std::to_string(ref) + "]";
                break;
            }
            premises.push_back(*it->second->formula);
        }
        if (!missing.empty()) {
            finding.message = "cited step " + missing + " is unavailable";
            report.derivations.push_back(std::move(finding));
            continue;
        }
        Closure closure(premises, *step.formula);
        if (auto rules = closure.prove(*step.formula)) {
            finding.status = DerivationStatus::Valid;
            finding.rules = std::move(*rules);
            finding.message = finding.rules.empty() ? "restates a cited premise" : "by " + rules_text(finding.rules);
        } else {
            bool outside = outside_checked_fragment(*step.formula);
            for (const auto& p : premises) outside = outside || outside_checked_fragment(p);
            if (outside) {
                finding.status = DerivationStatus::Unchecked;
                finding.message = "needs rules beyond \xE2\x86\x92" "E, \xE2\x88\x80" "E, \xE2\x88\xA7" "I";
            } else {
                finding.message = "not derivable from the cited steps by \xE2\x86\x92" "E, \xE2\x88\x80" "E, \xE2\x88\xA7" "I";
            }
        }
        report.derivations.push_back(std::move(finding));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Index

std::size_t CorpusIndex::record_count() const {
    std::size_t n = 0;
    for (const auto& [id, g] : groups) n += g.carriers.size() + (g.templ ? 1 : 0);
    return n;
}

std::vector<const ReasoningRecord*> CorpusIndex::carriers() const {
    std::vector<const ReasoningRecord*> out;
    for (const auto& [id, g] : groups) {
        for (const auto& c : g.carriers) out.push_back(&c);
    }
    return out;
}

CorpusIndex build_index(const std::vector<ReasoningRecord>& records) {
    CorpusIndex index;
    std::map<std::string, std::vector<const ReasoningRecord*>> carriers;
    for (const auto& rec : records) {
        const ValidationReport rep = validate_record(rec);
        if (rep.has_errors()) {
            index.excluded.push_back({rec.id(), "ValidationErrors",
                                      std::to_string(rep.count(Severity::Error)) + " validation error(s)"});
            continue;
        }
        LogicGroup& group = index.groups[rec.logic_id];
        if (rec.mode == RecordMode::Abstract) {
            if (group.templ) {
                index.excluded.push_back({rec.id(), "DuplicateTemplate", "logic already has a template"});
                continue;
            }
            group.templ = rec;
        } else {
            carriers[rec.logic_id].push_back(&rec);
        }
    }

    for (auto& [logic_id, group] : index.groups) {
        auto& members = carriers[logic_id];
        std::stable_sort(members.begin(), members.end(), [](const ReasoningRecord* a, const ReasoningRecord* b) {
            return std::tie(a->topic, a->language) < std::tie(b->topic, b->language);
        });
        if (group.templ) {
            group.n_steps = group.templ->n_steps();
        } else {
            // Majority length; ties go to the shorter length.
            std::map<std::size_t, std::size_t> votes;
            for (const auto* c : members) ++votes[c->n_steps()];
            std::size_t best = 0;
            for (const auto& [n, v] : votes) {
                if (v > best) {
                    best = v;
                    group.n_steps = n;
                }
            }
        }
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto* c : members) {
            if (c->n_steps() != group.n_steps) {
                index.excluded.push_back({c->id(), "StepCountMismatch",
                                          std::to_string(c->n_steps()) + " steps, group has " +
                                              std::to_string(group.n_steps)});
                continue;
            }
            if (!seen.emplace(c->topic, c->language).second) {
                index.excluded.push_back({c->id(), "DuplicateCarrier", "topic/language already present"});
                continue;
            }
            group.carriers.push_back(*c);
            ++index.topic_counts[c->topic];
            ++index.language_counts[c->language];
        }
    }
    for (auto it = index.groups.begin(); it != index.groups.end();) {
        if (!it->second.templ && it->second.carriers.empty()) {
            it = index.groups.erase(it);
        } else {
            ++it;
        }
    }
    if (index.groups.empty()) throw EmptyCorpus();
    return index;
}

// ---------------------------------------------------------------------------
// JSONL I/O

std::vector<CorpusLine> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus " + path);
    std::vector<CorpusLine> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        CorpusLine entry{number, std::nullopt, {}};
        try {
            entry.record = parse_record(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            entry.error = std::string("invalid JSON: ") + e.what();
        } catch (const Error& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

void write_corpus(const std::string& path, const std::vector<ReasoningRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write corpus " + path);
    for (const auto& rec : records) out << to_json(rec).dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace flowgeom
