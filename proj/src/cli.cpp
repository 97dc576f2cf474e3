#include "flowgeom/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowgeom/analysis.hpp"
#include "flowgeom/corpus.hpp"
#include "flowgeom/errors.hpp"
#include "flowgeom/flow.hpp"
#include "flowgeom/project.hpp"
#include "flowgeom/provider.hpp"
#include "flowgeom/smooth.hpp"
#include "flowgeom/synthcorpus.hpp"

#ifndef FLOWGEOM_VERSION
#define FLOWGEOM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace flowgeom {

const char* version() { return FLOWGEOM_VERSION; }

namespace {

// Bad option values discovered after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Level { Debug, Info, Warn, Error };

Level parse_level(const std::string& s) {
    if (s == "debug") return Level::Debug;
    if (s == "info") return Level::Info;
    if (s == "warn") return Level::Warn;
    if (s == "error") return Level::Error;
    throw UsageError("unknown log level '" + s + "'");
}

const char* level_name(Level l) {
    switch (l) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        case Level::Error: return "error";
    }
    return "info";
}

class Logger {
public:
    bool json_lines = false;
    Level threshold = Level::Info;

    void log(Level level, const std::string& msg, const json& fields = json::object()) const {
        if (level < threshold) return;
        if (json_lines) {
            json line = fields;
            line["level"] = level_name(level);
            line["msg"] = msg;
            line["ts"] = timestamp();
            std::cerr << line.dump() << '\n';
        } else {
            std::cerr << "[" << level_name(level) << "] " << msg;
            for (const auto& [k, v] : fields.items()) std::cerr << ' ' << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump());
            std::cerr << '\n';
        }
    }
    void info(const std::string& m, const json& f = json::object()) const { log(Level::Info, m, f); }
    void warn(const std::string& m, const json& f = json::object()) const { log(Level::Warn, m, f); }
    void error(const std::string& m, const json& f = json::object()) const { log(Level::Error, m, f); }
    void debug(const std::string& m, const json& f = json::object()) const { log(Level::Debug, m, f); }

private:
    static std::string timestamp() {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }
};

struct Globals {
    std::string log_level = "info";
    bool log_json = false;
    std::size_t jobs = 0;  // 0: hardware concurrency
    std::string run_json;  // override for the run.json location

    std::size_t resolved_jobs() const {
        if (jobs > 0) return jobs;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : hw;
    }
};

// Everything a subcommand reports back for run.json.
struct RunRecord {
    std::string subcommand;
    json config = json::object();
    json summary = json::object();
    std::vector<std::string> outputs;
    fs::path run_dir = ".";
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

fs::path parent_or_dot(const std::string& path) {
    const fs::path p(path);
    return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

json finding_json(const Finding& f) {
    return {{"severity", std::string(to_string(f.severity))}, {"step", f.step}, {"code", f.code}, {"message", f.message}};
}

json derivation_json(const DerivationFinding& d) {
    json rules = json::array();
    for (Rule r : d.rules) rules.push_back(std::string(to_string(r)));
    json j = {{"step", d.step}, {"status", std::string(to_string(d.status))}, {"rules", rules}};
    if (!d.message.empty()) j["message"] = d.message;
    return j;
}

// Parsed records of a corpus file; unparseable lines become error entries.
struct LoadedCorpus {
    std::vector<ReasoningRecord> records;
    std::vector<std::size_t> lines;
    std::vector<std::pair<std::size_t, std::string>> parse_errors;
};

LoadedCorpus load(const std::string& path) {
    LoadedCorpus c;
    for (auto& line : load_corpus(path)) {
        if (line.record) {
            c.records.push_back(std::move(*line.record));
            c.lines.push_back(line.line_number);
        } else {
            c.parse_errors.emplace_back(line.line_number, line.error);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateArgs {
    std::string corpus;
    bool check_derivations = false;
    std::string report;
};

int cmd_validate(const ValidateArgs& a, const Globals&, const Logger& log, RunRecord& run) {
    run.config = {{"corpus", a.corpus}, {"check_derivations", a.check_derivations}, {"report", a.report}};
    if (!a.report.empty()) run.run_dir = parent_or_dot(a.report);

    const LoadedCorpus corpus = load(a.corpus);
    std::map<std::string, const ReasoningRecord*> templates;
    for (const auto& r : corpus.records) {
        if (r.mode == RecordMode::Abstract) templates.emplace(r.logic_id, &r);
    }

    std::size_t errors = 0, warnings = 0, invalid = 0, unchecked = 0, valid = 0;
    json records = json::array();
    for (const auto& [line, msg] : corpus.parse_errors) {
        ++errors;
        records.push_back({{"line", line},
                           {"findings", json::array({{{"severity", "error"}, {"step", 0}, {"code", "ParseError"}, {"message", msg}}})}});
        log.error("unparseable record", {{"line", line}, {"error", msg}});
    }
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& rec = corpus.records[i];
        const ReasoningRecord* tmpl = nullptr;
        if (rec.mode == RecordMode::Carrier) {
            const auto it = templates.find(rec.logic_id);
            if (it != templates.end()) tmpl = it->second;
        }
        const ValidationReport report = validate_record(rec, tmpl);
        json entry = {{"line", corpus.lines[i]}, {"record", rec.id()}, {"mode", std::string(to_string(rec.mode))}};
        entry["findings"] = json::array();
        for (const auto& f : report.findings) {
            entry["findings"].push_back(finding_json(f));
            if (f.severity == Severity::Error) {
                ++errors;
                log.error(f.message, {{"record", rec.id()}, {"step", f.step}, {"code", f.code}});
            } else if (f.severity == Severity::Warning) {
                ++warnings;
                log.warn(f.message, {{"record", rec.id()}, {"step", f.step}, {"code", f.code}});
            }
        }
        if (a.check_derivations && rec.mode == RecordMode::Abstract && !report.has_errors()) {
            const ValidationReport d = check_derivation(rec);
            entry["derivations"] = json::array();
            for (const auto& df : d.derivations) {
                entry["derivations"].push_back(derivation_json(df));
                switch (df.status) {
                    case DerivationStatus::Valid: ++valid; break;
                    case DerivationStatus::Unchecked: ++unchecked; break;
                    case DerivationStatus::Invalid:
                        ++invalid;
                        log.error("derivation step not valid", {{"record", rec.id()}, {"step", df.step}, {"detail", df.message}});
                        break;
                }
            }
        }
        records.push_back(std::move(entry));
    }

    json index_json = json::object();
    try {
        const CorpusIndex index = build_index(corpus.records);
        json groups = json::object();
        for (const auto& [id, g] : index.groups) {
            groups[id] = {{"steps", g.n_steps}, {"carriers", g.carriers.size()}, {"template", g.templ.has_value()}};
        }
        json excluded = json::array();
        for (const auto& n : index.excluded) {
            excluded.push_back({{"record", n.record_id}, {"code", n.code}, {"message", n.message}});
        }
        index_json = {{"groups", groups}, {"topics", index.topic_counts}, {"languages", index.language_counts},
                      {"excluded", excluded}};
    } catch (const EmptyCorpus& e) {
        ++errors;
        index_json = {{"error", e.what()}};
        log.error(e.what());
    }

    const json summary = {{"records", corpus.records.size() + corpus.parse_errors.size()},
                          {"errors", errors},
                          {"warnings", warnings},
                          {"derivations", {{"valid", valid}, {"unchecked", unchecked}, {"invalid", invalid}}}};
    run.summary = summary;
    if (!a.report.empty()) {
        write_json(a.report, {{"summary", summary}, {"records", records}, {"index", index_json}});
        run.outputs.push_back(a.report);
    }
    std::cerr << "validated " << summary["records"].get<std::size_t>() << " records: " << errors << " errors, " << warnings
              << " warnings";
    if (a.check_derivations) std::cerr << "; derivations " << valid << " valid, " << unchecked << " unchecked, " << invalid << " invalid";
    std::cerr << '\n';
    return (errors > 0 || invalid > 0) ? kExitValidation : kExitOk;
}

// ---------------------------------------------------------------------------
// embed

struct EmbedArgs {
    std::string corpus;
    std::string provider = "synth";
    std::string out;
    bool include_prompt = false;
    std::string prompt;
    std::string joiner = "\n";
    std::uint64_t seed = 0;
    std::size_t dim = 64;
    bool include_templates = false;
    std::string endpoint;
    std::string model;
    std::string api_key_env = "RFLOW_API_KEY";
    std::size_t max_batch = 64;
    std::size_t max_parallel = 4;
    int retries = 3;
    double timeout = 60.0;
    std::string dir;
};

int cmd_embed(const EmbedArgs& a, const Globals& g, const Logger& log, RunRecord& run) {
    run.run_dir = a.out;
    ProviderConfig cfg;
    try {
        cfg.kind = parse_provider_kind(a.provider);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    cfg.dimension = a.dim;
    cfg.seed = a.seed;
    cfg.endpoint = a.endpoint;
    cfg.model = a.model;
    cfg.api_key_env = a.api_key_env;
    cfg.max_batch = a.max_batch;
    cfg.max_parallel = a.max_parallel;
    cfg.retry_budget = a.retries;
    cfg.timeout_seconds = a.timeout;
    cfg.directory = a.dir;
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    FlowOptions opts;
    opts.include_prompt = a.include_prompt;
    opts.prompt = a.prompt;
    opts.joiner = a.joiner;
    if (opts.include_prompt && opts.prompt.empty()) throw UsageError("--include-prompt needs --prompt");

    run.config = {{"corpus", a.corpus},
                  {"provider", a.provider},
                  {"out", a.out},
                  {"include_prompt", a.include_prompt},
                  {"joiner", a.joiner},
                  {"seed", a.seed},
                  {"dim", a.dim},
                  {"include_templates", a.include_templates}};
    if (cfg.kind == ProviderKind::Http) {
        run.config["endpoint"] = a.endpoint;
        run.config["model"] = a.model;
        run.config["api_key_env"] = a.api_key_env;
        run.config["max_batch"] = a.max_batch;
        run.config["max_parallel"] = a.max_parallel;
        run.config["retries"] = a.retries;
        run.config["timeout"] = a.timeout;
    }
    if (cfg.kind == ProviderKind::File) run.config["dir"] = a.dir;

    const LoadedCorpus corpus = load(a.corpus);
    for (const auto& [line, msg] : corpus.parse_errors) log.error("unparseable record", {{"line", line}, {"error", msg}});
    if (!corpus.parse_errors.empty()) {
        std::cerr << corpus.parse_errors.size() << " corpus lines failed to parse; run `flowgeom validate`\n";
        return kExitValidation;
    }
    const CorpusIndex index = build_index(corpus.records);
    for (const auto& n : index.excluded) log.warn("record excluded", {{"record", n.record_id}, {"code", n.code}});

    auto provider = make_provider(cfg);
    log.info("embedding", {{"provider", provider->id()}, {"records", index.carriers().size()}});
    const BuildResult result = batch_build(index, *provider, opts, a.out, a.include_templates, g.resolved_jobs());
    for (const auto& f : result.failures) log.error("flow failed", {{"record", f.record_id}, {"error", f.error}});

    run.summary = {{"written", result.written.size()}, {"failed", result.failures.size()}, {"excluded", index.excluded.size()},
                   {"provider", provider->id()}};
    run.outputs.push_back((fs::path(a.out) / "manifest.json").string());
    std::cerr << "wrote " << result.written.size() << " flows to " << a.out;
    if (!result.failures.empty()) std::cerr << "; " << result.failures.size() << " failed";
    std::cerr << '\n';
    return result.failures.empty() ? kExitOk : kExitIo;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
    std::string flows;
    std::string measures = "position,velocity,curvature";
    std::string align = "nearest";
    std::string curvature_align = "resample";
    std::size_t grid = 16;
    std::string criteria = "logic,topic,language";
    bool inclusive = false;
    bool ordered_pairs = false;
    std::string out = "report.json";
    std::string matrices;
};

AlignmentPolicy parse_align(const std::string& s, std::size_t grid) {
    if (s == "nearest") return AlignmentPolicy::nearest();
    if (s == "resample") return AlignmentPolicy::resample(grid);
    throw UsageError("unknown alignment '" + s + "' (expected nearest or resample)");
}

int cmd_analyze(const AnalyzeArgs& a, const Globals& g, const Logger& log, RunRecord& run) {
    run.run_dir = parent_or_dot(a.out);
    if (a.grid < 3) throw UsageError("--grid must be >= 3");
    std::vector<Measure> measures;
    std::vector<Criterion> criteria;
    try {
        for (const auto& m : split_list(a.measures)) measures.push_back(parse_measure(m));
        for (const auto& c : split_list(a.criteria)) criteria.push_back(parse_criterion(c));
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (measures.empty() || criteria.empty()) throw UsageError("--measures and --criteria must not be empty");
    AnalysisPolicies policies;
    policies.position = parse_align(a.align, a.grid);
    policies.velocity = parse_align(a.align, a.grid);
    policies.curvature = parse_align(a.curvature_align, a.grid);
    GroupingOptions options{a.inclusive, a.ordered_pairs};

    std::vector<std::string> measure_names, criterion_names;
    for (Measure m : measures) measure_names.emplace_back(to_string(m));
    for (Criterion c : criteria) criterion_names.emplace_back(to_string(c));
    // Paths stay out of report.json so reruns into other directories match.
    const json analysis_config = {{"measures", measure_names},
                                  {"criteria", criterion_names},
                                  {"align", a.align},
                                  {"curvature_align", a.curvature_align},
                                  {"grid", a.grid},
                                  {"inclusive", a.inclusive},
                                  {"ordered_pairs", a.ordered_pairs}};
    run.config = analysis_config;
    run.config["flows"] = a.flows;
    run.config["out"] = a.out;
    run.config["matrices"] = a.matrices;

    if (!fs::is_directory(a.flows)) throw IoError("not a directory: " + a.flows);
    const std::vector<Flow> flows = load_flows(a.flows);
    if (flows.size() < 2) throw IoError("need at least two flow files under " + a.flows);
    log.info("loaded flows", {{"count", flows.size()}, {"dim", flows.front().dim()}});
    const auto keys = flow_keys(flows);

    GroupReport report;
    report.options = options;
    json skipped = json::object();
    std::set<std::string> providers;
    for (const auto& f : flows) providers.insert(f.meta.provider);
    for (Measure m : measures) {
        const SimilarityMatrix matrix = pairwise_matrix(flows, m, policies, g.resolved_jobs());
        group_summary(matrix, keys, criteria, options, report);
        skipped[std::string(to_string(m))] = matrix.skipped;
        for (const auto& [reason, n] : matrix.skipped) {
            log.warn("pairs skipped", {{"measure", std::string(to_string(m))}, {"reason", reason}, {"count", n}});
        }
        if (!a.matrices.empty()) {
            const fs::path base = fs::path(a.matrices) / std::string(to_string(m));
            fs::create_directories(a.matrices);
            write_matrix_csv(matrix, base.string() + ".csv");
            write_matrix_sidecar(matrix, base.string() + ".json");
            run.outputs.push_back(base.string() + ".csv");
            run.outputs.push_back(base.string() + ".json");
        }
    }
    const json out = {{"report", to_json(report)},
                      {"config", analysis_config},
                      {"flows", flows.size()},
                      {"providers", providers},
                      {"skipped", skipped}};
    write_json(a.out, out);
    run.outputs.insert(run.outputs.begin(), a.out);
    run.summary = {{"flows", flows.size()}, {"report", to_json(report)}};

    for (Measure m : measures) {
        std::cerr << to_string(m) << ':';
        for (Criterion c : criteria) {
            const auto& s = report.at(m, c);
            std::cerr << ' ' << to_string(c) << '=' << (s.mean ? std::to_string(*s.mean) : std::string("n/a")) << " ("
                      << s.pairs << " pairs)";
        }
        std::cerr << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// project / heatmap

struct ProjectArgs {
    std::string flows;
    int dims = 2;
    std::string out = "coords.csv";
    std::string svg;
    std::uint64_t seed = 0;
};

int cmd_project(const ProjectArgs& a, const Globals&, const Logger& log, RunRecord& run) {
    run.run_dir = parent_or_dot(a.out);
    run.config = {{"flows", a.flows}, {"dims", a.dims}, {"out", a.out}, {"svg", a.svg}, {"seed", a.seed}};
    if (a.dims != 2 && a.dims != 3) throw UsageError("--dims must be 2 or 3");
    if (!fs::is_directory(a.flows)) throw IoError("not a directory: " + a.flows);
    const std::vector<Flow> flows = load_flows(a.flows);
    if (flows.empty()) throw IoError("no flow files under " + a.flows);

    const Eigen::MatrixXd points = stack_points(flows);
    const Projection proj = pca_fit(points, a.dims, a.seed);
    if (proj.rank_deficient) log.warn("fewer than the requested directions carry variance", {{"dims", a.dims}});
    std::vector<Eigen::MatrixXd> coords;
    for (const auto& f : flows) coords.push_back(project(f.points, proj));
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    write_coords_csv(flows, coords, a.out);
    run.outputs.push_back(a.out);
    if (!a.svg.empty()) {
        write_trajectory_svg(flows, coords, a.svg);
        run.outputs.push_back(a.svg);
    }
    std::vector<double> ratios(proj.explained_ratio.data(), proj.explained_ratio.data() + proj.explained_ratio.size());
    run.summary = {{"flows", flows.size()}, {"points", points.rows()}, {"explained_ratio", ratios},
                   {"rank_deficient", proj.rank_deficient}};
    std::cerr << "projected " << points.rows() << " points from " << flows.size() << " flows; explained";
    for (double r : ratios) std::cerr << ' ' << r;
    std::cerr << '\n';
    return kExitOk;
}

struct HeatmapArgs {
    std::string matrix;
    std::string svg = "heat.svg";
};

int cmd_heatmap(const HeatmapArgs& a, const Globals&, const Logger&, RunRecord& run) {
    run.run_dir = parent_or_dot(a.svg);
    run.config = {{"matrix", a.matrix}, {"svg", a.svg}};
    const MatrixCsv m = read_matrix_csv(a.matrix);
    if (fs::path(a.svg).has_parent_path()) fs::create_directories(fs::path(a.svg).parent_path());
    write_heatmap_svg(m.ids, m.scores, a.svg);
    run.outputs.push_back(a.svg);
    run.summary = {{"flows", m.ids.size()}};
    std::cerr << "wrote " << a.svg << " (" << m.ids.size() << " x " << m.ids.size() << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// smooth-demo

struct SmoothArgs {
    std::string tokens;
    std::string boundaries;
    double delta = 0.25;
    std::size_t grid = 512;
    std::size_t levels = 3;
    Eigen::Index dim = 16;
    Eigen::Index hidden = 32;
    std::uint64_t seed = 0;
    std::string out = "report.json";
};

int cmd_smooth(const SmoothArgs& a, const Globals&, const Logger& log, RunRecord& run) {
    run.run_dir = parent_or_dot(a.out);
    run.config = {{"tokens", a.tokens}, {"boundaries", a.boundaries}, {"delta", a.delta}, {"grid", a.grid},
                  {"levels", a.levels}, {"dim", a.dim}, {"hidden", a.hidden}, {"seed", a.seed}, {"out", a.out}};
    if (a.grid < 100) throw UsageError("--grid must be >= 100");
    if (!(a.delta > 0 && a.delta < 0.5)) throw UsageError("--delta must lie in (0, 0.5)");

    std::ifstream in(a.tokens, std::ios::binary);
    if (!in) throw IoError("cannot read " + a.tokens);
    std::vector<std::string> tokens;
    std::vector<std::size_t> line_bounds;
    for (std::string line; std::getline(in, line);) {
        const auto parts = split_unicode_whitespace(line);
        if (parts.empty()) continue;
        for (auto p : parts) tokens.emplace_back(p);
        line_bounds.push_back(tokens.size());
    }
    if (tokens.empty()) throw InvalidArgument("no tokens in " + a.tokens);

    MaskSchedule schedule;
    schedule.delta = a.delta;
    if (a.boundaries.empty()) {
        schedule.boundaries = line_bounds;
    } else {
        for (const auto& b : split_list(a.boundaries)) {
            try {
                schedule.boundaries.push_back(std::stoul(b));
            } catch (const std::exception&) {
                throw UsageError("bad boundary '" + b + "'");
            }
        }
    }
    schedule.validate();
    if (schedule.total() != tokens.size()) {
        throw InvalidArgument("last boundary " + std::to_string(schedule.total()) + " does not match the " +
                              std::to_string(tokens.size()) + " tokens read");
    }

    ToyEncoderConfig cfg;
    cfg.dim = a.dim;
    cfg.hidden = a.hidden;
    cfg.seed = a.seed;
    const ToyEncoder encoder(cfg);
    const Eigen::MatrixXd emb = embed_tokens(tokens, a.dim, a.seed);
    const C1Report report = c1_report(emb, schedule, encoder, a.grid, a.levels);
    log.info("smooth trajectory sampled", {{"tokens", tokens.size()}, {"sentences", schedule.boundaries.size()}});

    json out = to_json(report);
    out["config"] = {{"boundaries", schedule.boundaries}, {"delta", a.delta}, {"grid", a.grid}, {"levels", a.levels},
                     {"dim", a.dim}, {"hidden", a.hidden}, {"seed", a.seed}};
    write_json(a.out, out);
    run.outputs.push_back(a.out);
    run.summary = {{"boundary_error", report.boundary_error}, {"first_difference_ratios", report.first_difference_ratios}};
    std::cerr << "boundary error " << report.boundary_error << "; first-difference ratios";
    for (double r : report.first_difference_ratios) std::cerr << ' ' << r;
    std::cerr << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    SynthSpec spec;
    std::string out;
};

int cmd_synth(const SynthArgs& a, const Globals&, const Logger& log, RunRecord& run) {
    run.run_dir = a.out;
    run.config = to_json(a.spec);
    run.config["out"] = a.out;
    try {
        a.spec.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    const fs::path out(a.out);
    fs::create_directories(out);

    const auto records = generate_corpus(a.spec);
    write_corpus((out / "corpus.jsonl").string(), records);

    const auto flows = generate_flows(a.spec);
    json manifest = json::array();
    for (const auto& f : flows) {
        const std::string rel = flow_file_name(f.meta.logic_id, f.meta.topic, f.meta.language);
        write_flow(to_flow_file(f), (out / "flows" / rel).string());
        manifest.push_back({{"file", rel}, {"record", f.id()}, {"steps", f.steps()}, {"dim", f.dim()}});
    }
    write_json(out / "flows" / "manifest.json", {{"flows", manifest}, {"provider", flows.front().meta.provider}});
    write_json(out / "expected_report.json", expected_report(a.spec));
    run.outputs = {(out / "corpus.jsonl").string(), (out / "flows").string(), (out / "expected_report.json").string()};
    run.summary = {{"records", records.size()}, {"flows", flows.size()}};
    log.info("synthetic corpus written", {{"records", records.size()}, {"flows", flows.size()}});
    std::cerr << "wrote " << records.size() << " records and " << flows.size() << " flows to " << a.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

const char* status_name(int code) {
    switch (code) {
        case kExitOk: return "ok";
        case kExitValidation: return "validation-error";
        case kExitIo: return "io-error";
        case kExitUsage: return "usage-error";
    }
    return "error";
}

void write_run_json(const RunRecord& run, const Globals& g, int code, const std::string& error, const Logger& log) {
    if (run.subcommand.empty()) return;
    json j = {{"tool", "flowgeom"},
              {"version", version()},
              {"subcommand", run.subcommand},
              {"config", run.config},
              {"global", {{"jobs", g.jobs}, {"log_level", g.log_level}, {"log_json", g.log_json}}},
              {"exit_code", code},
              {"status", status_name(code)},
              {"summary", run.summary},
              {"outputs", run.outputs}};
    if (!error.empty()) j["error"] = error;
    const fs::path path = g.run_json.empty() ? run.run_dir / "run.json" : fs::path(g.run_json);
    try {
        write_json(path, j);
    } catch (const std::exception& e) {
        log.error("could not write run.json", {{"path", path.string()}, {"error", e.what()}});
    }
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Geometry of reasoning flows: corpus checks, embedding, similarity analysis and projections."};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--log-level", g.log_level, "debug|info|warn|error")->capture_default_str();
    app.add_flag("--log-json", g.log_json, "Line-delimited JSON logs on stderr");
    app.add_option("--jobs", g.jobs, "Parallelism cap (0: all cores)")->capture_default_str();
    app.add_option("--run-json", g.run_json, "Where to write run.json (default: next to the main output)");

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Check corpus structure and, optionally, derivations");
    validate->add_option("--corpus", va.corpus, "JSONL corpus")->required();
    validate->add_flag("--check-derivations", va.check_derivations, "Check justified steps of abstract templates");
    validate->add_option("--report", va.report, "Write findings as JSON");

    EmbedArgs ea;
    auto* embed = app.add_subcommand("embed", "Build context-cumulative flows for every carrier record");
    embed->add_option("--corpus", ea.corpus, "JSONL corpus")->required();
    embed->add_option("--provider", ea.provider, "synth|http|file")->capture_default_str();
    embed->add_option("--out", ea.out, "Output directory")->required();
    embed->add_flag("--include-prompt", ea.include_prompt, "Prefix every S_t with --prompt");
    embed->add_option("--prompt", ea.prompt, "Prompt text used with --include-prompt");
    embed->add_option("--joiner", ea.joiner, "Step separator inside prefixes");
    embed->add_option("--seed", ea.seed, "Synth provider seed")->capture_default_str();
    embed->add_option("--dim", ea.dim, "Synth provider dimension")->capture_default_str();
    embed->add_flag("--include-templates", ea.include_templates, "Also embed abstract templates");
    embed->add_option("--endpoint", ea.endpoint, "HTTP embeddings endpoint");
    embed->add_option("--model", ea.model, "HTTP model name");
    embed->add_option("--api-key-env", ea.api_key_env, "Env var holding the bearer token")->capture_default_str();
    embed->add_option("--max-batch", ea.max_batch, "Texts per request")->capture_default_str();
    embed->add_option("--max-parallel", ea.max_parallel, "Concurrent requests")->capture_default_str();
    embed->add_option("--retries", ea.retries, "Retry budget per request")->capture_default_str();
    embed->add_option("--timeout", ea.timeout, "Request timeout in seconds")->capture_default_str();
    embed->add_option("--dir", ea.dir, "Flow directory for the file provider");

    AnalyzeArgs aa;
    auto* analyze = app.add_subcommand("analyze", "Pairwise similarity matrices and grouped means");
    analyze->add_option("--flows", aa.flows, "Directory of .rflw files")->required();
    analyze->add_option("--measures", aa.measures, "Comma list of position,velocity,curvature")->capture_default_str();
    analyze->add_option("--align", aa.align, "Alignment for position and velocity: nearest|resample")->capture_default_str();
    analyze->add_option("--curvature-align", aa.curvature_align, "Alignment for unequal curvature series")
        ->capture_default_str();
    analyze->add_option("--grid", aa.grid, "Resample grid size")->capture_default_str();
    analyze->add_option("--criteria", aa.criteria, "Comma list of logic,topic,language")->capture_default_str();
    analyze->add_flag("--inclusive", aa.inclusive, "Group by the shared attribute only");
    analyze->add_flag("--ordered-pairs", aa.ordered_pairs, "Count (i,j) and (j,i) separately");
    analyze->add_option("--out", aa.out, "Report path")->capture_default_str();
    analyze->add_option("--matrices", aa.matrices, "Directory for matrix CSV and sidecar files");

    ProjectArgs pa;
    auto* projectc = app.add_subcommand("project", "PCA projection of all flow points");
    projectc->add_option("--flows", pa.flows, "Directory of .rflw files")->required();
    projectc->add_option("--dims", pa.dims, "2 or 3")->capture_default_str();
    projectc->add_option("--out", pa.out, "Coordinates CSV")->capture_default_str();
    projectc->add_option("--svg", pa.svg, "Trajectory plot");
    projectc->add_option("--seed", pa.seed, "Seed for the large-d iterative solver")->capture_default_str();

    HeatmapArgs ha;
    auto* heatmap = app.add_subcommand("heatmap", "Render a similarity matrix CSV");
    heatmap->add_option("--matrix", ha.matrix, "Matrix CSV written by analyze")->required();
    heatmap->add_option("--svg", ha.svg, "Output SVG")->capture_default_str();

    SmoothArgs sa;
    auto* smooth = app.add_subcommand("smooth-demo", "Relaxed-mask trajectory of a toy encoder");
    smooth->add_option("--tokens", sa.tokens, "Text file; one sentence per line unless --boundaries is given")->required();
    smooth->add_option("--boundaries", sa.boundaries, "Cumulative token counts, e.g. 3,7,12");
    smooth->add_option("--delta", sa.delta, "Mask transition half-width")->capture_default_str();
    smooth->add_option("--grid", sa.grid, "Coarsest sampling grid")->capture_default_str();
    smooth->add_option("--levels", sa.levels, "Number of grid doublings")->capture_default_str();
    smooth->add_option("--dim", sa.dim, "Encoder width")->capture_default_str();
    smooth->add_option("--hidden", sa.hidden, "Encoder hidden size")->capture_default_str();
    smooth->add_option("--seed", sa.seed, "Encoder and token seed")->capture_default_str();
    smooth->add_option("--out", sa.out, "Report path")->capture_default_str();

    SynthArgs ya;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground-truth flows");
    synth->add_option("--logics", ya.spec.logics)->capture_default_str();
    synth->add_option("--topics", ya.spec.topics)->capture_default_str();
    synth->add_option("--langs", ya.spec.languages)->capture_default_str();
    synth->add_option("--min-steps", ya.spec.min_steps)->capture_default_str();
    synth->add_option("--max-steps", ya.spec.max_steps)->capture_default_str();
    synth->add_option("--seed", ya.spec.seed)->capture_default_str();
    synth->add_option("--beta", ya.spec.beta, "Topic base magnitude")->capture_default_str();
    synth->add_option("--gamma", ya.spec.gamma, "Mean step length")->capture_default_str();
    synth->add_option("--sigma", ya.spec.sigma, "Noise level")->capture_default_str();
    synth->add_option("--language-ratio", ya.spec.language_ratio, "Language offset as a fraction of beta")
        ->capture_default_str();
    synth->add_option("--dim", ya.spec.dim)->capture_default_str();
    synth->add_option("--out", ya.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        if (e.get_exit_code() != 0) {
            std::cerr << app.help();
            return kExitUsage;
        }
        return kExitOk;
    }

    Logger log;
    log.json_lines = g.log_json;
    RunRecord run;
    int code = kExitOk;
    std::string error;
    try {
        log.threshold = parse_level(g.log_level);
        if (validate->parsed()) {
            run.subcommand = "validate";
            code = cmd_validate(va, g, log, run);
        } else if (embed->parsed()) {
            run.subcommand = "embed";
            code = cmd_embed(ea, g, log, run);
        } else if (analyze->parsed()) {
            run.subcommand = "analyze";
            code = cmd_analyze(aa, g, log, run);
        } else if (projectc->parsed()) {
            run.subcommand = "project";
            code = cmd_project(pa, g, log, run);
        } else if (heatmap->parsed()) {
            run.subcommand = "heatmap";
            code = cmd_heatmap(ha, g, log, run);
        } else if (smooth->parsed()) {
            run.subcommand = "smooth-demo";
            code = cmd_smooth(sa, g, log, run);
        } else if (synth->parsed()) {
            run.subcommand = "synth";
            code = cmd_synth(ya, g, log, run);
        }
    } catch (const UsageError& e) {
        error = e.what();
        code = kExitUsage;
    } catch (const IoError& e) {  // includes format errors
        error = e.what();
        code = kExitIo;
    } catch (const ProviderError& e) {
        error = e.what();
        code = kExitIo;
    } catch (const Error& e) {
        error = e.what();
        code = kExitValidation;
    } catch (const fs::filesystem_error& e) {
        error = e.what();
        code = kExitIo;
    } catch (const std::exception& e) {
        error = e.what();
        code = kExitIo;
    }
    if (!error.empty()) {
        log.error(error, {{"subcommand", run.subcommand}, {"exit_code", code}});
        if (code == kExitUsage) std::cerr << app.help();
    }
    write_run_json(run, g, code, error, log);
    return code;
}

}  // namespace flowgeom
