#include "flowgeom/flow.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "flowgeom/errors.hpp"

namespace flowgeom {

namespace fs = std::filesystem;

std::string_view to_string(FlowMode mode) {
    return mode == FlowMode::PrefixEmbedding ? "prefix-embedding" : "step-span";
}

FlowMode parse_flow_mode(std::string_view text) {
    if (text == "prefix-embedding") return FlowMode::PrefixEmbedding;
    if (text == "step-span") return FlowMode::StepSpan;
    throw InvalidArgument("unknown flow mode '" + std::string(text) + "'");
}

std::string Flow::id() const { return meta.logic_id + "/" + meta.topic + "/" + meta.language; }

nlohmann::json to_json(const FlowMeta& meta) {
    return {{"logic_id", meta.logic_id},   {"topic", meta.topic},
            {"language", meta.language},   {"record_mode", meta.record_mode},
            {"provider", meta.provider},   {"mode", std::string(to_string(meta.mode))},
            {"pooling", meta.pooling},     {"joiner", meta.joiner},
            {"include_prompt", meta.include_prompt}};
}

FlowMeta flow_meta_from_json(const nlohmann::json& j) {
    FlowMeta m;
    m.logic_id = j.value("logic_id", "");
    m.topic = j.value("topic", "");
    m.language = j.value("language", "");
    m.record_mode = j.value("record_mode", "carrier");
    m.provider = j.value("provider", "");
    m.mode = parse_flow_mode(j.value("mode", "prefix-embedding"));
    m.pooling = j.value("pooling", m.mode == FlowMode::StepSpan ? "span" : "prefix");
    m.joiner = j.value("joiner", "\n");
    m.include_prompt = j.value("include_prompt", false);
    return m;
}

FlowFile to_flow_file(const Flow& flow) {
    FlowFile file;
    file.payload = flow.points.cast<float>();
    file.metadata = to_json(flow.meta);
    return file;
}

Flow from_flow_file(const FlowFile& file) {
    Flow flow;
    flow.points = file.payload.cast<double>();
    flow.meta = flow_meta_from_json(file.metadata);
    return flow;
}

std::vector<std::string> cumulative_prefixes(const ReasoningRecord& rec, const FlowOptions& opts) {
    std::vector<std::string> prefixes;
    prefixes.reserve(rec.steps.size());
    std::string acc;
    if (opts.include_prompt) {
        if (opts.prompt.empty()) throw InvalidArgument("include_prompt is set but the prompt is empty");
        acc = opts.prompt + opts.joiner;
    }
    for (std::size_t t = 0; t < rec.steps.size(); ++t) {
        if (t > 0) acc += opts.joiner;
        acc += rec.steps[t].raw;
        prefixes.push_back(acc);
    }
    return prefixes;
}

namespace {

FlowMeta meta_for(const ReasoningRecord& rec, const EmbeddingProvider& provider, const FlowOptions& opts) {
    FlowMeta meta;
    meta.logic_id = rec.logic_id;
    meta.topic = rec.topic;
    meta.language = rec.language;
    meta.record_mode = std::string(to_string(rec.mode));
    meta.provider = provider.id();
    meta.mode = opts.mode;
    meta.pooling = opts.mode == FlowMode::StepSpan ? "span" : "prefix";
    meta.joiner = opts.joiner;
    meta.include_prompt = opts.include_prompt;
    return meta;
}

}  // namespace

Flow build_cumulative_flow(const ReasoningRecord& rec, EmbeddingProvider& provider, const FlowOptions& opts) {
    if (rec.steps.empty()) throw InvalidArgument("record " + rec.id() + " has no steps");

    if (auto prebuilt = provider.lookup_flow(rec)) {
        Flow flow = from_flow_file(*prebuilt);
        if (static_cast<std::size_t>(flow.steps()) != rec.n_steps()) {
            throw ProviderError("pre-built flow for " + rec.id() + " has " + std::to_string(flow.steps()) +
                                " steps, record has " + std::to_string(rec.n_steps()));
        }
        flow.meta.logic_id = rec.logic_id;
        flow.meta.topic = rec.topic;
        flow.meta.language = rec.language;
        flow.meta.record_mode = std::string(to_string(rec.mode));
        return flow;
    }
    if (opts.mode == FlowMode::StepSpan) {
        throw InvalidArgument("step-span flows come from an extractor; this provider only embeds prefixes");
    }

    const auto prefixes = cumulative_prefixes(rec, opts);
    std::vector<Eigen::VectorXd> vectors;
    try {
        vectors = provider.embed_batch(prefixes);
    } catch (const ProviderError& e) {
        const auto t = e.failed_index() >= 0 ? std::to_string(e.failed_index() + 1) : std::string("?");
        throw ProviderError(rec.id() + " at t=" + t + ": " + e.what(), e.failed_index());
    }
    if (vectors.size() != prefixes.size()) {
        throw ProviderError(rec.id() + ": provider returned " + std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(prefixes.size()) + " inputs");
    }
    Flow flow;
    flow.meta = meta_for(rec, provider, opts);
    const Eigen::Index d = vectors.front().size();
    flow.points.resize(static_cast<Eigen::Index>(vectors.size()), d);
    for (std::size_t t = 0; t < vectors.size(); ++t) {
        if (vectors[t].size() != d) {
            throw DimensionMismatch(static_cast<std::size_t>(d), static_cast<std::size_t>(vectors[t].size()));
        }
        flow.points.row(static_cast<Eigen::Index>(t)) = vectors[t].transpose();
    }
    return flow;
}

BuildResult batch_build(const CorpusIndex& index, EmbeddingProvider& provider, const FlowOptions& opts,
                        const std::string& out_dir, bool include_templates, std::size_t jobs) {
    std::vector<const ReasoningRecord*> records;
    for (const auto& [logic_id, group] : index.groups) {
        if (include_templates && group.templ) records.push_back(&*group.templ);
        for (const auto& c : group.carriers) records.push_back(&c);
    }
    if (records.empty()) throw EmptyCorpus();

    std::vector<std::optional<BuildEntry>> entries(records.size());
    std::vector<std::optional<BuildFailure>> failures(records.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            const ReasoningRecord& rec = *records[i];
            try {
                const Flow flow = build_cumulative_flow(rec, provider, opts);
                const std::string rel = flow_file_name(rec.logic_id, rec.topic, rec.language);
                write_flow(to_flow_file(flow), (fs::path(out_dir) / rel).string());
                entries[i] = BuildEntry{rel, rec.id(), static_cast<std::size_t>(flow.steps()),
                                        static_cast<std::size_t>(flow.dim())};
            } catch (const Error& e) {
                failures[i] = BuildFailure{rec.id(), e.what()};
            }
        }
    };
    // Providers are not required to be thread-safe beyond embed_batch's own
    // concurrency, so parallel records need a stateless backend.
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(jobs, records.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    BuildResult result;
    for (auto& e : entries) {
        if (e) result.written.push_back(std::move(*e));
    }
    for (auto& f : failures) {
        if (f) result.failures.push_back(std::move(*f));
    }
    std::sort(result.written.begin(), result.written.end(),
              [](const BuildEntry& a, const BuildEntry& b) { return a.file < b.file; });
    std::sort(result.failures.begin(), result.failures.end(),
              [](const BuildFailure& a, const BuildFailure& b) { return a.record_id < b.record_id; });

    nlohmann::json manifest;
    manifest["flows"] = nlohmann::json::array();
    for (const auto& e : result.written) {
        manifest["flows"].push_back({{"file", e.file}, {"record", e.record_id}, {"steps", e.steps}, {"dim", e.dim}});
    }
    manifest["failures"] = nlohmann::json::array();
    for (const auto& f : result.failures) manifest["failures"].push_back({{"record", f.record_id}, {"error", f.error}});
    manifest["provider"] = provider.id();
    manifest["mode"] = std::string(to_string(opts.mode));
    manifest["joiner"] = opts.joiner;
    manifest["include_prompt"] = opts.include_prompt;

    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest in " + out_dir);
    out << manifest.dump(2) << '\n';
    return result;
}

std::vector<Flow> load_flows(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".rflw") {
            files.push_back(fs::relative(entry.path(), dir).generic_string());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Flow> flows;
    flows.reserve(files.size());
    for (const auto& rel : files) flows.push_back(from_flow_file(read_flow((fs::path(dir) / rel).string())));
    return flows;
}

}  // namespace flowgeom
