#include "flowgeom/synthcorpus.hpp"

#include <array>
#include <cmath>
#include <random>

#include <Eigen/QR>

#include "flowgeom/errors.hpp"

namespace flowgeom {

namespace {

constexpr std::array<const char*, 8> kTopics = {"weather", "finance",  "software",  "medicine",
                                                "logistics", "cooking", "astronomy", "law"};

struct LanguageTable {
    const char* code;
    std::array<const char*, 8> nouns;
    const char* condition;  // {noun} {i}
    const char* if_then;    // {0} {1}
    const char* forall;     // {noun}
    const char* marked;     // instance of the antecedent predicate
    const char* archived;   // instance of the consequent predicate
    const char* derived;    // {refs} {0}
    const char* conj;       // {0} {1}
    const char* ref_and;
};

const std::array<LanguageTable, 6>& languages() {
    static const std::array<LanguageTable, 6> tables = {{
        {"en",
         {"weather", "finance", "software", "medicine", "logistics", "cooking", "astronomy", "law"},
         "{noun} condition {i} holds",
         "If {0}, then {1}.",
         "Every {noun} case that is marked is also archived.",
         "case A7 is marked",
         "case A7 is archived",
         "From {refs}, {0}.",
         "{0} and {1}",
         "and"},
        {"de",
         {"Wetter", "Finanz", "Software", "Medizin", "Logistik", "Koch", "Astronomie", "Rechts"},
         "die {noun}-Bedingung {i} gilt",
         "Wenn {0}, dann {1}.",
         "Jeder markierte {noun}-Fall ist auch archiviert.",
         "Fall A7 ist markiert",
         "Fall A7 ist archiviert",
         "Aus {refs} folgt: {0}.",
         "{0} und {1}",
         "und"},
        {"fr",
         {"météo", "finance", "logiciel", "médecine", "logistique", "cuisine", "astronomie", "droit"},
         "la condition {i} de {noun} est remplie",
         "Si {0}, alors {1}.",
         "Tout cas de {noun} marqué est aussi archivé.",
         "le cas A7 est marqué",
         "le cas A7 est archivé",
         "D'après {refs}, {0}.",
         "{0} et {1}",
         "et"},
        {"es",
         {"clima", "finanzas", "software", "medicina", "logística", "cocina", "astronomía", "derecho"},
         "la condición {i} de {noun} se cumple",
         "Si {0}, entonces {1}.",
         "Todo caso de {noun} marcado también está archivado.",
         "el caso A7 está marcado",
         "el caso A7 está archivado",
         "De {refs}, {0}.",
         "{0} y {1}",
         "y"},
        {"zh",
         {"天气", "金融", "软件", "医学", "物流", "烹饪", "天文", "法律"},
         "{noun}条件{i}成立",
         "如果{0}，那么{1}。",
         "每个被标记的{noun}案例也被归档。",
         "案例A7被标记",
         "案例A7被归档",
         "由 {refs} 可得，{0}。",
         "{0}并且{1}",
         "和"},
        {"ja",
         {"天気", "金融", "ソフトウェア", "医学", "物流", "料理", "天文", "法律"},
         "{noun}の条件{i}が成立する",
         "もし{0}ならば、{1}。",
         "標識された{noun}の事例はすべて保存される。",
         "事例A7は標識されている",
         "事例A7は保存されている",
         "{refs} より、{0}。",
         "{0}かつ{1}",
         "と"},
    }};
    return tables;
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
    const std::string pat = "{" + key + "}";
    for (auto pos = text.find(pat); pos != std::string::npos; pos = text.find(pat, pos + value.size())) {
        text.replace(pos, pat.size(), value);
    }
    return text;
}

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0) {
    std::uint64_t h = splitmix(seed ^ splitmix(stream));
    for (std::uint64_t v : {a, b, c}) h = splitmix(h ^ v);
    return h;
}

// Portable draws from raw engine output.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) / 9007199254740992.0; }

double standard_normal(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Step layout for a template of n steps with chain length c and e extra
// conjunction steps (n = 2c + 5 + e):
//   [1..c]      A_{i-1} -> A_i
//   [c+1]       forall x (H(x) -> J(x))
//   [c+2]       H(a)
//   [c+3]       A_0
//   [c+4..2c+3] A_i by ->E
//   [2c+4]      J(a) by forallE, ->E
//   [2c+5]      A_c & J(a) by &I
//   [2c+6]      (A_c & J(a)) & A_0 by &I when e = 1
struct Layout {
    std::size_t chain;
    bool extra;
};

Layout layout_for(std::size_t n) {
    const bool extra = (n - 5) % 2 == 1;
    return {(n - 5 - (extra ? 1 : 0)) / 2, extra};
}

std::string chain_atom(std::size_t l, std::size_t i) {
    static const char* letters = "ABCDEFGHKLMNPRSTUVW";
    const std::size_t pool = 19;
    std::string s(1, letters[(l * 3 + i) % pool]);
    if (l * 3 + i >= pool) s += std::to_string((l * 3 + i) / pool);
    return s;
}

struct Step {
    enum Kind { Implication, Forall, Instance, Fact, Chain, Consequent, Conj, Conj2 } kind;
    std::size_t a = 0;  // atom index
    std::size_t b = 0;
    std::vector<std::size_t> refs;
};

std::vector<Step> template_steps(std::size_t n) {
    const Layout lay = layout_for(n);
    const std::size_t c = lay.chain;
    std::vector<Step> steps;
    for (std::size_t i = 1; i <= c; ++i) steps.push_back({Step::Implication, i - 1, i, {}});
    steps.push_back({Step::Forall, 0, 0, {}});
    steps.push_back({Step::Instance, 0, 0, {}});
    steps.push_back({Step::Fact, 0, 0, {}});
    std::size_t prev = c + 3;
    for (std::size_t i = 1; i <= c; ++i) {
        steps.push_back({Step::Chain, i, 0, {i, prev}});
        prev = c + 3 + i;
    }
    steps.push_back({Step::Consequent, 0, 0, {c + 1, c + 2}});
    steps.push_back({Step::Conj, c, 0, {prev, 2 * c + 4}});
    if (lay.extra) steps.push_back({Step::Conj2, c, 0, {2 * c + 5, c + 3}});
    return steps;
}

std::string ref_list(const std::vector<std::size_t>& refs) {
    std::string out;
    for (std::size_t r : refs) out += (out.empty() ? "[" : ", [") + std::to_string(r) + "]";
    return out;
}

std::string ref_list(const std::vector<std::size_t>& refs, const LanguageTable& lang) {
    std::string out;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (i > 0) out += std::string(" ") + lang.ref_and + " ";
        out += "[" + std::to_string(refs[i]) + "]";
    }
    return out;
}

std::string abstract_line(const Step& s, std::size_t l) {
    const auto atom = [&](std::size_t i) { return chain_atom(l, i); };
    switch (s.kind) {
        case Step::Implication: return atom(s.a) + " -> " + atom(s.b);
        case Step::Forall: return "forall x (H(x) -> J(x))";
        case Step::Instance: return "H(a)";
        case Step::Fact: return atom(0);
        case Step::Chain: return atom(s.a) + " (from " + ref_list(s.refs) + ")";
        case Step::Consequent: return "J(a) (from " + ref_list(s.refs) + ")";
        case Step::Conj: return atom(s.a) + " & J(a) (from " + ref_list(s.refs) + ")";
        case Step::Conj2: return "(" + atom(s.a) + " & J(a)) & " + atom(0) + " (from " + ref_list(s.refs) + ")";
    }
    return {};
}

std::string carrier_line(const Step& s, const LanguageTable& lang, std::size_t topic, std::size_t l) {
    const std::string noun = lang.nouns[topic];
    // Condition numbers are offset per logic so logics never share sentences.
    const auto cond = [&](std::size_t i) {
        return substitute(substitute(lang.condition, "noun", noun), "i", std::to_string(l * 20 + i + 1));
    };
    const auto derived = [&](const std::string& body) {
        return substitute(substitute(lang.derived, "refs", ref_list(s.refs, lang)), "0", body);
    };
    const auto conj = [&](const std::string& x, const std::string& y) { return substitute(substitute(lang.conj, "0", x), "1", y); };
    switch (s.kind) {
        case Step::Implication: return substitute(substitute(lang.if_then, "0", cond(s.a)), "1", cond(s.b));
        case Step::Forall: return substitute(lang.forall, "noun", noun);
        case Step::Instance: return capitalize(std::string(lang.marked)) + (lang.code[0] == 'z' || lang.code[0] == 'j' ? "。" : ".");
        case Step::Fact: return capitalize(cond(0)) + (lang.code[0] == 'z' || lang.code[0] == 'j' ? "。" : ".");
        case Step::Chain: return derived(cond(s.a));
        case Step::Consequent: return derived(lang.archived);
        case Step::Conj: return derived(conj(cond(s.a), lang.archived));
        case Step::Conj2: return derived(conj(conj(cond(s.a), lang.archived), cond(0)));
    }
    return {};
}

ReasoningRecord make_record(const std::string& logic, const std::string& topic, const std::string& language,
                            RecordMode mode, const std::vector<std::string>& bodies) {
    RawRecord raw;
    raw.logic_id = logic;
    raw.topic = topic;
    raw.language = language;
    raw.mode = std::string(to_string(mode));
    for (std::size_t i = 0; i < bodies.size(); ++i) raw.steps.push_back("[" + std::to_string(i + 1) + "] " + bodies[i]);
    return parse_record(raw);
}

}  // namespace

std::size_t synth_topic_capacity() { return kTopics.size(); }
std::size_t synth_language_capacity() { return languages().size(); }

std::string synth_logic_id(std::size_t l) {
    std::string s = std::to_string(l + 1);
    return "logic-" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}
std::string synth_topic(std::size_t m) { return kTopics.at(m); }
std::string synth_language(std::size_t k) { return languages().at(k).code; }

Eigen::Index SynthSpec::required_dim() const {
    return static_cast<Eigen::Index>(logics * max_steps + topics + languages);
}

void SynthSpec::validate() const {
    if (logics < 1 || topics < 1 || languages < 1) throw InvalidArgument("synth: logics, topics and languages must be >= 1");
    if (topics > synth_topic_capacity()) {
        throw InvalidArgument("synth: at most " + std::to_string(synth_topic_capacity()) + " topics are available");
    }
    if (languages > synth_language_capacity()) {
        throw InvalidArgument("synth: at most " + std::to_string(synth_language_capacity()) + " languages are available");
    }
    if (min_steps < 6 || min_steps > max_steps) throw InvalidArgument("synth: step range must satisfy 6 <= min <= max");
    if (!(beta >= 0) || !(gamma >= 0) || !(sigma >= 0) || !(language_ratio >= 0)) {
        throw InvalidArgument("synth: beta, gamma, sigma and language_ratio must be non-negative");
    }
    if (dim < required_dim()) {
        throw InvalidArgument("synth: dimension " + std::to_string(dim) + " is below the " +
                              std::to_string(required_dim()) + " orthonormal directions required");
    }
}

std::vector<std::size_t> synth_step_counts(const SynthSpec& spec) {
    std::mt19937_64 rng(derive_seed(spec.seed, 1));
    const std::size_t span = spec.max_steps - spec.min_steps + 1;
    std::vector<std::size_t> counts(spec.logics);
    for (auto& c : counts) c = spec.min_steps + static_cast<std::size_t>(rng() % span);
    return counts;
}

std::vector<ReasoningRecord> generate_corpus(const SynthSpec& spec) {
    spec.validate();
    const auto counts = synth_step_counts(spec);
    std::vector<ReasoningRecord> out;
    for (std::size_t l = 0; l < spec.logics; ++l) {
        const auto steps = template_steps(counts[l]);
        const std::string logic = synth_logic_id(l);
        std::vector<std::string> bodies;
        for (const auto& s : steps) bodies.push_back(abstract_line(s, l));
        out.push_back(make_record(logic, "abstract", "und", RecordMode::Abstract, bodies));
        for (std::size_t m = 0; m < spec.topics; ++m) {
            for (std::size_t k = 0; k < spec.languages; ++k) {
                const auto& lang = languages()[k];
                bodies.clear();
                for (const auto& s : steps) bodies.push_back(carrier_line(s, lang, m, l));
                out.push_back(make_record(logic, synth_topic(m), lang.code, RecordMode::Carrier, bodies));
            }
        }
    }
    return out;
}

std::vector<Flow> generate_flows(const SynthSpec& spec) {
    spec.validate();
    const auto counts = synth_step_counts(spec);
    const Eigen::Index d = spec.dim;
    const Eigen::Index n_dirs = spec.required_dim();

    std::mt19937_64 basis_rng(derive_seed(spec.seed, 2));
    Eigen::MatrixXd gauss(d, n_dirs);
    for (Eigen::Index c = 0; c < n_dirs; ++c) {
        for (Eigen::Index r = 0; r < d; ++r) gauss(r, c) = standard_normal(basis_rng);
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    const Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(d, n_dirs);

    const auto step_col = [&](std::size_t l, std::size_t k) { return static_cast<Eigen::Index>(l * spec.max_steps + k); };
    const auto topic_col = [&](std::size_t m) { return static_cast<Eigen::Index>(spec.logics * spec.max_steps + m); };
    const auto lang_col = [&](std::size_t k) {
        return static_cast<Eigen::Index>(spec.logics * spec.max_steps + spec.topics + k);
    };

    // Cumulative logic displacement per logic, shared by all its carriers.
    std::vector<Eigen::MatrixXd> paths(spec.logics);
    for (std::size_t l = 0; l < spec.logics; ++l) {
        std::mt19937_64 rng(derive_seed(spec.seed, 3, l));
        const auto T = static_cast<Eigen::Index>(counts[l]);
        paths[l].setZero(T, d);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
        for (Eigen::Index t = 0; t < T; ++t) {
            const double a = spec.gamma * (0.5 + uniform01(rng));
            acc += a * basis.col(step_col(l, static_cast<std::size_t>(t)));
            paths[l].row(t) = acc.transpose();
        }
    }

    std::vector<Flow> flows;
    for (std::size_t l = 0; l < spec.logics; ++l) {
        for (std::size_t m = 0; m < spec.topics; ++m) {
            for (std::size_t k = 0; k < spec.languages; ++k) {
                const Eigen::RowVectorXd carrier = (spec.beta * basis.col(topic_col(m)) +
                                                    spec.language_ratio * spec.beta * basis.col(lang_col(k)))
                                                       .transpose();
                Flow f;
                f.points = paths[l].rowwise() + carrier;
                if (spec.sigma > 0) {
                    std::mt19937_64 rng(derive_seed(spec.seed, 4, l, m, k));
                    for (Eigen::Index t = 0; t < f.points.rows(); ++t) {
                        for (Eigen::Index j = 0; j < d; ++j) f.points(t, j) += spec.sigma * standard_normal(rng);
                    }
                }
                f.meta.logic_id = synth_logic_id(l);
                f.meta.topic = synth_topic(m);
                f.meta.language = synth_language(k);
                f.meta.provider = "synthcorpus:seed=" + std::to_string(spec.seed);
                f.meta.pooling = "synthetic";
                flows.push_back(std::move(f));
            }
        }
    }
    return flows;
}

std::vector<ThresholdCheck> check_thresholds(const GroupReport& report, const SynthThresholds& t) {
    const auto mean = [&](Measure m, Criterion c) {
        const auto& s = report.at(m, c);
        return s.mean ? *s.mean : std::nan("");
    };
    const auto ge = [](std::string name, double v, double bound) { return ThresholdCheck{std::move(name), v, bound, v >= bound}; };
    const auto le = [](std::string name, double v, double bound) { return ThresholdCheck{std::move(name), v, bound, v <= bound}; };
    const double pos_topic = mean(Measure::Position, Criterion::Topic);
    const double curv_topic = mean(Measure::Curvature, Criterion::Topic);
    return {
        ge("velocity.logic >= min", mean(Measure::Velocity, Criterion::Logic), t.velocity_logic_min),
        le("velocity.topic <= max", mean(Measure::Velocity, Criterion::Topic), t.velocity_topic_max),
        le("velocity.language <= max", mean(Measure::Velocity, Criterion::Language), t.velocity_language_max),
        ge("position.topic >= min", pos_topic, t.position_topic_min),
        le("position.logic <= position.topic", mean(Measure::Position, Criterion::Logic), pos_topic),
        ge("curvature.logic >= curvature.topic + margin", mean(Measure::Curvature, Criterion::Logic),
           curv_topic + t.curvature_logic_margin),
    };
}

nlohmann::json to_json(const SynthSpec& spec) {
    return {{"logics", spec.logics},
            {"topics", spec.topics},
            {"languages", spec.languages},
            {"min_steps", spec.min_steps},
            {"max_steps", spec.max_steps},
            {"seed", spec.seed},
            {"beta", spec.beta},
            {"gamma", spec.gamma},
            {"sigma", spec.sigma},
            {"language_ratio", spec.language_ratio},
            {"dim", spec.dim}};
}

nlohmann::json expected_report(const SynthSpec& spec, const SynthThresholds& t) {
    SynthSpec clean = spec;
    clean.sigma = 0;
    const auto flows = generate_flows(clean);
    const auto keys = flow_keys(flows);
    const AnalysisPolicies policies;
    GroupReport report;
    const std::vector<Criterion> criteria = {Criterion::Logic, Criterion::Topic, Criterion::Language};
    for (Measure m : {Measure::Position, Measure::Velocity, Measure::Curvature}) {
        group_summary(pairwise_matrix(flows, m, policies), keys, criteria, {}, report);
    }
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : check_thresholds(report, t)) {
        checks.push_back({{"name", c.name}, {"noise_free_value", c.value}, {"bound", c.bound}, {"passed", c.passed}});
    }
    nlohmann::json steps = nlohmann::json::object();
    const auto counts = synth_step_counts(spec);
    for (std::size_t l = 0; l < counts.size(); ++l) steps[synth_logic_id(l)] = counts[l];
    return {{"spec", to_json(spec)},
            {"steps", steps},
            {"noise_free", to_json(report)},
            {"thresholds",
             {{"velocity_logic_min", t.velocity_logic_min},
              {"velocity_topic_max", t.velocity_topic_max},
              {"velocity_language_max", t.velocity_language_max},
              {"position_topic_min", t.position_topic_min},
              {"curvature_logic_margin", t.curvature_logic_margin}}},
            {"checks", checks}};
}

}  // namespace flowgeom
