#include "flowgeom/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "flowgeom/errors.hpp"
#include "flowgeom/geometry.hpp"
#include "flowgeom/number_format.hpp"

namespace flowgeom {

namespace {

constexpr double kTinyNorm = 1e-300;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string_view to_string(Measure m) {
    switch (m) {
        case Measure::Position: return "position";
        case Measure::Velocity: return "velocity";
        default: return "curvature";
    }
}

Measure parse_measure(std::string_view text) {
    if (text == "position") return Measure::Position;
    if (text == "velocity") return Measure::Velocity;
    if (text == "curvature") return Measure::Curvature;
    throw InvalidArgument("unknown measure '" + std::string(text) + "'");
}

std::string_view to_string(AlignKind k) { return k == AlignKind::NearestIndex ? "nearest" : "resample"; }

void AlignmentPolicy::validate() const {
    if (kind == AlignKind::ResampleLinear && grid < 3) throw InvalidArgument("resample grid must be >= 3");
}

std::string_view to_string(SkipReason r) {
    switch (r) {
        case SkipReason::None: return "none";
        case SkipReason::ZeroVector: return "zero-vector";
        case SkipReason::ConstantSeries: return "constant-series";
        default: return "too-short";
    }
}

std::string_view to_string(Criterion c) {
    switch (c) {
        case Criterion::Logic: return "logic";
        case Criterion::Topic: return "topic";
        default: return "language";
    }
}

Criterion parse_criterion(std::string_view text) {
    if (text == "logic") return Criterion::Logic;
    if (text == "topic") return Criterion::Topic;
    if (text == "language") return Criterion::Language;
    throw InvalidArgument("unknown criterion '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Scalar measures

std::optional<double> cosine(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (u.size() != v.size()) throw DimensionMismatch(static_cast<std::size_t>(u.size()), static_cast<std::size_t>(v.size()));
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu < kTinyNorm || nv < kTinyNorm) return std::nullopt;
    return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

std::optional<double> pearson(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (x.size() != y.size()) {
        throw InvalidArgument("pearson: length mismatch " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    }
    if (x.size() < 3) throw TooShort(static_cast<std::size_t>(x.size()), 3);
    const double n = static_cast<double>(x.size());
    const Eigen::VectorXd cx = x.array() - x.mean();
    const Eigen::VectorXd cy = y.array() - y.mean();
    const double sxx = cx.squaredNorm();
    const double syy = cy.squaredNorm();
    if (sxx / n < kTinyNorm || syy / n < kTinyNorm) return std::nullopt;
    return std::clamp(cx.dot(cy) / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Alignment

std::vector<std::pair<Eigen::Index, Eigen::Index>> nearest_index_pairs(Eigen::Index len_a, Eigen::Index len_b) {
    if (len_a < 1 || len_b < 1) throw TooShort(static_cast<std::size_t>(std::min(len_a, len_b)), 1);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    const bool a_short = len_a <= len_b;
    const Eigen::Index ls = a_short ? len_a : len_b;
    const Eigen::Index ll = a_short ? len_b : len_a;
    pairs.reserve(static_cast<std::size_t>(ls));
    for (Eigen::Index j = 0; j < ls; ++j) {
        const Eigen::Index k =
            ls == 1 ? 0 : static_cast<Eigen::Index>(std::lround(static_cast<double>(j * (ll - 1)) / static_cast<double>(ls - 1)));
        pairs.emplace_back(a_short ? j : k, a_short ? k : j);
    }
    return pairs;
}

Eigen::MatrixXd resample_linear(const Eigen::Ref<const Eigen::MatrixXd>& series, std::size_t grid) {
    const Eigen::Index n = series.rows();
    if (n < 2) throw TooShort(static_cast<std::size_t>(n), 2);
    if (grid < 2) throw InvalidArgument("resample grid must be >= 2");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(grid), series.cols());
    for (std::size_t g = 0; g < grid; ++g) {
        const double x = static_cast<double>(g) * static_cast<double>(n - 1) / static_cast<double>(grid - 1);
        const auto lo = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x)), n - 2);
        const double w = x - static_cast<double>(lo);
        out.row(static_cast<Eigen::Index>(g)) = (1.0 - w) * series.row(lo) + w * series.row(lo + 1);
    }
    return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> align(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                                  const Eigen::Ref<const Eigen::MatrixXd>& b,
                                                  const AlignmentPolicy& policy, Eigen::Index min_length) {
    policy.validate();
    if (a.cols() != b.cols()) throw DimensionMismatch(static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(b.cols()));
    const Eigen::Index shortest = std::min(a.rows(), b.rows());
    if (shortest < min_length) throw TooShort(static_cast<std::size_t>(shortest), static_cast<std::size_t>(min_length));
    if (policy.kind == AlignKind::ResampleLinear) {
        return {resample_linear(a, policy.grid), resample_linear(b, policy.grid)};
    }
    const auto pairs = nearest_index_pairs(a.rows(), b.rows());
    Eigen::MatrixXd pa(static_cast<Eigen::Index>(pairs.size()), a.cols());
    Eigen::MatrixXd pb(static_cast<Eigen::Index>(pairs.size()), b.cols());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        pa.row(static_cast<Eigen::Index>(i)) = a.row(pairs[i].first);
        pb.row(static_cast<Eigen::Index>(i)) = b.row(pairs[i].second);
    }
    return {std::move(pa), std::move(pb)};
}

// ---------------------------------------------------------------------------
// Pair similarities

PairScore mean_cosine(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                      const AlignmentPolicy& policy) {
    PairScore score;
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> aligned;
    try {
        aligned = align(a, b, policy, 1);
    } catch (const TooShort&) {
        score.reason = SkipReason::TooShort;
        return score;
    }
    double sum = 0;
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < aligned.first.rows(); ++i) {
        const auto c = cosine(aligned.first.row(i).transpose(), aligned.second.row(i).transpose());
        if (c) {
            sum += *c;
            ++n;
        } else {
            ++score.undefined_steps;
        }
    }
    if (n == 0) {
        score.reason = SkipReason::ZeroVector;
        return score;
    }
    score.value = sum / static_cast<double>(n);
    return score;
}

namespace {

void require_same_dim(const Flow& a, const Flow& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch(static_cast<std::size_t>(a.dim()), static_cast<std::size_t>(b.dim()));
}

Eigen::MatrixXd velocity_rows(const Flow& f) {
    if (f.steps() < 2) return Eigen::MatrixXd(0, f.dim());
    return velocities(f.points);
}

Eigen::VectorXd curvature_series(const Flow& f) {
    if (f.steps() < 3) return Eigen::VectorXd(0);
    return kinematics(f.points).curvatures;
}

}  // namespace

PairScore position_similarity(const Flow& a, const Flow& b, const AlignmentPolicy& policy) {
    require_same_dim(a, b);
    return mean_cosine(a.points, b.points, policy);
}

PairScore velocity_similarity(const Flow& a, const Flow& b, const AlignmentPolicy& policy) {
    require_same_dim(a, b);
    return mean_cosine(velocity_rows(a), velocity_rows(b), policy);
}

PairScore curvature_similarity(const Eigen::Ref<const Eigen::VectorXd>& ka, const Eigen::Ref<const Eigen::VectorXd>& kb,
                               const AlignmentPolicy& policy) {
    PairScore score;
    if (ka.size() < 3 || kb.size() < 3) {
        score.reason = SkipReason::TooShort;
        return score;
    }
    std::optional<double> r;
    if (ka.size() == kb.size()) {
        r = pearson(ka, kb);
    } else {
        const auto aligned = align(ka, kb, policy, 3);
        if (aligned.first.rows() < 3) {
            score.reason = SkipReason::TooShort;
            return score;
        }
        r = pearson(aligned.first.col(0), aligned.second.col(0));
    }
    if (!r) {
        score.reason = SkipReason::ConstantSeries;
        return score;
    }
    score.value = r;
    return score;
}

PairScore curvature_similarity(const Flow& a, const Flow& b, const AlignmentPolicy& policy) {
    require_same_dim(a, b);
    return curvature_similarity(curvature_series(a), curvature_series(b), policy);
}

const AlignmentPolicy& AnalysisPolicies::for_measure(Measure m) const {
    switch (m) {
        case Measure::Position: return position;
        case Measure::Velocity: return velocity;
        default: return curvature;
    }
}

PairScore similarity(const Flow& a, const Flow& b, Measure m, const AnalysisPolicies& policies) {
    switch (m) {
        case Measure::Position: return position_similarity(a, b, policies.position);
        case Measure::Velocity: return velocity_similarity(a, b, policies.velocity);
        default: return curvature_similarity(a, b, policies.curvature);
    }
}

// ---------------------------------------------------------------------------
// Matrices

SimilarityMatrix pairwise_matrix(const std::vector<Flow>& flows, Measure measure, const AnalysisPolicies& policies,
                                 std::size_t jobs) {
    if (flows.size() < 2) throw InvalidArgument("pairwise_matrix needs at least 2 flows");
    for (const auto& f : flows) require_same_dim(flows.front(), f);
    policies.for_measure(measure).validate();

    std::vector<std::size_t> order(flows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const auto& a = flows[x].meta;
        const auto& b = flows[y].meta;
        return std::tie(a.logic_id, a.topic, a.language) < std::tie(b.logic_id, b.topic, b.language);
    });

    const std::size_t n = flows.size();
    SimilarityMatrix m;
    m.measure = measure;
    for (std::size_t i : order) {
        m.ids.push_back(flows[i].id());
        m.keys.push_back({flows[i].meta.logic_id, flows[i].meta.topic, flows[i].meta.language});
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (m.blocks.empty() || m.blocks.back().logic_id != m.keys[i].logic_id) {
            m.blocks.push_back({m.keys[i].logic_id, i, i + 1});
        } else {
            m.blocks.back().end = i + 1;
        }
    }

    // Per-flow series are computed once, not per pair.
    std::vector<Eigen::MatrixXd> rows(n);
    std::vector<Eigen::VectorXd> kappas(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Flow& f = flows[order[i]];
        if (measure == Measure::Position) rows[i] = f.points;
        if (measure == Measure::Velocity) rows[i] = velocity_rows(f);
        if (measure == Measure::Curvature) kappas[i] = curvature_series(f);
    }

    m.scores = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), kNaN);
    m.reasons.assign(n, std::vector<SkipReason>(n, SkipReason::None));
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) cells.emplace_back(i, j);
    }
    const AlignmentPolicy& policy = policies.for_measure(measure);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < cells.size(); c = next++) {
            const auto [i, j] = cells[c];
            const PairScore s = measure == Measure::Curvature ? curvature_similarity(kappas[i], kappas[j], policy)
                                                              : mean_cosine(rows[i], rows[j], policy);
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            m.reasons[i][j] = m.reasons[j][i] = s.reason;
            if (s.value) m.scores(ii, jj) = m.scores(jj, ii) = *s.value;
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(jobs, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& [i, j] : cells) {
        if (m.reasons[i][j] != SkipReason::None) ++m.skipped[std::string(to_string(m.reasons[i][j]))];
    }
    return m;
}

// ---------------------------------------------------------------------------
// Grouping

bool pair_matches(const FlowKey& a, const FlowKey& b, Criterion c, bool inclusive) {
    switch (c) {
        case Criterion::Logic:
            return a.logic_id == b.logic_id && (inclusive || a.topic != b.topic || a.language != b.language);
        case Criterion::Topic:
            return a.topic == b.topic && (inclusive || a.logic_id != b.logic_id);
        default:
            return a.language == b.language && (inclusive || a.logic_id != b.logic_id);
    }
}

void group_summary(const SimilarityMatrix& matrix, const std::map<std::string, FlowKey>& metadata,
                   const std::vector<Criterion>& criteria, const GroupingOptions& options, GroupReport& report) {
    report.options = options;
    std::vector<const FlowKey*> keys;
    for (const auto& id : matrix.ids) {
        auto it = metadata.find(id);
        if (it == metadata.end()) throw UnknownFlowId(id);
        keys.push_back(&it->second);
    }
    const std::size_t weight = options.ordered_pairs ? 2 : 1;
    for (Criterion c : criteria) {
        GroupStat stat;
        // Fixed (i, j) order keeps the floating-point sum reproducible.
        for (std::size_t i = 0; i < matrix.size(); ++i) {
            for (std::size_t j = i + 1; j < matrix.size(); ++j) {
                if (!pair_matches(*keys[i], *keys[j], c, options.inclusive)) continue;
                stat.eligible += weight;
                if (!matrix.defined(i, j)) {
                    stat.excluded[std::string(to_string(matrix.reasons[i][j]))] += weight;
                    continue;
                }
                stat.pairs += weight;
                stat.sum += static_cast<double>(weight) * matrix.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
        if (stat.pairs > 0) stat.mean = stat.sum / static_cast<double>(stat.pairs);
        report.stats[matrix.measure][c] = std::move(stat);
    }
}

GroupReport group_summary(const SimilarityMatrix& matrix, const std::map<std::string, FlowKey>& metadata,
                          const std::vector<Criterion>& criteria, const GroupingOptions& options) {
    GroupReport report;
    group_summary(matrix, metadata, criteria, options, report);
    return report;
}

std::map<std::string, FlowKey> flow_keys(const std::vector<Flow>& flows) {
    std::map<std::string, FlowKey> out;
    for (const auto& f : flows) out[f.id()] = {f.meta.logic_id, f.meta.topic, f.meta.language};
    return out;
}

nlohmann::json to_json(const GroupReport& report) {
    nlohmann::json j;
    j["grouping"] = {{"inclusive", report.options.inclusive}, {"ordered_pairs", report.options.ordered_pairs}};
    nlohmann::json measures = nlohmann::json::object();
    for (const auto& [m, per] : report.stats) {
        nlohmann::json crit = nlohmann::json::object();
        for (const auto& [c, s] : per) {
            nlohmann::json e;
            e["mean"] = s.mean ? nlohmann::json(*s.mean) : nlohmann::json(nullptr);
            e["pairs"] = s.pairs;
            e["eligible"] = s.eligible;
            e["excluded"] = s.excluded;
            crit[std::string(to_string(c))] = std::move(e);
        }
        measures[std::string(to_string(m))] = std::move(crit);
    }
    j["measures"] = std::move(measures);
    return j;
}

// ---------------------------------------------------------------------------
// Matrix files

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::ofstream open_out(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

}  // namespace

void write_matrix_csv(const SimilarityMatrix& m, const std::string& path) {
    auto out = open_out(path);
    out << "flow_id";
    for (const auto& id : m.ids) out << ',' << csv_field(id);
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << csv_field(m.ids[i]);
        for (std::size_t j = 0; j < m.size(); ++j) {
            out << ',';
            if (m.defined(i, j)) out << format_number(m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_matrix_sidecar(const SimilarityMatrix& m, const std::string& path) {
    nlohmann::json j;
    j["measure"] = std::string(to_string(m.measure));
    j["ids"] = m.ids;
    j["blocks"] = nlohmann::json::array();
    for (const auto& b : m.blocks) j["blocks"].push_back({{"logic_id", b.logic_id}, {"begin", b.begin}, {"end", b.end}});
    j["skipped"] = m.skipped;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

MatrixCsv read_matrix_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty matrix file " + path);
    auto header = split_csv_line(line);
    if (header.empty() || header.front() != "flow_id") throw FormatError("matrix header must start with flow_id");
    MatrixCsv result;
    result.ids.assign(header.begin() + 1, header.end());
    const auto n = static_cast<Eigen::Index>(result.ids.size());
    result.scores = Eigen::MatrixXd::Constant(n, n, kNaN);
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (row >= n || static_cast<Eigen::Index>(fields.size()) != n + 1) throw FormatError("ragged matrix row in " + path);
        for (Eigen::Index c = 0; c < n; ++c) {
            const std::string& cell = fields[static_cast<std::size_t>(c + 1)];
            if (cell.empty() || cell == "nan") continue;
            try {
                result.scores(row, c) = std::stod(cell);
            } catch (const std::exception&) {
                throw FormatError("bad matrix cell '" + cell + "' in " + path);
            }
        }
        ++row;
    }
    if (row != n) throw FormatError("matrix in " + path + " is not square");
    return result;
}

}  // namespace flowgeom
