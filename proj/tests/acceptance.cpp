// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/QR>

#include "flowgeom/analysis.hpp"
#include "flowgeom/corpus.hpp"
#include "flowgeom/geometry.hpp"
#include "flowgeom/smooth.hpp"
#include "flowgeom/synthcorpus.hpp"

using namespace flowgeom;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

void curvature_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0;
    std::size_t n = 0;
    for (int d : {2, 3, 64}) {
        for (int i = 0; i < 10000; ++i) {
            Eigen::VectorXd p(d), q(d), r(d);
            for (int k = 0; k < d; ++k) {
                p[k] = g(rng);
                q[k] = g(rng);
                r[k] = g(rng);
            }
            double rad;
            try {
                rad = circumradius(p, q, r);
            } catch (const DegenerateTriple&) {
                continue;
            }
            const auto c = menger_curvature(p, q, r);
            worst = std::max(worst, std::abs(c.value * rad - 1.0));
            ++n;
        }
    }
    const double secs = seconds_since(t0);
    report("curvature-oracle", worst <= 1e-9 && secs < 1.0,
           fmt("max_rel_err=%.3g triples=%.0f time=%.3fs (tol 1e-9)", worst, static_cast<double>(n), secs));
}

Eigen::MatrixXd random_orthogonal(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ();
}

void isometry_and_scaling() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    double worst_iso = 0, worst_scale = 0;
    for (int f = 0; f < 100; ++f) {
        Eigen::MatrixXd y(12, 64);
        for (int i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
        const Eigen::MatrixXd q = random_orthogonal(64, rng);
        Eigen::RowVectorXd shift(64);
        for (int i = 0; i < 64; ++i) shift[i] = 5 * g(rng);
        const double a = scale(rng);
        const Eigen::MatrixXd moved = (y * q.transpose()).rowwise() + shift;
        const auto k0 = kinematics(y);
        const auto k1 = kinematics(moved);
        const auto k2 = kinematics(Eigen::MatrixXd(a * y));
        for (Eigen::Index t = 0; t < k0.curvatures.size(); ++t) {
            worst_iso = std::max(worst_iso, std::abs(k1.curvatures[t] - k0.curvatures[t]) / k0.curvatures[t]);
            worst_scale = std::max(worst_scale, std::abs(a * k2.curvatures[t] - k0.curvatures[t]) / k0.curvatures[t]);
        }
        for (Eigen::Index t = 0; t < k0.velocities.rows(); ++t) {
            worst_iso = std::max(worst_iso, std::abs(k1.velocities.row(t).norm() - k0.velocities.row(t).norm()) /
                                                k0.velocities.row(t).norm());
        }
    }
    const double secs = seconds_since(t0);
    report("isometry-scaling", worst_iso <= 1e-8 && worst_scale <= 1e-8 && secs < 5.0,
           fmt("iso_rel_err=%.3g scale_rel_err=%.3g time=%.3fs (tol 1e-8)", worst_iso, worst_scale, secs));
}

void telescoping() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0;
    for (int f = 0; f < 100; ++f) {
        Eigen::MatrixXd y(12, 64);
        for (int i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
        const Eigen::MatrixXd v = velocities(y);
        for (Eigen::Index t = 1; t < y.rows(); ++t) {
            const Eigen::RowVectorXd sum = v.topRows(t).colwise().sum();
            worst = std::max(worst, (y.row(0) + sum - y.row(t)).norm());
        }
    }
    report("telescoping", worst <= 1e-10, fmt("max_err=%.3g (tol 1e-10)", worst));
}

void smooth_oracle() {
    const auto t0 = Clock::now();
    std::ifstream in(std::string(FLOWGEOM_DATA_DIR) + "/smooth_tokens.txt");
    std::vector<std::string> tokens;
    std::vector<std::size_t> bounds;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream words(line);
        std::string w;
        while (words >> w) tokens.push_back(w);
        if (!tokens.empty() && (bounds.empty() || bounds.back() < tokens.size())) bounds.push_back(tokens.size());
    }
    const ToyEncoder enc({16, 32, 0, 1.0, 1.0});
    const MaskSchedule schedule{bounds, 0.25};
    const C1Report r = c1_report(embed_tokens(tokens, 16, 0), schedule, enc, 256, 3);
    const double secs = seconds_since(t0);
    bool ratios_ok = r.first_difference_ratios.size() == 2;
    for (double x : r.first_difference_ratios) ratios_ok = ratios_ok && x >= 1.6 && x <= 2.5;
    report("smooth-oracle", bounds.size() == 3 && r.boundary_error <= 1e-10 && ratios_ok && secs < 10.0,
           fmt("boundary_err=%.3g ratio_1=%.4f ratio_2=%.4f", r.boundary_error, r.first_difference_ratios.at(0),
               r.first_difference_ratios.at(1)) +
               fmt(" time=%.3fs (tol 1e-10, ratios in [1.6, 2.5])", secs));
}

void synthetic_end_to_end() {
    const auto t0 = Clock::now();
    SynthSpec spec;
    spec.logics = 3;
    spec.topics = 4;
    spec.languages = 2;
    spec.sigma = 0.01;
    spec.beta = 10;
    spec.gamma = 1;
    spec.dim = 64;
    const auto flows = generate_flows(spec);
    const auto keys = flow_keys(flows);
    const AnalysisPolicies policies;
    GroupReport gr;
    for (Measure m : {Measure::Position, Measure::Velocity, Measure::Curvature}) {
        group_summary(pairwise_matrix(flows, m, policies), keys, {Criterion::Logic, Criterion::Topic, Criterion::Language},
                      {}, gr);
    }
    bool ok = true;
    std::string detail;
    for (const auto& c : check_thresholds(gr)) {
        ok = ok && c.passed;
        detail += c.name + "=" + fmt("%.3f", c.value) + (c.passed ? " " : "(!) ");
    }
    const double secs = seconds_since(t0);
    report("synthetic-end-to-end", ok && secs < 30.0, detail + fmt("time=%.3fs", secs));
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FLOWGEOM_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void determinism() {
    const fs::path root = fs::temp_directory_path() / "flowgeom_acceptance_det";
    fs::remove_all(root);
    bool ok = true;
    for (const char* run : {"a", "b"}) {
        const std::string d = (root / run).string();
        ok = ok && run_cli("synth --out " + d + "/synth") == 0;
        ok = ok && run_cli("embed --corpus " + d + "/synth/corpus.jsonl --provider synth --out " + d + "/flows") == 0;
        ok = ok && run_cli("analyze --flows " + d + "/flows --out " + d + "/report.json --matrices " + d + "/m --jobs 4") == 0;
        ok = ok && run_cli("project --flows " + d + "/flows --out " + d + "/coords.csv") == 0;
    }
    std::size_t compared = 0;
    std::vector<fs::path> files = {"report.json", "coords.csv"};
    for (const char* m : {"position", "velocity", "curvature"}) {
        files.push_back(fs::path("m") / (std::string(m) + ".csv"));
        files.push_back(fs::path("m") / (std::string(m) + ".json"));
    }
    for (const auto& f : files) {
        const std::string a = slurp(root / "a" / f);
        ok = ok && !a.empty() && a == slurp(root / "b" / f);
        ++compared;
    }
    report("determinism", ok, "byte-identical files=" + std::to_string(compared));
}

void corpus_suite() {
    const auto lines = load_corpus(std::string(FLOWGEOM_DATA_DIR) + "/sample_corpus.jsonl");
    std::size_t errors = 0, invalid = 0, checked = 0;
    std::set<Rule> rules;
    std::vector<ReasoningRecord> records;
    for (const auto& l : lines) {
        if (!l.record) {
            ++errors;
            continue;
        }
        records.push_back(*l.record);
    }
    const CorpusIndex index = build_index(records);
    for (const auto& r : records) {
        if (validate_record(r).has_errors()) ++errors;
        if (r.mode != RecordMode::Abstract) continue;
        for (const auto& d : check_derivation(r).derivations) {
            ++checked;
            if (d.status != DerivationStatus::Valid) ++invalid;
            rules.insert(d.rules.begin(), d.rules.end());
        }
    }
    const bool all_rules = rules.count(Rule::ImplicationElim) && rules.count(Rule::ForallElim) &&
                           rules.count(Rule::ConjunctionIntro);
    report("corpus-suite", errors == 0 && invalid == 0 && checked > 0 && all_rules && index.excluded.empty(),
           "records=" + std::to_string(records.size()) + " errors=" + std::to_string(errors) +
               " derivations=" + std::to_string(checked) + " invalid=" + std::to_string(invalid) +
               " rules=" + std::to_string(rules.size()));
}

}  // namespace

int main() {
    const std::vector<std::function<void()>> checks = {curvature_oracle, isometry_and_scaling, telescoping, smooth_oracle,
                                                       synthetic_end_to_end, determinism, corpus_suite};
    for (const auto& c : checks) {
        try {
            c();
        } catch (const std::exception& e) {
            report("exception", false, e.what());
        }
    }
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << '\n';
    return failures == 0 ? 0 : 1;
}
