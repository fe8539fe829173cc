// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "fixtures.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "wikisustain/assembly.hpp"
#include "wikisustain/discussion.hpp"
#include "wikisustain/eval.hpp"
#include "wikisustain/features.hpp"
#include "wikisustain/gbt.hpp"
#include "wikisustain/labels.hpp"
#include "wikisustain/network.hpp"

namespace fs = std::filesystem;
using namespace wikisustain;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    if (!o.pass) ++failures;
}

void run(const std::string& name, const std::function<Outcome()>& fn) {
    try {
        report(name, fn());
    } catch (const std::exception& e) {
        report(name, {false, std::string("exception: ") + e.what()});
    }
}

std::size_t workers() { return std::max(1U, std::thread::hardware_concurrency()); }

std::uint64_t draw(std::mt19937_64& g, std::uint64_t n) { return g() % n; }
double uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------

Outcome label_rules() {
    const auto t0 = Clock::now();
    const auto cases = fixtures::label_fixtures();
    ingest::StatusLists lists;
    std::size_t ok = 0;
    std::string bad;
    bool durian = false;
    for (const auto& f : cases) {
        const auto tl = labels::build_timeline(f.page.title, f.page, lists);
        const bool match = tl.label_fa == f.label_fa && tl.label_ga == f.label_ga;
        if (match)
            ++ok;
        else
            bad += " " + f.name;
        if (f.name == "ga-fa-demoted") durian = match && tl.label_fa == 1 && tl.label_ga == 1;
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << ok << "/" << cases.size() << " fixtures match, durian-style 1/1 " << (durian ? "yes" : "no") << ", " << secs
      << " s (limit 5 s)" << (bad.empty() ? "" : "; mismatched:" + bad);
    return {ok == 12 && cases.size() == 12 && durian && secs < 5.0, d.str()};
}

Outcome gini_oracle() {
    std::mt19937_64 g(1001);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto n = 1 + draw(g, 12);
        std::vector<double> x(n);
        for (auto& v : x) v = static_cast<double>(draw(g, 30));
        if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) x[draw(g, n)] = 1.0;
        worst = std::max(worst, std::fabs(features::gini(x) - oracle::gini(x)));
    }
    const double equal = features::gini(std::vector<double>{3, 3, 3});
    const double single = features::gini(std::vector<double>{10, 0, 0, 0, 0});
    std::ostringstream d;
    d << "1000 vectors, max |diff| " << worst << " (limit 1e-12); [3,3,3] -> " << equal << "; [10,0,0,0,0] -> "
      << single;
    return {worst <= 1e-12 && equal == 0.0 && single == 0.8, d.str()};
}

std::vector<ingest::RevisionRecord> revisions_from(const std::vector<int>& editors) {
    std::vector<ingest::RevisionRecord> revs;
    for (std::size_t i = 0; i < editors.size(); ++i) {
        const auto ed = editors[i] < 0 ? Editor::anonymous("192.0.2." + std::to_string(1 + i))
                                       : Editor::registered("e" + std::to_string(editors[i]));
        revs.push_back(ingest::make_revision(1, "P", 0, static_cast<std::int64_t>(i + 1),
                                             1000 + static_cast<Timestamp>(i), ed, "t" + std::to_string(i)));
    }
    return revs;
}

Outcome network_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 g(2002);
    std::size_t ok = 0;
    std::string first_bad;
    for (int c = 0; c < 500; ++c) {
        const auto editors_n = 1 + static_cast<int>(draw(g, 7));
        const auto len = 1 + draw(g, 15);
        std::vector<int> seq(len);
        for (auto& e : seq) e = draw(g, 8) == 0 ? -1 : static_cast<int>(draw(g, static_cast<std::uint64_t>(editors_n)));
        const auto revs = revisions_from(seq);
        const auto block = network::graph_features(network::build_edit_graph(revs));
        const auto expected = oracle::network(seq);
        bool match = block.flag("flag-Degenerate-Network") == expected.degenerate &&
                     block.values.size() == expected.values.size();
        for (const auto& [name, v] : block.values) {
            const auto it = expected.values.find(name);
            if (it == expected.values.end() || it->second != v) {
                match = false;
                if (first_bad.empty()) {
                    std::ostringstream s;
                    s.precision(17);
                    s << "case " << c << " " << name << " got " << v << " want "
                      << (it == expected.values.end() ? NAN : it->second);
                    first_bad = s.str();
                }
            }
        }
        ok += match;
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << ok << "/500 sequences match on all 23 values, " << secs << " s (limit 60 s)"
      << (first_bad.empty() ? "" : "; first mismatch: " + first_bad);
    return {ok == 500 && secs < 60.0, d.str()};
}

Outcome structural_oracle() {
    const auto comments = fixtures::structural_comments();
    const auto block = discussion::structural_features(comments);
    const auto expected = fixtures::structural_expected();
    std::size_t ok = 0;
    std::string bad;
    for (const auto& [name, v] : expected) {
        if (block.at(name) == v)
            ++ok;
        else
            bad += " " + name + "=" + format_double(block.at(name));
    }
    std::ostringstream d;
    d << comments.size() << " comments parsed; " << ok << "/" << expected.size() << " values exact"
      << (bad.empty() ? "" : "; mismatched:" + bad);
    return {comments.size() == 12 && ok == 15 && expected.size() == 15, d.str()};
}

// ---------------------------------------------------------------------------

FeatureMatrix separable_data(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    FeatureMatrix m;
    for (int j = 0; j < 12; ++j) m.columns.push_back((j < 2 ? "signal" : "noise") + std::to_string(j));
    m.feature_count = 12;
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> row(12);
        for (auto& v : row) v = uniform(g);
        m.add_row("r" + std::to_string(r), row[0] + row[1] > 1.0 ? 1 : 0, 2010, row);
    }
    return m;
}

Outcome gbt_criteria() {
    const auto t0 = Clock::now();
    const auto data = separable_data(500, 3003);
    const model::GbtParams params;
    const auto cv = eval::cross_val(data, eval::gbt_trainer(params, 11), 5, 11, {}, workers());
    double cv_auroc = 0;
    for (const auto& e : cv.fold_metrics)
        if (e.metric == "AUROC") cv_auroc = e.mean;

    auto shuffled = data;
    eval::Rng rng(99);
    rng.shuffle(shuffled.labels);
    eval::BootstrapOptions opts;
    opts.iterations = 100;
    opts.seed = 5;
    opts.workers = workers();
    double null_auroc = 0;
    for (const auto& e : eval::bootstrap_eval(shuffled, eval::gbt_trainer(params, 5), opts))
        if (e.metric == "AUROC") null_auroc = e.mean;

    const auto a = model::train_gbt(data, params, 17).to_json().dump();
    const auto b = model::train_gbt(data, params, 17).to_json().dump();
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "5-fold AUROC " << cv_auroc << " (>= 0.95); shuffled bootstrap AUROC " << null_auroc
      << " (in [0.45, 0.55]); retrain identical " << (a == b ? "yes" : "no") << "; " << secs << " s (limit 30 s)";
    return {cv_auroc >= 0.95 && null_auroc >= 0.45 && null_auroc <= 0.55 && a == b && secs < 30.0, d.str()};
}

std::vector<std::vector<oracle::Node>> oracle_trees(const model::GbtModel& m) {
    std::vector<std::vector<oracle::Node>> out;
    for (const auto& t : m.trees) {
        std::vector<oracle::Node> nodes;
        for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.value, n.cover, n.left, n.right});
        out.push_back(nodes);
    }
    return out;
}

Outcome shapley_criteria() {
    // Local accuracy on 1,000 fresh rows.
    const auto data = separable_data(500, 3003);
    const auto m = model::train_gbt(data, {}, 17);
    const auto probe = separable_data(1000, 4004);
    double worst_local = 0;
    for (std::size_t r = 0; r < probe.rows(); ++r) {
        const auto s = model::tree_shap(m, probe.row(r));
        double total = s.base;
        for (double p : s.phi) total += p;
        worst_local = std::max(worst_local, std::fabs(total - m.margin(probe.row(r))));
    }

    // Brute force on small ensembles.
    std::mt19937_64 g(5005);
    double worst_brute = 0;
    int ensembles = 0;
    for (int e = 0; e < 40; ++e) {
        const int k = 1 + static_cast<int>(draw(g, 4));
        FeatureMatrix x;
        for (int j = 0; j < k; ++j) x.columns.push_back("f" + std::to_string(j));
        x.feature_count = static_cast<std::size_t>(k);
        const int n = 40;
        for (int r = 0; r < n; ++r) {
            std::vector<double> row(static_cast<std::size_t>(k));
            for (auto& v : row) v = static_cast<double>(draw(g, 5));
            const double score = row[0] + (k > 1 ? row[1] : 0) + static_cast<double>(draw(g, 4));
            x.add_row("r", score > 4 ? 1 : 0, 2010, row);
        }
        if (std::count(x.labels.begin(), x.labels.end(), 1) % n == 0) continue;
        model::GbtParams p;
        p.n_trees = 1 + static_cast<int>(draw(g, 3));
        p.max_depth = 1 + static_cast<int>(draw(g, 3));
        p.learning_rate = 0.3;
        const auto small = model::train_gbt(x, p, 1);
        const auto trees = oracle_trees(small);
        ++ensembles;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const auto row = x.row(r);
            const std::vector<double> rv(row.begin(), row.end());
            const auto phi = oracle::shapley(trees, small.learning_rate, rv);
            const auto s = model::tree_shap(small, row);
            for (int j = 0; j < k; ++j) worst_brute = std::max(worst_brute, std::fabs(phi[j] - s.phi[j]));
        }
    }
    std::ostringstream d;
    d << "local accuracy max error " << worst_local << " on 1000 rows (limit 1e-9); brute force max error "
      << worst_brute << " over " << ensembles << " ensembles of <= 3 trees and <= 4 features (limit 1e-9)";
    return {worst_local <= 1e-9 && worst_brute <= 1e-9 && ensembles >= 20, d.str()};
}

Outcome metrics_oracle() {
    std::mt19937_64 g(6006);
    int ok = 0;
    std::string first_bad;
    for (int c = 0; c < 200; ++c) {
        const auto n = 2 + draw(g, 29);
        std::vector<int> y(n);
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(draw(g, 2));
            s[i] = static_cast<double>(draw(g, 9)) / 8.0;
        }
        y[0] = 1;
        y[1] = 0;
        eval::MetricOptions opts;
        opts.precision_at = {2, 5, 10, 25, 50};
        const auto got = eval::compute_metrics(y, s, opts);
        const auto k = oracle::confusion(y, s, opts.threshold);
        const double f1 = oracle::ratio(2 * k.tp, 2 * k.tp + k.fp + k.fn);
        const double nf1 = oracle::ratio(2 * k.tn, 2 * k.tn + k.fn + k.fp);
        std::vector<std::pair<std::string, double>> want = {{"AUROC", oracle::auroc_pairs(y, s)},
                                                            {"Precision", oracle::ratio(k.tp, k.tp + k.fp)},
                                                            {"Recall", oracle::ratio(k.tp, k.tp + k.fn)},
                                                            {"F1", f1},
                                                            {"Macro-F1", (f1 + nf1) / 2.0}};
        for (int p : opts.precision_at)
            want.emplace_back("Precision@" + std::to_string(p) + "%", oracle::precision_at(y, s, p));
        bool match = got.size() == want.size();
        for (std::size_t i = 0; match && i < want.size(); ++i) {
            if (got[i].first != want[i].first || got[i].second != want[i].second) {
                match = false;
                if (first_bad.empty())
                    first_bad = "case " + std::to_string(c) + " " + want[i].first + " got " +
                                format_double(got[i].second) + " want " + format_double(want[i].second);
            }
        }
        ok += match;
    }
    const std::vector<int> y = {1, 0, 1, 0, 0};
    const std::vector<double> flat(5, 0.3);
    const double constant = eval::auroc(y, flat);
    std::ostringstream d;
    d << ok << "/200 datasets exact; constant scores AUROC " << constant
      << (first_bad.empty() ? "" : "; first mismatch: " + first_bad);
    return {ok == 200 && constant == 0.5, d.str()};
}

// ---------------------------------------------------------------------------
// End-to-end runs of the CLI on the bundled corpus.

const fs::path kSource = WIKISUSTAIN_SOURCE_DIR;
const fs::path kCorpus = kSource / "fixtures" / "corpus50";

fs::path scratch_root() {
    static const fs::path root = fs::temp_directory_path() / ("wikisustain-acceptance-" + std::to_string(::getpid()));
    return root;
}

/// Writes a config for a run directory; every path except the workdir is absolute, so
/// two runs differ only in where they live.
fs::path write_run_config(const std::string& name) {
    auto cfg = json::parse(std::ifstream(kCorpus / "config.json"));
    auto& paths = cfg["paths"];
    paths["dump"] = (kCorpus / paths["dump"].get<std::string>()).lexically_normal().string();
    for (auto& [k, v] : paths["lists"].items()) v = (kCorpus / v.get<std::string>()).lexically_normal().string();
    paths["registry"] = (kCorpus / paths["registry"].get<std::string>()).lexically_normal().string();
    paths["workdir"] = "work";
    const auto dir = scratch_root() / name;
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << cfg.dump(2);
    return dir / "config.json";
}

int cli(const std::string& args, const fs::path& log) {
    const auto cmd = std::string(WIKISUSTAIN_CLI) + " " + args + " > '" + log.string() + "' 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct RunResult {
    int rc = -1;
    double seconds = 0;
    fs::path workdir;
};

RunResult run_all(const std::string& name) {
    const auto config = write_run_config(name);
    RunResult r;
    r.workdir = config.parent_path() / "work";
    const auto t0 = Clock::now();
    r.rc = cli("all --config '" + config.string() + "'", config.parent_path() / "all.log");
    r.seconds = seconds_since(t0);
    return r;
}

Outcome leakage_audit(const fs::path& workdir) {
    const auto pages_dir = workdir / "pages";
    auto timelines = labels::read_timelines(workdir / "timelines.jsonl");
    std::sort(timelines.begin(), timelines.end(),
              [](const labels::ArticleTimeline& a, const labels::ArticleTimeline& b) { return a.title < b.title; });
    const auto registry = features::WikiProjectRegistry::load(kSource / "data" / "wikiprojects.json");
    const auto index = experience::ExperienceIndex::open(workdir / "experience_index");
    const auto scorer = discussion::make_scorer("lexicon-v1");
    std::size_t checked = 0, perturbed = 0, bad = 0;
    std::string first_bad;
    for (auto uc : {UseCase::FA, UseCase::GA}) {
        assembly::FeatureContext ctx;
        ctx.use_case = uc;
        ctx.registry = &registry;
        ctx.scorer = scorer.get();
        ctx.index = &index;
        for (const auto& t : timelines) {
            if (!t.in_training_population(uc)) continue;
            const auto t_prom = *t.t_prom(uc);
            const auto page = ingest::read_page_history(ingest::page_history_path(pages_dir, t.title));
            const auto full = assembly::compute_article_features(page, t, ctx).row;
            const auto cut = assembly::compute_article_features(assembly::truncate_after(page, t_prom), t, ctx).row;
            // Scramble everything after promotion as well.
            auto noisy = page;
            bool touched = false;
            for (auto* revs : {&noisy.article_revisions, &noisy.talk_revisions})
                for (auto& r : *revs)
                    if (r.timestamp > t_prom) {
                        r.text = "{{Featured article}} == Noise ==\nrubbish [[User:Zed|Zed]] 01:02, 3 May 2030 (UTC)";
                        r.content_hash = fnv1a64(r.text);
                        r.editor = Editor::registered("Zed");
                        touched = true;
                    }
            const auto scrambled = assembly::compute_article_features(noisy, t, ctx).row;
            ++checked;
            perturbed += touched;
            if (full != cut || full != scrambled) {
                ++bad;
                if (first_bad.empty()) first_bad = std::string(to_string(uc)) + " " + t.title;
            }
        }
    }
    std::ostringstream d;
    d << checked << " article windows checked (" << perturbed << " with post-promotion history), " << bad
      << " changed" << (first_bad.empty() ? "" : "; first: " + first_bad);
    return {checked > 0 && perturbed > 0 && bad == 0, d.str()};
}

Outcome end_to_end(const RunResult& a, const RunResult& b) {
    std::ostringstream d;
    d << "exit codes " << a.rc << "/" << b.rc << ", first run " << a.seconds << " s (limit 60 s)";
    if (a.rc != 0 || b.rc != 0) return {false, d.str()};

    const auto report_dir = a.workdir / "fa" / "report";
    std::vector<std::string> missing;
    for (const char* f : {"metrics.csv", "oof_predictions.csv", "shap_top.csv", "fp_ranked.csv", "corpus_growth.csv",
                          "manifest.json", "heatmap_Time-to-Promotion_Num-of-Editors-Normalized.csv"})
        if (!fs::exists(report_dir / f)) missing.emplace_back(f);

    const auto meta = json::parse(slurp(a.workdir / "fa" / "matrix.meta.json"));
    const auto width = meta.at("feature_count").get<std::size_t>();
    std::ifstream matrix(a.workdir / "fa" / "matrix.csv");
    std::string header;
    std::getline(matrix, header);
    const auto header_cols = split_csv_row(header).size();

    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(a.workdir))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a.workdir));
    std::sort(files.begin(), files.end());
    std::size_t differing = 0;
    std::string first_diff;
    for (const auto& f : files) {
        if (!fs::exists(b.workdir / f) || slurp(a.workdir / f) != slurp(b.workdir / f)) {
            ++differing;
            if (first_diff.empty()) first_diff = f.string();
        }
    }
    std::size_t b_files = 0;
    for (const auto& e : fs::recursive_directory_iterator(b.workdir)) b_files += e.is_regular_file();

    d << "; report files missing " << missing.size() << "; FA matrix width " << width << " (" << header_cols
      << " csv columns incl. bookkeeping and flags); " << files.size() << " files compared, " << differing
      << " differ" << (first_diff.empty() ? "" : " (first: " + first_diff + ")");
    return {a.seconds < 60.0 && missing.empty() && width == 326 && differing == 0 && files.size() == b_files &&
                !files.empty(),
            d.str()};
}

}  // namespace

int main() {
    std::cout.setf(std::ios::fmtflags(0), std::ios::floatfield);
    std::cout.precision(6);

    run("labels.fixture-suite", label_rules);
    run("gini.oracle", gini_oracle);
    run("network.oracle", network_oracle);
    run("discussion.structural-oracle", structural_oracle);
    run("gbt.separable-null-determinism", gbt_criteria);
    run("shapley.local-accuracy-brute-force", shapley_criteria);
    run("metrics.oracle", metrics_oracle);

    fs::remove_all(scratch_root());
    RunResult first, second;
    try {
        first = run_all("run1");
        second = run_all("run2");
    } catch (const std::exception& e) {
        std::cout << "end-to-end setup failed: " << e.what() << "\n";
    }
    run("pipeline.leakage-audit", [&] {
        if (first.rc != 0) return Outcome{false, "pipeline run failed, see " + (first.workdir.parent_path() / "all.log").string()};
        return leakage_audit(first.workdir);
    });
    run("pipeline.end-to-end", [&] { return end_to_end(first, second); });
    std::cout << "NOT-GATED full-dump population counts, Macro-F1 and direct-vs-two-step gap: needs the complete "
                 "English history dump; run manually"
              << std::endl;
    if (failures == 0) fs::remove_all(scratch_root());

    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
