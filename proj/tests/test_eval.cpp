#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <unistd.h>

#include "oracles.hpp"
#include "wikisustain/assembly.hpp"
#include "wikisustain/eval.hpp"

using namespace wikisustain;
using namespace wikisustain::eval;

namespace {

double metric(const Metrics& m, const std::string& name) {
    for (const auto& [n, v] : m)
        if (n == name) return v;
    throw std::out_of_range(name);
}

double estimate(const std::vector<Estimate>& es, const std::string& name) {
    for (const auto& e : es)
        if (e.metric == name) return e.mean;
    throw std::out_of_range(name);
}

FeatureMatrix matrix(std::size_t n, std::uint64_t seed, double positive_rate = 0.3) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(0, 1);
    FeatureMatrix m;
    m.columns = {"a", "b", "c"};
    m.feature_count = 3;
    for (std::size_t r = 0; r < n; ++r) {
        const int y = u(g) < positive_rate ? 1 : 0;
        const std::vector<double> row = {u(g) + y * 0.8, u(g), u(g)};
        m.add_row("r" + std::to_string(r), y, 2005 + static_cast<int>(r % 14), row);
    }
    return m;
}

Trainer constant_trainer() {
    return [](const FeatureMatrix&, const FeatureMatrix& test) { return std::vector<double>(test.rows(), 0.5); };
}

}  // namespace

TEST(Metrics, PerfectScores) {
    const std::vector<int> y = {1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
    const std::vector<double> s = {0.9, 0.8, 0.4, 0.3, 0.3, 0.2, 0.2, 0.1, 0.1, 0.0};
    const auto m = compute_metrics(y, s);
    EXPECT_EQ(metric(m, "AUROC"), 1.0);
    EXPECT_EQ(metric(m, "Precision@2%"), 1.0);
    EXPECT_EQ(metric(m, "Precision@10%"), 1.0);
    EXPECT_EQ(metric(m, "F1"), 1.0);
    EXPECT_EQ(metric(m, "Macro-F1"), 1.0);
}

TEST(Metrics, ConstantScores) {
    const std::vector<int> y = {1, 0, 0, 1, 0};
    EXPECT_EQ(auroc(y, std::vector<double>(5, 0.7)), 0.5);
}

TEST(Metrics, HandDatasetMatchesOracle) {
    const std::vector<int> y = {1, 0, 1, 1, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 1, 0, 0, 1, 0};
    const std::vector<double> s = {0.91, 0.85, 0.85, 0.7, 0.62, 0.55, 0.5, 0.5, 0.45, 0.4,
                                   0.38, 0.3, 0.3, 0.22, 0.2, 0.15, 0.1, 0.1, 0.05, 0.01};
    const auto m = compute_metrics(y, s);
    const auto c = oracle::confusion(y, s, 0.5);
    EXPECT_EQ(metric(m, "AUROC"), oracle::auroc_pairs(y, s));
    EXPECT_EQ(metric(m, "Precision"), oracle::ratio(c.tp, c.tp + c.fp));
    EXPECT_EQ(metric(m, "Recall"), oracle::ratio(c.tp, c.tp + c.fn));
    EXPECT_EQ(metric(m, "F1"), oracle::ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn));
    for (int k : {2, 5, 10}) EXPECT_EQ(metric(m, "Precision@" + std::to_string(k) + "%"), oracle::precision_at(y, s, k));
    EXPECT_THROW(compute_metrics(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), std::invalid_argument);
}

TEST(Metrics, PrecisionAtIsMonotoneForConcentratedPositives) {
    std::vector<int> y(50, 0);
    std::vector<double> s(50);
    for (int i = 0; i < 50; ++i) {
        s[static_cast<std::size_t>(i)] = 1.0 - i / 50.0;
        if (i < 5) y[static_cast<std::size_t>(i)] = 1;
    }
    double prev = 2.0;
    for (int k = 1; k <= 100; ++k) {
        const double p = precision_at(y, s, k);
        EXPECT_LE(p, prev);
        EXPECT_GE(p, 0.0);
        prev = p;
    }
}

TEST(Folds, StratifiedPartition) {
    const std::vector<int> y = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
    const auto f = stratified_folds(y, 5, 9);
    for (int k = 0; k < 5; ++k) {
        int pos = 0, neg = 0;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (f[i] == k) (y[i] ? pos : neg)++;
        EXPECT_EQ(pos, 1);
        EXPECT_EQ(neg, 1);
    }
    EXPECT_EQ(stratified_folds(y, 5, 9), f);
}

TEST(Folds, CrossValCoversEveryRowOnce) {
    const auto x = matrix(60, 3);
    const auto cv = cross_val(x, gbt_trainer({}, 1), 5, 4);
    ASSERT_EQ(cv.oof.size(), x.rows());
    std::set<int> folds(cv.fold_of.begin(), cv.fold_of.end());
    EXPECT_EQ(folds.size(), 5u);
    for (double p : cv.oof) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
    EXPECT_EQ(cross_val(x, gbt_trainer({}, 1), 5, 4, {}, 4).oof, cv.oof);
}

TEST(Bootstrap, ConstantTrainer) {
    const auto x = matrix(80, 5);
    BootstrapOptions o;
    o.iterations = 30;
    o.seed = 2;
    const auto es = bootstrap_eval(x, constant_trainer(), o);
    for (const auto& e : es)
        if (e.metric == "AUROC") {
            EXPECT_EQ(e.mean, 0.5);
            EXPECT_EQ(e.std, 0.0);
            EXPECT_EQ(e.iterations, 30u);
        }
}

TEST(Bootstrap, SeedAndWorkerInvariant) {
    const auto x = matrix(80, 6);
    BootstrapOptions o;
    o.iterations = 12;
    o.seed = 8;
    model::GbtParams p;
    p.n_trees = 20;
    const auto a = bootstrap_eval(x, gbt_trainer(p, 1), o);
    o.workers = 4;
    const auto b = bootstrap_eval(x, gbt_trainer(p, 1), o);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].metric, b[i].metric);
        EXPECT_EQ(a[i].mean, b[i].mean);
        EXPECT_EQ(a[i].std, b[i].std);
    }
    EXPECT_GT(estimate(a, "AUROC"), 0.7);
}

TEST(Heatmap, AllPositive) {
    std::vector<double> x, y;
    for (int i = 0; i < 100; ++i) {
        x.push_back(i);
        y.push_back(i % 10);
    }
    const auto g = heatmap(x, y, std::vector<int>(100, 1), 2, 2);
    for (const auto& m : g.means) {
        ASSERT_TRUE(m);
        EXPECT_EQ(*m, 1.0);
    }
}

TEST(Heatmap, SmallCellsSuppressed) {
    std::vector<double> x(9, 1.0), y(9, 1.0);
    const auto g = heatmap(x, y, std::vector<int>(9, 0), 1, 1);
    EXPECT_EQ(g.counts[0], 9u);
    EXPECT_FALSE(g.means[0]);
    const auto path = std::filesystem::temp_directory_path() / ("heat-" + std::to_string(::getpid()) + ".csv");
    write_heatmap_csv(path, g);
    std::ifstream in(path);
    const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_NE(body.find("SUPPRESSED"), std::string::npos);
    std::filesystem::remove(path);
}

TEST(Heatmap, PlantedQuadrants) {
    // Quadrant rates 0.1, 0.9, 0.5, 0.0 with 20 rows each.
    const std::array<int, 4> positives = {2, 18, 10, 0};
    std::vector<double> x, y;
    std::vector<int> labels;
    for (int q = 0; q < 4; ++q)
        for (int i = 0; i < 20; ++i) {
            x.push_back((q % 2) * 10 + i * 0.1);
            y.push_back((q / 2) * 10 + i * 0.1);
            labels.push_back(i < positives[static_cast<std::size_t>(q)] ? 1 : 0);
        }
    for (auto b : {Binning::Quantile, Binning::FixedWidth}) {
        const auto g = heatmap(x, y, labels, 2, 2, b);
        EXPECT_EQ(*g.means[g.cell(0, 0)], 0.1);
        EXPECT_EQ(*g.means[g.cell(1, 0)], 0.9);
        EXPECT_EQ(*g.means[g.cell(0, 1)], 0.5);
        EXPECT_EQ(*g.means[g.cell(1, 1)], 0.0);
    }
}

TEST(Growth, RandomF1Baseline) {
    EXPECT_NEAR(random_f1(0.16), 0.2759, 5e-5);
    // Simulation: flag every row positive on labels drawn at prevalence 0.16.
    std::mt19937_64 g(7);
    std::bernoulli_distribution pos(0.16);
    int tp = 0, fp = 0;
    for (int i = 0; i < 200000; ++i) (pos(g) ? tp : fp)++;
    const double precision = static_cast<double>(tp) / (tp + fp);
    EXPECT_NEAR(2 * precision / (precision + 1.0), random_f1(0.16), 2e-3);
}

TEST(Growth, OverPerformanceAndGaps) {
    auto x = matrix(200, 11, 0.3);
    GrowthOptions o;
    o.first_year = 2004;
    o.last_year = 2018;
    o.min_positives = 10;
    model::GbtParams p;
    p.n_trees = 20;
    const auto pts = corpus_growth(x, gbt_trainer(p, 1), o);
    ASSERT_EQ(pts.size(), 15u);
    EXPECT_TRUE(pts.front().skipped);
    EXPECT_FALSE(pts.back().skipped);
    for (const auto& pt : pts) {
        if (pt.skipped) continue;
        EXPECT_GE(pt.positives, 10u);
        EXPECT_DOUBLE_EQ(pt.auroc_over, pt.auroc / 0.5 - 1.0);
        EXPECT_DOUBLE_EQ(pt.f1_over, pt.f1 / random_f1(static_cast<double>(pt.positives) / pt.rows) - 1.0);
    }
}

TEST(FpAnalysis, PlantedMeans) {
    std::vector<std::string> articles;
    std::vector<double> oof;
    std::vector<int> labels;
    std::map<std::string, int> reviews;
    auto add = [&](double p, int y, int r) {
        const auto name = "a" + std::to_string(articles.size());
        articles.push_back(name);
        oof.push_back(p);
        labels.push_back(y);
        reviews[name] = r;
    };
    // TN mean 0.2, FP mean 0.7, positives mean 1.4.
    for (int i = 0; i < 10; ++i) add(0.1, 0, i < 2 ? 1 : 0);
    for (int i = 0; i < 10; ++i) add(0.6 + i * 0.01, 0, i < 7 ? 1 : 0);
    for (int i = 0; i < 5; ++i) add(0.3, 1, i < 2 ? 2 : 1);
    const auto a = fp_review_analysis(articles, oof, labels, reviews, 0.5, 4);
    ASSERT_EQ(a.table.size(), 3u);
    EXPECT_DOUBLE_EQ(a.table[0].mean_reviews, 0.2);
    EXPECT_DOUBLE_EQ(a.table[1].mean_reviews, 0.7);
    EXPECT_DOUBLE_EQ(a.table[2].mean_reviews, 1.4);
    EXPECT_GE(a.table[2].mean_reviews, 1.0);
    ASSERT_EQ(a.ranked_fp.size(), 4u);
    EXPECT_EQ(a.ranked_fp[0].probability, 0.6 + 9 * 0.01);

    reviews.erase("a3");
    EXPECT_THROW(fp_review_analysis(articles, oof, labels, reviews), std::invalid_argument);
}

TEST(FpAnalysis, NoFalsePositives) {
    const auto a = fp_review_analysis({"x", "y"}, std::vector<double>{0.1, 0.9}, std::vector<int>{0, 1},
                                      {{"x", 0}, {"y", 1}});
    EXPECT_TRUE(a.ranked_fp.empty());
    EXPECT_EQ(a.table[1].count, 0u);
}

TEST(Rng, DerivedStreamsDiffer) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
    Rng a(3), b(3);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.below(17), b.below(17));
}

TEST(Matrix, SelectColumnsAndCsvRoundTrip) {
    auto x = matrix(5, 12);
    x.articles[2] = "Comma, \"quoted\"";
    const auto s = x.select_columns({"c", "a"});
    EXPECT_EQ(s.columns, (std::vector<std::string>{"c", "a"}));
    EXPECT_EQ(s.at(3, 1), x.at(3, 0));
    EXPECT_THROW(x.select_columns({"nope"}), std::exception);
    const auto path = std::filesystem::temp_directory_path() / ("matrix-" + std::to_string(::getpid()) + ".csv");
    write_matrix_csv(path, x);
    const auto back = read_matrix_csv(path, 3);
    std::filesystem::remove(path);
    EXPECT_EQ(back.columns, x.columns);
    EXPECT_EQ(back.articles, x.articles);
    EXPECT_EQ(back.labels, x.labels);
    EXPECT_EQ(back.promotion_years, x.promotion_years);
    EXPECT_EQ(back.values, x.values);
}

TEST(Ablation, GroupsCoverMatrix) {
    const auto reg = features::WikiProjectRegistry::load(std::string(WIKISUSTAIN_SOURCE_DIR) + "/data/wikiprojects.json");
    for (auto uc : {UseCase::FA, UseCase::GA}) {
        std::size_t feature_count = 0;
        const auto cols = assembly::matrix_columns(uc, reg, &feature_count);
        EXPECT_EQ(feature_count, uc == UseCase::FA ? 326u : 325u);
        const auto groups = assembly::ablation_groups(uc, reg);
        std::map<std::string, std::vector<std::string>> by_name(groups.begin(), groups.end());
        ASSERT_TRUE(by_name.contains("Baseline"));
        ASSERT_TRUE(by_name.contains("All"));
        EXPECT_EQ(by_name["All"], cols);
        std::set<std::string> known(cols.begin(), cols.end());
        for (const auto& [name, g] : groups)
            for (const auto& c : g) EXPECT_TRUE(known.contains(c)) << name << " " << c;
    }
}
