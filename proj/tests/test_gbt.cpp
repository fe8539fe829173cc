#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <unistd.h>

#include "oracles.hpp"
#include "wikisustain/eval.hpp"
#include "wikisustain/gbt.hpp"

using namespace wikisustain;
using namespace wikisustain::model;

namespace {

FeatureMatrix separable(std::size_t n, std::size_t noise, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FeatureMatrix m;
    for (std::size_t j = 0; j < 2 + noise; ++j) m.columns.push_back("x" + std::to_string(j));
    m.feature_count = m.columns.size();
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> row(m.columns.size());
        for (auto& v : row) v = u(g);
        m.add_row("r" + std::to_string(r), row[0] + row[1] > 1.0 ? 1 : 0, 2010, row);
    }
    return m;
}

GbtModel stump() {
    GbtModel m;
    m.columns = {"x0", "x1"};
    m.learning_rate = 0.1;
    Tree t;
    t.nodes = {{0, 0.5, 1, 2, 0.0, 10.0}, {-1, 0.0, -1, -1, -1.0, 5.0}, {-1, 0.0, -1, -1, 1.0, 5.0}};
    m.trees.push_back(t);
    return m;
}

}  // namespace

TEST(Gbt, HandBuiltStump) {
    const auto m = stump();
    EXPECT_DOUBLE_EQ(m.predict_proba(std::vector<double>{0.0, 7.0}), logistic(-0.1));
    EXPECT_DOUBLE_EQ(m.predict_proba(std::vector<double>{1.0, 7.0}), logistic(0.1));
    EXPECT_DOUBLE_EQ(logistic(-0.1), 1.0 / (1.0 + std::exp(0.1)));
    // x1 is unused.
    EXPECT_EQ(m.predict_proba(std::vector<double>{1.0, -3.0}), m.predict_proba(std::vector<double>{1.0, 9.0}));
    EXPECT_THROW(m.predict_proba(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Gbt, ZeroTreeModelReturnsPrior) {
    FeatureMatrix x;
    x.columns = {"c"};
    x.feature_count = 1;
    for (int i = 0; i < 10; ++i) x.add_row("r", i < 3 ? 1 : 0, 2010, std::vector<double>{1.0});
    const auto m = train_gbt(x);
    EXPECT_TRUE(m.trees.empty());
    EXPECT_NEAR(m.predict_proba(std::vector<double>{5.0}), 0.3, 1e-12);
    const auto s = tree_shap(m, std::vector<double>{5.0});
    EXPECT_EQ(s.phi, std::vector<double>{0.0});
    EXPECT_NEAR(s.base, std::log(0.3 / 0.7), 1e-12);
}

TEST(Gbt, SingleClassRejected) {
    FeatureMatrix x;
    x.columns = {"c"};
    x.feature_count = 1;
    x.add_row("a", 1, 2010, std::vector<double>{0.0});
    x.add_row("b", 1, 2010, std::vector<double>{1.0});
    EXPECT_THROW(train_gbt(x), std::invalid_argument);
}

TEST(Gbt, SeparableTrainingAuroc) {
    const auto x = separable(500, 0, 71);
    const auto m = train_gbt(x);
    EXPECT_GE(eval::auroc(x.labels, m.predict_proba(x)), 0.99);
    EXPECT_EQ(m.trees.size(), 100u);
}

TEST(Gbt, DeterministicAndRoundTrips) {
    const auto x = separable(200, 4, 72);
    const auto a = train_gbt(x, {}, 3), b = train_gbt(x, {}, 3);
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
    const auto path = std::filesystem::temp_directory_path() / ("model-" + std::to_string(::getpid()) + ".json");
    a.save(path);
    const auto back = GbtModel::load(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.to_json().dump(), a.to_json().dump());
    for (std::size_t r = 0; r < x.rows(); ++r) EXPECT_EQ(back.margin(x.row(r)), a.margin(x.row(r)));
}

TEST(Gbt, PredictByColumnName) {
    const auto m = stump();
    EXPECT_DOUBLE_EQ(m.predict_proba(std::map<std::string, double>{{"x1", 0.0}, {"x0", 1.0}}), logistic(0.1));
    EXPECT_THROW(m.predict_proba(std::map<std::string, double>{{"x0", 1.0}}), std::invalid_argument);
    EXPECT_THROW(m.predict_proba(std::map<std::string, double>{{"x0", 1.0}, {"x1", 0}, {"x9", 0}}),
                 std::invalid_argument);
}

TEST(Gbt, TrainingLossDecreases) {
    const auto x = separable(300, 5, 73);
    GbtParams p;
    p.n_trees = 50;
    const auto losses = staged_log_loss(train_gbt(x, p), x);
    ASSERT_EQ(losses.size(), 51u);
    for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LE(losses[i], losses[i - 1] + 1e-12) << i;
}

TEST(Gbt, MinSamplesLeafHonoured) {
    const auto x = separable(120, 2, 74);
    GbtParams p;
    p.min_samples_leaf = 15;
    p.n_trees = 20;
    for (const auto& t : train_gbt(x, p).trees)
        for (const auto& n : t.nodes)
            if (n.is_leaf()) EXPECT_GE(n.cover, 15.0);
}

TEST(Shap, SingleStumpAttributesOnlyItsFeature) {
    const auto m = stump();
    const auto s = tree_shap(m, std::vector<double>{1.0, 4.0});
    EXPECT_DOUBLE_EQ(s.phi[0], 0.1);
    EXPECT_EQ(s.phi[1], 0.0);
    EXPECT_DOUBLE_EQ(s.base + s.phi[0] + s.phi[1], m.margin(std::vector<double>{1.0, 4.0}));
}

TEST(Shap, LocalAccuracyAndBruteForce) {
    const auto x = separable(200, 2, 75);
    GbtParams p;
    p.n_trees = 3;
    p.max_depth = 3;
    const auto m = train_gbt(x, p, 1);
    std::vector<std::vector<oracle::Node>> trees;
    for (const auto& t : m.trees) {
        std::vector<oracle::Node> nodes;
        for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.value, n.cover, n.left, n.right});
        trees.push_back(nodes);
    }
    for (std::size_t r = 0; r < 50; ++r) {
        const auto row = x.row(r);
        const auto s = tree_shap(m, row);
        double total = s.base;
        for (double v : s.phi) total += v;
        EXPECT_NEAR(total, m.margin(row), 1e-9);
        const auto brute = oracle::shapley(trees, m.learning_rate, std::vector<double>(row.begin(), row.end()));
        for (std::size_t j = 0; j < brute.size(); ++j) EXPECT_NEAR(s.phi[j], brute[j], 1e-9);
    }
    const auto mean_abs = mean_abs_shap(m, x);
    EXPECT_GT(mean_abs[0] + mean_abs[1], mean_abs[2] + mean_abs[3]);
}
