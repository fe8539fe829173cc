#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wikisustain/matrix.hpp"

namespace wikisustain::model {

struct GbtParams {
    int n_trees = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_samples_leaf = 1;
};

/// A regression tree node. Internal nodes send rows with x[feature] <= threshold left.
struct TreeNode {
    int feature = -1;  ///< -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  ///< leaf output
    double cover = 0.0;  ///< training rows reaching the node

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  ///< nodes[0] is the root

    double predict(std::span<const double> row) const;
    /// Cover-weighted mean leaf value.
    double expected_value() const;
};

struct GbtModel {
    std::vector<Tree> trees;
    double learning_rate = 0.1;
    double base_score = 0.0;  ///< log-odds of the training prior
    std::vector<std::string> columns;
    GbtParams params;
    std::uint64_t seed = 0;

    double margin(std::span<const double> row) const;
    double predict_proba(std::span<const double> row) const;
    /// Row given by column name; throws naming missing and extra columns.
    double predict_proba(const std::map<std::string, double>& row) const;
    std::vector<double> predict_proba(const FeatureMatrix& m) const;

    nlohmann::ordered_json to_json() const;
    static GbtModel from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static GbtModel load(const std::filesystem::path& path);
};

inline constexpr int kModelSchemaVersion = 1;

double logistic(double margin);

/// Stagewise logistic-loss boosting with exact greedy splits. Split gain is the
/// reduction of squared error on the residuals; leaves take one Newton step.
/// Throws std::invalid_argument when only one class is present. A matrix without any
/// usable split gives a model with no trees.
GbtModel train_gbt(const FeatureMatrix& x, const GbtParams& params = {}, std::uint64_t seed = 0);

/// Mean logistic loss of the model on a labeled matrix, after each of the first k trees
/// (element 0 is the base score alone).
std::vector<double> staged_log_loss(const GbtModel& m, const FeatureMatrix& x);

// ---------------------------------------------------------------------------

struct ShapValues {
    double base = 0.0;         ///< expected margin
    std::vector<double> phi;   ///< one attribution per column
};

/// Path-dependent TreeSHAP over the whole ensemble, in margin units.
ShapValues tree_shap(const GbtModel& m, std::span<const double> row);

/// Mean |phi| per column over all rows of `x`.
std::vector<double> mean_abs_shap(const GbtModel& m, const FeatureMatrix& x);

}  // namespace wikisustain::model
