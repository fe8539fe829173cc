#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wikisustain/gbt.hpp"
#include "wikisustain/matrix.hpp"

namespace wikisustain::eval {

/// mt19937_64 with an unbiased bounded draw, so sequences are the same on every
/// standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    /// Uniform in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

/// Independent stream for sub-task `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

using Metrics = std::vector<std::pair<std::string, double>>;

struct MetricOptions {
    double threshold = 0.5;
    std::vector<int> precision_at = {2, 5, 10};  ///< percentages
};

/// Rank statistic with midranks for ties.
double auroc(std::span<const int> y, std::span<const double> scores);
/// Precision among the ceil(k% * n) highest scores; ties keep input order.
double precision_at(std::span<const int> y, std::span<const double> scores, int percent);

/// AUROC, Precision, Recall, F1, Macro-F1 and Precision@k% for each k. A prediction is
/// positive when its score is at least the threshold; zero divisions give 0.
/// Throws std::invalid_argument unless both classes are present.
Metrics compute_metrics(std::span<const int> y, std::span<const double> scores, const MetricOptions& options = {});

struct Estimate {
    std::string metric;
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation over iterations
    std::size_t iterations = 0;
};

std::vector<Estimate> summarize(const std::vector<Metrics>& runs);

/// Fits on `train` and returns one score per row of `test`.
using Trainer = std::function<std::vector<double>(const FeatureMatrix& train, const FeatureMatrix& test)>;

Trainer gbt_trainer(model::GbtParams params, std::uint64_t seed);

struct BootstrapOptions {
    std::size_t iterations = 100;
    std::uint64_t seed = 0;
    std::size_t max_retries = 10;
    std::size_t workers = 1;
    MetricOptions metrics;
};

/// Each iteration trains on a per-class resample with replacement and tests on the rows
/// left out. Iterations whose left-out rows hold one class are redrawn.
std::vector<Estimate> bootstrap_eval(const FeatureMatrix& x, const Trainer& trainer, const BootstrapOptions& options);

/// Fold per row, stratified by label; depends only on (seed, labels, row order).
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

struct CvResult {
    std::vector<double> oof;    ///< out-of-fold score per row
    std::vector<int> fold_of;   ///< fold per row
    std::vector<Estimate> fold_metrics;  ///< over folds whose test part holds both classes
};

CvResult cross_val(const FeatureMatrix& x, const Trainer& trainer, int folds, std::uint64_t seed,
                   const MetricOptions& metrics = {}, std::size_t workers = 1);

// ---------------------------------------------------------------------------

enum class Binning { Quantile, FixedWidth };

struct HeatmapGrid {
    std::size_t bins_x = 0, bins_y = 0;
    std::vector<double> x_bounds, y_bounds;  ///< bins + 1 boundaries per axis
    std::vector<std::size_t> counts;         ///< row-major: y bin, then x bin
    std::vector<std::optional<double>> means;  ///< nullopt when suppressed

    std::size_t cell(std::size_t bx, std::size_t by) const { return by * bins_x + bx; }
};

/// Bin index of each value. Quantile cuts sit at sorted[floor(i n / bins)]; fixed-width
/// cuts split [min, max] evenly. Bins are half-open on the right except the last.
std::vector<std::size_t> assign_bins(std::span<const double> values, std::size_t bins, Binning binning,
                                     std::vector<double>& bounds);

HeatmapGrid heatmap(std::span<const double> x, std::span<const double> y, std::span<const int> labels,
                    std::size_t bins_x, std::size_t bins_y, Binning binning = Binning::Quantile,
                    std::size_t min_count = 10);

void write_heatmap_csv(const std::filesystem::path& path, const HeatmapGrid& grid);

// ---------------------------------------------------------------------------

/// Expected F1 of a scorer that flags positives at random at the prevalence rate.
double random_f1(double prevalence);

struct GrowthPoint {
    int year = 0;
    std::size_t rows = 0;
    std::size_t positives = 0;
    bool skipped = false;
    double auroc = 0.0, f1 = 0.0;
    double auroc_over = 0.0, f1_over = 0.0;
};

struct GrowthOptions {
    int first_year = 2005;
    int last_year = 2018;
    std::size_t min_positives = 20;
    int folds = 5;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    MetricOptions metrics;
};

/// For each year t, cross-validates on the rows promoted in or before t and compares
/// pooled out-of-fold AUROC and F1 with a random scorer.
std::vector<GrowthPoint> corpus_growth(const FeatureMatrix& x, const Trainer& trainer, const GrowthOptions& options);

// ---------------------------------------------------------------------------

struct PopulationRow {
    std::string population;
    std::size_t count = 0;
    double mean_reviews = 0.0;
};

struct RankedArticle {
    std::string article;
    double probability = 0.0;
    int reviews = 0;
};

struct FpAnalysis {
    std::vector<PopulationRow> table;  ///< sustainable-TN, FP, unsustainable
    std::vector<RankedArticle> ranked_fp;
};

/// Throws std::invalid_argument listing articles without a review count.
FpAnalysis fp_review_analysis(const std::vector<std::string>& articles, std::span<const double> oof,
                              std::span<const int> labels, const std::map<std::string, int>& review_counts,
                              double threshold = 0.5, std::size_t top_n = 100);

}  // namespace wikisustain::eval
