#include "wikisustain/eval.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "wikisustain/core.hpp"
#include "wikisustain/parallel.hpp"
#include "wikisustain/stats.hpp"

namespace wikisustain::eval {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("empty range");
    // Rejection sampling on the largest multiple of n.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

void require_two_classes(std::span<const int> y) {
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size()))
        throw std::invalid_argument("metrics need at least one positive and one negative");
}

double safe_div(double a, double b) { return b == 0 ? 0.0 : a / b; }

}  // namespace

double auroc(std::span<const int> y, std::span<const double> scores) {
    require_two_classes(y);
    const auto n = y.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0, pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        const double midrank = static_cast<double>(i + j + 1) / 2.0;  // ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k)
            if (y[idx[k]] == 1) {
                rank_sum += midrank;
                ++pos;
            }
        i = j;
    }
    const double neg = static_cast<double>(n) - pos;
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

double precision_at(std::span<const int> y, std::span<const double> scores, int percent) {
    const auto n = y.size();
    if (n == 0) return 0.0;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t m = (static_cast<std::size_t>(percent) * n + 99) / 100;
    m = std::clamp<std::size_t>(m, 1, n);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < m; ++i) hits += y[idx[i]] == 1;
    return static_cast<double>(hits) / static_cast<double>(m);
}

Metrics compute_metrics(std::span<const int> y, std::span<const double> scores, const MetricOptions& options) {
    if (y.size() != scores.size()) throw std::invalid_argument("one score per label required");
    require_two_classes(y);
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const bool predicted = scores[i] >= options.threshold;
        if (y[i] == 1)
            (predicted ? tp : fn) += 1;
        else
            (predicted ? fp : tn) += 1;
    }
    const double precision = safe_div(tp, tp + fp);
    const double recall = safe_div(tp, tp + fn);
    const double f1 = safe_div(2 * tp, 2 * tp + fp + fn);
    const double neg_f1 = safe_div(2 * tn, 2 * tn + fn + fp);

    Metrics m;
    m.emplace_back("AUROC", auroc(y, scores));
    m.emplace_back("Precision", precision);
    m.emplace_back("Recall", recall);
    m.emplace_back("F1", f1);
    m.emplace_back("Macro-F1", (f1 + neg_f1) / 2.0);
    for (int k : options.precision_at)
        m.emplace_back("Precision@" + std::to_string(k) + "%", precision_at(y, scores, k));
    return m;
}

std::vector<Estimate> summarize(const std::vector<Metrics>& runs) {
    std::vector<Estimate> out;
    if (runs.empty()) return out;
    for (std::size_t k = 0; k < runs.front().size(); ++k) {
        std::vector<double> v;
        for (const auto& r : runs) v.push_back(r[k].second);
        out.push_back({runs.front()[k].first, stats::mean(v), stats::stddev(v), v.size()});
    }
    return out;
}

Trainer gbt_trainer(model::GbtParams params, std::uint64_t seed) {
    return [params, seed](const FeatureMatrix& train, const FeatureMatrix& test) {
        return model::train_gbt(train, params, seed).predict_proba(test);
    };
}

std::vector<Estimate> bootstrap_eval(const FeatureMatrix& x, const Trainer& trainer, const BootstrapOptions& options) {
    if (options.iterations < 2) throw std::invalid_argument("bootstrap needs at least two iterations");
    std::vector<std::size_t> pos, neg;
    for (std::size_t r = 0; r < x.rows(); ++r) (x.labels[r] == 1 ? pos : neg).push_back(r);
    if (pos.empty() || neg.empty()) throw std::invalid_argument("bootstrap needs both classes");

    std::vector<Metrics> runs(options.iterations);
    parallel_for(options.iterations, options.workers, [&](std::size_t it) {
        Rng rng(derive_seed(options.seed, it));
        for (std::size_t attempt = 0; attempt <= options.max_retries; ++attempt) {
            std::vector<std::size_t> train;
            std::vector<char> drawn(x.rows(), 0);
            for (const auto* cls : {&pos, &neg})
                for (std::size_t k = 0; k < cls->size(); ++k) {
                    const auto r = (*cls)[rng.below(cls->size())];
                    train.push_back(r);
                    drawn[r] = 1;
                }
            std::vector<std::size_t> test;
            std::size_t test_pos = 0;
            for (std::size_t r = 0; r < x.rows(); ++r)
                if (!drawn[r]) {
                    test.push_back(r);
                    test_pos += x.labels[r] == 1;
                }
            if (test_pos == 0 || test_pos == test.size()) continue;
            const auto train_m = x.select_rows(train);
            const auto test_m = x.select_rows(test);
            const auto scores = trainer(train_m, test_m);
            runs[it] = compute_metrics(test_m.labels, scores, options.metrics);
            return;
        }
        throw std::runtime_error("bootstrap iteration " + std::to_string(it) +
                                 ": out-of-bag rows held a single class after all retries");
    });
    return summarize(runs);
}

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("cross-validation needs at least two folds");
    std::vector<int> fold(labels.size(), 0);
    Rng rng(seed);
    std::size_t offset = 0;  // negatives continue where positives stopped, balancing fold sizes
    for (int cls : {1, 0}) {
        std::vector<std::size_t> idx;
        for (std::size_t r = 0; r < labels.size(); ++r)
            if (labels[r] == cls) idx.push_back(r);
        rng.shuffle(idx);
        for (std::size_t k = 0; k < idx.size(); ++k)
            fold[idx[k]] = static_cast<int>((offset + k) % static_cast<std::size_t>(folds));
        offset += idx.size();
    }
    return fold;
}

CvResult cross_val(const FeatureMatrix& x, const Trainer& trainer, int folds, std::uint64_t seed,
                   const MetricOptions& metrics, std::size_t workers) {
    CvResult out;
    out.fold_of = stratified_folds(x.labels, folds, seed);
    out.oof.assign(x.rows(), 0.0);
    std::vector<std::optional<Metrics>> per_fold(static_cast<std::size_t>(folds));
    parallel_for(static_cast<std::size_t>(folds), workers, [&](std::size_t f) {
        std::vector<std::size_t> train, test;
        for (std::size_t r = 0; r < x.rows(); ++r)
            (out.fold_of[r] == static_cast<int>(f) ? test : train).push_back(r);
        const auto train_m = x.select_rows(train);
        const auto pos = std::count(train_m.labels.begin(), train_m.labels.end(), 1);
        if (pos == 0 || pos == static_cast<std::ptrdiff_t>(train.size()))
            throw std::runtime_error("fold " + std::to_string(f) + " has single-class training data");
        if (test.empty()) return;
        const auto test_m = x.select_rows(test);
        const auto scores = trainer(train_m, test_m);
        for (std::size_t k = 0; k < test.size(); ++k) out.oof[test[k]] = scores[k];
        const auto tpos = std::count(test_m.labels.begin(), test_m.labels.end(), 1);
        if (tpos > 0 && tpos < static_cast<std::ptrdiff_t>(test.size()))
            per_fold[f] = compute_metrics(test_m.labels, scores, metrics);
    });
    std::vector<Metrics> runs;
    for (auto& m : per_fold)
        if (m) runs.push_back(std::move(*m));
    out.fold_metrics = summarize(runs);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> assign_bins(std::span<const double> values, std::size_t bins, Binning binning,
                                     std::vector<double>& bounds) {
    if (values.empty()) throw std::invalid_argument("cannot bin an empty column");
    if (bins == 0) throw std::invalid_argument("at least one bin required");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front(), hi = sorted.back();
    std::vector<double> cuts;
    if (lo == hi) {
        spdlog::warn("heatmap axis has a single value; using one bin");
    } else if (binning == Binning::FixedWidth) {
        for (std::size_t i = 1; i < bins; ++i)
            cuts.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
    } else {
        for (std::size_t i = 1; i < bins; ++i) {
            const double c = sorted[i * sorted.size() / bins];
            if (c > lo && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
        }
    }
    bounds.clear();
    bounds.push_back(lo);
    bounds.insert(bounds.end(), cuts.begin(), cuts.end());
    bounds.push_back(hi);
    std::vector<std::size_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin());
    return out;
}

HeatmapGrid heatmap(std::span<const double> x, std::span<const double> y, std::span<const int> labels,
                    std::size_t bins_x, std::size_t bins_y, Binning binning, std::size_t min_count) {
    if (x.size() != y.size() || x.size() != labels.size()) throw std::invalid_argument("heatmap inputs differ in length");
    HeatmapGrid g;
    const auto bx = assign_bins(x, bins_x, binning, g.x_bounds);
    const auto by = assign_bins(y, bins_y, binning, g.y_bounds);
    g.bins_x = g.x_bounds.size() - 1;
    g.bins_y = g.y_bounds.size() - 1;
    g.counts.assign(g.bins_x * g.bins_y, 0);
    std::vector<double> sums(g.counts.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto c = g.cell(bx[i], by[i]);
        ++g.counts[c];
        sums[c] += labels[i];
    }
    g.means.resize(g.counts.size());
    for (std::size_t c = 0; c < g.counts.size(); ++c)
        if (g.counts[c] >= min_count && g.counts[c] > 0) g.means[c] = sums[c] / static_cast<double>(g.counts[c]);
    return g;
}

void write_heatmap_csv(const std::filesystem::path& path, const HeatmapGrid& g) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    auto label = [](const std::vector<double>& b, std::size_t i) {
        return "[" + format_double(b[i]) + ";" + format_double(b[i + 1]) + (i + 2 == b.size() ? "]" : ")");
    };
    out << "y\\x";
    for (std::size_t i = 0; i < g.bins_x; ++i) out << ',' << label(g.x_bounds, i);
    out << '\n';
    for (std::size_t j = 0; j < g.bins_y; ++j) {
        out << label(g.y_bounds, j);
        for (std::size_t i = 0; i < g.bins_x; ++i) {
            const auto& m = g.means[g.cell(i, j)];
            out << ',' << (m ? format_double(*m) : std::string("SUPPRESSED"));
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

double random_f1(double p) { return 2.0 * p / (1.0 + p); }

std::vector<GrowthPoint> corpus_growth(const FeatureMatrix& x, const Trainer& trainer, const GrowthOptions& options) {
    std::vector<GrowthPoint> out;
    for (int year = options.first_year; year <= options.last_year; ++year) {
        GrowthPoint p;
        p.year = year;
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < x.rows(); ++r)
            if (x.promotion_years[r] <= year) rows.push_back(r);
        p.rows = rows.size();
        for (auto r : rows) p.positives += x.labels[r] == 1;
        const auto negatives = p.rows - p.positives;
        if (p.positives < std::max<std::size_t>(options.min_positives, static_cast<std::size_t>(options.folds)) ||
            negatives < static_cast<std::size_t>(options.folds)) {
            p.skipped = true;
            out.push_back(p);
            continue;
        }
        const auto sub = x.select_rows(rows);
        const auto cv = cross_val(sub, trainer, options.folds, derive_seed(options.seed, static_cast<std::uint64_t>(year)),
                                  options.metrics, options.workers);
        const auto m = compute_metrics(sub.labels, cv.oof, options.metrics);
        for (const auto& [name, v] : m) {
            if (name == "AUROC") p.auroc = v;
            if (name == "F1") p.f1 = v;
        }
        const double prevalence = static_cast<double>(p.positives) / static_cast<double>(p.rows);
        p.auroc_over = p.auroc / 0.5 - 1.0;
        p.f1_over = p.f1 / random_f1(prevalence) - 1.0;
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------

FpAnalysis fp_review_analysis(const std::vector<std::string>& articles, std::span<const double> oof,
                              std::span<const int> labels, const std::map<std::string, int>& review_counts,
                              double threshold, std::size_t top_n) {
    if (articles.size() != oof.size() || articles.size() != labels.size())
        throw std::invalid_argument("fp analysis inputs differ in length");
    std::string missing;
    for (const auto& a : articles)
        if (!review_counts.count(a)) missing += (missing.empty() ? "" : ", ") + a;
    if (!missing.empty()) throw std::invalid_argument("no review count for: " + missing);

    std::array<PopulationRow, 3> rows = {PopulationRow{"sustainable-TN"}, PopulationRow{"FP"},
                                         PopulationRow{"unsustainable"}};
    std::array<double, 3> sums{};
    FpAnalysis out;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        const int reviews = review_counts.at(articles[i]);
        std::size_t k;
        if (labels[i] == 1) {
            k = 2;
        } else if (oof[i] >= threshold) {
            k = 1;
            out.ranked_fp.push_back({articles[i], oof[i], reviews});
        } else {
            k = 0;
        }
        ++rows[k].count;
        sums[k] += reviews;
    }
    for (std::size_t k = 0; k < 3; ++k) rows[k].mean_reviews = rows[k].count ? sums[k] / static_cast<double>(rows[k].count) : 0.0;
    out.table.assign(rows.begin(), rows.end());
    std::stable_sort(out.ranked_fp.begin(), out.ranked_fp.end(),
                     [](const RankedArticle& a, const RankedArticle& b) { return a.probability > b.probability; });
    if (out.ranked_fp.size() > top_n) out.ranked_fp.resize(top_n);
    return out;
}

}  // namespace wikisustain::eval
