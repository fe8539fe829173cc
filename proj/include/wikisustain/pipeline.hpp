#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wikisustain/discussion.hpp"
#include "wikisustain/eval.hpp"
#include "wikisustain/gbt.hpp"
#include "wikisustain/labels.hpp"

namespace wikisustain::pipeline {

/// Invalid configuration or missing input; the CLI exits with status 2.
class UsageError : public std::runtime_error {
public:
    UsageError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// A stage that started but did not finish; the CLI exits with status 1.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct HeatmapSpec {
    std::string x;
    std::string y;
    std::size_t bins_x = 4;
    std::size_t bins_y = 4;
    eval::Binning binning = eval::Binning::Quantile;
};

struct PipelineConfig {
    struct Paths {
        std::filesystem::path dump;
        std::string dump_format = "auto";  ///< "xml", "jsonl" or "auto" (by extension)
        ingest::StatusListPaths lists;
        std::filesystem::path workdir;
        std::filesystem::path registry;  ///< WikiProject registry JSON (registry.source == "file")
        std::filesystem::path sidecar;   ///< score CSV for the import scorer
    } paths;
    std::optional<Timestamp> snapshot;
    UseCase use_case = UseCase::FA;
    labels::CensoringCutoffs censoring;
    labels::TimelineOptions labels;
    struct Registry {
        std::string source = "file";  ///< "file" or "corpus"
        std::vector<std::string> removed;
        std::size_t top = 250;
    } registry;
    discussion::ScorerBinding scorer;
    std::size_t index_memory_records = std::size_t{1} << 22;
    model::GbtParams model;
    struct Eval {
        std::size_t bootstrap_iterations = 100;
        int folds = 5;
        eval::MetricOptions metrics;
        std::size_t heatmap_min_count = 10;
        std::vector<HeatmapSpec> heatmaps;
        int growth_first_year = 2005;
        int growth_last_year = 2018;
        std::size_t growth_min_positives = 20;
        std::size_t fp_top_n = 100;
        std::size_t shap_top_n = 10;
        bool ablation = true;
        std::size_t leakage_audit_articles = 5;
    } eval;
    std::uint64_t seed = 42;
    std::size_t workers = 1;

    /// Every setting with defaults filled in, relative paths as written.
    nlohmann::ordered_json to_json() const;
};

/// Parses and validates a config document. Relative paths resolve against `base_dir`.
/// Throws UsageError naming the offending field path (e.g. "eval.folds").
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

struct StageOutcome {
    std::string stage;
    bool skipped = false;
};

/// Runs pipeline stages against one config. Outputs land under paths.workdir:
///   pages/                    per-article PageHistory JSON
///   timelines.jsonl           labels, plus inconsistent.csv
///   experience_index/         corpus-wide edit index
///   <uc>/matrix.csv           feature matrix, plus matrix.meta.json and at_risk.csv
///   <uc>/model.json
///   <uc>/report/              evaluation bundle
/// A stage is skipped when its stamp matches the hash of its inputs and outputs.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    StageOutcome ingest();
    StageOutcome label();
    StageOutcome featurize();
    StageOutcome train();
    StageOutcome evaluate();
    StageOutcome report();
    std::vector<StageOutcome> all();

    StageOutcome run(const std::string& stage);
    const PipelineConfig& config() const { return config_; }

private:
    std::filesystem::path uc_dir() const;
    PipelineConfig config_;
};

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"ingest", "label", "featurize", "train", "evaluate", "report"};
    return names;
}

}  // namespace wikisustain::pipeline
