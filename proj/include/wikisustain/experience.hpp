#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wikisustain/features.hpp"
#include "wikisustain/labels.hpp"

namespace wikisustain::experience {

/// One registered-editor edit to a population article.
struct EditRecord {
    std::uint32_t editor = 0;
    std::uint32_t article = 0;
    std::int64_t timestamp = 0;

    auto operator<=>(const EditRecord&) const = default;
};

/// What was publicly known about an article's status at a given time.
struct ArticleStatus {
    std::optional<Timestamp> first_promotion;  ///< either level
    std::optional<Timestamp> first_demotion;   ///< either level

    static ArticleStatus from_timeline(const labels::ArticleTimeline& t);
    /// +1 promoted and not demoted before `at`, -1 demoted before `at`, else 0.
    int sign_at(Timestamp at) const;
};

/// Accumulates edits and writes the on-disk index: sorted 16-byte records
/// (editor u32, article u32, timestamp i64, little endian) in `edits.bin`, plus
/// `manifest.json` with the editor dictionary, per-editor offsets, article titles and
/// statuses, and the corpus hash. Above `memory_ceiling` buffered records the buffer is
/// flushed as a sorted run and the runs are merged at the end.
class IndexBuilder {
public:
    IndexBuilder(std::filesystem::path dir, std::vector<std::string> article_titles, std::size_t memory_ceiling);

    /// Registers the registered-editor revisions of one article.
    void add_article(std::uint32_t article, std::span<const ingest::RevisionRecord> revisions);
    void set_status(std::uint32_t article, const ArticleStatus& status);
    /// Writes the index; returns the number of runs that were merged.
    std::size_t finish(const std::string& corpus_hash);

private:
    void flush_run();

    std::filesystem::path dir_;
    std::vector<std::string> titles_;
    std::vector<ArticleStatus> statuses_;
    std::size_t ceiling_;
    std::unordered_map<std::string, std::uint32_t> editor_ids_;
    std::vector<std::string> editor_names_;
    std::vector<EditRecord> buffer_;
    std::vector<std::filesystem::path> runs_;
};

class ExperienceIndex {
public:
    static ExperienceIndex open(const std::filesystem::path& dir);
    /// Corpus hash recorded in the manifest, or nullopt when no index exists.
    static std::optional<std::string> stored_hash(const std::filesystem::path& dir);

    ExperienceIndex(ExperienceIndex&&) noexcept;
    ExperienceIndex& operator=(ExperienceIndex&&) noexcept;
    ~ExperienceIndex();

    std::optional<std::uint32_t> article_id(const std::string& title) const;
    std::optional<std::uint32_t> editor_id(const std::string& name) const;
    const ArticleStatus& status(std::uint32_t article) const { return statuses_.at(article); }
    /// All records of one editor, sorted by (article, timestamp). Thread-safe.
    std::vector<EditRecord> records(std::uint32_t editor) const;
    std::size_t record_count() const { return total_; }

private:
    ExperienceIndex() = default;
    int fd_ = -1;
    std::size_t total_ = 0;
    std::vector<std::uint64_t> offsets_;  ///< editor id -> first record; one extra sentinel
    std::unordered_map<std::string, std::uint32_t> editors_;
    std::unordered_map<std::string, std::uint32_t> articles_;
    std::vector<ArticleStatus> statuses_;
};

std::vector<std::string> experience_feature_names();

/// Experience-Sum, Experience-Weighted, Credibility-Sum and Credibility-Weighted for
/// article `self` over its window. Foreign edits and foreign status changes count only
/// when dated before t_prom.
features::FeatureBlock experience_features(std::uint32_t self, const features::WindowedHistory& w,
                                           const ExperienceIndex& index);

}  // namespace wikisustain::experience
