#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wikisustain/core.hpp"
#include "wikisustain/ingest.hpp"

namespace wikisustain::labels {

enum class EventKind { Promotion, Demotion };
enum class EventSource { Milestones, Template };

struct QualityEvent {
    EventKind kind = EventKind::Promotion;
    Level level = Level::FA;
    Timestamp timestamp = 0;
    EventSource source = EventSource::Milestones;
    std::optional<std::int64_t> revision_id;

    bool operator==(const QualityEvent&) const = default;
};

/// A milestone row that records a review (FAR/FARC/GAR) whatever its outcome.
struct ReviewRecord {
    Level level = Level::FA;
    Timestamp timestamp = 0;
    std::string action;
    std::string result;
};

struct MilestoneParse {
    std::vector<QualityEvent> events;
    std::vector<ReviewRecord> reviews;
    std::size_t dropped_rows = 0;  ///< rows whose date could not be parsed
};

/// Reads the ArticleHistory table (and legacy single-event templates such as
/// {{GA|date}} or {{DelistedGA|date}}) from the latest talk revision.
MilestoneParse parse_milestones(const std::vector<ingest::RevisionRecord>& talk_history);
std::vector<QualityEvent> extract_milestones(const std::vector<ingest::RevisionRecord>& talk_history);

struct TemplateRules {
    std::vector<std::string> fa_aliases = {"featured article"};
    std::vector<std::string> ga_aliases = {"good article"};
    std::size_t min_revisions = 5;
    Timestamp min_duration = 30 * kSecondsPerDay;
};

/// Presence/absence transitions of the FA and GA article templates, kept only when the
/// new state lasts for `min_revisions` revisions or `min_duration` seconds. The last
/// state lasts until `horizon` (defaults to the last revision's timestamp).
std::vector<QualityEvent> track_templates(const std::vector<ingest::RevisionRecord>& article_history,
                                          const TemplateRules& rules = {},
                                          std::optional<Timestamp> horizon = std::nullopt);

struct ArticleTimeline {
    std::string title;
    Timestamp t_birth = 0;
    std::vector<QualityEvent> events;
    std::optional<int> label_fa;
    std::optional<int> label_ga;
    bool censored_fa = false;
    bool censored_ga = false;
    std::optional<Timestamp> t_prom_fa;
    std::optional<Timestamp> t_prom_ga;
    /// Review rows dated after the first promotion, per level.
    int reviews_after_prom_fa = 0;
    int reviews_after_prom_ga = 0;
    bool inconsistent = false;
    std::vector<std::string> diagnostics;

    std::optional<int> label(UseCase uc) const { return uc == UseCase::FA ? label_fa : label_ga; }
    std::optional<Timestamp> t_prom(UseCase uc) const { return uc == UseCase::FA ? t_prom_fa : t_prom_ga; }
    bool censored(UseCase uc) const { return uc == UseCase::FA ? censored_fa : censored_ga; }
    int reviews_after_prom(UseCase uc) const {
        return uc == UseCase::FA ? reviews_after_prom_fa : reviews_after_prom_ga;
    }
    /// Labeled, consistent and not censored for this use case.
    bool in_training_population(UseCase uc) const { return !inconsistent && label(uc) && !censored(uc); }
};

struct TimelineOptions {
    TemplateRules templates;
    Timestamp duplicate_window = 45 * kSecondsPerDay;
};

ArticleTimeline build_timeline(const std::string& title, const ingest::PageHistory& page,
                               const ingest::StatusLists& lists, const TimelineOptions& options = {});

/// Label computation from an already merged event list; exposed for property tests.
void assign_labels(ArticleTimeline& timeline);

struct CensoringCutoffs {
    int fa_year = 2018;
    int ga_year = 2019;
};

void apply_censoring(std::vector<ArticleTimeline>& timelines, const CensoringCutoffs& cutoffs = {});

// Serialization: timelines.jsonl plus a CSV of inconsistent articles.
void to_json(nlohmann::json& j, const QualityEvent& e);
void from_json(const nlohmann::json& j, QualityEvent& e);
void to_json(nlohmann::json& j, const ArticleTimeline& t);
void from_json(const nlohmann::json& j, ArticleTimeline& t);

void write_timelines(const std::filesystem::path& path, const std::vector<ArticleTimeline>& timelines);
std::vector<ArticleTimeline> read_timelines(const std::filesystem::path& path);
void write_inconsistent_csv(const std::filesystem::path& path, const std::vector<ArticleTimeline>& timelines);

}  // namespace wikisustain::labels
