#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "wikisustain/discussion.hpp"
#include "wikisustain/features.hpp"
#include "wikisustain/labels.hpp"

namespace wikisustain::features {

inline constexpr std::size_t kTopicCount = 247;

std::vector<std::string> edit_history_feature_names(UseCase uc);

/// Editors, revisions, days to promotion, revert fraction, the two normalized counts and
/// (FA only) Was-a-Good-Article. Sets "flag-Promotion-At-Birth" when t_prom == t_birth.
FeatureBlock edit_history_features(const WindowedHistory& w, UseCase uc, const labels::ArticleTimeline& timeline);

std::vector<std::string> team_composition_feature_names();

/// Registered discusser -> number of comments in the window.
std::map<std::string, double> discusser_comment_counts(const std::vector<discussion::Comment>& comments);

/// Editors-Gini, IP-Based-Edits-Percentage, Editors-Continue-To-Talk,
/// Discussers-Contribute-To-Article and Distribution-Diff.
FeatureBlock team_composition_features(const WindowedHistory& w, const std::map<std::string, double>& discussers);

// ---------------------------------------------------------------------------
// Topics.

/// Ordered WikiProject names used as topic columns, plus aliases.
class WikiProjectRegistry {
public:
    struct Entry {
        std::string name;
        std::vector<std::string> aliases;
        bool removed = false;
    };

    WikiProjectRegistry() = default;
    explicit WikiProjectRegistry(std::vector<Entry> entries);

    /// JSON array of {name, aliases, removed}.
    static WikiProjectRegistry from_json(const nlohmann::json& j);
    static WikiProjectRegistry load(const std::filesystem::path& path);
    /// Top `top` projects by article count (ties by name), with `removed` marked.
    static WikiProjectRegistry build_from_counts(const std::map<std::string, std::size_t>& counts,
                                                 const std::vector<std::string>& removed, std::size_t top = 250);

    nlohmann::json to_json() const;
    /// Active (non-removed) project names in column order.
    const std::vector<std::string>& names() const { return active_; }
    std::size_t size() const { return active_.size(); }
    /// Column of a project given its name or alias, in any case or spacing.
    std::optional<std::size_t> index_of(std::string_view project) const;
    /// Hash of the active column list.
    std::string version() const;

private:
    std::vector<Entry> entries_;
    std::vector<std::string> active_;
    std::unordered_map<std::string, std::size_t> lookup_;
};

std::string normalize_project_name(std::string_view name);

/// Project named by a banner template ("WikiProject Plants" -> "plants"), if any.
std::optional<std::string> banner_project(std::string_view template_name);

struct TopicResult {
    std::vector<int> values;  ///< one Likert value per registry column
    std::size_t unrated = 0;  ///< banners without a usable importance
    std::size_t unknown = 0;  ///< banners for projects outside the registry
};

/// Likert importance (Top 4, High 3, Mid 2, Low 1, unrated 1, absent 0) from the banners
/// on the latest talk revision of the window.
TopicResult topic_features(std::span<const ingest::RevisionRecord> talk_window, const WikiProjectRegistry& registry);

std::vector<std::string> topic_feature_names(const WikiProjectRegistry& registry);

/// Project -> number of articles with that banner anywhere in their latest talk revision.
void count_banners(std::string_view talk_text, std::map<std::string, std::size_t>& counts);

}  // namespace wikisustain::features
