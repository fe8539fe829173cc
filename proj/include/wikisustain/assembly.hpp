#pragma once

#include <map>
#include <string>
#include <vector>

#include "wikisustain/article_features.hpp"
#include "wikisustain/discussion.hpp"
#include "wikisustain/experience.hpp"
#include "wikisustain/labels.hpp"
#include "wikisustain/matrix.hpp"

namespace wikisustain::assembly {

struct FeatureContext {
    UseCase use_case = UseCase::FA;
    const features::WikiProjectRegistry* registry = nullptr;
    const discussion::LinguisticScorer* scorer = nullptr;
    discussion::ScorerBinding binding;
    const experience::ExperienceIndex* index = nullptr;
};

/// Family name and its columns, in matrix order.
struct Family {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::string> flags;
};

/// EditHistory, TeamComposition, Topics, Experience, Network, DiscussionLinguistic,
/// DiscussionStructural.
std::vector<Family> families(UseCase uc, const features::WikiProjectRegistry& registry);

/// Explanatory columns (326 for FA, 325 for GA) followed by the flag columns.
std::vector<std::string> matrix_columns(UseCase uc, const features::WikiProjectRegistry& registry,
                                        std::size_t* feature_count = nullptr);

struct ArticleFeatures {
    std::vector<double> row;  ///< matrix_columns order
    std::size_t topic_unrated = 0;
    std::size_t topic_unknown = 0;
};

/// Every feature of one article over its window ending at the promotion of the active
/// use case. Throws std::runtime_error naming the article and family on failure.
ArticleFeatures compute_article_features(const ingest::PageHistory& page, const labels::ArticleTimeline& timeline,
                                         const FeatureContext& ctx);

/// Column groups for the ablation runs: the six families (both discussion families form
/// Discussions), Baseline and All. Each family group carries its own flag columns; All
/// is every matrix column.
std::vector<std::pair<std::string, std::vector<std::string>>> ablation_groups(UseCase uc,
                                                                              const features::WikiProjectRegistry& r);

/// Copy of `page` without any revision dated after t_prom.
ingest::PageHistory truncate_after(const ingest::PageHistory& page, Timestamp t_prom);

}  // namespace wikisustain::assembly
