#include "wikisustain/assembly.hpp"

#include <stdexcept>

#include "wikisustain/network.hpp"

namespace wikisustain::assembly {

std::vector<Family> families(UseCase uc, const features::WikiProjectRegistry& registry) {
    return {
        {"EditHistory", features::edit_history_feature_names(uc), {"flag-Promotion-At-Birth"}},
        {"TeamComposition", features::team_composition_feature_names(), {"flag-No-Registered-Editors", "flag-No-Discussers"}},
        {"Topics", features::topic_feature_names(registry), {}},
        {"Experience", experience::experience_feature_names(), {}},
        {"Network", network::graph_feature_names(), {"flag-Degenerate-Network"}},
        {"DiscussionLinguistic", discussion::linguistic_feature_names(), {"flag-No-Comments"}},
        {"DiscussionStructural", discussion::structural_feature_names(), {"flag-No-Discussion-Threads"}},
    };
}

std::vector<std::string> matrix_columns(UseCase uc, const features::WikiProjectRegistry& registry,
                                        std::size_t* feature_count) {
    std::vector<std::string> cols, flags;
    for (const auto& f : families(uc, registry)) {
        cols.insert(cols.end(), f.columns.begin(), f.columns.end());
        flags.insert(flags.end(), f.flags.begin(), f.flags.end());
    }
    if (feature_count) *feature_count = cols.size();
    cols.insert(cols.end(), flags.begin(), flags.end());
    return cols;
}

namespace {

void append(std::vector<double>& row, std::vector<double>& flags, const features::FeatureBlock& b,
            const Family& family) {
    if (b.values.size() != family.columns.size())
        throw std::logic_error(family.name + " produced " + std::to_string(b.values.size()) + " values");
    for (std::size_t i = 0; i < b.values.size(); ++i) {
        if (b.values[i].first != family.columns[i])
            throw std::logic_error(family.name + " column order changed at " + b.values[i].first);
        row.push_back(b.values[i].second);
    }
    for (const auto& f : family.flags) flags.push_back(b.flag(f) ? 1.0 : 0.0);
}

}  // namespace

ArticleFeatures compute_article_features(const ingest::PageHistory& page, const labels::ArticleTimeline& timeline,
                                         const FeatureContext& ctx) {
    const auto t_prom = timeline.t_prom(ctx.use_case);
    if (!t_prom) throw std::runtime_error(page.title + ": no promotion for the active use case");
    if (!ctx.registry || !ctx.scorer || !ctx.index) throw std::logic_error("incomplete feature context");
    const auto fams = families(ctx.use_case, *ctx.registry);
    std::string family = fams[0].name;
    try {
        const auto w = features::make_window(page, *t_prom);
        ArticleFeatures out;
        std::vector<double> flags;

        append(out.row, flags, features::edit_history_features(w, ctx.use_case, timeline), fams[0]);

        family = "Discussions";
        const auto comments = discussion::parse_discussions(w.talk_revisions, *t_prom);
        std::vector<discussion::LinguisticScores> scores;
        scores.reserve(comments.size());
        for (const auto& c : comments) scores.push_back(ctx.scorer->score(page.title, c));

        family = fams[1].name;
        append(out.row, flags,
               features::team_composition_features(w, features::discusser_comment_counts(comments)), fams[1]);

        family = fams[2].name;
        const auto topics = features::topic_features(w.talk_revisions, *ctx.registry);
        for (int v : topics.values) out.row.push_back(static_cast<double>(v));
        out.topic_unrated = topics.unrated;
        out.topic_unknown = topics.unknown;

        family = fams[3].name;
        const auto id = ctx.index->article_id(page.title);
        if (!id) throw std::runtime_error("article missing from the experience index");
        append(out.row, flags, experience::experience_features(*id, w, *ctx.index), fams[3]);

        family = fams[4].name;
        append(out.row, flags, network::graph_features(network::build_edit_graph(w)), fams[4]);

        family = fams[5].name;
        append(out.row, flags, discussion::linguistic_aggregates(comments, scores, ctx.binding), fams[5]);

        family = fams[6].name;
        append(out.row, flags, discussion::structural_features(comments), fams[6]);

        out.row.insert(out.row.end(), flags.begin(), flags.end());
        return out;
    } catch (const std::exception& e) {
        throw std::runtime_error(page.title + " [" + family + "]: " + e.what());
    }
}

std::vector<std::pair<std::string, std::vector<std::string>>> ablation_groups(UseCase uc,
                                                                              const features::WikiProjectRegistry& r) {
    const auto fams = families(uc, r);
    auto group = [](std::initializer_list<const Family*> parts) {
        std::vector<std::string> cols;
        for (const auto* f : parts) cols.insert(cols.end(), f->columns.begin(), f->columns.end());
        for (const auto* f : parts) cols.insert(cols.end(), f->flags.begin(), f->flags.end());
        return cols;
    };
    return {
        {"Baseline", {"Num-of-Revisions-Normalized"}},
        {"Network", group({&fams[4]})},
        {"Topics", group({&fams[2]})},
        {"TeamComposition", group({&fams[1]})},
        {"Discussions", group({&fams[5], &fams[6]})},
        {"EditHistory", group({&fams[0]})},
        {"Experience", group({&fams[3]})},
        {"All", matrix_columns(uc, r)},
    };
}

ingest::PageHistory truncate_after(const ingest::PageHistory& page, Timestamp t_prom) {
    ingest::PageHistory out;
    out.title = page.title;
    for (const auto& r : page.article_revisions)
        if (r.timestamp <= t_prom) out.article_revisions.push_back(r);
    for (const auto& r : page.talk_revisions)
        if (r.timestamp <= t_prom) out.talk_revisions.push_back(r);
    return out;
}

}  // namespace wikisustain::assembly
