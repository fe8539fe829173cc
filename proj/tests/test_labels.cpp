#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <unistd.h>

#include "fixtures.hpp"
#include "wikisustain/labels.hpp"

using namespace wikisustain;
using namespace wikisustain::labels;
using fixtures::article_history;
using fixtures::kDay;
using fixtures::PageBuilder;
using fixtures::ymd;

namespace {

ingest::StatusLists no_lists() { return {}; }

std::vector<ingest::RevisionRecord> talk_with(const std::string& text) {
    return {ingest::make_revision(2, "Talk:X", 1, 1, ymd(2023, 1, 1), Editor::registered("Bot"), text)};
}

}  // namespace

class LabelFixtureTest : public ::testing::TestWithParam<fixtures::LabelFixture> {};

TEST_P(LabelFixtureTest, ExpectedLabels) {
    const auto& f = GetParam();
    const auto tl = build_timeline(f.page.title, f.page, no_lists());
    EXPECT_EQ(tl.label_fa, f.label_fa);
    EXPECT_EQ(tl.label_ga, f.label_ga);
    EXPECT_FALSE(tl.inconsistent);
}

INSTANTIATE_TEST_SUITE_P(Fixtures, LabelFixtureTest, ::testing::ValuesIn(fixtures::label_fixtures()),
                         [](const auto& info) {
                             auto n = info.param.name;
                             std::replace(n.begin(), n.end(), '-', '_');
                             return n;
                         });

TEST(Milestones, DurianStyleRows) {
    const auto events = extract_milestones(talk_with(article_history(
        {{"GAN", "3 June 2006", "listed"}, {"FAC", "5 May 2007", "promoted"}, {"FAR", "2 February 2022", "demoted"}})));
    ASSERT_EQ(events.size(), 3u);
    EXPECT_EQ(events[0].kind, EventKind::Promotion);
    EXPECT_EQ(events[0].level, Level::GA);
    EXPECT_EQ(events[1].kind, EventKind::Promotion);
    EXPECT_EQ(events[1].level, Level::FA);
    EXPECT_EQ(events[2].kind, EventKind::Demotion);
    EXPECT_EQ(events[2].level, Level::FA);
}

TEST(Milestones, EmptyTalkPage) {
    EXPECT_TRUE(extract_milestones({}).empty());
    EXPECT_TRUE(extract_milestones(talk_with("")).empty());
}

TEST(Milestones, SignatureStyleDate) {
    const auto events = extract_milestones(talk_with(article_history({{"FAC", "14:02, 3 June 2022 (UTC)", "promoted"}})));
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].timestamp, make_timestamp(2022, 6, 3, 14, 2));
}

TEST(Milestones, ReviewsAndBadDates) {
    const auto parse = parse_milestones(talk_with(article_history({{"FAC", "1 May 2007", "promoted"},
                                                                   {"FAR", "1 May 2010", "kept"},
                                                                   {"GAR", "not a date", "delisted"},
                                                                   {"PR", "1 June 2011", "reviewed"}})));
    EXPECT_EQ(parse.events.size(), 1u);
    ASSERT_EQ(parse.reviews.size(), 1u);
    EXPECT_EQ(parse.reviews[0].action, "far");
    EXPECT_EQ(parse.dropped_rows, 1u);
}

TEST(Milestones, LegacyTemplates) {
    const auto events = extract_milestones(talk_with("{{GA|12 March 2009|topic=x}}\n{{DelistedGA|date=4 April 2013}}"));
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[0].kind, EventKind::Promotion);
    EXPECT_EQ(events[1].kind, EventKind::Demotion);
    EXPECT_EQ(events[1].level, Level::GA);
}

TEST(Templates, FiveRevisionsInThreeDays) {
    PageBuilder b("T");
    b.articles(ymd(2011, 1, 1), 9, "Body");
    b.articles(ymd(2011, 2, 1), 5, "{{Featured article}}", 15 * 3600);
    const auto& revs = b.page().article_revisions;
    const auto events = track_templates(revs);
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].kind, EventKind::Promotion);
    EXPECT_EQ(events[0].timestamp, revs[9].timestamp);
    EXPECT_EQ(events[0].source, EventSource::Template);
}

TEST(Templates, ThreeRevisionsInTwoDaysIgnored) {
    PageBuilder b("T");
    b.articles(ymd(2011, 1, 1), 9, "Body");
    b.articles(ymd(2011, 2, 1), 3, "{{Featured article}}");
    b.articles(ymd(2011, 2, 4), 8, "Body");
    EXPECT_TRUE(track_templates(b.page().article_revisions).empty());
}

TEST(Templates, ThirtyDayRuleAndDemotionCandidate) {
    PageBuilder b("T");
    b.articles(ymd(2011, 1, 1), 9, "Body");
    b.article(ymd(2011, 2, 1), "{{ featured_article }}");
    b.article(ymd(2011, 3, 18), "Body gone");
    // Demotion candidate alone: one revision and no time left, so it is not kept.
    auto events = track_templates(b.page().article_revisions);
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].kind, EventKind::Promotion);
    // With a horizon 30 days out the removal persists and becomes a demotion.
    events = track_templates(b.page().article_revisions, {}, ymd(2011, 4, 17));
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[1].kind, EventKind::Demotion);
    EXPECT_EQ(events[1].timestamp, ymd(2011, 3, 18));
}

TEST(Templates, AliasesConfigurable) {
    PageBuilder b("T");
    b.articles(ymd(2011, 1, 1), 6, "{{FA article}}");
    TemplateRules rules;
    EXPECT_TRUE(track_templates(b.page().article_revisions, rules).empty());
    rules.fa_aliases.push_back("fa article");
    EXPECT_EQ(track_templates(b.page().article_revisions, rules).size(), 1u);
}

TEST(Labels, DirectRules) {
    ArticleTimeline t;
    t.events = {{EventKind::Promotion, Level::GA, ymd(2010, 1, 1), EventSource::Milestones, {}}};
    assign_labels(t);
    EXPECT_EQ(t.label_ga, 0);
    EXPECT_FALSE(t.label_fa);

    t.events = {{EventKind::Promotion, Level::FA, ymd(2008, 1, 1), EventSource::Milestones, {}},
                {EventKind::Demotion, Level::FA, ymd(2012, 1, 1), EventSource::Milestones, {}},
                {EventKind::Promotion, Level::FA, ymd(2015, 1, 1), EventSource::Milestones, {}}};
    assign_labels(t);
    EXPECT_EQ(t.label_fa, 1);
    EXPECT_EQ(t.t_prom_fa, ymd(2008, 1, 1));
}

TEST(Labels, ReviewCountsAfterPromotion) {
    PageBuilder b("R");
    b.articles(ymd(2006, 1, 1), 5, "Body");
    b.talk(ymd(2016, 1, 1), article_history({{"FAR", "1 May 2006", "kept"},
                                             {"FAC", "1 May 2007", "promoted"},
                                             {"FAR", "1 May 2010", "kept"},
                                             {"FARC", "1 May 2014", "kept"}}));
    const auto tl = build_timeline("R", b.page(), no_lists());
    EXPECT_EQ(tl.label_fa, 0);
    EXPECT_EQ(tl.reviews_after_prom_fa, 2);

    // A demotion recorded without a review row still counts as one review.
    PageBuilder d("D");
    d.articles(ymd(2006, 1, 1), 5, "Body");
    d.talk(ymd(2016, 1, 1), "{{GA|1 May 2007}}{{DelistedGA|1 May 2010}}");
    EXPECT_GE(build_timeline("D", d.page(), no_lists()).reviews_after_prom_ga, 1);
}

TEST(Labels, InconsistentListing) {
    PageBuilder b("Listed");
    b.articles(ymd(2006, 1, 1), 5, "Body");
    ingest::StatusLists lists;
    lists.current_fa.insert("Listed");
    const auto tl = build_timeline("Listed", b.page(), lists);
    EXPECT_TRUE(tl.inconsistent);
    EXPECT_FALSE(tl.in_training_population(UseCase::FA));
}

TEST(Labels, DemotionBeforePromotionIgnored) {
    PageBuilder b("Odd");
    b.articles(ymd(2006, 1, 1), 5, "Body");
    b.talk(ymd(2016, 1, 1), article_history({{"FAR", "1 May 2006", "demoted"}, {"FAC", "1 May 2007", "promoted"}}));
    const auto tl = build_timeline("Odd", b.page(), no_lists());
    EXPECT_EQ(tl.label_fa, 0);
    EXPECT_FALSE(tl.diagnostics.empty());
}

TEST(Censoring, Cutoffs) {
    std::vector<ArticleTimeline> ts(3);
    ts[0].t_prom_fa = make_timestamp(2019, 3, 1);
    ts[1].t_prom_fa = make_timestamp(2018, 6, 1);
    ts[2].t_prom_ga = make_timestamp(2019, 12, 1);
    ts[2].t_prom_fa = make_timestamp(2020, 1, 1);
    apply_censoring(ts);
    EXPECT_TRUE(ts[0].censored_fa);
    EXPECT_FALSE(ts[1].censored_fa);
    EXPECT_FALSE(ts[2].censored_ga);
    EXPECT_TRUE(ts[2].censored_fa);
    ts[1].t_prom_fa = end_of_year(2018);
    apply_censoring(ts);
    EXPECT_FALSE(ts[1].censored_fa);
}

// Adding a demotion anywhere never turns a positive label negative.
TEST(LabelProperties, Monotonicity) {
    std::mt19937_64 g(11);
    for (int c = 0; c < 2000; ++c) {
        ArticleTimeline t;
        const auto n = g() % 6;
        for (std::size_t i = 0; i < n; ++i)
            t.events.push_back({g() % 2 ? EventKind::Promotion : EventKind::Demotion, g() % 2 ? Level::FA : Level::GA,
                                static_cast<Timestamp>(g() % 20) * 100 * kDay, EventSource::Milestones, {}});
        assign_labels(t);
        const auto before_fa = t.label_fa, before_ga = t.label_ga;
        t.events.push_back({EventKind::Demotion, g() % 2 ? Level::FA : Level::GA,
                            static_cast<Timestamp>(g() % 20) * 100 * kDay, EventSource::Milestones, {}});
        assign_labels(t);
        if (before_fa == 1) EXPECT_EQ(t.label_fa, 1);
        if (before_ga == 1) EXPECT_EQ(t.label_ga, 1);
    }
}

// Templates that encode the same history as the milestones table give the same labels
// without the table.
TEST(LabelProperties, SourceRobustness) {
    struct Case {
        std::vector<fixtures::Row> rows;
        std::vector<std::pair<Timestamp, std::string>> states;
    };
    const std::string fa = "{{Featured article}}", ga = "{{Good article}}";
    const std::vector<Case> cases = {
        {{{"FAC", "1 March 2010", "promoted"}, {"FAR", "1 March 2013", "demoted"}},
         {{ymd(2010, 3, 1), fa}, {ymd(2013, 3, 1), ""}}},
        {{{"GAN", "1 March 2009", "listed"}, {"FAC", "1 March 2011", "promoted"}},
         {{ymd(2009, 3, 1), ga}, {ymd(2011, 3, 1), fa}}},
        {{{"GAN", "1 March 2009", "listed"}, {"GAR", "1 March 2012", "delisted"}},
         {{ymd(2009, 3, 1), ga}, {ymd(2012, 3, 1), ""}}},
        {{{"GAN", "1 March 2008", "listed"}, {"FAC", "1 March 2010", "promoted"}, {"FAR", "1 March 2014", "demoted"}},
         {{ymd(2008, 3, 1), ga}, {ymd(2010, 3, 1), fa}, {ymd(2014, 3, 1), ""}}},
    };
    for (const auto& c : cases) {
        PageBuilder with("S"), without("S");
        for (auto* b : {&with, &without}) {
            b->articles(ymd(2007, 1, 1), 3, "Body");
            for (const auto& [t, tmpl] : c.states) b->articles(t, 8, tmpl + "\nBody", 10 * kDay);
        }
        with.talk(ymd(2020, 1, 1), article_history(c.rows));
        ingest::StatusLists lists;
        lists.snapshot_date = ymd(2023, 9, 1);
        const auto a = build_timeline("S", with.page(), lists);
        const auto b = build_timeline("S", without.page(), lists);
        EXPECT_EQ(a.label_fa, b.label_fa);
        EXPECT_EQ(a.label_ga, b.label_ga);
        EXPECT_TRUE(a.label_fa || a.label_ga);
    }
}

TEST(Serialization, TimelinesRoundTrip) {
    const auto f = fixtures::label_fixtures();
    std::vector<ArticleTimeline> ts;
    for (const auto& x : f) ts.push_back(build_timeline(x.page.title, x.page, no_lists()));
    apply_censoring(ts);
    const auto path = std::filesystem::temp_directory_path() / ("timelines-" + std::to_string(::getpid()) + ".jsonl");
    write_timelines(path, ts);
    const auto back = read_timelines(path);
    ASSERT_EQ(back.size(), ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        EXPECT_EQ(back[i].title, ts[i].title);
        EXPECT_EQ(back[i].events, ts[i].events);
        EXPECT_EQ(back[i].label_fa, ts[i].label_fa);
        EXPECT_EQ(back[i].label_ga, ts[i].label_ga);
        EXPECT_EQ(back[i].t_prom_ga, ts[i].t_prom_ga);
        EXPECT_EQ(back[i].reviews_after_prom_fa, ts[i].reviews_after_prom_fa);
    }
    std::filesystem::remove(path);
}
