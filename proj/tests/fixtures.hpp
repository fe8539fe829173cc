#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "wikisustain/core.hpp"
#include "wikisustain/discussion.hpp"
#include "wikisustain/ingest.hpp"

namespace fixtures {

using wikisustain::Editor;
using wikisustain::make_timestamp;
using wikisustain::Timestamp;
using wikisustain::ingest::PageHistory;

constexpr Timestamp kDay = wikisustain::kSecondsPerDay;

/// Appends revisions to a page with increasing revision ids.
class PageBuilder {
public:
    explicit PageBuilder(std::string title) { page_.title = std::move(title); }

    PageBuilder& article(Timestamp t, std::string text, std::string user = "Editor") {
        page_.article_revisions.push_back(wikisustain::ingest::make_revision(
            1, page_.title, 0, next_id_++, t, Editor::registered(std::move(user)), std::move(text)));
        return *this;
    }
    /// `n` revisions one day apart with the same body.
    PageBuilder& articles(Timestamp start, int n, const std::string& text, Timestamp step = kDay) {
        for (int i = 0; i < n; ++i) article(start + i * step, text + " v" + std::to_string(next_id_));
        return *this;
    }
    PageBuilder& talk(Timestamp t, std::string text, std::string user = "Bot") {
        page_.talk_revisions.push_back(wikisustain::ingest::make_revision(
            2, "Talk:" + page_.title, 1, next_id_++, t, Editor::registered(std::move(user)), std::move(text)));
        return *this;
    }
    const PageHistory& page() const { return page_; }

private:
    PageHistory page_;
    std::int64_t next_id_ = 1;
};

struct Row {
    std::string action, date, result;
};

inline std::string article_history(const std::vector<Row>& rows) {
    std::string s = "{{ArticleHistory\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto k = "action" + std::to_string(i + 1);
        s += "|" + k + "=" + rows[i].action + "\n|" + k + "date=" + rows[i].date + "\n|" + k +
             "result=" + rows[i].result + "\n";
    }
    return s + "|currentstatus=\n}}\n";
}

struct LabelFixture {
    std::string name;
    PageHistory page;
    std::optional<int> label_fa;
    std::optional<int> label_ga;
};

inline Timestamp ymd(int y, unsigned m, unsigned d) { return make_timestamp(y, m, d, 12); }

/// Twelve small histories with hand-derived labels.
inline std::vector<LabelFixture> label_fixtures() {
    std::vector<LabelFixture> out;
    const std::string fa = "{{Featured article}}\nBody";
    const std::string ga = "{{good article}}\nBody";

    {
        PageBuilder b("Durian");
        b.articles(ymd(2004, 1, 1), 10, "Body");
        b.talk(ymd(2022, 6, 1), article_history({{"GAN", "3 June 2006", "listed"},
                                                 {"FAC", "14:02, 3 June 2007 (UTC)", "promoted"},
                                                 {"FAR", "2 February 2022", "demoted"}}));
        out.push_back({"ga-fa-demoted", b.page(), 1, 1});
    }
    {
        PageBuilder b("Stable GA");
        b.articles(ymd(2009, 1, 1), 8, "Body");
        b.talk(ymd(2010, 5, 2), article_history({{"GAN", "1 May 2010", "listed"}}));
        out.push_back({"ga-only", b.page(), std::nullopt, 0});
    }
    {
        PageBuilder b("Repromoted");
        b.articles(ymd(2007, 1, 1), 8, "Body");
        b.talk(ymd(2015, 6, 1), article_history({{"FAC", "1 March 2008", "promoted"},
                                                 {"FAR", "1 March 2012", "demoted"},
                                                 {"FAC", "1 March 2015", "promoted"}}));
        out.push_back({"repromoted-after-demotion", b.page(), 1, std::nullopt});
    }
    {
        // FA template for 3 revisions over 2 days: below both thresholds.
        PageBuilder b("Flap Below");
        b.articles(ymd(2011, 1, 1), 5, "Body");
        b.articles(ymd(2011, 2, 1), 3, fa);
        b.articles(ymd(2011, 2, 4), 10, "Body", 10 * kDay);
        b.talk(ymd(2010, 5, 2), article_history({{"GAN", "1 May 2010", "listed"}}));
        out.push_back({"template-flap-below-thresholds", b.page(), std::nullopt, 0});
    }
    {
        // 5 revisions in 3 days meets the revision rule; the removal then persists.
        PageBuilder b("Flap Above");
        b.articles(ymd(2011, 1, 1), 5, "Body");
        b.articles(ymd(2011, 2, 1), 5, fa, kDay / 2 + 3600);
        b.articles(ymd(2011, 2, 5), 10, "Body", 10 * kDay);
        out.push_back({"template-five-revisions", b.page(), 1, std::nullopt});
    }
    {
        // One revision with the template, next one 45 days later removes it: 30-day rule.
        PageBuilder b("Long Gap");
        b.articles(ymd(2012, 1, 1), 5, "Body");
        b.article(ymd(2012, 2, 1), fa);
        b.articles(ymd(2012, 3, 17), 8, "Body", 10 * kDay);
        out.push_back({"template-thirty-days", b.page(), 1, std::nullopt});
    }
    {
        PageBuilder b("Merged Promotion");
        b.articles(ymd(2011, 6, 1), 5, "Body");
        b.articles(ymd(2012, 3, 10), 10, fa, 20 * kDay);
        b.talk(ymd(2012, 3, 2), article_history({{"FAC", "1 March 2012", "promoted"}}));
        out.push_back({"milestone-template-duplicate", b.page(), 0, std::nullopt});
    }
    {
        PageBuilder b("Merged Demotion");
        b.articles(ymd(2009, 6, 1), 3, "Body");
        b.articles(ymd(2010, 1, 5), 12, fa, 30 * kDay);
        b.articles(ymd(2014, 5, 10), 6, "Body", 10 * kDay);
        b.talk(ymd(2014, 5, 2), article_history({{"FAC", "1 January 2010", "promoted"},
                                                 {"FAR", "1 May 2014", "demoted"}}));
        out.push_back({"milestone-template-demotion-duplicate", b.page(), 1, std::nullopt});
    }
    {
        // GA template swapped for the FA template on promotion.
        PageBuilder b("Template Swap");
        b.articles(ymd(2007, 6, 1), 3, "Body");
        b.articles(ymd(2008, 1, 10), 8, ga, 20 * kDay);
        b.articles(ymd(2009, 6, 1), 8, fa, 20 * kDay);
        out.push_back({"ga-to-fa-template-swap", b.page(), 0, 0});
    }
    {
        PageBuilder b("Legacy Delisted");
        b.articles(ymd(2008, 1, 1), 6, "Body");
        b.talk(ymd(2013, 5, 1), "{{GA|12 March 2009}}\n{{DelistedGA|4 April 2013}}\n");
        out.push_back({"ga-delisted-legacy", b.page(), std::nullopt, 1});
    }
    {
        PageBuilder b("Relisted GA");
        b.articles(ymd(2008, 1, 1), 6, "Body");
        b.talk(ymd(2014, 7, 1), article_history({{"GAN", "2 February 2009", "listed"},
                                                 {"GAR", "5 May 2012", "delisted"},
                                                 {"GAN", "9 June 2014", "listed"}}));
        out.push_back({"ga-relisted", b.page(), std::nullopt, 1});
    }
    {
        PageBuilder b("Demoted Then GA");
        b.articles(ymd(2006, 1, 1), 6, "Body");
        b.talk(ymd(2013, 9, 1), article_history({{"FAC", "7 July 2007", "promoted"},
                                                 {"FAR", "8 August 2011", "demoted"},
                                                 {"GAN", "9 September 2013", "listed"}}));
        out.push_back({"fa-demoted-then-ga", b.page(), 1, 0});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Discussion fixture: 4 threads, 12 signed comments by A, B, C and D.

inline std::string sig(const std::string& user, const std::string& hhmm) {
    return " [[User:" + user + "|" + user + "]] ([[User talk:" + user + "|talk]]) " + hhmm + ", 1 March 2015 (UTC)";
}

inline std::string structural_talk_text() {
    std::string t = "{{WikiProject Plants|importance=High}}\n";
    t += "== Lead ==\n";
    t += "The lead is too short." + sig("A", "00:00") + "\n";
    t += ":I can expand it." + sig("B", "00:10") + "\n";
    t += "::Thanks." + sig("A", "00:30") + "\n";
    t += "== Sources ==\n";
    t += "Several claims lack citations." + sig("C", "01:00") + "\n";
    t += ":Added two." + sig("A", "01:20") + "\n";
    t += ":Which ones?" + sig("B", "01:40") + "\n";
    t += "::The dates in the history section." + sig("C", "02:00") + "\n";
    t += "== Images ==\n";
    t += "The infobox image is blurry." + sig("D", "03:00") + "\n";
    t += "== Dates ==\n";
    t += "Date format is inconsistent." + sig("B", "04:00") + "\n";
    t += ":Fixed most." + sig("D", "04:05") + "\n";
    t += "::Looks good." + sig("B", "04:30") + "\n";
    t += "A separate point on date ranges." + sig("A", "05:00") + "\n";
    return t;
}

/// Comment ids whose block was changed by a second editor.
inline std::vector<int> structural_mixed_ids() { return {2, 5, 11}; }

/// Values worked out by hand from the thread layout:
///   per-discusser comments A 4, B 4, C 2, D 2; threads hold {A,B}, {A,B,C}, {D}, {A,B,D};
///   reply pairs AB, AC, BC, BD; co-thread pairs AB, AC, BC, AD, BD;
///   roots 1, 4, 8, 9, 12 of which 1, 4, 9 drew replies after 600, 1200 and 300 seconds.
inline std::vector<std::pair<std::string, double>> structural_expected() {
    return {{"Num-of-Discussions", 4},
            {"Num-of-Comments", 12},
            {"Num-of-Discussers", 4},
            {"Discussers-Gini", 1.0 / 6.0},
            {"Mean-Discussers", 2.25},
            {"Median-Discussers", 2.5},
            {"Mixed-Discussers-Comments", 0.25},
            {"Direct-Discusser-Interactions", 4},
            {"Indirect-Discusser-Interactions", 5},
            {"Mean-Triangles-Direct-Interactions", 0.75},
            {"Mean-Triangles-Indirect-Interactions", 1.5},
            {"Mean-Depth", 1.5},
            {"Mean-Comments", 3},
            {"Mean-Responded-Comments", 0.6},
            {"Time-to-Reply", 700}};
}

inline std::vector<wikisustain::discussion::Comment> structural_comments() {
    auto comments = wikisustain::discussion::parse_talk_text(structural_talk_text());
    for (auto& c : comments)
        for (int id : structural_mixed_ids())
            if (c.comment_id == id) c.distinct_revisers = 2;
    return comments;
}

}  // namespace fixtures
