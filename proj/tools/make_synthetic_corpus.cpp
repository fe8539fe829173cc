// Writes a small synthetic corpus: a revision dump, the four status lists and a
// pipeline config. Output depends only on the seed and the article count.

#include <CLI11.hpp>
#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wikisustain/article_features.hpp"
#include "wikisustain/core.hpp"
#include "wikisustain/eval.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using wikisustain::Timestamp;
using wikisustain::eval::Rng;

namespace {

constexpr Timestamp kDay = wikisustain::kSecondsPerDay;
constexpr Timestamp kYear = 365 * kDay;

enum class Kind { DirectFa, DirectFaDemoted, GaFa, GaFaDemoted, Ga, GaDelisted, FaCensored, Unlabeled };

struct Plan {
    std::string title;
    Kind kind;
    Timestamp birth = 0;
    std::optional<Timestamp> ga, fa, ga_dem, fa_dem;
    std::vector<Timestamp> kept_reviews;  ///< FAR/GAR rows that kept the status
    int team = 5;
    int revisions = 30;
};

struct Rev {
    Timestamp ts;
    std::string user;  ///< empty for anonymous
    std::string ip;
    std::string comment;
    std::string text;
};

struct Comment {
    Timestamp ts;
    int depth;
    std::string user;
    std::string ip;
    std::string body;
    std::size_t thread;
};

const std::vector<std::string> kUsers = {
    "Ealdgyth",   "Casliber",   "Brianboulton", "Sandy Georgia", "Tim riley",  "Wehwalt",     "Dank",
    "Ceoil",      "Nikkimaria", "Hawkeye7",     "Gog the Mild",  "Iazyges",    "Mike Christie", "Jimfbleak",
    "Moisejp",    "Aoba47",     "Usernameunique", "Ian Rose",    "Laser brain", "Graham Beards", "SchroCat",
    "Cassianto",  "Ssven2",     "Parsecboy",    "Sturmvogel 66", "Cwmhiraeth", "FunkMonk",    "Jens Lallensack",
    "Lingzhi",    "Hog Farm",   "Eddie891",     "Z1720",         "Buidhe",     "Indy beetle", "Femke",
    "Ajpolino",   "Chipmunkdavis", "Serial Number 54129", "Harrias", "Kusma"};

const std::vector<std::string> kReviewers = {"FAC bot", "GA bot", "Review bot"};

const std::vector<std::string> kOpeners = {
    "I think the lead could be expanded a bit.",
    "Thanks for the great work on the history section, it reads well.",
    "The sources in the second paragraph seem unclear to me.",
    "Furthermore, the citation format is inconsistent regarding page numbers.",
    "This section is clearly wrong and must be rewritten.",
    "Perhaps we should merge the two infobox images?",
    "hey guys, gonna fix the refs later ok",
    "Please could someone check the image licences? I appreciate it.",
    "The prose here is poor and the structure is a problem.",
    "Regarding the dates, the sources definitely agree on 1854."};

const std::vector<std::string> kReplies = {
    "Agree, thanks.",
    "Done, please have another look.",
    "I disagree; the current wording is accurate and supported by the sources.",
    "Maybe, but I am unsure this helps the reader.",
    "This is nonsense, stop reverting it.",
    "Good point, fixed.",
    "yeah cool, whatever works",
    "Certainly. Accordingly I have restructured the paragraph.",
    "Thank you kindly for the review.",
    "That seems like a minor problem, probably fine."};

const char* kMonths[] = {"January", "February", "March",     "April",   "May",      "June",
                         "July",    "August",   "September", "October", "November", "December"};

/// "5 March 2010" and "12:34" from a timestamp.
std::pair<std::string, std::string> wiki_date(Timestamp t) {
    const auto iso = wikisustain::format_iso8601(t);  // YYYY-MM-DDTHH:MM:SSZ
    const int month = std::stoi(iso.substr(5, 2));
    const int day = std::stoi(iso.substr(8, 2));
    return {std::to_string(day) + " " + kMonths[month - 1] + " " + iso.substr(0, 4), iso.substr(11, 5)};
}

std::string signature(const std::string& user, const std::string& ip, Timestamp t) {
    const auto [date, clock] = wiki_date(t);
    const std::string link = user.empty() ? "[[Special:Contributions/" + ip + "|" + ip + "]]"
                                          : "[[User:" + user + "|" + user + "]] ([[User talk:" + user + "|talk]])";
    return link + " " + clock + ", " + date + " (UTC)";
}

class Generator {
public:
    Generator(std::uint64_t seed, std::vector<std::string> projects) : rng_(seed), projects_(std::move(projects)) {}

    double uniform() { return static_cast<double>(rng_.below(1'000'000)) / 1e6; }
    Timestamp between(Timestamp a, Timestamp b) { return a + static_cast<Timestamp>(uniform() * static_cast<double>(b - a)); }
    std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_.below(n)); }
    /// Noon UTC of the day containing `t`; events fall on whole days like milestone dates.
    static Timestamp noon(Timestamp t) { return t - t % kDay + kDay / 2; }

    Plan plan(std::size_t i, Kind kind) {
        Plan p;
        p.kind = kind;
        p.title = title(i);
        const bool fragile = kind == Kind::DirectFaDemoted || kind == Kind::GaFaDemoted || kind == Kind::GaDelisted;
        p.team = fragile ? 3 + static_cast<int>(pick(4)) : 6 + static_cast<int>(pick(10));
        p.revisions = fragile ? 15 + static_cast<int>(pick(15)) : 30 + static_cast<int>(pick(30));
        p.birth = noon(between(wikisustain::make_timestamp(2003, 1, 1), wikisustain::make_timestamp(2009, 12, 31))) -
                  3 * 3600;
        const auto b = p.birth;
        switch (kind) {
            case Kind::DirectFa:
                p.fa = noon(b + between(kYear * 3 / 2, 5 * kYear));
                if (pick(2) == 0) p.kept_reviews.push_back(noon(*p.fa + between(kYear, 4 * kYear)));
                break;
            case Kind::DirectFaDemoted:
                p.fa = noon(b + between(kYear / 3, 3 * kYear));
                p.fa_dem = noon(*p.fa + between(kYear, 4 * kYear));
                break;
            case Kind::GaFa:
                p.ga = noon(b + between(kYear, 3 * kYear));
                p.fa = noon(*p.ga + between(kYear / 3, 2 * kYear));
                break;
            case Kind::GaFaDemoted:
                p.ga = noon(b + between(kYear / 2, 2 * kYear));
                p.fa = noon(*p.ga + between(kYear / 4, kYear));
                p.fa_dem = noon(*p.fa + between(kYear, 3 * kYear));
                break;
            case Kind::Ga:
                p.ga = noon(b + between(kYear, 5 * kYear));
                if (pick(2) == 0) p.kept_reviews.push_back(noon(*p.ga + between(kYear, 3 * kYear)));
                break;
            case Kind::GaDelisted:
                p.ga = noon(b + between(kYear / 3, 3 * kYear));
                p.ga_dem = noon(*p.ga + between(kYear, 3 * kYear));
                break;
            case Kind::FaCensored:
                p.birth = noon(between(wikisustain::make_timestamp(2014, 1, 1), wikisustain::make_timestamp(2016, 12, 31)));
                p.fa = noon(between(wikisustain::make_timestamp(2019, 2, 1), wikisustain::make_timestamp(2020, 10, 31)));
                break;
            case Kind::Unlabeled:
                break;
        }
        return p;
    }

    std::vector<Rev> article_history(const Plan& p) {
        const Timestamp end = wikisustain::make_timestamp(2022, 12, 31);
        const auto team = team_of(p);
        std::vector<Timestamp> times = {p.birth};
        for (int k = 1; k < p.revisions; ++k) times.push_back(between(p.birth + 3600, end));
        // Whoever changes the status template does so an hour after the decision.
        for (auto e : {p.ga, p.fa, p.ga_dem, p.fa_dem})
            if (e) times.push_back(*e + 3600);
        std::sort(times.begin(), times.end());

        std::vector<Rev> revs;
        int sentences = 1;
        for (auto ts : times) {
            Rev r;
            r.ts = ts;
            if (pick(10) == 0 && !revs.empty()) {
                r.ip = "192.0.2." + std::to_string(1 + pick(200));
            } else {
                r.user = team[weighted(team.size())];
            }
            const std::array<std::optional<Timestamp>, 4> events = {p.ga, p.fa, p.ga_dem, p.fa_dem};
            const bool status_change = std::any_of(events.begin(), events.end(), [&](const std::optional<Timestamp>& e) {
                return e && *e + 3600 == ts;
            });
            if (revs.size() >= 2 && !status_change && pick(12) == 0) {
                r.text = revs[revs.size() - 2].text;
                r.comment = "Reverted edits by " + revs.back().user + " to last version";
            } else {
                sentences += 1 + static_cast<int>(pick(3));
                r.text = article_text(p, ts, sentences);
                r.comment = status_change ? "status update" : (pick(3) == 0 ? "copyedit" : "");
            }
            if (status_change) r.user = team.front();
            if (revs.size() >= 2 && r.text == revs[revs.size() - 2].text) {
                // Keep the status template in sync even on reverts.
                r.text = article_text(p, ts, sentences);
            }
            revs.push_back(std::move(r));
        }
        return revs;
    }

    std::vector<Rev> talk_history(const Plan& p) {
        const auto team = team_of(p);
        const Timestamp end = wikisustain::make_timestamp(2022, 12, 31);
        const Timestamp first = p.birth + between(kDay, 60 * kDay);
        banners_ = banners();

        std::vector<Comment> comments;
        std::vector<std::string> headings;
        const Timestamp pivot = p.fa ? *p.fa : (p.ga ? *p.ga : end - kYear);
        const std::size_t before = 2 + pick(4), after = 1 + pick(3);
        for (std::size_t t = 0; t < before + after; ++t) {
            const Timestamp start = t < before ? between(first, std::max(first + kDay, pivot - 10 * kDay))
                                               : between(pivot + kDay, end - 30 * kDay);
            headings.push_back(kHeadings[pick(kHeadings.size())] + " " + std::to_string(t + 1));
            const std::size_t n = 1 + pick(5);
            Timestamp ts = start;
            int depth = 0;
            for (std::size_t c = 0; c < n; ++c) {
                Comment cm;
                cm.ts = ts;
                cm.thread = t;
                cm.depth = c == 0 ? 0 : 1 + static_cast<int>(pick(static_cast<std::size_t>(depth) + 1));
                depth = cm.depth;
                if (pick(15) == 0)
                    cm.ip = "198.51.100." + std::to_string(1 + pick(200));
                else
                    cm.user = pick(4) == 0 ? kUsers[pick(kUsers.size())] : team[pick(team.size())];
                cm.body = c == 0 ? kOpeners[pick(kOpeners.size())] : kReplies[pick(kReplies.size())];
                comments.push_back(cm);
                ts += between(3600, 3 * kDay);
                if (t < before && ts >= pivot) ts = pivot - 3600;  // threads before promotion stay before it
            }
        }

        struct Save {
            Timestamp ts;
            std::string user, ip, comment;
        };
        std::vector<Save> saves = {{first, team.front(), "", "project banners"}};
        for (const auto& c : comments) saves.push_back({c.ts, c.user, c.ip, "comment"});
        for (const auto& [ts, _] : milestone_rows(p)) saves.push_back({ts + 2 * 3600, kReviewers[pick(kReviewers.size())], "", "article history"});
        std::stable_sort(saves.begin(), saves.end(), [](const Save& a, const Save& b) { return a.ts < b.ts; });

        std::vector<Rev> revs;
        for (const auto& s : saves) {
            Rev r;
            r.ts = s.ts;
            r.user = s.user;
            r.ip = s.ip;
            r.comment = s.comment;
            r.text = talk_text(p, s.ts, comments, headings);
            revs.push_back(std::move(r));
        }
        return revs;
    }

private:
    static inline const std::vector<std::string> kHeadings = {"Lead", "Sources", "Images", "Prose", "Infobox", "Dates",
                                                              "Structure", "Citations"};

    std::string title(std::size_t i) {
        static const std::vector<std::string> a = {"River", "Battle of", "Church of", "Siege of", "Mount",  "Lake",
                                                   "Treaty of", "Castle", "Station", "Bridge"};
        static const std::vector<std::string> b = {"Aldwick", "Brennor", "Calloway", "Dunmere", "Eskholt", "Farrowby",
                                                   "Glenmarsh", "Harlan", "Ivesbury", "Jorvale"};
        return a[i % a.size()] + " " + b[(i / a.size() + i) % b.size()] + (i >= 100 ? " " + std::to_string(i) : "");
    }

    std::vector<std::string> team_of(const Plan& p) const {
        // Deterministic per title, independent of generator state.
        std::vector<std::string> pool = kUsers;
        Rng local(wikisustain::fnv1a64(p.title));
        local.shuffle(pool);
        pool.resize(static_cast<std::size_t>(p.team));
        return pool;
    }

    /// Index in [0, n) skewed towards the front.
    std::size_t weighted(std::size_t n) {
        const std::size_t a = pick(n), b = pick(n);
        return std::min(a, b);
    }

    std::string article_text(const Plan& p, Timestamp ts, int sentences) const {
        auto active = [&](std::optional<Timestamp> from, std::initializer_list<std::optional<Timestamp>> until) {
            if (!from || ts < *from) return false;
            for (auto u : until)
                if (u && ts >= *u) return false;
            return true;
        };
        std::string text;
        if (active(p.fa, {p.fa_dem})) text += "{{featured article}}\n";
        if (active(p.ga, {p.fa, p.ga_dem})) text += "{{good article}}\n";
        text += "'''" + p.title + "''' is a place of some note.";
        for (int s = 1; s < sentences; ++s) text += " Sentence " + std::to_string(s) + " adds detail.";
        text += "\n";
        return text;
    }

    std::string banners() {
        std::string out;
        const std::size_t n = 1 + pick(3);
        static const std::vector<std::string> importance = {"Top", "High", "Mid", "Low", "", "NA"};
        for (std::size_t k = 0; k < n; ++k) {
            const auto& name = projects_[pick(projects_.size())];
            const auto& imp = importance[pick(importance.size())];
            out += "{{WikiProject " + name + "|class=B" + (imp.empty() ? "" : "|importance=" + imp) + "}}\n";
        }
        if (pick(3) == 0) out = "{{WikiProject banner shell|1=\n" + out + "}}\n";
        return out;
    }

    std::vector<std::pair<Timestamp, std::string>> milestone_rows(const Plan& p) const {
        std::vector<std::pair<Timestamp, std::string>> rows;
        if (p.ga) rows.push_back({*p.ga, "GAN|listed"});
        if (p.fa) rows.push_back({*p.fa, "FAC|promoted"});
        if (p.fa_dem) rows.push_back({*p.fa_dem, "FAR|demoted"});
        if (p.ga_dem) rows.push_back({*p.ga_dem, "GAR|delisted"});
        for (auto t : p.kept_reviews) rows.push_back({t, p.fa ? "FAR|kept" : "GAR|kept"});
        std::sort(rows.begin(), rows.end());
        return rows;
    }

    std::string talk_text(const Plan& p, Timestamp at, const std::vector<Comment>& comments,
                          const std::vector<std::string>& headings) const {
        std::string out;
        std::string history;
        int n = 0;
        for (const auto& [ts, row] : milestone_rows(p)) {
            if (ts + 2 * 3600 > at) continue;
            const auto bar = row.find('|');
            const auto key = "action" + std::to_string(++n);
            history += "|" + key + "=" + row.substr(0, bar) + "\n|" + key + "date=" + wiki_date(ts).first + "\n|" + key +
                       "result=" + row.substr(bar + 1) + "\n";
        }
        if (!history.empty()) out += "{{ArticleHistory\n" + history + "}}\n";
        out += banners_;
        std::size_t thread = SIZE_MAX;
        for (const auto& c : comments) {
            if (c.ts > at) continue;
            if (c.thread != thread) {
                thread = c.thread;
                out += "\n== " + headings[c.thread] + " ==\n";
            }
            out += std::string(static_cast<std::size_t>(c.depth), ':') + c.body + " " + signature(c.user, c.ip, c.ts) + "\n";
        }
        return out;
    }

    Rng rng_;
    std::vector<std::string> projects_;
    std::string banners_;
};

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Page {
    std::int64_t id;
    std::string title;
    int ns;
    std::vector<Rev> revs;
};

void write_jsonl(std::ostream& out, const std::vector<Page>& pages, std::int64_t& rev_id) {
    for (const auto& p : pages) {
        std::optional<std::int64_t> parent;
        for (const auto& r : p.revs) {
            ordered_json j;
            j["page_id"] = p.id;
            j["title"] = p.title;
            j["ns"] = p.ns;
            j["revision_id"] = ++rev_id;
            j["parent_revision_id"] = parent ? ordered_json(*parent) : ordered_json(nullptr);
            j["timestamp"] = wikisustain::format_iso8601(r.ts);
            j["editor"] = r.user.empty() ? ordered_json{{"ip", r.ip}} : ordered_json{{"user", r.user}};
            j["comment"] = r.comment;
            j["text"] = r.text;
            out << j.dump() << '\n';
            parent = rev_id;
        }
    }
}

void write_xml(std::ostream& out, const std::vector<Page>& pages, std::int64_t& rev_id) {
    out << "<mediawiki xml:lang=\"en\">\n";
    for (const auto& p : pages) {
        out << "  <page>\n    <title>" << xml_escape(p.title) << "</title>\n    <ns>" << p.ns << "</ns>\n    <id>"
            << p.id << "</id>\n";
        std::optional<std::int64_t> parent;
        for (const auto& r : p.revs) {
            out << "    <revision>\n      <id>" << ++rev_id << "</id>\n";
            if (parent) out << "      <parentid>" << *parent << "</parentid>\n";
            out << "      <timestamp>" << wikisustain::format_iso8601(r.ts) << "</timestamp>\n      <contributor>";
            if (r.user.empty())
                out << "<ip>" << r.ip << "</ip>";
            else
                out << "<username>" << xml_escape(r.user) << "</username>";
            out << "</contributor>\n";
            if (!r.comment.empty()) out << "      <comment>" << xml_escape(r.comment) << "</comment>\n";
            out << "      <text xml:space=\"preserve\">" << xml_escape(r.text) << "</text>\n    </revision>\n";
            parent = rev_id;
        }
        out << "  </page>\n";
    }
    out << "</mediawiki>\n";
}

void write_list(const fs::path& path, std::vector<std::string> titles) {
    std::sort(titles.begin(), titles.end());
    std::ofstream out(path);
    for (const auto& t : titles) out << t << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Writes a synthetic revision corpus with status lists and a pipeline config."};
    fs::path out_dir, registry_path;
    std::size_t articles = 50;
    std::uint64_t seed = 7;
    std::string format = "jsonl";
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--registry", registry_path, "WikiProject registry to draw banners from")->required()->check(CLI::ExistingFile);
    app.add_option("--articles", articles, "number of articles")->check(CLI::Range(10, 100000));
    app.add_option("--seed", seed, "random seed");
    app.add_option("--format", format, "dump format")->check(CLI::IsMember({"jsonl", "xml"}));
    CLI11_PARSE(app, argc, argv);

    const auto registry = wikisustain::features::WikiProjectRegistry::load(registry_path);
    Generator gen(seed, registry.names());

    // Population mix, scaled from a 50-article template.
    const std::vector<std::pair<Kind, int>> mix = {{Kind::DirectFa, 14}, {Kind::DirectFaDemoted, 8}, {Kind::GaFa, 8},
                                                   {Kind::GaFaDemoted, 6}, {Kind::Ga, 6},            {Kind::GaDelisted, 4},
                                                   {Kind::FaCensored, 3}, {Kind::Unlabeled, 1}};
    std::vector<Kind> kinds;
    for (const auto& [k, n] : mix)
        for (int i = 0; i < n; ++i) kinds.push_back(k);
    while (kinds.size() < articles) kinds.insert(kinds.end(), kinds.begin(), kinds.begin() + 49);
    kinds.resize(articles);

    std::vector<Page> pages;
    std::vector<std::string> current_fa, current_ga, former_fa, delisted_ga;
    std::int64_t page_id = 1000;
    for (std::size_t i = 0; i < articles; ++i) {
        const auto p = gen.plan(i, kinds[i]);
        pages.push_back({++page_id, p.title, 0, gen.article_history(p)});
        pages.push_back({++page_id, "Talk:" + p.title, 1, gen.talk_history(p)});
        switch (p.kind) {
            case Kind::DirectFa:
            case Kind::GaFa:
            case Kind::FaCensored:
            case Kind::Unlabeled: current_fa.push_back(p.title); break;
            case Kind::DirectFaDemoted: former_fa.push_back(p.title); break;
            case Kind::GaFaDemoted:
                former_fa.push_back(p.title);
                delisted_ga.push_back(p.title);
                break;
            case Kind::Ga: current_ga.push_back(p.title); break;
            case Kind::GaDelisted: delisted_ga.push_back(p.title); break;
        }
        if (p.kind == Kind::GaFa) current_ga.push_back(p.title);
    }

    fs::create_directories(out_dir / "lists");
    const std::string dump_name = format == "xml" ? "dump.xml" : "dump.jsonl";
    {
        std::ofstream out(out_dir / dump_name, std::ios::binary);
        std::int64_t rev_id = 500000;
        if (format == "xml")
            write_xml(out, pages, rev_id);
        else
            write_jsonl(out, pages, rev_id);
    }
    write_list(out_dir / "lists" / "current_fa.txt", current_fa);
    write_list(out_dir / "lists" / "current_ga.txt", current_ga);
    write_list(out_dir / "lists" / "former_fa.txt", former_fa);
    write_list(out_dir / "lists" / "delisted_ga.txt", delisted_ga);

    ordered_json config;
    config["paths"] = {{"dump", dump_name},
                       {"lists",
                        {{"current_fa", "lists/current_fa.txt"},
                         {"current_ga", "lists/current_ga.txt"},
                         {"former_fa", "lists/former_fa.txt"},
                         {"delisted_ga", "lists/delisted_ga.txt"}}},
                       {"workdir", "work"},
                       {"registry", fs::relative(fs::absolute(registry_path), fs::absolute(out_dir)).generic_string()}};
    config["snapshot_date"] = "2023-09-01";
    config["use_case"] = "fa";
    config["eval"] = {{"corpus_growth", {{"first_year", 2005}, {"last_year", 2018}, {"min_positives", 5}}}};
    config["seed"] = seed;
    std::ofstream(out_dir / "config.json") << config.dump(2) << '\n';
    std::cout << "wrote " << articles << " articles to " << out_dir.string() << '\n';
    return 0;
}
