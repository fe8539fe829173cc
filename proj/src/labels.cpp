#include "wikisustain/labels.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

#include "wikisustain/wikitext.hpp"

namespace wikisustain::labels {

namespace {

bool is_milestones_template(const std::string& name) {
    return name == "articlehistory" || name == "article history" || name == "article milestones" ||
           name == "articlemilestones";
}

bool one_of(std::string_view v, std::initializer_list<std::string_view> options) {
    for (auto o : options)
        if (iequals(v, o)) return true;
    return false;
}

struct RowMapping {
    std::optional<QualityEvent> event;
    std::optional<Level> review_level;
};

QualityEvent event_of(EventKind kind, Level level) {
    QualityEvent e;
    e.kind = kind;
    e.level = level;
    return e;
}

RowMapping map_action(std::string_view action, std::string_view result) {
    RowMapping m;
    const auto a = to_lower(trim(action));
    const auto r = trim(result);
    if (a == "fac") {
        if (one_of(r, {"promoted", "pass", "passed"})) m.event = event_of(EventKind::Promotion, Level::FA);
    } else if (a == "far" || a == "farc") {
        m.review_level = Level::FA;
        if (one_of(r, {"demoted", "removed", "delisted"})) m.event = event_of(EventKind::Demotion, Level::FA);
    } else if (a == "gan") {
        if (one_of(r, {"listed", "passed", "pass", "promoted"}))
            m.event = event_of(EventKind::Promotion, Level::GA);
    } else if (a == "gar") {
        m.review_level = Level::GA;
        if (one_of(r, {"delisted", "demoted", "removed"})) m.event = event_of(EventKind::Demotion, Level::GA);
    }
    return m;
}

std::optional<std::int64_t> parse_oldid(std::string_view s) {
    s = trim(s);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

void sort_events(std::vector<QualityEvent>& events) {
    std::stable_sort(events.begin(), events.end(), [](const QualityEvent& a, const QualityEvent& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        if (a.source != b.source) return a.source < b.source;
        if (a.level != b.level) return a.level > b.level;  // GA before FA on the same instant
        return a.kind < b.kind;
    });
}

}  // namespace

MilestoneParse parse_milestones(const std::vector<ingest::RevisionRecord>& talk_history) {
    MilestoneParse out;
    if (talk_history.empty()) return out;
    const auto& text = talk_history.back().text;

    for (const auto& t : wikitext::find_templates(text)) {
        if (is_milestones_template(t.name)) {
            // Collect action indices present, then walk them in numeric order.
            std::map<int, bool> indices;
            for (const auto& [key, value] : t.named) {
                if (key.size() > 6 && key.compare(0, 6, "action") == 0) {
                    int n = 0;
                    auto [p, ec] = std::from_chars(key.data() + 6, key.data() + key.size(), n);
                    if (ec == std::errc() && p == key.data() + key.size()) indices[n] = true;
                }
            }
            for (const auto& [n, _] : indices) {
                const auto prefix = "action" + std::to_string(n);
                const auto action = t.param(prefix).value_or("");
                const auto result = t.param(prefix + "result").value_or("");
                const auto date = t.param(prefix + "date").value_or("");
                const auto mapped = map_action(action, result);
                const auto ts = parse_wiki_date(date);
                if (!ts) {
                    spdlog::warn("milestone row {} ({}) on '{}' has unparseable date '{}', dropped", n,
                                 std::string(action), talk_history.back().title, std::string(date));
                    ++out.dropped_rows;
                    continue;
                }
                if (mapped.event) {
                    QualityEvent e = *mapped.event;
                    e.timestamp = *ts;
                    e.source = EventSource::Milestones;
                    if (auto oldid = t.param(prefix + "oldid")) e.revision_id = parse_oldid(*oldid);
                    out.events.push_back(e);
                }
                if (mapped.review_level)
                    out.reviews.push_back({*mapped.review_level, *ts, to_lower(trim(action)), to_lower(trim(result))});
            }
        } else if (t.name == "ga" || t.name == "delistedga" || t.name == "delisted ga") {
            // Legacy single-event templates: the date is the first positional or `date=`.
            std::string_view date;
            if (auto d = t.param("date"))
                date = *d;
            else if (!t.positional.empty())
                date = t.positional.front();
            const auto ts = parse_wiki_date(date);
            if (!ts) {
                spdlog::warn("legacy {{{{{}}}}} on '{}' has unparseable date, dropped", t.name,
                             talk_history.back().title);
                ++out.dropped_rows;
                continue;
            }
            if (t.name == "ga") {
                out.events.push_back({EventKind::Promotion, Level::GA, *ts, EventSource::Milestones, std::nullopt});
            } else {
                out.events.push_back({EventKind::Demotion, Level::GA, *ts, EventSource::Milestones, std::nullopt});
                out.reviews.push_back({Level::GA, *ts, "gar", "delisted"});
            }
        }
    }
    sort_events(out.events);
    out.events.erase(std::unique(out.events.begin(), out.events.end()), out.events.end());
    return out;
}

std::vector<QualityEvent> extract_milestones(const std::vector<ingest::RevisionRecord>& talk_history) {
    return parse_milestones(talk_history).events;
}

std::vector<QualityEvent> track_templates(const std::vector<ingest::RevisionRecord>& article_history,
                                          const TemplateRules& rules, std::optional<Timestamp> horizon) {
    std::vector<QualityEvent> events;
    const auto n = article_history.size();
    if (n == 0) return events;

    auto normalize_all = [](const std::vector<std::string>& names) {
        std::vector<std::string> out;
        for (const auto& s : names) out.push_back(wikitext::normalize_template_name(s));
        return out;
    };
    const auto fa_names = normalize_all(rules.fa_aliases);
    const auto ga_names = normalize_all(rules.ga_aliases);

    std::vector<bool> has_fa(n), has_ga(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& text = article_history[i].text;
        if (text.find("{{") == std::string::npos) continue;
        for (const auto& t : wikitext::find_templates(text)) {
            if (std::find(fa_names.begin(), fa_names.end(), t.name) != fa_names.end()) has_fa[i] = true;
            if (std::find(ga_names.begin(), ga_names.end(), t.name) != ga_names.end()) has_ga[i] = true;
        }
    }
    const Timestamp end_time = horizon.value_or(article_history.back().timestamp);

    auto scan = [&](const std::vector<bool>& present, Level level) {
        bool accepted = false;
        std::size_t start = 0;
        while (start < n) {
            std::size_t stop = start;
            while (stop < n && present[stop] == present[start]) ++stop;
            const bool state = present[start];
            if (state != accepted) {
                const std::size_t count = stop - start;
                const Timestamp until = stop < n ? article_history[stop].timestamp : std::max(end_time, article_history[start].timestamp);
                const Timestamp duration = until - article_history[start].timestamp;
                if (count >= rules.min_revisions || duration >= rules.min_duration) {
                    events.push_back({state ? EventKind::Promotion : EventKind::Demotion, level,
                                      article_history[start].timestamp, EventSource::Template,
                                      article_history[start].revision_id});
                    accepted = state;
                }
            }
            start = stop;
        }
    };
    scan(has_ga, Level::GA);
    scan(has_fa, Level::FA);
    sort_events(events);
    return events;
}

void assign_labels(ArticleTimeline& t) {
    t.t_prom_fa.reset();
    t.t_prom_ga.reset();
    for (const auto& e : t.events) {
        if (e.kind != EventKind::Promotion) continue;
        auto& slot = e.level == Level::FA ? t.t_prom_fa : t.t_prom_ga;
        if (!slot || e.timestamp < *slot) slot = e.timestamp;
    }
    auto demoted_after = [&](Level level, Timestamp since) {
        return std::any_of(t.events.begin(), t.events.end(), [&](const QualityEvent& e) {
            return e.kind == EventKind::Demotion && e.level == level && e.timestamp >= since;
        });
    };
    t.label_fa.reset();
    t.label_ga.reset();
    if (t.t_prom_fa) t.label_fa = demoted_after(Level::FA, *t.t_prom_fa) ? 1 : 0;
    if (t.t_prom_ga) {
        bool demoted = demoted_after(Level::GA, *t.t_prom_ga);
        // An FA demotion after a GA -> FA path counts against the GA use case too.
        if (!demoted && t.t_prom_fa && *t.t_prom_fa >= *t.t_prom_ga) demoted = demoted_after(Level::FA, *t.t_prom_fa);
        t.label_ga = demoted ? 1 : 0;
    }
}

ArticleTimeline build_timeline(const std::string& title, const ingest::PageHistory& page,
                               const ingest::StatusLists& lists, const TimelineOptions& options) {
    ArticleTimeline tl;
    tl.title = title;
    if (auto birth = page.birth()) {
        tl.t_birth = *birth;
    } else {
        tl.inconsistent = true;
        tl.diagnostics.push_back("no article revisions");
    }

    auto milestones = parse_milestones(page.talk_revisions);
    auto from_templates = track_templates(page.article_revisions, options.templates, lists.snapshot_date);
    const auto window = options.duplicate_window;

    auto near = [window](const QualityEvent& a, const QualityEvent& b) {
        return a.kind == b.kind && a.level == b.level && std::llabs(a.timestamp - b.timestamp) <= window;
    };

    std::vector<QualityEvent> events = milestones.events;
    std::vector<QualityEvent> fa_promotions;
    for (const auto& e : milestones.events)
        if (e.kind == EventKind::Promotion && e.level == Level::FA) fa_promotions.push_back(e);
    for (const auto& e : from_templates)
        if (e.kind == EventKind::Promotion && e.level == Level::FA) fa_promotions.push_back(e);

    for (const auto& e : from_templates) {
        if (std::any_of(milestones.events.begin(), milestones.events.end(),
                        [&](const QualityEvent& m) { return near(m, e); }))
            continue;
        // The GA template is swapped for the FA one on promotion; that removal is not a demotion.
        if (e.kind == EventKind::Demotion && e.level == Level::GA &&
            std::any_of(fa_promotions.begin(), fa_promotions.end(),
                        [&](const QualityEvent& p) { return std::llabs(p.timestamp - e.timestamp) <= window; }))
            continue;
        events.push_back(e);
    }
    sort_events(events);

    // Drop demotions that precede every promotion at their level.
    std::vector<QualityEvent> feasible;
    for (const auto& e : events) {
        if (e.kind == EventKind::Demotion) {
            const bool promoted_before = std::any_of(feasible.begin(), feasible.end(), [&](const QualityEvent& p) {
                return p.kind == EventKind::Promotion && p.level == e.level;
            });
            if (!promoted_before) {
                tl.diagnostics.push_back(std::string("demotion from ") + std::string(to_string(e.level)) + " at " +
                                         format_iso8601(e.timestamp) + " precedes any promotion; ignored");
                continue;
            }
        }
        feasible.push_back(e);
    }
    tl.events = std::move(feasible);
    assign_labels(tl);

    const bool listed_fa = lists.current_fa.count(title) || lists.former_fa.count(title);
    const bool listed_ga = lists.current_ga.count(title) || lists.delisted_ga.count(title);
    if (listed_fa && !tl.t_prom_fa) {
        tl.inconsistent = true;
        tl.diagnostics.push_back("listed as FA but no FA promotion found");
    }
    if (listed_ga && !tl.t_prom_ga) {
        tl.inconsistent = true;
        tl.diagnostics.push_back("listed as GA but no GA promotion found");
    }

    auto count_reviews = [&](Level level, const std::optional<Timestamp>& since, const std::optional<int>& label) {
        if (!since) return 0;
        int n = 0;
        for (const auto& r : milestones.reviews)
            if (r.level == level && r.timestamp > *since) ++n;
        if (label && *label == 1) n = std::max(n, 1);
        return n;
    };
    tl.reviews_after_prom_fa = count_reviews(Level::FA, tl.t_prom_fa, tl.label_fa);
    tl.reviews_after_prom_ga = count_reviews(Level::GA, tl.t_prom_ga, tl.label_ga);
    return tl;
}

void apply_censoring(std::vector<ArticleTimeline>& timelines, const CensoringCutoffs& cutoffs) {
    const auto fa_limit = end_of_year(cutoffs.fa_year);
    const auto ga_limit = end_of_year(cutoffs.ga_year);
    for (auto& t : timelines) {
        t.censored_fa = t.t_prom_fa && *t.t_prom_fa > fa_limit;
        t.censored_ga = t.t_prom_ga && *t.t_prom_ga > ga_limit;
    }
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const QualityEvent& e) {
    j = nlohmann::json{{"kind", e.kind == EventKind::Promotion ? "promotion" : "demotion"},
                       {"level", to_string(e.level)},
                       {"timestamp", format_iso8601(e.timestamp)},
                       {"source", e.source == EventSource::Milestones ? "milestones" : "template"},
                       {"revision_id", nullptr}};
    if (e.revision_id) j["revision_id"] = *e.revision_id;
}

namespace {

Timestamp ts_from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) return j.get<Timestamp>();
    auto t = parse_iso8601(j.get<std::string>());
    if (!t) throw std::runtime_error("bad timestamp '" + j.get<std::string>() + "'");
    return *t;
}

nlohmann::json opt_ts(const std::optional<Timestamp>& t) {
    return t ? nlohmann::json(format_iso8601(*t)) : nlohmann::json(nullptr);
}

nlohmann::json opt_int(const std::optional<int>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

void from_json(const nlohmann::json& j, QualityEvent& e) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "promotion" && kind != "demotion") throw std::runtime_error("bad event kind '" + kind + "'");
    e.kind = kind == "promotion" ? EventKind::Promotion : EventKind::Demotion;
    e.level = j.at("level").get<std::string>() == "FA" ? Level::FA : Level::GA;
    e.timestamp = ts_from_json(j.at("timestamp"));
    e.source = j.at("source").get<std::string>() == "milestones" ? EventSource::Milestones : EventSource::Template;
    e.revision_id.reset();
    if (j.contains("revision_id") && !j["revision_id"].is_null()) e.revision_id = j["revision_id"].get<std::int64_t>();
}

void to_json(nlohmann::json& j, const ArticleTimeline& t) {
    j = nlohmann::json{{"title", t.title},
                       {"t_birth", format_iso8601(t.t_birth)},
                       {"events", t.events},
                       {"label_fa", opt_int(t.label_fa)},
                       {"label_ga", opt_int(t.label_ga)},
                       {"censored_fa", t.censored_fa},
                       {"censored_ga", t.censored_ga},
                       {"t_prom_fa", opt_ts(t.t_prom_fa)},
                       {"t_prom_ga", opt_ts(t.t_prom_ga)},
                       {"reviews_after_prom_fa", t.reviews_after_prom_fa},
                       {"reviews_after_prom_ga", t.reviews_after_prom_ga},
                       {"inconsistent", t.inconsistent},
                       {"diagnostics", t.diagnostics}};
}

void from_json(const nlohmann::json& j, ArticleTimeline& t) {
    t = ArticleTimeline{};
    t.title = j.at("title").get<std::string>();
    t.t_birth = ts_from_json(j.at("t_birth"));
    t.events = j.at("events").get<std::vector<QualityEvent>>();
    if (!j.at("label_fa").is_null()) t.label_fa = j["label_fa"].get<int>();
    if (!j.at("label_ga").is_null()) t.label_ga = j["label_ga"].get<int>();
    t.censored_fa = j.at("censored_fa").get<bool>();
    t.censored_ga = j.at("censored_ga").get<bool>();
    if (!j.at("t_prom_fa").is_null()) t.t_prom_fa = ts_from_json(j["t_prom_fa"]);
    if (!j.at("t_prom_ga").is_null()) t.t_prom_ga = ts_from_json(j["t_prom_ga"]);
    t.reviews_after_prom_fa = j.value("reviews_after_prom_fa", 0);
    t.reviews_after_prom_ga = j.value("reviews_after_prom_ga", 0);
    t.inconsistent = j.value("inconsistent", false);
    t.diagnostics = j.value("diagnostics", std::vector<std::string>{});
}

void write_timelines(const std::filesystem::path& path, const std::vector<ArticleTimeline>& timelines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& t : timelines) out << nlohmann::json(t).dump() << '\n';
}

std::vector<ArticleTimeline> read_timelines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<ArticleTimeline> out;
    std::string line;
    while (std::getline(in, line))
        if (!trim(line).empty()) out.push_back(nlohmann::json::parse(line).get<ArticleTimeline>());
    return out;
}

void write_inconsistent_csv(const std::filesystem::path& path, const std::vector<ArticleTimeline>& timelines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "title,diagnostics\n";
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    for (const auto& t : timelines) {
        if (!t.inconsistent) continue;
        std::string joined;
        for (const auto& d : t.diagnostics) joined += (joined.empty() ? "" : "; ") + d;
        out << quote(t.title) << ',' << quote(joined) << '\n';
    }
}

}  // namespace wikisustain::labels
