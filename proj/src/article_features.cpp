#include "wikisustain/article_features.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "wikisustain/wikitext.hpp"

namespace wikisustain::features {

std::vector<std::string> edit_history_feature_names(UseCase uc) {
    std::vector<std::string> names = {"Num-of-Editors",
                                      "Num-of-Revisions",
                                      "Time-to-Promotion",
                                      "Reverted-Revisions-Percentage",
                                      "Num-of-Editors-Normalized",
                                      "Num-of-Revisions-Normalized"};
    if (uc == UseCase::FA) names.push_back("Was-a-Good-Article");
    return names;
}

FeatureBlock edit_history_features(const WindowedHistory& w, UseCase uc, const labels::ArticleTimeline& timeline) {
    if (w.article_revisions.empty()) throw std::invalid_argument("edit history of an empty window");
    std::set<Editor> editors;
    std::size_t reverts = 0;
    for (std::size_t i = 0; i < w.article_revisions.size(); ++i) {
        editors.insert(w.article_revisions[i].editor);
        if (detect_revert(w.article_revisions, i)) ++reverts;
    }
    const auto n_editors = static_cast<double>(editors.size());
    const auto n_revs = static_cast<double>(w.article_revisions.size());
    const double days = static_cast<double>(w.t_prom - w.t_birth) / static_cast<double>(kSecondsPerDay);
    const bool at_birth = w.t_prom == w.t_birth;

    FeatureBlock b;
    b.add("Num-of-Editors", n_editors);
    b.add("Num-of-Revisions", n_revs);
    b.add("Time-to-Promotion", days);
    b.add("Reverted-Revisions-Percentage", static_cast<double>(reverts) / n_revs);
    b.add("Num-of-Editors-Normalized", n_editors / n_revs);
    b.add("Num-of-Revisions-Normalized", at_birth ? n_revs : n_revs / days);
    if (uc == UseCase::FA) {
        const bool was_ga = timeline.t_prom_ga && timeline.t_prom_fa && *timeline.t_prom_ga < *timeline.t_prom_fa;
        b.add("Was-a-Good-Article", was_ga ? 1.0 : 0.0);
    }
    b.add_flag("flag-Promotion-At-Birth", at_birth);
    return b;
}

std::vector<std::string> team_composition_feature_names() {
    return {"Editors-Gini", "IP-Based-Edits-Percentage", "Editors-Continue-To-Talk", "Discussers-Contribute-To-Article",
            "Distribution-Diff"};
}

std::map<std::string, double> discusser_comment_counts(const std::vector<discussion::Comment>& comments) {
    std::map<std::string, double> out;
    for (const auto& c : comments)
        if (c.discusser.is_registered()) out[c.discusser.id()] += 1.0;
    return out;
}

FeatureBlock team_composition_features(const WindowedHistory& w, const std::map<std::string, double>& discussers) {
    if (w.article_revisions.empty()) throw std::invalid_argument("team composition of an empty window");
    std::map<std::string, double> edits;
    double anonymous = 0;
    for (const auto& r : w.article_revisions) {
        if (r.editor.is_anonymous())
            ++anonymous;
        else
            edits[r.editor.id()] += 1.0;
    }

    double overlap = 0;
    for (const auto& [name, n] : edits)
        if (discussers.count(name)) ++overlap;

    double edit_total = 0, comment_total = 0;
    for (const auto& [name, n] : edits) edit_total += n;
    for (const auto& [name, n] : discussers) comment_total += n;

    std::set<std::string> everyone;
    for (const auto& [name, n] : edits) everyone.insert(name);
    for (const auto& [name, n] : discussers) everyone.insert(name);
    double diff = 0;
    for (const auto& name : everyone) {
        auto share = [&](const std::map<std::string, double>& m, double total) {
            auto it = m.find(name);
            return it == m.end() || total == 0 ? 0.0 : it->second / total;
        };
        diff += std::abs(share(edits, edit_total) - share(discussers, comment_total));
    }

    std::vector<double> counts;
    for (const auto& [name, n] : edits) counts.push_back(n);

    FeatureBlock b;
    b.add("Editors-Gini", counts.empty() ? 0.0 : gini(counts));
    b.add("IP-Based-Edits-Percentage", anonymous / static_cast<double>(w.article_revisions.size()));
    b.add("Editors-Continue-To-Talk", edits.empty() ? 0.0 : overlap / static_cast<double>(edits.size()));
    b.add("Discussers-Contribute-To-Article", discussers.empty() ? 0.0 : overlap / static_cast<double>(discussers.size()));
    b.add("Distribution-Diff", everyone.empty() ? 0.0 : diff / static_cast<double>(everyone.size()));
    b.add_flag("flag-No-Registered-Editors", edits.empty());
    b.add_flag("flag-No-Discussers", discussers.empty());
    return b;
}

// ---------------------------------------------------------------------------

std::string normalize_project_name(std::string_view name) {
    std::string out;
    for (char ch : name) {
        const char c = ch == '_' ? ' ' : ch;
        if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::optional<std::string> banner_project(std::string_view template_name) {
    const auto name = normalize_project_name(template_name);
    static constexpr std::string_view prefix = "wikiproject ";
    if (!name.starts_with(prefix)) return std::nullopt;
    auto project = name.substr(prefix.size());
    if (project.starts_with("banner shell") || project.starts_with("banner holder") || project.empty())
        return std::nullopt;
    return project;
}

WikiProjectRegistry::WikiProjectRegistry(std::vector<Entry> entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        if (e.removed) continue;
        const auto idx = active_.size();
        active_.push_back(e.name);
        auto bind = [&](const std::string& key) {
            auto [it, inserted] = lookup_.emplace(normalize_project_name(key), idx);
            if (!inserted && it->second != idx)
                throw std::invalid_argument("WikiProject name or alias '" + key + "' is ambiguous");
        };
        bind(e.name);
        for (const auto& a : e.aliases) bind(a);
    }
}

WikiProjectRegistry WikiProjectRegistry::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("WikiProject registry must be a JSON array");
    std::vector<Entry> entries;
    for (const auto& item : j) {
        Entry e;
        e.name = item.at("name").get<std::string>();
        if (item.contains("aliases")) e.aliases = item.at("aliases").get<std::vector<std::string>>();
        e.removed = item.value("removed", false);
        entries.push_back(std::move(e));
    }
    return WikiProjectRegistry(std::move(entries));
}

WikiProjectRegistry WikiProjectRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read WikiProject registry " + path.string());
    return from_json(nlohmann::json::parse(in));
}

WikiProjectRegistry WikiProjectRegistry::build_from_counts(const std::map<std::string, std::size_t>& counts,
                                                           const std::vector<std::string>& removed, std::size_t top) {
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > top) ranked.resize(top);
    std::set<std::string> drop;
    for (const auto& r : removed) drop.insert(normalize_project_name(r));
    std::vector<Entry> entries;
    for (const auto& [name, n] : ranked) entries.push_back({name, {}, drop.count(normalize_project_name(name)) > 0});
    return WikiProjectRegistry(std::move(entries));
}

nlohmann::json WikiProjectRegistry::to_json() const {
    auto j = nlohmann::json::array();
    for (const auto& e : entries_) j.push_back({{"name", e.name}, {"aliases", e.aliases}, {"removed", e.removed}});
    return j;
}

std::optional<std::size_t> WikiProjectRegistry::index_of(std::string_view project) const {
    auto it = lookup_.find(normalize_project_name(project));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

std::string WikiProjectRegistry::version() const {
    std::string joined;
    for (const auto& n : active_) joined += n + '\n';
    return hex64(fnv1a64(joined));
}

std::vector<std::string> topic_feature_names(const WikiProjectRegistry& registry) {
    std::vector<std::string> out;
    out.reserve(registry.size());
    for (const auto& n : registry.names()) out.push_back("Topic-" + n);
    return out;
}

namespace {

int importance_value(std::optional<std::string_view> importance, bool& rated) {
    rated = true;
    if (importance) {
        const auto v = to_lower(trim(*importance));
        if (v == "top") return 4;
        if (v == "high") return 3;
        if (v == "mid") return 2;
        if (v == "low") return 1;
    }
    rated = false;
    return 1;
}

}  // namespace

TopicResult topic_features(std::span<const ingest::RevisionRecord> talk_window, const WikiProjectRegistry& registry) {
    TopicResult out;
    out.values.assign(registry.size(), 0);
    if (talk_window.empty()) return out;
    for (const auto& t : wikitext::find_templates(talk_window.back().text)) {
        auto project = banner_project(t.name);
        if (!project) continue;
        auto idx = registry.index_of(*project);
        if (!idx) {
            ++out.unknown;
            continue;
        }
        bool rated = true;
        const int v = importance_value(t.param("importance"), rated);
        if (!rated) ++out.unrated;
        out.values[*idx] = std::max(out.values[*idx], v);
    }
    return out;
}

void count_banners(std::string_view talk_text, std::map<std::string, std::size_t>& counts) {
    std::set<std::string> seen;
    for (const auto& t : wikitext::find_templates(talk_text))
        if (auto p = banner_project(t.name)) seen.insert(*p);
    for (const auto& p : seen) ++counts[p];
}

}  // namespace wikisustain::features
