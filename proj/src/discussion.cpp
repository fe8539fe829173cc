#include "wikisustain/discussion.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "wikisustain/stats.hpp"
#include "wikisustain/wikitext.hpp"

namespace wikisustain::discussion {

namespace {

constexpr std::string_view kUtc = "(UTC)";

/// Finds "HH:MM, <date>" ending right before `utc_pos`; returns the offset of HH.
std::optional<std::size_t> time_start(std::string_view line, std::size_t utc_pos) {
    const std::size_t from = utc_pos > 48 ? utc_pos - 48 : 0;
    for (std::size_t i = utc_pos; i-- > from;) {
        if (line[i] != ':' || i < 1 || i + 3 > utc_pos) continue;
        const auto digit = [&](std::size_t k) { return std::isdigit(static_cast<unsigned char>(line[k])) != 0; };
        if (!digit(i + 1) || !digit(i + 2) || !digit(i - 1)) continue;
        std::size_t s = i - 1;
        if (s > 0 && digit(s - 1)) --s;
        return s;
    }
    return std::nullopt;
}

struct UserLink {
    std::size_t pos;
    Editor editor;
};

std::optional<UserLink> last_user_link(std::string_view line, std::size_t before) {
    static constexpr std::array<std::string_view, 4> prefixes = {"[[User:", "[[User talk:", "[[Special:Contributions/",
                                                                 "[[User_talk:"};
    std::optional<UserLink> best;
    const auto hay = to_lower(line.substr(0, before));
    for (auto prefix : prefixes) {
        const auto lp = to_lower(prefix);
        const auto pos = hay.rfind(lp);
        if (pos == std::string::npos || (best && pos < best->pos)) continue;
        const auto start = pos + lp.size();
        auto stop = start;
        while (stop < before && line[stop] != '|' && line[stop] != ']' && line[stop] != '#' &&
               (line[stop] != '/' || prefix.starts_with("[[Special")))
            ++stop;
        const auto name = std::string(trim(line.substr(start, stop - start)));
        if (name.empty()) continue;
        Editor ed = is_ip_address(name) ? Editor::anonymous(name) : Editor::registered(ingest::normalize_title(name));
        best = UserLink{pos, std::move(ed)};
    }
    return best;
}

int leading_depth(std::string_view line) {
    int d = 0;
    for (char c : line) {
        if (c == ':' || c == '*' || c == '#')
            ++d;
        else
            break;
    }
    return d;
}

}  // namespace

std::vector<Signature> find_signatures(std::string_view line) {
    std::vector<Signature> out;
    std::size_t search = 0;
    std::size_t consumed = 0;  // user links before this offset belong to earlier signatures
    while (true) {
        const auto utc = line.find(kUtc, search);
        if (utc == std::string_view::npos) break;
        search = utc + kUtc.size();
        const auto ts_begin = time_start(line, utc);
        if (!ts_begin) continue;
        const auto ts = parse_wiki_date(line.substr(*ts_begin, utc + kUtc.size() - *ts_begin));
        if (!ts) continue;
        auto link = last_user_link(line, *ts_begin);
        if (!link || link->pos < consumed) continue;
        out.push_back({std::move(link->editor), *ts, utc + kUtc.size()});
        consumed = utc + kUtc.size();
    }
    return out;
}

std::vector<Comment> parse_talk_text(std::string_view text) {
    std::vector<Comment> comments;
    int thread = 0;
    int next_id = 1;
    std::string pending;
    int pending_depth = 0;
    bool have_pending = false;
    // Index into `comments` of the first comment of the current thread.
    std::size_t thread_first = 0;

    auto attach_pending = [&] {
        if (!have_pending) return;
        if (comments.size() > thread_first) {
            auto& prev = comments.back();
            prev.text += '\n';
            prev.text += pending;
        }
        pending.clear();
        have_pending = false;
    };

    auto emit = [&](std::string body, int raw_depth, const Signature& sig) {
        Comment c;
        c.thread_id = thread;
        c.comment_id = next_id++;
        c.discusser = sig.editor;
        c.timestamp = sig.timestamp;
        c.text = std::move(body);
        if (comments.size() == thread_first) {
            c.depth = 0;
        } else {
            c.depth = std::min(raw_depth, comments.back().depth + 1);
            if (c.depth > 0) {
                for (std::size_t k = comments.size(); k-- > thread_first;) {
                    if (comments[k].depth == c.depth - 1) {
                        c.parent_comment_id = comments[k].comment_id;
                        break;
                    }
                }
            }
        }
        comments.push_back(std::move(c));
    };

    for (const auto line : wikitext::split_lines(text)) {
        if (wikitext::parse_heading(line)) {
            attach_pending();
            ++thread;
            thread_first = comments.size();
            continue;
        }
        if (thread == 0) continue;
        const int depth = leading_depth(line);
        const auto sigs = find_signatures(line);
        if (have_pending && depth != pending_depth && trim(line).size() > 0) attach_pending();
        if (!have_pending) {
            if (trim(line).empty()) continue;
            pending_depth = depth;
            have_pending = true;
        } else {
            pending += '\n';
        }
        if (sigs.empty()) {
            pending += line;
            continue;
        }
        std::size_t from = 0;
        for (std::size_t s = 0; s < sigs.size(); ++s) {
            std::string body = pending + std::string(line.substr(from, sigs[s].end - from));
            pending.clear();
            emit(std::move(body), s == 0 ? pending_depth : depth, sigs[s]);
            from = sigs[s].end;
        }
        const auto rest = trim(line.substr(from));
        have_pending = !rest.empty();
        if (have_pending) pending = std::string(rest);
    }
    attach_pending();
    return comments;
}

std::vector<Comment> parse_discussions(std::span<const ingest::RevisionRecord> talk_window, Timestamp t_prom) {
    std::vector<const ingest::RevisionRecord*> revs;
    for (const auto& r : talk_window)
        if (r.timestamp <= t_prom) revs.push_back(&r);
    if (revs.empty()) return {};

    auto comments = parse_talk_text(revs.back()->text);
    std::erase_if(comments, [t_prom](const Comment& c) { return c.timestamp > t_prom; });
    if (comments.empty()) return comments;

    // Comment blocks are identified by signer and signature time.
    using BlockKey = std::pair<std::string, Timestamp>;
    auto key_of = [](const Comment& c) { return BlockKey{(c.discusser.is_anonymous() ? "ip:" : "u:") + c.discusser.id(), c.timestamp}; };
    std::map<BlockKey, std::set<std::string>> revisers;
    std::map<BlockKey, std::uint64_t> previous;
    for (const auto* r : revs) {
        std::map<BlockKey, std::uint64_t> current;
        for (const auto& c : parse_talk_text(r->text)) current[key_of(c)] = fnv1a64(c.text);
        for (const auto& [k, h] : current) {
            auto it = previous.find(k);
            if ((it == previous.end() || it->second != h) && r->editor.is_registered())
                revisers[k].insert(r->editor.id());
        }
        previous = std::move(current);
    }
    for (auto& c : comments) {
        auto it = revisers.find(key_of(c));
        c.distinct_revisers = it == revisers.end() ? 0 : static_cast<int>(it->second.size());
    }
    return comments;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalpha(c) || c == '\'') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

struct Lexicon {
    std::unordered_set<std::string> up, down;
};

const std::array<Lexicon, 5>& lexicons() {
    static const std::array<Lexicon, 5> lex = {
        Lexicon{{"good", "great", "thanks", "thank", "excellent", "agree", "nice", "happy", "support", "like", "best",
                 "well", "glad", "fine", "improved"},
                {"bad", "poor", "wrong", "disagree", "terrible", "awful", "hate", "worst", "problem", "problems",
                 "oppose", "fail", "fails", "unfortunately", "concern"}},
        Lexicon{{"therefore", "however", "regarding", "furthermore", "accordingly", "consequently", "sources",
                 "citation", "reference", "references", "policy", "consensus", "per", "moreover", "whereas"},
                {"lol", "gonna", "wanna", "yeah", "hey", "ok", "okay", "cool", "stuff", "guys", "dude", "yep", "nope",
                 "kinda", "btw"}},
        Lexicon{{"please", "thank", "thanks", "kindly", "appreciate", "sorry", "grateful", "welcome", "cheers",
                 "apologies", "would", "could"},
                {"stupid", "idiot", "shut", "nonsense", "ridiculous", "whatever", "damn", "moron", "rubbish"}},
        Lexicon{{"stupid", "idiot", "hate", "dumb", "moron", "shut", "damn", "crap", "garbage", "pathetic", "vandal",
                 "liar", "rubbish", "disgusting"},
                {"please", "thanks", "thank", "agree", "kindly", "appreciate", "welcome"}},
        Lexicon{{"definitely", "certainly", "clearly", "obviously", "sure", "always", "never", "must", "undoubtedly",
                 "confident", "indeed", "absolutely"},
                {"maybe", "perhaps", "might", "possibly", "unsure", "probably", "seems", "guess", "unclear", "think",
                 "wonder", "suppose"}},
    };
    return lex;
}

}  // namespace

LinguisticScores LexiconScorer::score_text(std::string_view text) const {
    const auto ws = words(text);
    LinguisticScores s;
    const auto& lex = lexicons();
    for (std::size_t d = 0; d < lex.size(); ++d) {
        double up = 0, down = 0;
        for (const auto& w : ws) {
            if (lex[d].up.count(w)) ++up;
            if (lex[d].down.count(w)) ++down;
        }
        s.values[d] = (up + 1.0) / (up + down + 2.0);
    }
    return s;
}

LinguisticScores LexiconScorer::score(std::string_view, const Comment& comment) const {
    return score_text(comment.text);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

}  // namespace

ImportScorer ImportScorer::parse(std::istream& csv) {
    ImportScorer scorer;
    std::string line;
    if (!std::getline(csv, line)) throw std::runtime_error("sidecar score file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSidecarHeader) throw std::runtime_error("sidecar header must be '" + std::string(kSidecarHeader) + "'");
    std::size_t line_no = 1;
    while (std::getline(csv, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw std::runtime_error("sidecar line " + std::to_string(line_no) + ": expected 8 fields");
        auto to_int = [&](const std::string& s) {
            int v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size())
                throw std::runtime_error("sidecar line " + std::to_string(line_no) + ": bad integer '" + s + "'");
            return v;
        };
        LinguisticScores s;
        for (std::size_t d = 0; d < 5; ++d) {
            const auto& field = f[3 + d];
            double v = 0;
            auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || p != field.data() + field.size() || v < 0.0 || v > 1.0)
                throw std::runtime_error("sidecar line " + std::to_string(line_no) + ": score '" + field +
                                         "' is not a number in [0,1]");
            s.values[d] = v;
        }
        scorer.scores_[Key{f[0], to_int(f[1]), to_int(f[2])}] = s;
    }
    return scorer;
}

ImportScorer ImportScorer::load(const std::filesystem::path& csv) {
    std::ifstream in(csv, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read sidecar " + csv.string());
    return parse(in);
}

LinguisticScores ImportScorer::score(std::string_view article, const Comment& comment) const {
    const Key key{std::string(article), comment.thread_id, comment.comment_id};
    auto it = scores_.find(key);
    if (it == scores_.end())
        throw std::out_of_range("sidecar has no scores for (" + std::string(article) + ", " +
                                std::to_string(comment.thread_id) + ", " + std::to_string(comment.comment_id) + ")");
    return it->second;
}

void write_sidecar(std::ostream& out, std::string_view article, const std::vector<Comment>& comments,
                   const std::vector<LinguisticScores>& scores, bool header) {
    if (header) out << kSidecarHeader << '\n';
    for (std::size_t i = 0; i < comments.size(); ++i) {
        out << csv_field(article) << ',' << comments[i].thread_id << ',' << comments[i].comment_id;
        for (double v : scores[i].values) out << ',' << format_double(v);
        out << '\n';
    }
}

std::unique_ptr<LinguisticScorer> make_scorer(const std::string& id, const std::filesystem::path& sidecar) {
    if (id == "lexicon-v1" || id == "lexicon") return std::make_unique<LexiconScorer>();
    if (id == "import") return std::make_unique<ImportScorer>(ImportScorer::load(sidecar));
    throw std::invalid_argument("unknown scorer '" + id + "'");
}

// ---------------------------------------------------------------------------

std::vector<std::string> linguistic_feature_names() {
    std::vector<std::string> names;
    for (auto dim : kDimensions) {
        const std::string d(dim);
        names.push_back(d + "-Mean");
        names.push_back(d + "-Median");
        names.push_back(d + "-High-Percentage");
        names.push_back(d + "-Discusser-Mean");
        names.push_back(d + "-Discusser-Median");
    }
    return names;
}

std::vector<std::string> structural_feature_names() {
    return {"Num-of-Discussions",
            "Num-of-Comments",
            "Num-of-Discussers",
            "Discussers-Gini",
            "Mean-Discussers",
            "Median-Discussers",
            "Mixed-Discussers-Comments",
            "Direct-Discusser-Interactions",
            "Indirect-Discusser-Interactions",
            "Mean-Triangles-Direct-Interactions",
            "Mean-Triangles-Indirect-Interactions",
            "Mean-Depth",
            "Mean-Comments",
            "Mean-Responded-Comments",
            "Time-to-Reply"};
}

features::FeatureBlock linguistic_aggregates(const std::vector<Comment>& comments,
                                             const std::vector<LinguisticScores>& scores,
                                             const ScorerBinding& binding) {
    if (comments.size() != scores.size()) throw std::invalid_argument("one score per comment required");
    features::FeatureBlock block;
    const auto names = linguistic_feature_names();
    if (comments.empty()) {
        for (const auto& n : names) block.add(n, 0.0);
        block.add_flag("flag-No-Comments", true);
        return block;
    }
    // Group comment indices by discusser, in first-appearance order.
    std::map<Editor, std::vector<std::size_t>> by_discusser;
    for (std::size_t i = 0; i < comments.size(); ++i) by_discusser[comments[i].discusser].push_back(i);

    std::size_t k = 0;
    for (std::size_t d = 0; d < kDimensions.size(); ++d) {
        std::vector<double> x;
        x.reserve(scores.size());
        for (const auto& s : scores) x.push_back(s.values[d]);
        const double high = static_cast<double>(std::count_if(x.begin(), x.end(), [&](double v) {
                                return v > binding.thresholds[d];
                            })) /
                            static_cast<double>(x.size());
        std::vector<double> means, medians;
        for (const auto& [who, idx] : by_discusser) {
            std::vector<double> own;
            for (auto i : idx) own.push_back(scores[i].values[d]);
            means.push_back(stats::mean(own));
            medians.push_back(stats::median(own));
        }
        block.add(names[k++], stats::mean(x));
        block.add(names[k++], stats::median(x));
        block.add(names[k++], high);
        block.add(names[k++], stats::mean(means));
        block.add(names[k++], stats::mean(medians));
    }
    block.add_flag("flag-No-Comments", false);
    return block;
}

namespace {

/// Mean number of triangles per node: 3 * triangles / nodes.
double mean_triangles(const std::set<std::pair<std::string, std::string>>& edges, std::size_t nodes) {
    if (nodes == 0) return 0.0;
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& [a, b] : edges) {
        adj[a].insert(b);
        adj[b].insert(a);
    }
    std::size_t triangles = 0;
    for (const auto& [a, b] : edges) {
        const auto& na = adj[a];
        const auto& nb = adj[b];
        for (const auto& c : na)
            if (c > b && nb.count(c)) ++triangles;  // a < b < c, each triangle once
    }
    return 3.0 * static_cast<double>(triangles) / static_cast<double>(nodes);
}

}  // namespace

features::FeatureBlock structural_features(const std::vector<Comment>& comments) {
    features::FeatureBlock block;
    const auto names = structural_feature_names();
    if (comments.empty()) {
        for (const auto& n : names) block.add(n, 0.0);
        block.add_flag("flag-No-Discussion-Threads", true);
        return block;
    }

    std::map<int, std::vector<const Comment*>> threads;
    std::unordered_map<int, const Comment*> by_id;
    for (const auto& c : comments) {
        threads[c.thread_id].push_back(&c);
        by_id[c.comment_id] = &c;
    }

    std::map<std::string, double> per_discusser;
    for (const auto& c : comments)
        if (c.discusser.is_registered()) per_discusser[c.discusser.id()] += 1.0;

    std::vector<double> discussers_per_thread, depth_per_thread, comments_per_thread;
    std::set<std::pair<std::string, std::string>> indirect, direct;
    for (const auto& [tid, list] : threads) {
        std::set<std::string> members;
        int max_depth = 0;
        for (const auto* c : list) {
            if (c->discusser.is_registered()) members.insert(c->discusser.id());
            max_depth = std::max(max_depth, c->depth);
        }
        discussers_per_thread.push_back(static_cast<double>(members.size()));
        depth_per_thread.push_back(static_cast<double>(max_depth));
        comments_per_thread.push_back(static_cast<double>(list.size()));
        for (auto a = members.begin(); a != members.end(); ++a)
            for (auto b = std::next(a); b != members.end(); ++b) indirect.emplace(*a, *b);
    }

    std::unordered_map<int, std::vector<const Comment*>> children;
    for (const auto& c : comments) {
        if (!c.parent_comment_id) continue;
        auto it = by_id.find(*c.parent_comment_id);
        if (it == by_id.end()) continue;
        children[it->second->comment_id].push_back(&c);
        const auto& p = *it->second;
        if (c.discusser.is_registered() && p.discusser.is_registered() && c.discusser.id() != p.discusser.id()) {
            auto a = c.discusser.id(), b = p.discusser.id();
            if (b < a) std::swap(a, b);
            direct.emplace(a, b);
        }
    }

    double roots = 0, responded = 0, reply_time = 0;
    for (const auto& c : comments) {
        if (c.depth != 0) continue;
        ++roots;
        auto it = children.find(c.comment_id);
        if (it == children.end() || it->second.empty()) continue;
        ++responded;
        Timestamp first = it->second.front()->timestamp;
        for (const auto* ch : it->second) first = std::min(first, ch->timestamp);
        reply_time += static_cast<double>(std::max<Timestamp>(0, first - c.timestamp));
    }

    std::vector<double> counts;
    for (const auto& [who, n] : per_discusser) counts.push_back(n);
    const double mixed = static_cast<double>(std::count_if(comments.begin(), comments.end(),
                                                           [](const Comment& c) { return c.distinct_revisers >= 2; })) /
                         static_cast<double>(comments.size());

    block.add("Num-of-Discussions", static_cast<double>(threads.size()));
    block.add("Num-of-Comments", static_cast<double>(comments.size()));
    block.add("Num-of-Discussers", static_cast<double>(per_discusser.size()));
    block.add("Discussers-Gini", counts.empty() ? 0.0 : features::gini(counts));
    block.add("Mean-Discussers", stats::mean(discussers_per_thread));
    block.add("Median-Discussers", stats::median(discussers_per_thread));
    block.add("Mixed-Discussers-Comments", mixed);
    block.add("Direct-Discusser-Interactions", static_cast<double>(direct.size()));
    block.add("Indirect-Discusser-Interactions", static_cast<double>(indirect.size()));
    block.add("Mean-Triangles-Direct-Interactions", mean_triangles(direct, per_discusser.size()));
    block.add("Mean-Triangles-Indirect-Interactions", mean_triangles(indirect, per_discusser.size()));
    block.add("Mean-Depth", stats::mean(depth_per_thread));
    block.add("Mean-Comments", stats::mean(comments_per_thread));
    block.add("Mean-Responded-Comments", roots > 0 ? responded / roots : 0.0);
    block.add("Time-to-Reply", responded > 0 ? reply_time / responded : 0.0);
    block.add_flag("flag-No-Discussion-Threads", false);
    return block;
}

}  // namespace wikisustain::discussion
