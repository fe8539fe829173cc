#include "wikisustain/ingest.hpp"

#include <expat.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <deque>
#include <fstream>
#include <sstream>

namespace wikisustain::ingest {

RevisionRecord make_revision(std::int64_t page_id, std::string title, int ns, std::int64_t revision_id,
                             Timestamp timestamp, Editor editor, std::string text, std::string comment) {
    RevisionRecord r;
    r.page_id = page_id;
    r.title = std::move(title);
    r.ns = ns;
    r.revision_id = revision_id;
    r.timestamp = timestamp;
    r.editor = std::move(editor);
    r.text = std::move(text);
    r.comment = std::move(comment);
    r.content_hash = fnv1a64(r.text);
    return r;
}

void sort_canonical(std::vector<RevisionRecord>& revisions) {
    std::stable_sort(revisions.begin(), revisions.end(), [](const RevisionRecord& a, const RevisionRecord& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        return a.revision_id < b.revision_id;
    });
}

std::set<std::string> StatusLists::population() const {
    std::set<std::string> all = current_fa;
    all.insert(current_ga.begin(), current_ga.end());
    all.insert(former_fa.begin(), former_fa.end());
    all.insert(delisted_ga.begin(), delisted_ga.end());
    return all;
}

std::string normalize_title(std::string_view title) {
    std::string out;
    out.reserve(title.size());
    bool pending_space = false;
    for (char c : trim(title)) {
        if (c == '_' || c == ' ' || c == '\t') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    if (!out.empty() && static_cast<unsigned char>(out[0]) < 0x80)
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

std::optional<std::string> talk_subject(std::string_view title) {
    const auto t = trim(title);
    if (!istarts_with(t, "Talk:")) return std::nullopt;
    return normalize_title(t.substr(5));
}

// ---------------------------------------------------------------------------

namespace {

Editor unknown_editor() { return Editor::anonymous("0.0.0.0"); }

}  // namespace

struct DumpReader::Impl {
    std::istream& in;
    PageFilter filter;
    XML_Parser parser = nullptr;
    std::vector<char> buffer = std::vector<char>(1 << 20);
    bool finished = false;
    std::size_t skipped = 0;

    std::vector<std::string> path;
    std::string chars;
    bool capturing = false;

    std::optional<PageFragment> page;
    bool page_wanted = true;
    bool have_ns = false;
    std::deque<PageFragment> ready;

    // Current revision.
    bool in_revision = false;
    RevisionRecord rev;
    bool rev_has_timestamp = false;
    bool rev_bad_timestamp = false;
    std::optional<std::string> contributor_user;
    std::optional<std::string> contributor_ip;
    bool contributor_deleted = false;

    Impl(std::istream& is, PageFilter f) : in(is), filter(std::move(f)) {
        parser = XML_ParserCreate("UTF-8");
        if (!parser) throw std::runtime_error("cannot create XML parser");
        XML_SetUserData(parser, this);
        XML_SetElementHandler(parser, &Impl::on_start, &Impl::on_end);
        XML_SetCharacterDataHandler(parser, &Impl::on_chars);
    }
    ~Impl() { XML_ParserFree(parser); }

    static bool has_attr(const XML_Char** attrs, const char* name) {
        for (int i = 0; attrs && attrs[i]; i += 2)
            if (std::strcmp(attrs[i], name) == 0) return true;
        return false;
    }

    std::string_view parent() const { return path.size() >= 2 ? std::string_view(path[path.size() - 2]) : ""; }

    static void on_start(void* ud, const XML_Char* name, const XML_Char** attrs) {
        auto* self = static_cast<Impl*>(ud);
        self->start(name, attrs);
    }
    static void on_end(void* ud, const XML_Char* name) { static_cast<Impl*>(ud)->end(name); }
    static void on_chars(void* ud, const XML_Char* s, int len) {
        auto* self = static_cast<Impl*>(ud);
        if (self->capturing) self->chars.append(s, static_cast<std::size_t>(len));
    }

    void start(std::string_view name, const XML_Char** attrs) {
        path.emplace_back(name);
        chars.clear();
        capturing = false;
        const auto par = parent();
        if (name == "page") {
            page.emplace();
            page_wanted = true;
            have_ns = false;
            return;
        }
        if (!page) return;
        if (name == "revision" && par == "page") {
            in_revision = page_wanted;
            rev = RevisionRecord{};
            rev_has_timestamp = false;
            rev_bad_timestamp = false;
            contributor_user.reset();
            contributor_ip.reset();
            contributor_deleted = false;
            return;
        }
        if (par == "page" && (name == "title" || name == "ns" || name == "id")) {
            capturing = true;
            return;
        }
        if (!in_revision) return;
        if (par == "revision") {
            if (name == "text") {
                rev.suppressed = has_attr(attrs, "deleted");
                capturing = !rev.suppressed;
            } else if (name == "comment") {
                capturing = !has_attr(attrs, "deleted");
            } else if (name == "contributor") {
                contributor_deleted = has_attr(attrs, "deleted");
            } else if (name == "id" || name == "parentid" || name == "timestamp") {
                capturing = true;
            }
        } else if (par == "contributor" && (name == "username" || name == "ip")) {
            capturing = true;
        }
    }

    static std::optional<std::int64_t> to_int(std::string_view s) {
        s = trim(s);
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
        return v;
    }

    void end(std::string_view name) {
        const auto par = parent();
        if (page) {
            if (par == "page") {
                if (name == "title") {
                    page->title = chars;
                } else if (name == "ns") {
                    page->ns = static_cast<int>(to_int(chars).value_or(-1));
                    have_ns = true;
                    page_wanted = (page->ns == kArticleNamespace || page->ns == kTalkNamespace) &&
                                  (!filter || filter(page->title, page->ns));
                } else if (name == "id") {
                    page->page_id = to_int(chars).value_or(0);
                } else if (name == "revision") {
                    finish_revision();
                }
            } else if (in_revision && par == "revision") {
                if (name == "id") {
                    rev.revision_id = to_int(chars).value_or(0);
                } else if (name == "parentid") {
                    rev.parent_revision_id = to_int(chars);
                } else if (name == "timestamp") {
                    if (auto t = parse_iso8601(chars)) {
                        rev.timestamp = *t;
                        rev_has_timestamp = true;
                    } else {
                        rev_bad_timestamp = true;
                    }
                } else if (name == "comment") {
                    rev.comment = chars;
                } else if (name == "text") {
                    rev.text = std::move(chars);
                }
            } else if (in_revision && par == "contributor") {
                if (name == "username") contributor_user = chars;
                if (name == "ip") contributor_ip = chars;
            }
            if (name == "page" && path.size() >= 1) finish_page();
        }
        path.pop_back();
        chars.clear();
        capturing = false;
    }

    void finish_revision() {
        if (!in_revision) return;
        in_revision = false;
        if (!rev_has_timestamp) {
            spdlog::warn("page '{}': revision {} has {} timestamp, skipped", page->title, rev.revision_id,
                         rev_bad_timestamp ? "an unparseable" : "no");
            ++skipped;
            return;
        }
        if (contributor_user && !contributor_user->empty()) {
            rev.editor = Editor::registered(*contributor_user);
        } else if (contributor_ip && is_ip_address(trim(*contributor_ip))) {
            rev.editor = Editor::anonymous(std::string(trim(*contributor_ip)));
        } else {
            if (!contributor_deleted && contributor_ip)
                spdlog::warn("page '{}': revision {} has non-IP contributor '{}'", page->title, rev.revision_id,
                             *contributor_ip);
            rev.editor = unknown_editor();
        }
        rev.page_id = page->page_id;
        rev.title = page->title;
        rev.ns = page->ns;
        rev.content_hash = fnv1a64(rev.text);
        page->revisions.push_back(std::move(rev));
    }

    void finish_page() {
        if (page_wanted && have_ns) {
            sort_canonical(page->revisions);
            ready.push_back(std::move(*page));
        }
        page.reset();
        in_revision = false;
    }

    void feed() {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        const auto n = in.gcount();
        const bool last = n < static_cast<std::streamsize>(buffer.size()) || in.eof();
        if (XML_Parse(parser, buffer.data(), static_cast<int>(n), last ? 1 : 0) == XML_STATUS_ERROR) {
            throw DumpParseError(std::string("malformed dump XML: ") + XML_ErrorString(XML_GetErrorCode(parser)),
                                 XML_GetCurrentByteIndex(parser));
        }
        if (last) finished = true;
    }
};

DumpReader::DumpReader(std::istream& in, PageFilter filter) : impl_(std::make_unique<Impl>(in, std::move(filter))) {}
DumpReader::~DumpReader() = default;

std::optional<PageFragment> DumpReader::next() {
    while (impl_->ready.empty() && !impl_->finished) impl_->feed();
    if (impl_->ready.empty()) return std::nullopt;
    PageFragment out = std::move(impl_->ready.front());
    impl_->ready.pop_front();
    return out;
}

std::size_t DumpReader::skipped_revisions() const { return impl_->skipped; }

std::vector<PageFragment> parse_dump_stream(std::istream& in) {
    DumpReader reader(in);
    std::vector<PageFragment> out;
    while (auto page = reader.next()) out.push_back(std::move(*page));
    return out;
}

std::vector<PageFragment> parse_jsonl_stream(std::istream& in) {
    std::vector<PageFragment> out;
    std::map<std::pair<int, std::string>, std::size_t> index;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        RevisionRecord rec;
        try {
            rec = nlohmann::json::parse(line).get<RevisionRecord>();
        } catch (const std::exception& e) {
            throw std::runtime_error("revision JSON line " + std::to_string(line_no) + ": " + e.what());
        }
        const auto key = std::make_pair(rec.ns, rec.title);
        auto [it, inserted] = index.try_emplace(key, out.size());
        if (inserted) {
            PageFragment frag;
            frag.page_id = rec.page_id;
            frag.title = rec.title;
            frag.ns = rec.ns;
            out.push_back(std::move(frag));
        }
        if (rec.ns == kArticleNamespace || rec.ns == kTalkNamespace) out[it->second].revisions.push_back(std::move(rec));
    }
    std::erase_if(out, [](const PageFragment& f) { return f.ns != kArticleNamespace && f.ns != kTalkNamespace; });
    for (auto& f : out) sort_canonical(f.revisions);
    return out;
}

PairingResult pair_article_talk(std::vector<PageFragment> fragments) {
    PairingResult result;
    std::map<std::string, std::vector<RevisionRecord>> talk;
    for (auto& frag : fragments) {
        if (frag.ns == kArticleNamespace) {
            const auto title = normalize_title(frag.title);
            auto& page = result.pages[title];
            page.title = title;
            for (auto& r : frag.revisions) page.article_revisions.push_back(std::move(r));
        } else if (frag.ns == kTalkNamespace) {
            auto subject = talk_subject(frag.title);
            const auto key = subject ? *subject : normalize_title(frag.title);
            auto& revs = talk[key];
            for (auto& r : frag.revisions) revs.push_back(std::move(r));
        }
    }
    for (auto& [title, revs] : talk) {
        auto it = result.pages.find(title);
        if (it == result.pages.end()) {
            result.orphan_talk_pages.push_back("Talk:" + title);
            continue;
        }
        it->second.talk_revisions = std::move(revs);
    }
    for (auto& [title, page] : result.pages) {
        sort_canonical(page.article_revisions);
        sort_canonical(page.talk_revisions);
    }
    return result;
}

std::set<std::string> load_title_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read title list " + path.string());
    std::set<std::string> titles;
    std::string line;
    while (std::getline(in, line)) {
        auto t = normalize_title(line);
        if (!t.empty()) titles.insert(std::move(t));
    }
    if (titles.empty()) spdlog::warn("title list {} is empty", path.string());
    return titles;
}

StatusLists load_status_lists(const StatusListPaths& paths, std::optional<Timestamp> snapshot) {
    StatusLists lists;
    lists.current_fa = load_title_list(paths.current_fa);
    lists.current_ga = load_title_list(paths.current_ga);
    lists.former_fa = load_title_list(paths.former_fa);
    lists.delisted_ga = load_title_list(paths.delisted_ga);
    lists.snapshot_date = snapshot;
    return lists;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const RevisionRecord& r) {
    j = nlohmann::json{{"page_id", r.page_id},
                       {"title", r.title},
                       {"ns", r.ns},
                       {"revision_id", r.revision_id},
                       {"parent_revision_id", nullptr},
                       {"timestamp", format_iso8601(r.timestamp)},
                       {"comment", r.comment},
                       {"text", r.text},
                       {"content_hash", hex64(r.content_hash)},
                       {"suppressed", r.suppressed}};
    if (r.parent_revision_id) j["parent_revision_id"] = *r.parent_revision_id;
    if (r.editor.is_anonymous())
        j["editor"] = {{"ip", r.editor.id()}};
    else
        j["editor"] = {{"user", r.editor.id()}};
}

void from_json(const nlohmann::json& j, RevisionRecord& r) {
    r = RevisionRecord{};
    r.page_id = j.value("page_id", std::int64_t{0});
    r.title = j.at("title").get<std::string>();
    r.ns = j.value("ns", kArticleNamespace);
    r.revision_id = j.at("revision_id").get<std::int64_t>();
    if (j.contains("parent_revision_id") && !j["parent_revision_id"].is_null())
        r.parent_revision_id = j["parent_revision_id"].get<std::int64_t>();
    const auto& ts = j.at("timestamp");
    if (ts.is_number_integer()) {
        r.timestamp = ts.get<Timestamp>();
    } else {
        auto t = parse_iso8601(ts.get<std::string>());
        if (!t) throw std::runtime_error("bad timestamp '" + ts.get<std::string>() + "'");
        r.timestamp = *t;
    }
    const nlohmann::json* ed = j.contains("editor") ? &j["editor"] : &j;
    if (ed->contains("user") && !(*ed)["user"].is_null())
        r.editor = Editor::registered((*ed)["user"].get<std::string>());
    else if (ed->contains("ip"))
        r.editor = Editor::anonymous((*ed)["ip"].get<std::string>());
    else
        throw std::runtime_error("revision " + std::to_string(r.revision_id) + " has no editor");
    r.comment = j.value("comment", std::string{});
    r.text = j.value("text", std::string{});
    r.suppressed = j.value("suppressed", false);
    r.content_hash = fnv1a64(r.text);
}

void to_json(nlohmann::json& j, const PageHistory& p) {
    j = nlohmann::json{{"title", p.title},
                       {"article_revisions", p.article_revisions},
                       {"talk_revisions", p.talk_revisions}};
}

void from_json(const nlohmann::json& j, PageHistory& p) {
    p.title = j.at("title").get<std::string>();
    p.article_revisions = j.at("article_revisions").get<std::vector<RevisionRecord>>();
    p.talk_revisions = j.at("talk_revisions").get<std::vector<RevisionRecord>>();
}

std::filesystem::path page_history_path(const std::filesystem::path& dir, std::string_view title) {
    auto name = percent_encode(title);
    // Keep within common file-name limits; the hash keeps long titles distinct.
    if (name.size() > 200) name = name.substr(0, 180) + "~" + hex64(fnv1a64(title));
    return dir / (name + ".json");
}

std::filesystem::path write_page_history(const std::filesystem::path& dir, const PageHistory& page) {
    std::filesystem::create_directories(dir);
    const auto path = page_history_path(dir, page.title);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << nlohmann::json(page).dump() << '\n';
    return path;
}

PageHistory read_page_history(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    return nlohmann::json::parse(in).get<PageHistory>();
}

}  // namespace wikisustain::ingest
