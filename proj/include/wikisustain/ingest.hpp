#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include "json.hpp"
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wikisustain/core.hpp"

namespace wikisustain::ingest {

inline constexpr int kArticleNamespace = 0;
inline constexpr int kTalkNamespace = 1;

struct RevisionRecord {
    std::int64_t page_id = 0;
    std::string title;
    int ns = kArticleNamespace;
    std::int64_t revision_id = 0;
    std::optional<std::int64_t> parent_revision_id;
    Timestamp timestamp = 0;
    Editor editor;
    std::string comment;
    std::string text;
    std::uint64_t content_hash = 0;
    /// Text was deleted or suppressed in the dump; `text` is empty.
    bool suppressed = false;
};

/// Builds a record and fills content_hash from `text`.
RevisionRecord make_revision(std::int64_t page_id, std::string title, int ns, std::int64_t revision_id,
                             Timestamp timestamp, Editor editor, std::string text, std::string comment = {});

/// Sorts ascending by (timestamp, revision_id).
void sort_canonical(std::vector<RevisionRecord>& revisions);

/// One <page> element of a dump (a single namespace).
struct PageFragment {
    std::int64_t page_id = 0;
    std::string title;  ///< as it appears in the dump, including any "Talk:" prefix
    int ns = kArticleNamespace;
    std::vector<RevisionRecord> revisions;
};

struct PageHistory {
    std::string title;
    std::vector<RevisionRecord> article_revisions;
    std::vector<RevisionRecord> talk_revisions;

    std::optional<Timestamp> birth() const {
        if (article_revisions.empty()) return std::nullopt;
        return article_revisions.front().timestamp;
    }
};

struct StatusLists {
    std::set<std::string> current_fa;
    std::set<std::string> current_ga;
    std::set<std::string> former_fa;
    std::set<std::string> delisted_ga;
    std::optional<Timestamp> snapshot_date;

    /// Union of the four lists: the candidate population.
    std::set<std::string> population() const;
};

/// MediaWiki title normalization: underscores become spaces, runs of spaces collapse,
/// surrounding whitespace is dropped and the first character is upper-cased.
std::string normalize_title(std::string_view title);

/// Strips a "Talk:" prefix (case-insensitive). Returns nullopt when absent.
std::optional<std::string> talk_subject(std::string_view title);

// ---------------------------------------------------------------------------
// Streaming XML dump reader.

class DumpParseError : public std::runtime_error {
public:
    DumpParseError(const std::string& what, std::int64_t byte_offset)
        : std::runtime_error(what + " at byte " + std::to_string(byte_offset)), offset_(byte_offset) {}
    std::int64_t byte_offset() const { return offset_; }

private:
    std::int64_t offset_;
};

/// Pull parser over a pages-meta-history XML stream. Holds at most one page in memory.
/// Only namespaces 0 and 1 are yielded; an optional filter can drop pages by title.
class DumpReader {
public:
    using PageFilter = std::function<bool(std::string_view title, int ns)>;

    explicit DumpReader(std::istream& in, PageFilter filter = {});
    ~DumpReader();
    DumpReader(const DumpReader&) = delete;
    DumpReader& operator=(const DumpReader&) = delete;

    /// Next page with canonically sorted revisions, or nullopt at end of stream.
    std::optional<PageFragment> next();

    std::size_t skipped_revisions() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience: parses the whole stream. Only for small inputs and tests.
std::vector<PageFragment> parse_dump_stream(std::istream& in);

/// JSON-lines revisions, one RevisionRecord object per line. Revisions are grouped
/// into fragments by (ns, title) and sorted; fragment order follows first appearance.
std::vector<PageFragment> parse_jsonl_stream(std::istream& in);

struct PairingResult {
    std::map<std::string, PageHistory> pages;
    /// Talk pages whose subject article was not among the input.
    std::vector<std::string> orphan_talk_pages;
};

PairingResult pair_article_talk(std::vector<PageFragment> fragments);

/// Newline-delimited UTF-8 title file. Throws on unreadable files.
std::set<std::string> load_title_list(const std::filesystem::path& path);

struct StatusListPaths {
    std::filesystem::path current_fa, current_ga, former_fa, delisted_ga;
};

StatusLists load_status_lists(const StatusListPaths& paths, std::optional<Timestamp> snapshot = std::nullopt);

/// Fetches all members of a category through the standard MediaWiki API
/// (list=categorymembers with continuation), waiting `min_interval_ms` between requests.
std::set<std::string> fetch_category_titles(const std::string& api_base_url, const std::string& category,
                                            int min_interval_ms = 1000);

// ---------------------------------------------------------------------------
// Serialization.

void to_json(nlohmann::json& j, const RevisionRecord& r);
void from_json(const nlohmann::json& j, RevisionRecord& r);
void to_json(nlohmann::json& j, const PageHistory& p);
void from_json(const nlohmann::json& j, PageHistory& p);

/// Writes `<dir>/<percent-encoded title>.json`.
std::filesystem::path write_page_history(const std::filesystem::path& dir, const PageHistory& page);
PageHistory read_page_history(const std::filesystem::path& file);
std::filesystem::path page_history_path(const std::filesystem::path& dir, std::string_view title);

}  // namespace wikisustain::ingest
