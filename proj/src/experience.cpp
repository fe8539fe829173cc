#include "wikisustain/experience.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <queue>
#include <stdexcept>

#include "json.hpp"

namespace wikisustain::experience {

static_assert(std::endian::native == std::endian::little, "index records are stored little endian");

namespace {

constexpr std::size_t kRecordBytes = 16;

void encode(const EditRecord& r, char* out) {
    std::memcpy(out, &r.editor, 4);
    std::memcpy(out + 4, &r.article, 4);
    std::memcpy(out + 8, &r.timestamp, 8);
}

EditRecord decode(const char* in) {
    EditRecord r;
    std::memcpy(&r.editor, in, 4);
    std::memcpy(&r.article, in + 4, 4);
    std::memcpy(&r.timestamp, in + 8, 8);
    return r;
}

void write_records(std::ofstream& out, const std::vector<EditRecord>& records) {
    std::vector<char> buf(records.size() * kRecordBytes);
    for (std::size_t i = 0; i < records.size(); ++i) encode(records[i], buf.data() + i * kRecordBytes);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

class RunReader {
public:
    explicit RunReader(const std::filesystem::path& p) : in_(p, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot read index run " + p.string());
        advance();
    }
    bool done() const { return done_; }
    const EditRecord& head() const { return head_; }
    void advance() {
        char buf[kRecordBytes];
        if (in_.read(buf, kRecordBytes))
            head_ = decode(buf);
        else
            done_ = true;
    }

private:
    std::ifstream in_;
    EditRecord head_;
    bool done_ = false;
};

std::optional<Timestamp> opt_ts(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<Timestamp>();
}

}  // namespace

ArticleStatus ArticleStatus::from_timeline(const labels::ArticleTimeline& t) {
    ArticleStatus s;
    for (const auto& e : t.events) {
        auto& slot = e.kind == labels::EventKind::Promotion ? s.first_promotion : s.first_demotion;
        if (!slot || e.timestamp < *slot) slot = e.timestamp;
    }
    return s;
}

int ArticleStatus::sign_at(Timestamp at) const {
    if (first_demotion && *first_demotion < at) return -1;
    if (first_promotion && *first_promotion < at) return 1;
    return 0;
}

IndexBuilder::IndexBuilder(std::filesystem::path dir, std::vector<std::string> article_titles,
                           std::size_t memory_ceiling)
    : dir_(std::move(dir)), titles_(std::move(article_titles)), statuses_(titles_.size()),
      ceiling_(std::max<std::size_t>(memory_ceiling, 1)) {
    std::filesystem::create_directories(dir_);
}

void IndexBuilder::add_article(std::uint32_t article, std::span<const ingest::RevisionRecord> revisions) {
    if (article >= titles_.size()) throw std::out_of_range("article id out of range");
    for (const auto& r : revisions) {
        if (r.editor.is_anonymous()) continue;
        auto [it, inserted] = editor_ids_.emplace(r.editor.id(), static_cast<std::uint32_t>(editor_names_.size()));
        if (inserted) editor_names_.push_back(r.editor.id());
        buffer_.push_back({it->second, article, r.timestamp});
        if (buffer_.size() >= ceiling_) flush_run();
    }
}

void IndexBuilder::set_status(std::uint32_t article, const ArticleStatus& status) { statuses_.at(article) = status; }

void IndexBuilder::flush_run() {
    if (buffer_.empty()) return;
    std::sort(buffer_.begin(), buffer_.end());
    const auto path = dir_ / ("run-" + std::to_string(runs_.size()) + ".bin");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    write_records(out, buffer_);
    if (!out) throw std::runtime_error("cannot write index run " + path.string());
    runs_.push_back(path);
    buffer_.clear();
}

std::size_t IndexBuilder::finish(const std::string& corpus_hash) {
    std::vector<std::uint64_t> counts(editor_names_.size() + 1, 0);
    const auto data_path = dir_ / "edits.bin";
    std::ofstream out(data_path, std::ios::binary | std::ios::trunc);
    std::size_t merged = 0;
    if (runs_.empty()) {
        std::sort(buffer_.begin(), buffer_.end());
        write_records(out, buffer_);
        for (const auto& r : buffer_) ++counts[r.editor];
        buffer_.clear();
    } else {
        flush_run();
        merged = runs_.size();
        std::vector<std::unique_ptr<RunReader>> readers;
        for (const auto& p : runs_) readers.push_back(std::make_unique<RunReader>(p));
        auto later = [&](std::size_t a, std::size_t b) { return readers[b]->head() < readers[a]->head(); };
        std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> heap(later);
        for (std::size_t i = 0; i < readers.size(); ++i)
            if (!readers[i]->done()) heap.push(i);
        std::vector<EditRecord> chunk;
        while (!heap.empty()) {
            const auto i = heap.top();
            heap.pop();
            chunk.push_back(readers[i]->head());
            ++counts[readers[i]->head().editor];
            readers[i]->advance();
            if (!readers[i]->done()) heap.push(i);
            if (chunk.size() >= ceiling_) {
                write_records(out, chunk);
                chunk.clear();
            }
        }
        write_records(out, chunk);
        readers.clear();
        for (const auto& p : runs_) std::filesystem::remove(p);
        runs_.clear();
    }
    out.close();
    if (!out) throw std::runtime_error("cannot write " + data_path.string());

    std::vector<std::uint64_t> offsets(editor_names_.size() + 1, 0);
    for (std::size_t e = 0; e < editor_names_.size(); ++e) offsets[e + 1] = offsets[e] + counts[e];

    nlohmann::ordered_json m;
    m["format"] = 1;
    m["corpus_hash"] = corpus_hash;
    m["record_count"] = offsets.back();
    m["editors"] = editor_names_;
    m["offsets"] = offsets;
    auto arts = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < titles_.size(); ++a) {
        nlohmann::ordered_json j;
        j["title"] = titles_[a];
        j["first_promotion"] = statuses_[a].first_promotion ? nlohmann::ordered_json(*statuses_[a].first_promotion)
                                                            : nlohmann::ordered_json(nullptr);
        j["first_demotion"] = statuses_[a].first_demotion ? nlohmann::ordered_json(*statuses_[a].first_demotion)
                                                          : nlohmann::ordered_json(nullptr);
        arts.push_back(std::move(j));
    }
    m["articles"] = std::move(arts);
    std::ofstream mf(dir_ / "manifest.json", std::ios::trunc);
    mf << m.dump() << '\n';
    if (!mf) throw std::runtime_error("cannot write index manifest");
    return merged;
}

// ---------------------------------------------------------------------------

std::optional<std::string> ExperienceIndex::stored_hash(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in || !std::filesystem::exists(dir / "edits.bin")) return std::nullopt;
    try {
        return nlohmann::json::parse(in).at("corpus_hash").get<std::string>();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

ExperienceIndex ExperienceIndex::open(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("no experience index in " + dir.string());
    const auto m = nlohmann::json::parse(in);
    ExperienceIndex idx;
    const auto names = m.at("editors").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < names.size(); ++i) idx.editors_.emplace(names[i], static_cast<std::uint32_t>(i));
    idx.offsets_ = m.at("offsets").get<std::vector<std::uint64_t>>();
    idx.total_ = m.at("record_count").get<std::size_t>();
    if (idx.offsets_.size() != names.size() + 1) throw std::runtime_error("corrupt experience index manifest");
    for (const auto& a : m.at("articles")) {
        idx.articles_.emplace(a.at("title").get<std::string>(), static_cast<std::uint32_t>(idx.statuses_.size()));
        idx.statuses_.push_back({opt_ts(a, "first_promotion"), opt_ts(a, "first_demotion")});
    }
    const auto data = (dir / "edits.bin").string();
    idx.fd_ = ::open(data.c_str(), O_RDONLY);
    if (idx.fd_ < 0) throw std::runtime_error("cannot open " + data);
    return idx;
}

ExperienceIndex::ExperienceIndex(ExperienceIndex&& o) noexcept { *this = std::move(o); }

ExperienceIndex& ExperienceIndex::operator=(ExperienceIndex&& o) noexcept {
    if (this != &o) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = std::exchange(o.fd_, -1);
        total_ = o.total_;
        offsets_ = std::move(o.offsets_);
        editors_ = std::move(o.editors_);
        articles_ = std::move(o.articles_);
        statuses_ = std::move(o.statuses_);
    }
    return *this;
}

ExperienceIndex::~ExperienceIndex() {
    if (fd_ >= 0) ::close(fd_);
}

std::optional<std::uint32_t> ExperienceIndex::article_id(const std::string& title) const {
    auto it = articles_.find(title);
    if (it == articles_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> ExperienceIndex::editor_id(const std::string& name) const {
    auto it = editors_.find(name);
    if (it == editors_.end()) return std::nullopt;
    return it->second;
}

std::vector<EditRecord> ExperienceIndex::records(std::uint32_t editor) const {
    const auto first = offsets_.at(editor), last = offsets_.at(editor + 1);
    std::vector<char> buf((last - first) * kRecordBytes);
    std::size_t done = 0;
    while (done < buf.size()) {
        const auto got = ::pread(fd_, buf.data() + done, buf.size() - done,
                                 static_cast<off_t>(first * kRecordBytes + done));
        if (got <= 0) throw std::runtime_error("short read from experience index");
        done += static_cast<std::size_t>(got);
    }
    std::vector<EditRecord> out(last - first);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = decode(buf.data() + i * kRecordBytes);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> experience_feature_names() {
    return {"Experience-Sum", "Experience-Weighted", "Credibility-Sum", "Credibility-Weighted"};
}

features::FeatureBlock experience_features(std::uint32_t self, const features::WindowedHistory& w,
                                           const ExperienceIndex& index) {
    std::map<std::string, double> revs;
    double registered = 0;
    for (const auto& r : w.article_revisions) {
        if (r.editor.is_anonymous()) continue;
        revs[r.editor.id()] += 1.0;
        ++registered;
    }
    const Timestamp t_prom = w.t_prom;
    double exp_sum = 0, exp_w = 0, cred_sum = 0, cred_w = 0;
    for (const auto& [name, n] : revs) {
        const double weight = n / registered;
        auto id = index.editor_id(name);
        if (!id) continue;
        double e = 0, c = 0;
        for (const auto& rec : index.records(*id)) {
            if (rec.article == self || rec.timestamp >= t_prom) continue;
            e += 1;
            c += index.status(rec.article).sign_at(t_prom);
        }
        exp_sum += e;
        exp_w += weight * e;
        cred_sum += c;
        cred_w += weight * c;
    }
    features::FeatureBlock b;
    b.add("Experience-Sum", exp_sum);
    b.add("Experience-Weighted", exp_w);
    b.add("Credibility-Sum", cred_sum);
    b.add("Credibility-Weighted", cred_w);
    return b;
}

}  // namespace wikisustain::experience
