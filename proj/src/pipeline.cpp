#include "wikisustain/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "wikisustain/assembly.hpp"
#include "wikisustain/experience.hpp"
#include "wikisustain/ingest.hpp"
#include "wikisustain/parallel.hpp"

namespace wikisustain::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config parsing.

namespace {

/// Walks one JSON object, remembering its field path and rejecting unknown keys.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw UsageError(path_.empty() ? "<root>" : path_, "expected an object");
    }
    ~Section() = default;

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }
    Section sub(const std::string& key) {
        seen_.insert(key);
        static const json empty = json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, field(key));
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw UsageError(field(key), "has the wrong type");
        }
    }
    std::string str(const std::string& key, std::string fallback) {
        get(key, fallback);
        return fallback;
    }
    void check_unknown() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw UsageError(field(k), "unknown setting");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string rel(const fs::path& p, const fs::path& base) {
    if (p.empty()) return "";
    auto r = p.lexically_relative(base);
    return r.empty() ? p.string() : r.generic_string();
}

fs::path config_base;  // directory of the last parsed config, for to_json

}  // namespace

PipelineConfig parse_config(const json& j, const fs::path& base_dir) {
    PipelineConfig c;
    Section root(j, "");

    {
        auto p = root.sub("paths");
        std::string s;
        s = p.str("dump", "");
        if (s.empty()) throw UsageError("paths.dump", "is required");
        c.paths.dump = resolve(base_dir, s);
        c.paths.dump_format = p.str("dump_format", "auto");
        if (c.paths.dump_format != "auto" && c.paths.dump_format != "xml" && c.paths.dump_format != "jsonl")
            throw UsageError("paths.dump_format", "must be one of auto, xml, jsonl");
        auto lists = p.sub("lists");
        for (auto [key, slot] : {std::pair{"current_fa", &c.paths.lists.current_fa},
                                 std::pair{"current_ga", &c.paths.lists.current_ga},
                                 std::pair{"former_fa", &c.paths.lists.former_fa},
                                 std::pair{"delisted_ga", &c.paths.lists.delisted_ga}}) {
            s = lists.str(key, "");
            if (s.empty()) throw UsageError(lists.field(key), "is required");
            *slot = resolve(base_dir, s);
        }
        lists.check_unknown();
        s = p.str("workdir", "");
        if (s.empty()) throw UsageError("paths.workdir", "is required");
        c.paths.workdir = resolve(base_dir, s);
        c.paths.registry = resolve(base_dir, p.str("registry", ""));
        c.paths.sidecar = resolve(base_dir, p.str("sidecar", ""));
        p.check_unknown();
    }

    if (root.has("snapshot_date")) {
        const auto s = root.str("snapshot_date", "");
        auto t = parse_iso8601(s);
        if (!t) throw UsageError("snapshot_date", "must be an ISO date");
        c.snapshot = *t;
    }
    try {
        c.use_case = parse_use_case(root.str("use_case", "fa"));
    } catch (const std::exception&) {
        throw UsageError("use_case", "must be fa or ga");
    }

    {
        auto s = root.sub("censoring");
        s.get("fa_year", c.censoring.fa_year);
        s.get("ga_year", c.censoring.ga_year);
        s.check_unknown();
    }
    {
        auto s = root.sub("labels");
        double window = 45, min_days = 30;
        s.get("duplicate_window_days", window);
        s.get("min_duration_days", min_days);
        s.get("min_revisions", c.labels.templates.min_revisions);
        s.get("fa_template_aliases", c.labels.templates.fa_aliases);
        s.get("ga_template_aliases", c.labels.templates.ga_aliases);
        if (window < 0) throw UsageError("labels.duplicate_window_days", "must be non-negative");
        if (min_days < 0) throw UsageError("labels.min_duration_days", "must be non-negative");
        c.labels.duplicate_window = static_cast<Timestamp>(window * kSecondsPerDay);
        c.labels.templates.min_duration = static_cast<Timestamp>(min_days * kSecondsPerDay);
        s.check_unknown();
    }
    {
        auto s = root.sub("registry");
        c.registry.source = s.str("source", "file");
        if (c.registry.source != "file" && c.registry.source != "corpus")
            throw UsageError("registry.source", "must be file or corpus");
        s.get("removed", c.registry.removed);
        s.get("top", c.registry.top);
        s.check_unknown();
        if (c.registry.source == "file" && c.paths.registry.empty())
            throw UsageError("paths.registry", "is required when registry.source is file");
    }
    {
        auto s = root.sub("scorer");
        c.scorer.scorer_id = s.str("id", "lexicon-v1");
        if (c.scorer.scorer_id != "lexicon-v1" && c.scorer.scorer_id != "import")
            throw UsageError("scorer.id", "must be lexicon-v1 or import");
        if (c.scorer.scorer_id == "import" && c.paths.sidecar.empty())
            throw UsageError("paths.sidecar", "is required by the import scorer");
        auto t = s.sub("thresholds");
        for (std::size_t d = 0; d < discussion::kDimensions.size(); ++d) {
            const auto key = to_lower(discussion::kDimensions[d]);
            t.get(key, c.scorer.thresholds[d]);
            if (!(c.scorer.thresholds[d] > 0.0 && c.scorer.thresholds[d] < 1.0))
                throw UsageError(t.field(key), "must lie strictly between 0 and 1");
        }
        t.check_unknown();
        s.check_unknown();
    }
    {
        auto s = root.sub("experience");
        s.get("memory_ceiling_records", c.index_memory_records);
        if (c.index_memory_records == 0) throw UsageError("experience.memory_ceiling_records", "must be positive");
        s.check_unknown();
    }
    {
        auto s = root.sub("model");
        s.get("n_trees", c.model.n_trees);
        s.get("max_depth", c.model.max_depth);
        s.get("learning_rate", c.model.learning_rate);
        s.get("min_samples_leaf", c.model.min_samples_leaf);
        if (c.model.n_trees < 0) throw UsageError("model.n_trees", "must be non-negative");
        if (c.model.max_depth < 1) throw UsageError("model.max_depth", "must be at least 1");
        if (!(c.model.learning_rate > 0)) throw UsageError("model.learning_rate", "must be positive");
        if (c.model.min_samples_leaf < 1) throw UsageError("model.min_samples_leaf", "must be at least 1");
        s.check_unknown();
    }
    {
        auto s = root.sub("eval");
        auto& e = c.eval;
        s.get("bootstrap_iterations", e.bootstrap_iterations);
        s.get("folds", e.folds);
        s.get("threshold", e.metrics.threshold);
        s.get("precision_at", e.metrics.precision_at);
        s.get("heatmap_min_count", e.heatmap_min_count);
        s.get("fp_top_n", e.fp_top_n);
        s.get("shap_top_n", e.shap_top_n);
        s.get("ablation", e.ablation);
        s.get("leakage_audit_articles", e.leakage_audit_articles);
        if (e.bootstrap_iterations < 2) throw UsageError("eval.bootstrap_iterations", "must be at least 2");
        if (e.folds < 2) throw UsageError("eval.folds", "must be at least 2");
        if (!(e.metrics.threshold > 0 && e.metrics.threshold < 1))
            throw UsageError("eval.threshold", "must lie strictly between 0 and 1");
        for (int k : e.metrics.precision_at)
            if (k < 1 || k > 100) throw UsageError("eval.precision_at", "entries must be percentages in 1..100");
        if (s.has("heatmaps")) {
            const auto& arr = s.raw("heatmaps");
            if (!arr.is_array()) throw UsageError("eval.heatmaps", "expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Section h(arr[i], "eval.heatmaps[" + std::to_string(i) + "]");
                HeatmapSpec spec;
                spec.x = h.str("x", "");
                spec.y = h.str("y", "");
                if (spec.x.empty()) throw UsageError(h.field("x"), "is required");
                if (spec.y.empty()) throw UsageError(h.field("y"), "is required");
                h.get("bins_x", spec.bins_x);
                h.get("bins_y", spec.bins_y);
                if (spec.bins_x == 0) throw UsageError(h.field("bins_x"), "must be positive");
                if (spec.bins_y == 0) throw UsageError(h.field("bins_y"), "must be positive");
                const auto b = h.str("binning", "quantile");
                if (b == "quantile")
                    spec.binning = eval::Binning::Quantile;
                else if (b == "fixed")
                    spec.binning = eval::Binning::FixedWidth;
                else
                    throw UsageError(h.field("binning"), "must be quantile or fixed");
                h.check_unknown();
                e.heatmaps.push_back(std::move(spec));
            }
        } else {
            e.heatmaps = {HeatmapSpec{"Time-to-Promotion", "Num-of-Editors-Normalized"}};
        }
        auto g = s.sub("corpus_growth");
        g.get("first_year", e.growth_first_year);
        g.get("last_year", e.growth_last_year);
        g.get("min_positives", e.growth_min_positives);
        if (e.growth_last_year < e.growth_first_year)
            throw UsageError("eval.corpus_growth.last_year", "precedes first_year");
        g.check_unknown();
        s.check_unknown();
    }
    root.get("seed", c.seed);
    root.get("workers", c.workers);
    root.check_unknown();

    if (const char* env = std::getenv("WIKISUSTAIN_WORKERS")) {
        try {
            c.workers = static_cast<std::size_t>(std::stoul(env));
        } catch (const std::exception&) {
            throw UsageError("WIKISUSTAIN_WORKERS", "must be a non-negative integer");
        }
    }
    if (c.workers == 0) c.workers = std::max(1U, std::thread::hardware_concurrency());
    config_base = base_dir;
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("--config", "cannot read " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError("--config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j, fs::absolute(path).parent_path());
}

ojson PipelineConfig::to_json() const {
    const auto& b = config_base;
    ojson j;
    j["paths"] = {{"dump", rel(paths.dump, b)},
                  {"dump_format", paths.dump_format},
                  {"lists",
                   {{"current_fa", rel(paths.lists.current_fa, b)},
                    {"current_ga", rel(paths.lists.current_ga, b)},
                    {"former_fa", rel(paths.lists.former_fa, b)},
                    {"delisted_ga", rel(paths.lists.delisted_ga, b)}}},
                  {"workdir", rel(paths.workdir, b)},
                  {"registry", rel(paths.registry, b)},
                  {"sidecar", rel(paths.sidecar, b)}};
    j["snapshot_date"] = snapshot ? ojson(format_iso8601(*snapshot)) : ojson(nullptr);
    j["use_case"] = to_lower(to_string(use_case));
    j["censoring"] = {{"fa_year", censoring.fa_year}, {"ga_year", censoring.ga_year}};
    j["labels"] = {{"duplicate_window_days", static_cast<double>(labels.duplicate_window) / kSecondsPerDay},
                   {"min_duration_days", static_cast<double>(labels.templates.min_duration) / kSecondsPerDay},
                   {"min_revisions", labels.templates.min_revisions},
                   {"fa_template_aliases", labels.templates.fa_aliases},
                   {"ga_template_aliases", labels.templates.ga_aliases}};
    j["registry"] = {{"source", registry.source}, {"removed", registry.removed}, {"top", registry.top}};
    ojson thresholds;
    for (std::size_t d = 0; d < discussion::kDimensions.size(); ++d)
        thresholds[to_lower(discussion::kDimensions[d])] = scorer.thresholds[d];
    j["scorer"] = {{"id", scorer.scorer_id}, {"thresholds", thresholds}};
    j["experience"] = {{"memory_ceiling_records", index_memory_records}};
    j["model"] = {{"n_trees", model.n_trees},
                  {"max_depth", model.max_depth},
                  {"learning_rate", model.learning_rate},
                  {"min_samples_leaf", model.min_samples_leaf}};
    auto heat = ojson::array();
    for (const auto& h : eval.heatmaps)
        heat.push_back({{"x", h.x},
                        {"y", h.y},
                        {"bins_x", h.bins_x},
                        {"bins_y", h.bins_y},
                        {"binning", h.binning == eval::Binning::Quantile ? "quantile" : "fixed"}});
    j["eval"] = {{"bootstrap_iterations", eval.bootstrap_iterations},
                 {"folds", eval.folds},
                 {"threshold", eval.metrics.threshold},
                 {"precision_at", eval.metrics.precision_at},
                 {"heatmap_min_count", eval.heatmap_min_count},
                 {"heatmaps", heat},
                 {"corpus_growth",
                  {{"first_year", eval.growth_first_year},
                   {"last_year", eval.growth_last_year},
                   {"min_positives", eval.growth_min_positives}}},
                 {"fp_top_n", eval.fp_top_n},
                 {"shap_top_n", eval.shap_top_n},
                 {"ablation", eval.ablation},
                 {"leakage_audit_articles", eval.leakage_audit_articles}};
    j["seed"] = seed;
    return j;
}

// ---------------------------------------------------------------------------
// Content hashing and stage stamps.

namespace {

std::string file_hash(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a64(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
    }
    return hex64(h);
}

/// Hash of a file, or of every file under a directory (relative names included).
std::string path_hash(const fs::path& p) {
    if (!fs::is_directory(p)) return file_hash(p);
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string joined;
    for (const auto& f : files) joined += f.lexically_relative(p).generic_string() + ' ' + file_hash(f) + '\n';
    return hex64(fnv1a64(joined));
}

struct StageIo {
    std::string name;
    std::vector<std::string> key_parts;
    std::vector<fs::path> outputs;
};

class StampStore {
public:
    explicit StampStore(fs::path dir) : dir_(std::move(dir)) {}

    std::string key(const StageIo& io) const {
        std::string joined = io.name;
        for (const auto& p : io.key_parts) joined += '\n' + p;
        return hex64(fnv1a64(joined));
    }

    bool fresh(const StageIo& io, const std::string& stamp_name) const {
        std::ifstream in(dir_ / (stamp_name + ".json"));
        if (!in) return false;
        try {
            const auto j = json::parse(in);
            if (j.at("key").get<std::string>() != key(io)) return false;
            const auto& outs = j.at("outputs");
            for (const auto& p : io.outputs) {
                if (!fs::exists(p)) return false;
                const auto name = entry_name(p);
                if (!outs.contains(name) || outs.at(name).get<std::string>() != path_hash(p))
                    return false;
            }
            return true;
        } catch (const std::exception&) {
            return false;
        }
    }

    void write(const StageIo& io, const std::string& stamp_name) const {
        fs::create_directories(dir_);
        ojson j;
        j["key"] = key(io);
        ojson outs;
        for (const auto& p : io.outputs) outs[entry_name(p)] = path_hash(p);
        j["outputs"] = outs;
        std::ofstream out(dir_ / (stamp_name + ".json"), std::ios::trunc);
        out << j.dump(1) << '\n';
    }

private:
    /// Output path relative to the workdir, so stamps survive moving it.
    std::string entry_name(const fs::path& p) const {
        return fs::absolute(p).lexically_relative(fs::absolute(dir_.parent_path())).generic_string();
    }

    fs::path dir_;
};

void require_input(const fs::path& p, const std::string& field, const std::string& hint = {}) {
    if (!fs::exists(p))
        throw UsageError(field, "missing input " + p.string() + (hint.empty() ? "" : "; " + hint));
}

std::size_t workers_of(const PipelineConfig& c) { return std::max<std::size_t>(1, c.workers); }

template <class Fn>
StageOutcome run_stage(const PipelineConfig& cfg, const StageIo& io, const std::string& stamp_name, Fn&& body) {
    StampStore stamps(cfg.paths.workdir / ".stamps");
    if (stamps.fresh(io, stamp_name)) {
        spdlog::info("{}: up to date, skipped", io.name);
        return {io.name, true};
    }
    try {
        body();
    } catch (const UsageError&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(io.name, e.what());
    }
    stamps.write(io, stamp_name);
    spdlog::info("{}: done", io.name);
    return {io.name, false};
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::string lists_key(const PipelineConfig& c) {
    return path_hash(c.paths.lists.current_fa) + path_hash(c.paths.lists.current_ga) +
           path_hash(c.paths.lists.former_fa) + path_hash(c.paths.lists.delisted_ga);
}

void require_lists(const PipelineConfig& c) {
    require_input(c.paths.lists.current_fa, "paths.lists.current_fa");
    require_input(c.paths.lists.current_ga, "paths.lists.current_ga");
    require_input(c.paths.lists.former_fa, "paths.lists.former_fa");
    require_input(c.paths.lists.delisted_ga, "paths.lists.delisted_ga");
}

}  // namespace

// ---------------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {}

fs::path Pipeline::uc_dir() const { return config_.paths.workdir / to_lower(to_string(config_.use_case)); }

StageOutcome Pipeline::ingest() {
    const auto& c = config_;
    require_input(c.paths.dump, "paths.dump");
    require_lists(c);
    const auto pages_dir = c.paths.workdir / "pages";
    StageIo io{"ingest",
               {path_hash(c.paths.dump), c.paths.dump_format, lists_key(c)},
               {pages_dir}};
    return run_stage(c, io, "ingest", [&] {
        const auto lists = ingest::load_status_lists(c.paths.lists, c.snapshot);
        const auto population = lists.population();
        fs::remove_all(pages_dir);
        const auto parts = c.paths.workdir / "ingest-parts";
        fs::remove_all(parts);
        fs::create_directories(parts / "article");
        fs::create_directories(parts / "talk");

        auto wanted = [&](std::string_view title, int ns) {
            if (ns == ingest::kArticleNamespace) return population.count(ingest::normalize_title(title)) > 0;
            if (ns == ingest::kTalkNamespace) {
                auto subject = ingest::talk_subject(title);
                return subject && population.count(*subject) > 0;
            }
            return false;
        };
        std::set<std::string> seen_talk;
        std::size_t skipped = 0;
        // Fragments go to disk as they stream past; pairing reads them back per title.
        auto keep = [&](ingest::PageFragment&& frag) {
            if (!wanted(frag.title, frag.ns)) return;
            const bool talk = frag.ns == ingest::kTalkNamespace;
            const auto title = talk ? *ingest::talk_subject(frag.title) : ingest::normalize_title(frag.title);
            const auto dir = parts / (talk ? "talk" : "article");
            ingest::PageHistory part;
            part.title = title;
            const auto existing = ingest::page_history_path(dir, title);
            if (fs::exists(existing)) part = ingest::read_page_history(existing);
            auto& revs = talk ? part.talk_revisions : part.article_revisions;
            for (auto& r : frag.revisions) revs.push_back(std::move(r));
            ingest::sort_canonical(revs);
            ingest::write_page_history(dir, part);
            if (talk) seen_talk.insert(title);
        };

        std::string format = c.paths.dump_format;
        if (format == "auto") {
            const auto ext = to_lower(c.paths.dump.extension().string());
            format = (ext == ".jsonl" || ext == ".ndjson") ? "jsonl" : "xml";
        }
        std::ifstream in(c.paths.dump, std::ios::binary);
        if (!in) throw UsageError("paths.dump", "cannot read " + c.paths.dump.string());
        if (format == "jsonl") {
            for (auto& frag : ingest::parse_jsonl_stream(in)) keep(std::move(frag));
        } else {
            ingest::DumpReader reader(in, wanted);
            while (auto frag = reader.next()) keep(std::move(*frag));
            skipped = reader.skipped_revisions();
        }

        fs::create_directories(pages_dir);
        std::vector<std::string> pages, missing, orphans;
        for (const auto& title : population) {
            const auto a = ingest::page_history_path(parts / "article", title);
            const auto t = ingest::page_history_path(parts / "talk", title);
            if (!fs::exists(a)) {
                missing.push_back(title);
                if (fs::exists(t)) orphans.push_back("Talk:" + title);
                continue;
            }
            auto page = ingest::read_page_history(a);
            if (fs::exists(t)) page.talk_revisions = ingest::read_page_history(t).talk_revisions;
            ingest::write_page_history(pages_dir, page);
            pages.push_back(title);
        }
        fs::remove_all(parts);
        if (!missing.empty()) spdlog::warn("{} listed articles are absent from the dump", missing.size());
        if (!orphans.empty()) spdlog::warn("{} talk pages have no article", orphans.size());
        ojson index;
        index["pages"] = pages;
        index["missing"] = missing;
        index["orphan_talk_pages"] = orphans;
        index["skipped_revisions"] = skipped;
        write_text(pages_dir / "index.json", index.dump(1) + "\n");
    });
}

StageOutcome Pipeline::label() {
    const auto& c = config_;
    const auto pages_dir = c.paths.workdir / "pages";
    require_input(pages_dir / "index.json", "paths.workdir", "run 'ingest' first");
    require_lists(c);
    const auto timelines_path = c.paths.workdir / "timelines.jsonl";
    const auto inconsistent_path = c.paths.workdir / "inconsistent.csv";
    ojson settings;
    settings["labels"] = c.to_json()["labels"];
    settings["censoring"] = c.to_json()["censoring"];
    settings["snapshot"] = c.snapshot ? *c.snapshot : 0;
    StageIo io{"label", {path_hash(pages_dir), lists_key(c), settings.dump()}, {timelines_path, inconsistent_path}};
    return run_stage(c, io, "label", [&] {
        const auto lists = ingest::load_status_lists(c.paths.lists, c.snapshot);
        const auto population = lists.population();
        const std::vector<std::string> titles(population.begin(), population.end());
        std::vector<labels::ArticleTimeline> timelines(titles.size());
        parallel_for(titles.size(), workers_of(c), [&](std::size_t i) {
            const auto file = ingest::page_history_path(pages_dir, titles[i]);
            if (!fs::exists(file)) {
                auto& t = timelines[i];
                t.title = titles[i];
                t.inconsistent = true;
                t.diagnostics.push_back("no page history in the dump");
                return;
            }
            timelines[i] = labels::build_timeline(titles[i], ingest::read_page_history(file), lists, c.labels);
        });
        labels::apply_censoring(timelines, c.censoring);
        labels::write_timelines(timelines_path, timelines);
        labels::write_inconsistent_csv(inconsistent_path, timelines);
    });
}

namespace {

features::WikiProjectRegistry load_registry(const PipelineConfig& c, const fs::path& pages_dir,
                                            const std::vector<labels::ArticleTimeline>& timelines) {
    features::WikiProjectRegistry reg;
    if (c.registry.source == "file") {
        require_input(c.paths.registry, "paths.registry");
        reg = features::WikiProjectRegistry::load(c.paths.registry);
    } else {
        std::map<std::string, std::size_t> counts;
        for (const auto& t : timelines) {
            const auto file = ingest::page_history_path(pages_dir, t.title);
            if (!fs::exists(file)) continue;
            const auto page = ingest::read_page_history(file);
            if (!page.talk_revisions.empty()) features::count_banners(page.talk_revisions.back().text, counts);
        }
        reg = features::WikiProjectRegistry::build_from_counts(counts, c.registry.removed, c.registry.top);
    }
    if (reg.size() != features::kTopicCount)
        throw std::runtime_error("WikiProject registry has " + std::to_string(reg.size()) + " active projects, expected " +
                                 std::to_string(features::kTopicCount));
    return reg;
}

}  // namespace

StageOutcome Pipeline::featurize() {
    const auto& c = config_;
    const auto pages_dir = c.paths.workdir / "pages";
    const auto timelines_path = c.paths.workdir / "timelines.jsonl";
    require_input(pages_dir / "index.json", "paths.workdir", "run 'ingest' first");
    require_input(timelines_path, "paths.workdir", "run 'label' first");
    if (c.scorer.scorer_id == "import") require_input(c.paths.sidecar, "paths.sidecar");
    const auto dir = uc_dir();
    const auto matrix_path = dir / "matrix.csv";
    const auto meta_path = dir / "matrix.meta.json";
    const auto at_risk_path = dir / "at_risk.csv";
    const auto cfg = c.to_json();
    ojson settings = {{"use_case", cfg["use_case"]},
                      {"registry", cfg["registry"]},
                      {"scorer", cfg["scorer"]},
                      {"audit", c.eval.leakage_audit_articles},
                      {"seed", c.seed}};
    const std::string pages_hash = path_hash(pages_dir);
    const std::string timelines_hash = path_hash(timelines_path);
    StageIo io{"featurize",
               {pages_hash, timelines_hash, settings.dump(),
                c.registry.source == "file" && fs::exists(c.paths.registry) ? path_hash(c.paths.registry) : "",
                c.scorer.scorer_id == "import" ? path_hash(c.paths.sidecar) : ""},
               {matrix_path, meta_path, at_risk_path}};
    return run_stage(c, io, "featurize-" + to_lower(to_string(c.use_case)), [&] {
        fs::create_directories(dir);
        auto timelines = labels::read_timelines(timelines_path);
        std::sort(timelines.begin(), timelines.end(),
                  [](const labels::ArticleTimeline& a, const labels::ArticleTimeline& b) { return a.title < b.title; });
        const auto registry = load_registry(c, pages_dir, timelines);

        // Corpus-wide experience index, rebuilt when the corpus changes.
        const auto index_dir = c.paths.workdir / "experience_index";
        const auto corpus_hash = hex64(fnv1a64(pages_hash + timelines_hash));
        if (experience::ExperienceIndex::stored_hash(index_dir) != corpus_hash) {
            fs::remove_all(index_dir);
            std::vector<std::string> titles;
            for (const auto& t : timelines) titles.push_back(t.title);
            experience::IndexBuilder builder(index_dir, titles, c.index_memory_records);
            for (std::size_t i = 0; i < timelines.size(); ++i) {
                builder.set_status(static_cast<std::uint32_t>(i), experience::ArticleStatus::from_timeline(timelines[i]));
                const auto file = ingest::page_history_path(pages_dir, timelines[i].title);
                if (!fs::exists(file)) continue;
                const auto page = ingest::read_page_history(file);
                builder.add_article(static_cast<std::uint32_t>(i), page.article_revisions);
            }
            const auto runs = builder.finish(corpus_hash);
            spdlog::info("experience index built ({} runs merged)", runs);
        }
        const auto index = experience::ExperienceIndex::open(index_dir);
        const auto scorer = discussion::make_scorer(c.scorer.scorer_id, c.paths.sidecar);

        assembly::FeatureContext ctx;
        ctx.use_case = c.use_case;
        ctx.registry = &registry;
        ctx.scorer = scorer.get();
        ctx.binding = c.scorer;
        ctx.index = &index;

        std::size_t feature_count = 0;
        const auto columns = assembly::matrix_columns(c.use_case, registry, &feature_count);

        std::vector<const labels::ArticleTimeline*> train_rows, risk_rows;
        for (const auto& t : timelines) {
            if (t.in_training_population(c.use_case))
                train_rows.push_back(&t);
            else if (!t.inconsistent && t.label(c.use_case) && t.censored(c.use_case))
                risk_rows.push_back(&t);
        }
        if (train_rows.empty()) throw std::runtime_error("no labeled, uncensored articles for this use case");

        auto compute = [&](const std::vector<const labels::ArticleTimeline*>& rows, std::size_t& unrated,
                           std::size_t& unknown) {
            std::vector<assembly::ArticleFeatures> out(rows.size());
            parallel_for(rows.size(), workers_of(c), [&](std::size_t i) {
                const auto page = ingest::read_page_history(ingest::page_history_path(pages_dir, rows[i]->title));
                out[i] = assembly::compute_article_features(page, *rows[i], ctx);
            });
            FeatureMatrix m;
            m.columns = columns;
            m.feature_count = feature_count;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                m.add_row(rows[i]->title, *rows[i]->label(c.use_case), year_of(*rows[i]->t_prom(c.use_case)), out[i].row);
                unrated += out[i].topic_unrated;
                unknown += out[i].topic_unknown;
            }
            return m;
        };
        std::size_t unrated = 0, unknown = 0, risk_unrated = 0, risk_unknown = 0;
        const auto matrix = compute(train_rows, unrated, unknown);
        const auto at_risk = compute(risk_rows, risk_unrated, risk_unknown);

        // Leakage audit: features from a history cut at t_prom must match.
        std::vector<std::size_t> sample(train_rows.size());
        std::iota(sample.begin(), sample.end(), 0);
        eval::Rng rng(eval::derive_seed(c.seed, 0x1eaca9e));
        rng.shuffle(sample);
        sample.resize(std::min(sample.size(), c.eval.leakage_audit_articles));
        std::sort(sample.begin(), sample.end());
        std::vector<std::string> audited;
        for (auto r : sample) {
            const auto& t = *train_rows[r];
            const auto page = ingest::read_page_history(ingest::page_history_path(pages_dir, t.title));
            const auto cut = assembly::compute_article_features(assembly::truncate_after(page, *t.t_prom(c.use_case)), t, ctx);
            const auto full = matrix.row(r);
            if (!std::equal(full.begin(), full.end(), cut.row.begin(), cut.row.end()))
                throw std::runtime_error("leakage audit failed for '" + t.title + "'");
            audited.push_back(t.title);
        }

        write_matrix_csv(matrix_path, matrix);
        write_matrix_csv(at_risk_path, at_risk);
        ojson meta;
        meta["use_case"] = cfg["use_case"];
        meta["rows"] = matrix.rows();
        meta["feature_count"] = feature_count;
        meta["columns"] = columns;
        meta["flag_columns"] = std::vector<std::string>(columns.begin() + static_cast<std::ptrdiff_t>(feature_count), columns.end());
        meta["label_column"] = "label";
        meta["bookkeeping_columns"] = {"article", "promotion_year"};
        meta["header_hash"] = [&] {
            std::string h;
            for (const auto& col : columns) h += col + ',';
            return hex64(fnv1a64(h));
        }();
        meta["registry_version"] = registry.version();
        auto groups = ojson::array();
        for (const auto& [name, cols] : assembly::ablation_groups(c.use_case, registry))
            groups.push_back({{"name", name}, {"columns", cols}});
        meta["ablation_groups"] = groups;
        meta["scorer"] = cfg["scorer"];
        meta["provenance"] = {{"pages", pages_hash}, {"timelines", timelines_hash}, {"corpus", corpus_hash}};
        meta["topic_diagnostics"] = {{"unrated_banners", unrated}, {"unknown_projects", unknown}};
        meta["leakage_audit"] = {{"articles", audited}, {"passed", true}};
        write_text(meta_path, meta.dump(1) + "\n");
    });
}

namespace {

FeatureMatrix load_matrix(const fs::path& dir) {
    std::ifstream in(dir / "matrix.meta.json");
    if (!in) throw UsageError("paths.workdir", "missing input " + (dir / "matrix.meta.json").string() + "; run 'featurize' first");
    const auto meta = json::parse(in);
    return read_matrix_csv(dir / "matrix.csv", meta.at("feature_count").get<std::size_t>());
}

}  // namespace

StageOutcome Pipeline::train() {
    const auto& c = config_;
    const auto dir = uc_dir();
    require_input(dir / "matrix.csv", "paths.workdir", "run 'featurize' first");
    const auto model_path = dir / "model.json";
    StageIo io{"train",
               {path_hash(dir / "matrix.csv"), c.to_json()["model"].dump(), std::to_string(c.seed)},
               {model_path}};
    return run_stage(c, io, "train-" + to_lower(to_string(c.use_case)), [&] {
        const auto m = load_matrix(dir);
        model::train_gbt(m, c.model, c.seed).save(model_path);
    });
}

StageOutcome Pipeline::evaluate() {
    const auto& c = config_;
    const auto dir = uc_dir();
    require_input(dir / "matrix.csv", "paths.workdir", "run 'featurize' first");
    require_input(dir / "model.json", "paths.workdir", "run 'train' first");
    const auto report = dir / "report";
    std::vector<fs::path> outputs = {report / "metrics.csv", report / "oof_predictions.csv", report / "shap_top.csv",
                                     report / "corpus_growth.csv"};
    for (const auto& h : c.eval.heatmaps)
        outputs.push_back(report / ("heatmap_" + percent_encode(h.x) + "_" + percent_encode(h.y) + ".csv"));
    const auto cfg = c.to_json();
    StageIo io{"evaluate",
               {path_hash(dir / "matrix.csv"), path_hash(dir / "model.json"), cfg["model"].dump(), cfg["eval"].dump(),
                std::to_string(c.seed)},
               outputs};
    return run_stage(c, io, "evaluate-" + to_lower(to_string(c.use_case)), [&] {
        fs::create_directories(report);
        const auto x = load_matrix(dir);
        const auto trainer = eval::gbt_trainer(c.model, c.seed);
        const auto workers = workers_of(c);

        // Ablation under the bootstrap protocol.
        std::ostringstream metrics;
        metrics << "group,feature_columns,metric,mean,std,iterations\n";
        std::vector<std::pair<std::string, std::vector<std::string>>> groups;
        {
            std::ifstream meta_in(dir / "matrix.meta.json");
            const auto meta = json::parse(meta_in);
            for (const auto& g : meta.at("ablation_groups"))
                groups.emplace_back(g.at("name").get<std::string>(), g.at("columns").get<std::vector<std::string>>());
        }
        if (!c.eval.ablation) groups.erase(groups.begin(), groups.end() - 1);
        eval::BootstrapOptions boot;
        boot.iterations = c.eval.bootstrap_iterations;
        boot.seed = c.seed;
        boot.workers = workers;
        boot.metrics = c.eval.metrics;
        for (const auto& [name, cols] : groups) {
            const auto sub = x.select_columns(cols);
            const auto est = eval::bootstrap_eval(sub, trainer, boot);
            for (const auto& e : est)
                metrics << name << ',' << sub.feature_count << ',' << e.metric << ',' << format_double(e.mean) << ','
                        << format_double(e.std) << ',' << e.iterations << '\n';
        }
        write_text(report / "metrics.csv", metrics.str());

        // Out-of-fold probabilities.
        const auto cv = eval::cross_val(x, trainer, c.eval.folds, c.seed, c.eval.metrics, workers);
        std::ostringstream oof;
        oof << "article,label,fold,probability\n";
        for (std::size_t r = 0; r < x.rows(); ++r)
            oof << csv_escape(x.articles[r]) << ',' << x.labels[r] << ',' << cv.fold_of[r] << ','
                << format_double(cv.oof[r]) << '\n';
        write_text(report / "oof_predictions.csv", oof.str());

        for (const auto& h : c.eval.heatmaps) {
            const auto gx = x.column(x.column_index(h.x));
            const auto gy = x.column(x.column_index(h.y));
            const auto grid = eval::heatmap(gx, gy, x.labels, h.bins_x, h.bins_y, h.binning, c.eval.heatmap_min_count);
            eval::write_heatmap_csv(report / ("heatmap_" + percent_encode(h.x) + "_" + percent_encode(h.y) + ".csv"), grid);
        }

        const auto model = model::GbtModel::load(dir / "model.json");
        const auto importance = model::mean_abs_shap(model, x);
        std::vector<std::size_t> order(importance.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
        std::ostringstream shap;
        shap << "rank,feature,mean_abs_shap\n";
        for (std::size_t k = 0; k < std::min(c.eval.shap_top_n, order.size()); ++k)
            shap << k + 1 << ',' << csv_escape(model.columns[order[k]]) << ',' << format_double(importance[order[k]])
                 << '\n';
        write_text(report / "shap_top.csv", shap.str());

        eval::GrowthOptions growth;
        growth.first_year = c.eval.growth_first_year;
        growth.last_year = c.eval.growth_last_year;
        growth.min_positives = c.eval.growth_min_positives;
        growth.folds = c.eval.folds;
        growth.seed = c.seed;
        growth.workers = workers;
        growth.metrics = c.eval.metrics;
        std::ostringstream g;
        g << "year,rows,positives,auroc,f1,auroc_over_random,f1_over_random\n";
        for (const auto& p : eval::corpus_growth(x, trainer, growth)) {
            g << p.year << ',' << p.rows << ',' << p.positives;
            if (p.skipped)
                g << ",GAP,GAP,GAP,GAP\n";
            else
                g << ',' << format_double(p.auroc) << ',' << format_double(p.f1) << ',' << format_double(p.auroc_over)
                  << ',' << format_double(p.f1_over) << '\n';
        }
        write_text(report / "corpus_growth.csv", g.str());
    });
}

StageOutcome Pipeline::report() {
    const auto& c = config_;
    const auto dir = uc_dir();
    const auto report = dir / "report";
    const auto timelines_path = c.paths.workdir / "timelines.jsonl";
    require_input(report / "oof_predictions.csv", "paths.workdir", "run 'evaluate' first");
    require_input(dir / "model.json", "paths.workdir", "run 'train' first");
    require_input(timelines_path, "paths.workdir", "run 'label' first");
    std::vector<fs::path> bundle = {report / "metrics.csv", report / "oof_predictions.csv", report / "shap_top.csv",
                                    report / "corpus_growth.csv"};
    for (const auto& h : c.eval.heatmaps)
        bundle.push_back(report / ("heatmap_" + percent_encode(h.x) + "_" + percent_encode(h.y) + ".csv"));
    for (const auto& p : bundle) require_input(p, "paths.workdir", "run 'evaluate' first");
    const auto cfg = c.to_json();
    std::vector<std::string> key = {path_hash(timelines_path), path_hash(dir / "at_risk.csv"),
                                    path_hash(dir / "model.json"), cfg.dump(), std::to_string(c.seed)};
    for (const auto& p : bundle) key.push_back(path_hash(p));
    StageIo io{"report",
               key,
               {report / "fp_ranked.csv", report / "fp_populations.csv", report / "at_risk.csv",
                report / "manifest.json"}};
    return run_stage(c, io, "report-" + to_lower(to_string(c.use_case)), [&] {
        std::map<std::string, int> reviews;
        for (const auto& t : labels::read_timelines(timelines_path)) reviews[t.title] = t.reviews_after_prom(c.use_case);

        std::vector<std::string> articles;
        std::vector<int> labels_v;
        std::vector<double> oof;
        {
            std::ifstream in(report / "oof_predictions.csv");
            std::string line;
            std::getline(in, line);
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto f = split_csv_row(line);
                articles.push_back(f.at(0));
                labels_v.push_back(std::stoi(f.at(1)));
                oof.push_back(std::stod(f.at(3)));
            }
        }
        const auto fp = eval::fp_review_analysis(articles, oof, labels_v, reviews, c.eval.metrics.threshold,
                                                 c.eval.fp_top_n);
        std::ostringstream pop;
        pop << "population,count,mean_reviews\n";
        for (const auto& r : fp.table) pop << r.population << ',' << r.count << ',' << format_double(r.mean_reviews) << '\n';
        write_text(report / "fp_populations.csv", pop.str());
        std::ostringstream ranked;
        ranked << "rank,article,probability,reviews\n";
        for (std::size_t k = 0; k < fp.ranked_fp.size(); ++k)
            ranked << k + 1 << ',' << csv_escape(fp.ranked_fp[k].article) << ','
                   << format_double(fp.ranked_fp[k].probability) << ',' << fp.ranked_fp[k].reviews << '\n';
        write_text(report / "fp_ranked.csv", ranked.str());

        // Recently promoted (censored) articles not yet demoted, ranked by risk.
        const auto model = model::GbtModel::load(dir / "model.json");
        std::ifstream meta_in(dir / "matrix.meta.json");
        const auto meta = json::parse(meta_in);
        const auto risk = read_matrix_csv(dir / "at_risk.csv", meta.at("feature_count").get<std::size_t>());
        struct RankedRisk {
            std::string article;
            int year = 0;
            double probability = 0.0;
        };
        std::vector<RankedRisk> at_risk;
        for (std::size_t r = 0; r < risk.rows(); ++r)
            if (risk.labels[r] == 0)
                at_risk.push_back({risk.articles[r], risk.promotion_years[r], model.predict_proba(risk.row(r))});
        std::stable_sort(at_risk.begin(), at_risk.end(),
                         [](const RankedRisk& a, const RankedRisk& b) { return a.probability > b.probability; });
        std::ostringstream ar;
        ar << "rank,article,promotion_year,probability\n";
        for (std::size_t k = 0; k < std::min(at_risk.size(), c.eval.fp_top_n); ++k)
            ar << k + 1 << ',' << csv_escape(at_risk[k].article) << ',' << at_risk[k].year << ','
               << format_double(at_risk[k].probability) << '\n';
        write_text(report / "at_risk.csv", ar.str());

        ojson manifest;
        manifest["use_case"] = cfg["use_case"];
        manifest["seed"] = c.seed;
        manifest["corpus_hash"] = meta.at("provenance").at("corpus");
        manifest["matrix_header_hash"] = meta.at("header_hash");
        manifest["registry_version"] = meta.at("registry_version");
        manifest["config"] = cfg;
        ojson files;
        for (const auto& p : bundle) files[p.filename().string()] = path_hash(p);
        for (const char* name : {"fp_ranked.csv", "fp_populations.csv", "at_risk.csv"})
            files[name] = path_hash(report / name);
        files["model.json"] = path_hash(dir / "model.json");
        manifest["files"] = files;
        write_text(report / "manifest.json", manifest.dump(1) + "\n");
    });
}

std::vector<StageOutcome> Pipeline::all() {
    std::vector<StageOutcome> out;
    for (const auto& s : stage_names()) out.push_back(run(s));
    return out;
}

StageOutcome Pipeline::run(const std::string& stage) {
    if (stage == "ingest") return ingest();
    if (stage == "label") return label();
    if (stage == "featurize") return featurize();
    if (stage == "train") return train();
    if (stage == "evaluate") return evaluate();
    if (stage == "report") return report();
    throw UsageError("", "unknown subcommand '" + stage + "'");
}

}  // namespace wikisustain::pipeline
