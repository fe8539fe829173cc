#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "wikisustain/core.hpp"
#include "wikisustain/features.hpp"
#include "wikisustain/ingest.hpp"

namespace wikisustain::discussion {

struct Comment {
    int thread_id = 0;
    int comment_id = 0;
    std::optional<int> parent_comment_id;
    Editor discusser;
    Timestamp timestamp = 0;
    int depth = 0;
    std::string text;
    /// Distinct registered editors who created or changed this comment block across the
    /// talk revisions of the window.
    int distinct_revisers = 1;
};

struct Signature {
    Editor editor;
    Timestamp timestamp = 0;
    std::size_t end = 0;  ///< one past the closing "(UTC)"
};

/// Signatures on one line: a user, user-talk or contributions link followed by a
/// "HH:MM, D Month YYYY (UTC)" timestamp.
std::vector<Signature> find_signatures(std::string_view line);

/// Threads and comments of a single talk-page revision. Threads are numbered from 1
/// in heading order, comments from 1 across the page. Text before the first heading
/// is not a thread.
std::vector<Comment> parse_talk_text(std::string_view text);

/// Comments of the latest talk revision at or before t_prom, restricted to comments
/// signed at or before t_prom, with `distinct_revisers` filled by diffing comment blocks
/// across the window's talk revisions.
std::vector<Comment> parse_discussions(std::span<const ingest::RevisionRecord> talk_window, Timestamp t_prom);

// ---------------------------------------------------------------------------
// Linguistic scoring.

inline constexpr std::array<std::string_view, 5> kDimensions = {"Sentiment", "Formality", "Politeness", "Toxicity",
                                                                "Certainty"};

/// Five scores in [0,1], in kDimensions order.
struct LinguisticScores {
    std::array<double, 5> values{0.5, 0.5, 0.5, 0.5, 0.5};

    double sentiment() const { return values[0]; }
    double formality() const { return values[1]; }
    double politeness() const { return values[2]; }
    double toxicity() const { return values[3]; }
    double certainty() const { return values[4]; }
    bool operator==(const LinguisticScores&) const = default;
};

struct ScorerBinding {
    std::string scorer_id = "lexicon-v1";
    /// High-value cutoffs; a score strictly above the cutoff counts as high.
    std::array<double, 5> thresholds{0.5, 0.5, 0.5, 0.5, 0.5};
};

class LinguisticScorer {
public:
    virtual ~LinguisticScorer() = default;
    virtual std::string id() const = 0;
    virtual LinguisticScores score(std::string_view article, const Comment& comment) const = 0;
};

/// Deterministic word-list scorer: each dimension is (hits_up + 1) / (hits_up + hits_down + 2).
/// Text without any listed word scores 0.5 everywhere.
class LexiconScorer final : public LinguisticScorer {
public:
    std::string id() const override { return "lexicon-v1"; }
    LinguisticScores score(std::string_view article, const Comment& comment) const override;
    LinguisticScores score_text(std::string_view text) const;
};

/// Precomputed scores from a sidecar CSV keyed by (article, thread_id, comment_id).
class ImportScorer final : public LinguisticScorer {
public:
    using Key = std::tuple<std::string, int, int>;

    static ImportScorer load(const std::filesystem::path& csv);
    static ImportScorer parse(std::istream& csv);

    std::string id() const override { return "import"; }
    /// Throws std::out_of_range naming the missing key.
    LinguisticScores score(std::string_view article, const Comment& comment) const override;
    std::size_t size() const { return scores_.size(); }

private:
    std::map<Key, LinguisticScores> scores_;
};

inline constexpr std::string_view kSidecarHeader =
    "article,thread_id,comment_id,sentiment,formality,politeness,toxicity,certainty";

/// Writes a sidecar file in the import format; values use shortest round-trip decimals.
void write_sidecar(std::ostream& out, std::string_view article, const std::vector<Comment>& comments,
                   const std::vector<LinguisticScores>& scores, bool header = true);

std::unique_ptr<LinguisticScorer> make_scorer(const std::string& id, const std::filesystem::path& sidecar = {});

// ---------------------------------------------------------------------------
// Aggregates.

/// 25 values: per dimension the comment mean, median and high-value fraction, and the
/// mean over discussers of each discusser's mean and median. Zero comments give zeros
/// and set "flag-No-Comments".
features::FeatureBlock linguistic_aggregates(const std::vector<Comment>& comments,
                                             const std::vector<LinguisticScores>& scores,
                                             const ScorerBinding& binding);

/// The 15 structural discussion features. Zero threads give zeros and set
/// "flag-No-Discussion-Threads".
features::FeatureBlock structural_features(const std::vector<Comment>& comments);

std::vector<std::string> linguistic_feature_names();
std::vector<std::string> structural_feature_names();

}  // namespace wikisustain::discussion
