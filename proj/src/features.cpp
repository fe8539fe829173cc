#include "wikisustain/features.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace wikisustain::features {

double FeatureBlock::at(std::string_view name) const {
    for (const auto& [n, v] : values)
        if (n == name) return v;
    throw std::out_of_range("no feature named '" + std::string(name) + "'");
}

bool FeatureBlock::flag(std::string_view name) const {
    for (const auto& [n, v] : flags)
        if (n == name) return v;
    throw std::out_of_range("no flag named '" + std::string(name) + "'");
}

std::vector<std::string> FeatureBlock::names() const {
    std::vector<std::string> out;
    out.reserve(values.size());
    for (const auto& [n, v] : values) out.push_back(n);
    return out;
}

WindowedHistory make_window(const ingest::PageHistory& page, Timestamp t_prom) {
    auto cut = [t_prom](const std::vector<ingest::RevisionRecord>& revs) {
        const auto end = std::upper_bound(revs.begin(), revs.end(), t_prom,
                                          [](Timestamp t, const ingest::RevisionRecord& r) { return t < r.timestamp; });
        return std::span<const ingest::RevisionRecord>(revs.data(), static_cast<std::size_t>(end - revs.begin()));
    };
    WindowedHistory w;
    w.article_revisions = cut(page.article_revisions);
    w.talk_revisions = cut(page.talk_revisions);
    if (w.article_revisions.empty())
        throw std::invalid_argument("'" + page.title + "' has no article revision before its promotion");
    w.t_birth = w.article_revisions.front().timestamp;
    w.t_prom = t_prom;
    return w;
}

double gini(std::span<const double> counts) {
    if (counts.empty()) throw std::invalid_argument("gini of an empty vector");
    std::vector<double> x(counts.begin(), counts.end());
    double total = 0.0;
    for (double v : x) {
        if (v < 0.0) throw std::invalid_argument("gini of a negative count");
        total += v;
    }
    if (total <= 0.0) throw std::invalid_argument("gini without any contribution");
    const auto n = static_cast<double>(x.size());
    if (x.size() == 1) return 0.0;
    std::sort(x.begin(), x.end());
    // Sorted form of the pairwise mean absolute difference.
    double weighted = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
    return weighted / (n * total);
}

bool is_revert_comment(std::string_view comment) {
    const auto c = trim(comment);
    return istarts_with(c, "revert") || istarts_with(c, "rv ") || istarts_with(c, "rvv") || istarts_with(c, "undid");
}

bool detect_revert(std::span<const ingest::RevisionRecord> revisions, std::size_t index, std::size_t lookback) {
    const auto& rev = revisions[index];
    if (is_revert_comment(rev.comment)) return true;
    if (index < 2) return false;
    const std::size_t first = index > lookback ? index - lookback : 0;
    // revisions[index - 1] is the direct parent and does not count.
    for (std::size_t j = first; j + 1 < index; ++j)
        if (revisions[j].content_hash == rev.content_hash) return true;
    return false;
}

}  // namespace wikisustain::features
