#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wikisustain/core.hpp"
#include "wikisustain/ingest.hpp"

namespace wikisustain::features {

/// Ordered named values produced by one feature family, plus its missing-value flags.
struct FeatureBlock {
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::pair<std::string, bool>> flags;

    void add(std::string name, double v) { values.emplace_back(std::move(name), v); }
    void add_flag(std::string name, bool v) { flags.emplace_back(std::move(name), v); }
    /// Throws std::out_of_range for unknown names.
    double at(std::string_view name) const;
    bool flag(std::string_view name) const;
    std::vector<std::string> names() const;
};

/// The part of a page history visible at promotion time: both revision lists cut at
/// t_prom. Views into the owning PageHistory, which must outlive this object.
struct WindowedHistory {
    std::span<const ingest::RevisionRecord> article_revisions;
    std::span<const ingest::RevisionRecord> talk_revisions;
    Timestamp t_birth = 0;
    Timestamp t_prom = 0;
};

/// Throws std::invalid_argument when the page has no article revision at or before t_prom.
WindowedHistory make_window(const ingest::PageHistory& page, Timestamp t_prom);

/// Gini coefficient: sum_i sum_j |x_i - x_j| / (2 n^2 mean). A single contributor gives 0.
/// Throws std::invalid_argument for empty input, negative entries or an all-zero vector.
double gini(std::span<const double> counts);

/// Revision `index` of `revisions` is a revert when its text hash matches one of the
/// preceding `lookback` revisions other than its direct parent, or when its edit summary
/// starts with a revert marker ("revert", "rv ", "rvv", "undid"; case-insensitive).
bool detect_revert(std::span<const ingest::RevisionRecord> revisions, std::size_t index, std::size_t lookback = 10);
bool is_revert_comment(std::string_view comment);

}  // namespace wikisustain::features
