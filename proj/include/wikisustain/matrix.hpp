#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace wikisustain {

/// Dense row-major table of named feature columns, with labels and bookkeeping per row.
/// The first `feature_count` columns are explanatory features; the rest are
/// missing-value flags.
struct FeatureMatrix {
    std::vector<std::string> columns;
    std::size_t feature_count = 0;
    std::vector<double> values;
    std::vector<int> labels;
    std::vector<std::string> articles;
    std::vector<int> promotion_years;

    std::size_t rows() const { return labels.size(); }
    std::size_t cols() const { return columns.size(); }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
    std::size_t column_index(std::string_view name) const;

    void add_row(std::string article, int label, int promotion_year, std::span<const double> row);
    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
    /// Keeps the named columns, in the given order. Throws naming any unknown column.
    FeatureMatrix select_columns(const std::vector<std::string>& names) const;
    std::vector<double> column(std::size_t c) const;
};

/// CSV with header `article,label,promotion_year,<columns...>`.
void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m);
/// `feature_count` comes from the matrix metadata.
FeatureMatrix read_matrix_csv(const std::filesystem::path& path, std::size_t feature_count);

std::string csv_escape(std::string_view s);
std::vector<std::string> split_csv_row(std::string_view line);

}  // namespace wikisustain
