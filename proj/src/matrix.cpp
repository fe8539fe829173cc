#include "wikisustain/matrix.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "wikisustain/core.hpp"

namespace wikisustain {

std::size_t FeatureMatrix::column_index(std::string_view name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
        if (columns[c] == name) return c;
    throw std::out_of_range("no column named '" + std::string(name) + "'");
}

void FeatureMatrix::add_row(std::string article, int label, int promotion_year, std::span<const double> row) {
    if (row.size() != cols()) throw std::invalid_argument("row width does not match the column count");
    values.insert(values.end(), row.begin(), row.end());
    labels.push_back(label);
    articles.push_back(std::move(article));
    promotion_years.push_back(promotion_year);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
    FeatureMatrix out;
    out.columns = columns;
    out.feature_count = feature_count;
    out.values.reserve(rows.size() * cols());
    for (auto r : rows) out.add_row(articles[r], labels[r], promotion_years[r], row(r));
    return out;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::string>& names) const {
    std::vector<std::size_t> idx;
    std::string missing;
    for (const auto& n : names) {
        bool found = false;
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == n) {
                idx.push_back(c);
                found = true;
                break;
            }
        if (!found) missing += (missing.empty() ? "" : ", ") + n;
    }
    if (!missing.empty()) throw std::invalid_argument("unknown columns: " + missing);
    FeatureMatrix out;
    out.columns = names;
    std::size_t features = 0;
    for (auto c : idx)
        if (c < feature_count) ++features;
    out.feature_count = features;
    out.labels = labels;
    out.articles = articles;
    out.promotion_years = promotion_years;
    out.values.reserve(rows() * idx.size());
    for (std::size_t r = 0; r < rows(); ++r)
        for (auto c : idx) out.values.push_back(at(r, c));
    return out;
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
    return out;
}

std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::vector<std::string> split_csv_row(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "article,label,promotion_year";
    for (const auto& c : m.columns) out << ',' << csv_escape(c);
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << csv_escape(m.articles[r]) << ',' << m.labels[r] << ',' << m.promotion_years[r];
        for (double v : m.row(r)) out << ',' << format_double(v);
        out << '\n';
    }
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path, std::size_t feature_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + " is empty");
    auto header = split_csv_row(line);
    if (header.size() < 3 || header[0] != "article" || header[1] != "label" || header[2] != "promotion_year")
        throw std::runtime_error(path.string() + ": unexpected header");
    FeatureMatrix m;
    m.columns.assign(header.begin() + 3, header.end());
    m.feature_count = feature_count;
    std::vector<double> row(m.cols());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_row(line);
        if (f.size() != header.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": wrong field count");
        for (std::size_t c = 0; c < row.size(); ++c) {
            const auto& s = f[c + 3];
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), row[c]);
            if (ec != std::errc() || p != s.data() + s.size())
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
        }
        m.add_row(f[0], std::stoi(f[1]), std::stoi(f[2]), row);
    }
    return m;
}

}  // namespace wikisustain
