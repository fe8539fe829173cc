#include "wikisustain/wikitext.hpp"

#include <algorithm>

#include "wikisustain/core.hpp"

namespace wikisustain::wikitext {

std::optional<std::string_view> Template::param(std::string_view key) const {
    for (const auto& [k, v] : named)
        if (iequals(k, key)) return std::string_view(v);
    return std::nullopt;
}

std::string normalize_template_name(std::string_view raw) {
    auto name = trim(raw);
    if (istarts_with(name, "Template:")) name = trim(name.substr(9));
    std::string out;
    bool space = false;
    for (char c : name) {
        if (c == '_' || c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

namespace {

/// Splits the inside of a template on pipes that are not nested in {{ }} or [[ ]].
std::vector<std::string_view> split_arguments(std::string_view inner) {
    std::vector<std::string_view> parts;
    int braces = 0, brackets = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < inner.size(); ++i) {
        if (inner.compare(i, 2, "{{") == 0) {
            ++braces;
            ++i;
        } else if (inner.compare(i, 2, "}}") == 0 && braces > 0) {
            --braces;
            ++i;
        } else if (inner.compare(i, 2, "[[") == 0) {
            ++brackets;
            ++i;
        } else if (inner.compare(i, 2, "]]") == 0 && brackets > 0) {
            --brackets;
            ++i;
        } else if (inner[i] == '|' && braces == 0 && brackets == 0) {
            parts.push_back(inner.substr(start, i - start));
            start = i + 1;
        }
    }
    parts.push_back(inner.substr(start));
    return parts;
}

Template build(std::string_view text, std::size_t open, std::size_t close) {
    Template t;
    t.begin = open;
    t.end = close + 2;
    const auto parts = split_arguments(text.substr(open + 2, close - open - 2));
    t.name = normalize_template_name(parts.front());
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto part = parts[i];
        // A '=' before any nested markup names the argument.
        const auto eq = part.find('=');
        const auto nested = std::min(part.find("{{"), part.find("[["));
        if (eq != std::string_view::npos && eq < nested) {
            t.named.emplace_back(to_lower(trim(part.substr(0, eq))), std::string(trim(part.substr(eq + 1))));
        } else {
            t.positional.emplace_back(trim(part));
        }
    }
    return t;
}

}  // namespace

std::vector<Template> find_templates(std::string_view text) {
    std::vector<Template> out;
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        if (text[i] == '{' && text[i + 1] == '{') {
            open.push_back(i);
            ++i;
        } else if (text[i] == '}' && text[i + 1] == '}' && !open.empty()) {
            const auto start = open.back();
            open.pop_back();
            out.push_back(build(text, start, i));
            ++i;
        }
    }
    std::sort(out.begin(), out.end(), [](const Template& a, const Template& b) { return a.begin < b.begin; });
    return out;
}

bool has_template(std::string_view text, const std::vector<std::string>& names) {
    if (text.find("{{") == std::string_view::npos) return false;
    for (const auto& t : find_templates(text))
        if (std::find(names.begin(), names.end(), t.name) != names.end()) return true;
    return false;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        auto line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = nl + 1;
    }
    return lines;
}

std::optional<Heading> parse_heading(std::string_view line) {
    const auto t = trim(line);
    if (t.size() < 3 || t.front() != '=' || t.back() != '=') return std::nullopt;
    std::size_t lead = 0, tail = 0;
    while (lead < t.size() && t[lead] == '=') ++lead;
    while (tail < t.size() && t[t.size() - 1 - tail] == '=') ++tail;
    const auto level = std::min(lead, tail);
    if (level < 1 || level > 6 || 2 * level >= t.size()) return std::nullopt;
    Heading h;
    h.level = static_cast<int>(level);
    h.title = std::string(trim(t.substr(level, t.size() - 2 * level)));
    return h;
}

}  // namespace wikisustain::wikitext
