#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wikisustain::wikitext {

/// A `{{...}}` transclusion with its arguments split on top-level pipes.
struct Template {
    std::string name;  ///< normalized: lower case, single spaces, no "Template:" prefix
    std::vector<std::string> positional;
    std::vector<std::pair<std::string, std::string>> named;  ///< keys lower-cased and trimmed
    std::size_t begin = 0;                                    ///< offset of the opening braces
    std::size_t end = 0;                                      ///< one past the closing braces

    /// Named argument lookup, case-insensitive on the key.
    std::optional<std::string_view> param(std::string_view key) const;
};

/// Every template in `text`, nested ones included, ordered by opening offset.
/// Unbalanced braces are tolerated; unclosed templates are ignored.
std::vector<Template> find_templates(std::string_view text);

std::string normalize_template_name(std::string_view raw);

/// True if any template in `text` has a name in `names` (already normalized).
bool has_template(std::string_view text, const std::vector<std::string>& names);

struct Heading {
    int level = 0;
    std::string title;
    std::size_t line_begin = 0;
};

/// Splits into lines without the trailing newline.
std::vector<std::string_view> split_lines(std::string_view text);

/// `== Title ==` style heading; nullopt for ordinary lines.
std::optional<Heading> parse_heading(std::string_view line);

}  // namespace wikisustain::wikitext
