#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace wikisustain {

/// UTC seconds since the Unix epoch.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

enum class Level { FA, GA };
enum class UseCase { FA, GA };

inline Level level_of(UseCase uc) { return uc == UseCase::FA ? Level::FA : Level::GA; }

std::string_view to_string(Level level);
std::string_view to_string(UseCase uc);
/// Accepts "fa"/"ga" in any case.
UseCase parse_use_case(std::string_view s);

/// 64-bit FNV-1a. Used for revision content hashes and stage cache keys.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// A revision author: either a registered account or an anonymous IP.
class Editor {
public:
    struct Registered {
        std::string name;
        auto operator<=>(const Registered&) const = default;
    };
    struct Anonymous {
        std::string ip;
        auto operator<=>(const Anonymous&) const = default;
    };

    Editor() : value_(Registered{}) {}
    static Editor registered(std::string name);
    /// Throws std::invalid_argument unless `ip` parses as IPv4 or IPv6.
    static Editor anonymous(std::string ip);

    bool is_anonymous() const { return std::holds_alternative<Anonymous>(value_); }
    bool is_registered() const { return !is_anonymous(); }
    /// Username or IP string.
    const std::string& id() const;

    auto operator<=>(const Editor&) const = default;

private:
    explicit Editor(std::variant<Registered, Anonymous> v) : value_(std::move(v)) {}
    std::variant<Registered, Anonymous> value_;
};

bool is_ip_address(std::string_view s);

// ---------------------------------------------------------------------------
// Time handling. All calendar math is proleptic Gregorian, UTC.

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                         int second = 0);
/// Civil year of a timestamp.
int year_of(Timestamp t);
/// Last second of the given year, i.e. Dec 31 23:59:59 UTC.
Timestamp end_of_year(int year);

/// "2006-01-02T03:04:05Z" (also accepts a bare date "2006-01-02").
std::optional<Timestamp> parse_iso8601(std::string_view s);
std::string format_iso8601(Timestamp t);

/// Free-form dates as found in talk-page templates and signatures:
/// "14:02, 3 June 2022 (UTC)", "3 June 2022", "June 3, 2022", "2022-06-03",
/// "14:02, June 3, 2022". Month names may be abbreviated to three letters.
std::optional<Timestamp> parse_wiki_date(std::string_view s);

/// Month number 1..12 from an English month name or 3-letter abbreviation.
std::optional<unsigned> parse_month_name(std::string_view s);

// ---------------------------------------------------------------------------
// Small string helpers shared by the parsers.

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

/// Percent-encodes everything outside [A-Za-z0-9._-]; used for per-title file names.
std::string percent_encode(std::string_view s);
std::string percent_decode(std::string_view s);

/// Deterministic shortest round-trip decimal formatting for CSV/JSON output.
std::string format_double(double v);

}  // namespace wikisustain
