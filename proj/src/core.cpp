#include "wikisustain/core.hpp"

#include <arpa/inet.h>

#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <vector>

namespace wikisustain {

std::string_view to_string(Level level) { return level == Level::FA ? "FA" : "GA"; }
std::string_view to_string(UseCase uc) { return uc == UseCase::FA ? "fa" : "ga"; }

UseCase parse_use_case(std::string_view s) {
    if (iequals(s, "fa")) return UseCase::FA;
    if (iequals(s, "ga")) return UseCase::GA;
    throw std::invalid_argument("unknown use case '" + std::string(s) + "' (expected fa or ga)");
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

bool is_ip_address(std::string_view s) {
    std::string buf(s);
    std::array<unsigned char, 16> addr{};
    return inet_pton(AF_INET, buf.c_str(), addr.data()) == 1 ||
           inet_pton(AF_INET6, buf.c_str(), addr.data()) == 1;
}

Editor Editor::registered(std::string name) { return Editor(Registered{std::move(name)}); }

Editor Editor::anonymous(std::string ip) {
    if (!is_ip_address(ip)) throw std::invalid_argument("not an IP address: '" + ip + "'");
    return Editor(Anonymous{std::move(ip)});
}

const std::string& Editor::id() const {
    return std::visit([](const auto& v) -> const std::string& {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Registered>)
            return v.name;
        else
            return v.ip;
    }, value_);
}

// ---------------------------------------------------------------------------

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute, int second) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
    const sys_days days{ymd};
    return static_cast<Timestamp>(days.time_since_epoch().count()) * kSecondsPerDay + hour * 3600 +
           minute * 60 + second;
}

int year_of(Timestamp t) {
    using namespace std::chrono;
    Timestamp days = t / kSecondsPerDay;
    if (t % kSecondsPerDay < 0) --days;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    return static_cast<int>(ymd.year());
}

Timestamp end_of_year(int year) { return make_timestamp(year + 1, 1, 1) - 1; }

namespace {

bool parse_uint(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

bool valid_date(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    return year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok();
}

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view s) {
    s = trim(s);
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    if (!parse_uint(s.substr(0, 4), y) || !parse_uint(s.substr(5, 2), mo) || !parse_uint(s.substr(8, 2), d))
        return std::nullopt;
    if (s.size() > 10) {
        if ((s[10] != 'T' && s[10] != ' ') || s.size() < 19 || s[13] != ':' || s[16] != ':') return std::nullopt;
        if (!parse_uint(s.substr(11, 2), h) || !parse_uint(s.substr(14, 2), mi) || !parse_uint(s.substr(17, 2), se))
            return std::nullopt;
        const auto rest = s.substr(19);
        if (!rest.empty() && rest != "Z") return std::nullopt;
    }
    if (mo < 1 || mo > 12 || !valid_date(y, static_cast<unsigned>(mo), static_cast<unsigned>(d))) return std::nullopt;
    if (h > 23 || mi > 59 || se > 60) return std::nullopt;
    return make_timestamp(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi, se);
}

std::string format_iso8601(Timestamp t) {
    using namespace std::chrono;
    Timestamp days = t / kSecondsPerDay;
    Timestamp secs = t % kSecondsPerDay;
    if (secs < 0) {
        secs += kSecondsPerDay;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
    return buf;
}

std::optional<unsigned> parse_month_name(std::string_view s) {
    static constexpr std::array<std::string_view, 12> names = {
        "january", "february", "march",     "april",   "may",      "june",
        "july",    "august",   "september", "october", "november", "december"};
    const std::string lower = to_lower(trim(s));
    if (lower.size() < 3) return std::nullopt;
    for (unsigned i = 0; i < names.size(); ++i) {
        if (lower == names[i]) return i + 1;
        if (lower.size() == 3 && names[i].substr(0, 3) == lower) return i + 1;
        if (lower == "sept" && i == 8) return 9;
    }
    return std::nullopt;
}

std::optional<Timestamp> parse_wiki_date(std::string_view s) {
    s = trim(s);
    if (auto iso = parse_iso8601(s)) return iso;

    // Tokenize into words and numbers; punctuation separates.
    struct Token {
        std::string text;
        bool numeric;
    };
    std::vector<Token> tokens;
    int hour = 0, minute = 0, second = 0;
    bool have_time = false;
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isdigit(c)) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            // HH:MM or HH:MM:SS
            if (j < s.size() && s[j] == ':' && !have_time) {
                int hh = 0, mm = 0, ss = 0;
                std::size_t k = j + 1;
                std::size_t m0 = k;
                while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                if (!parse_uint(s.substr(i, j - i), hh) || !parse_uint(s.substr(m0, k - m0), mm)) return std::nullopt;
                if (k < s.size() && s[k] == ':') {
                    std::size_t s0 = k + 1;
                    k = s0;
                    while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                    if (!parse_uint(s.substr(s0, k - s0), ss)) return std::nullopt;
                }
                if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
                hour = hh;
                minute = mm;
                second = ss;
                have_time = true;
                i = k;
                continue;
            }
            tokens.push_back({std::string(s.substr(i, j - i)), true});
            i = j;
        } else if (std::isalpha(c)) {
            std::size_t j = i;
            while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
            tokens.push_back({std::string(s.substr(i, j - i)), false});
            i = j;
        } else {
            ++i;
        }
    }

    std::optional<unsigned> month;
    std::optional<int> year;
    std::optional<int> day;
    for (const auto& t : tokens) {
        if (t.numeric) {
            int v = 0;
            if (!parse_uint(t.text, v)) return std::nullopt;
            if (t.text.size() == 4) {
                if (year) return std::nullopt;
                year = v;
            } else if (t.text.size() <= 2) {
                if (day) return std::nullopt;
                day = v;
            } else {
                return std::nullopt;
            }
        } else {
            if (auto m = parse_month_name(t.text)) {
                if (month) return std::nullopt;
                month = m;
            } else if (!iequals(t.text, "UTC") && !iequals(t.text, "st") && !iequals(t.text, "nd") &&
                       !iequals(t.text, "rd") && !iequals(t.text, "th")) {
                return std::nullopt;
            }
        }
    }
    if (!month || !year || !day) return std::nullopt;
    if (!valid_date(*year, *month, static_cast<unsigned>(*day))) return std::nullopt;
    return make_timestamp(*year, *month, static_cast<unsigned>(*day), hour, minute, second);
}

// ---------------------------------------------------------------------------

std::string_view trim(std::string_view s) {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

bool istarts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::string percent_encode(std::string_view s) {
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '.' || c == '_' || c == '-') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(digits[c >> 4]);
            out.push_back(digits[c & 0xf]);
        }
    }
    // Keep "." and ".." from naming directories.
    if (out == "." || out == "..") {
        std::string esc;
        for (std::size_t i = 0; i < out.size(); ++i) esc += "%2E";
        return esc;
    }
    return out;
}

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            int v = 0;
            auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
            if (ec == std::errc() && p == s.data() + i + 3) {
                out.push_back(static_cast<char>(v));
                i += 2;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

std::string format_double(double v) {
    if (v == 0.0) return "0";  // folds -0
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace wikisustain
