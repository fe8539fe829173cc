#ifdef WIKISUSTAIN_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include <spdlog/spdlog.h>

#include <chrono>
#include <thread>

#include "json.hpp"
#include "wikisustain/ingest.hpp"

namespace wikisustain::ingest {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("API URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::set<std::string> fetch_category_titles(const std::string& api_base_url, const std::string& category,
                                            int min_interval_ms) {
    const auto [origin, path] = split_url(api_base_url);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(std::chrono::seconds(60));
    const httplib::Headers headers = {{"User-Agent", "wikisustain/1.0 (status-list fetch)"}};

    const std::string cmtitle = istarts_with(category, "Category:") ? category : "Category:" + category;
    std::set<std::string> titles;
    std::optional<std::string> cont;
    auto last_request = std::chrono::steady_clock::time_point{};
    for (;;) {
        const auto wait = last_request + std::chrono::milliseconds(min_interval_ms) - std::chrono::steady_clock::now();
        if (last_request != std::chrono::steady_clock::time_point{} && wait.count() > 0)
            std::this_thread::sleep_for(wait);
        last_request = std::chrono::steady_clock::now();

        httplib::Params params = {{"action", "query"}, {"list", "categorymembers"}, {"cmtitle", cmtitle},
                                  {"cmlimit", "500"},  {"cmnamespace", "0|1"},      {"format", "json"},
                                  {"formatversion", "2"}};
        if (cont) params.emplace("cmcontinue", *cont);
        const auto res = client.Get(path, params, headers);
        if (!res) throw std::runtime_error("status-list request failed: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw std::runtime_error("status-list request returned HTTP " + std::to_string(res->status));
        const auto body = nlohmann::json::parse(res->body);
        if (body.contains("error"))
            throw std::runtime_error("MediaWiki API error: " + body["error"].value("info", std::string("unknown")));
        for (const auto& m : body.at("query").at("categorymembers")) {
            const auto title = m.at("title").get<std::string>();
            auto subject = talk_subject(title);
            titles.insert(subject ? *subject : normalize_title(title));
        }
        if (body.contains("continue") && body["continue"].contains("cmcontinue")) {
            cont = body["continue"]["cmcontinue"].get<std::string>();
        } else {
            break;
        }
    }
    if (titles.empty()) spdlog::warn("category {} returned no members", cmtitle);
    return titles;
}

}  // namespace wikisustain::ingest
