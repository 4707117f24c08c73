#include "http_client.hpp"

#include <chrono>
#include <stdexcept>

#include <httplib.h>

namespace rca::detail {

SplitUrl split_url(const std::string &url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("URL lacks a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http") throw std::invalid_argument("only http:// URLs are supported: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (out.origin.size() <= scheme_end + 3) throw std::invalid_argument("URL lacks a host: " + url);
    return out;
}

nlohmann::json post_json(const std::string &url, const nlohmann::json &body, double timeout_seconds,
                         const std::vector<std::pair<std::string, std::string>> &headers) {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers hdrs;
    for (const auto &[k, v] : headers) hdrs.emplace(k, v);
    auto res = client.Post(parts.path, hdrs, body.dump(), "application/json");
    if (!res) throw std::runtime_error("request to " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw std::runtime_error("request to " + url + " returned HTTP " + std::to_string(res->status));
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error &e) {
        throw std::runtime_error("unparsable response from " + url + ": " + e.what());
    }
}

}  // namespace rca::detail
