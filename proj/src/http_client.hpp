#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace rca::detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // always starts with '/'
};

/// Splits "http://host:port/a/b" into origin and path. Throws std::invalid_argument.
SplitUrl split_url(const std::string &url);

/// POSTs a JSON body and returns the parsed JSON response. Throws std::runtime_error
/// on transport failure, non-2xx status or an unparsable response body.
nlohmann::json post_json(const std::string &url, const nlohmann::json &body, double timeout_seconds,
                         const std::vector<std::pair<std::string, std::string>> &headers = {});

}  // namespace rca::detail
