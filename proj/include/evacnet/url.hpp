#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace evacnet {

struct Url {
    std::string scheme;  // "http" or "https"
    std::string host;
    int port = 0;
    std::string path;  // always starts with '/'

    /// `scheme://host:port`, as cpp-httplib's client expects.
    std::string origin() const;
    /// Joins `suffix` onto the path without doubling slashes.
    std::string path_with(std::string_view suffix) const;
};

/// Only absolute http(s) URLs with a host are accepted.
std::optional<Url> parse_url(std::string_view text);

}  // namespace evacnet
