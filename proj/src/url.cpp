#include "evacnet/url.hpp"

#include <algorithm>
#include <charconv>

namespace evacnet {

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

std::string Url::path_with(std::string_view suffix) const {
    std::string base = path;
    while (!base.empty() && base.back() == '/') base.pop_back();
    if (!suffix.empty() && suffix.front() != '/') base.push_back('/');
    base.append(suffix);
    return base.empty() ? "/" : base;
}

std::optional<Url> parse_url(std::string_view text) {
    Url url;
    const auto sep = text.find("://");
    if (sep == std::string_view::npos) return std::nullopt;
    url.scheme = std::string(text.substr(0, sep));
    std::transform(url.scheme.begin(), url.scheme.end(), url.scheme.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (url.scheme != "http" && url.scheme != "https") return std::nullopt;

    std::string_view rest = text.substr(sep + 3);
    const auto slash = rest.find_first_of("/?#");
    std::string_view authority = rest.substr(0, slash);
    url.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    if (const auto hash = url.path.find('#'); hash != std::string::npos) url.path.erase(hash);
    if (url.path.empty() || url.path.front() != '/') url.path.insert(url.path.begin(), '/');
    if (authority.find('@') != std::string_view::npos) return std::nullopt;

    url.port = url.scheme == "https" ? 443 : 80;
    if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
        const auto port_text = authority.substr(colon + 1);
        int port = 0;
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port <= 0 || port > 65535)
            return std::nullopt;
        url.port = port;
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) return std::nullopt;
    for (char c : authority)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) return std::nullopt;
    url.host = std::string(authority);
    return url;
}

}  // namespace evacnet
