#include "evacnet/api.hpp"

#include <charconv>

#include "httplib.h"

#include "evacnet/error.hpp"

namespace evacnet {

using nlohmann::json;

namespace {

ApiResponse reply(int status, const json& body) { return {status, "application/json", body.dump()}; }

ApiResponse problem(int status, const std::string& message) { return reply(status, json{{"error", message}}); }

// Bad query input surfaces as 400 rather than 500.
struct BadRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Timestamp query_time(const ApiRequest& req, const Clock& clock) {
    auto it = req.query.find("at");
    if (it == req.query.end() || it->second.empty()) return clock();
    try {
        return parse_rfc3339(it->second);
    } catch (const Error&) {
        throw BadRequest("'at' must be an RFC 3339 timestamp");
    }
}

double query_double(const ApiRequest& req, const std::string& key) {
    auto it = req.query.find(key);
    if (it == req.query.end()) throw BadRequest("missing '" + key + "'");
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw BadRequest("'" + key + "' is not a number");
        return v;
    } catch (const std::logic_error&) {
        throw BadRequest("'" + key + "' is not a number");
    }
}

json records_json(const std::vector<NoticeRecord>& records) {
    json out = json::array();
    for (const auto& r : records) out.push_back(to_json(r));
    return out;
}

}  // namespace

ApiRouter::ApiRouter(NoticeStore& store, const GeometryIndex& geometry, ApiConfig config)
    : store_(store), geometry_(geometry), config_(std::move(config)) {}

ApiResponse ApiRouter::handle(const ApiRequest& req) const {
    const auto& p = req.path;
    auto authorized = [&] {
        if (!config_.reviewer_token) return true;
        auto it = req.headers.find("authorization");
        return it != req.headers.end() && it->second == "Bearer " + *config_.reviewer_token;
    };
    try {
        if (req.method == "GET" && p == "/api/notices") return reply(200, records_json(store_.active(query_time(req, config_.clock))));

        if (req.method == "GET" && p.rfind("/api/notices/", 0) == 0) {
            const std::string id = p.substr(std::string("/api/notices/").size());
            auto rec = store_.get(id);
            if (!rec) return problem(404, "unknown notice " + id);
            json body = to_json(*rec);
            body["chain"] = store_.chain(id);
            return reply(200, body);
        }

        if (req.method == "GET" && p == "/api/feed.geojson") {
            auto r = reply(200, geojson_feed(store_, geometry_, query_time(req, config_.clock), &store_.diagnostics()));
            r.content_type = "application/geo+json";
            return r;
        }

        if (req.method == "GET" && p == "/api/lookup") {
            const double lon = query_double(req, "lon");
            const double lat = query_double(req, "lat");
            return reply(200, records_json(lookup_point(store_, geometry_, lon, lat, query_time(req, config_.clock))));
        }

        if (req.method == "GET" && p == "/api/stats") {
            auto it = req.query.find("by");
            const auto by = parse_group_by(it == req.query.end() ? "label" : it->second);
            if (!by) throw BadRequest("'by' must be year, state or label");
            json rows = json::array();
            for (const auto& row : store_.archive_stats(*by)) rows.push_back({{"key", row.key}, {"count", row.count}});
            json body{{"by", it == req.query.end() ? "label" : it->second}, {"rows", rows}};
            if (*by == GroupBy::Year) {
                json cross = json::array();
                for (const auto& row : store_.archive_crosstab(*by))
                    cross.push_back({{"key", row.key}, {"series", row.series}, {"count", row.count}});
                body["crosstab"] = cross;
            }
            return reply(200, body);
        }

        if (req.method == "GET" && p == "/api/review-queue") {
            if (!authorized()) return problem(401, "reviewer token required");
            std::size_t limit = 50;
            if (auto it = req.query.find("limit"); it != req.query.end()) {
                const auto& s = it->second;
                auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), limit);
                if (ec != std::errc{} || ptr != s.data() + s.size()) throw BadRequest("'limit' must be a count");
            }
            return reply(200, records_json(store_.review_queue(limit)));
        }

        if (req.method == "POST" && p == "/api/feedback") {
            if (!authorized()) return problem(401, "reviewer token required");
            json doc;
            try {
                doc = json::parse(req.body);
            } catch (const json::parse_error&) {
                throw BadRequest("body is not JSON");
            }
            if (doc.is_object() && !doc.contains("at")) doc["at"] = format_rfc3339(config_.clock());
            const FeedbackEntry entry = feedback_from_json(doc);
            if (doc.value("if_unreviewed", false)) {
                NoticeRecord current;
                const bool applied = store_.record_feedback_if_unreviewed(entry, &current);
                return reply(applied ? 200 : 409, to_json(current));
            }
            return reply(200, to_json(store_.record_feedback(entry)));
        }

        if (p.rfind("/api/", 0) == 0) return problem(404, "no route " + req.method + " " + p);
        return problem(404, "not found");
    } catch (const BadRequest& e) {
        return problem(400, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnknownNotice) return problem(404, e.what());
        if (e.code() == ErrorCode::MalformedDocument) return problem(400, e.what());
        return problem(500, e.what());
    }
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(const ApiRouter& router, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
    auto forward = [&router](const httplib::Request& hreq, httplib::Response& hres) {
        ApiRequest req{hreq.method, hreq.path, {}, {}, hreq.body};
        for (const auto& [k, v] : hreq.params) req.query.emplace(k, v);
        for (const auto& [k, v] : hreq.headers) {
            std::string name = k;
            for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            req.headers.emplace(std::move(name), v);
        }
        const ApiResponse res = router.handle(req);
        hres.status = res.status;
        hres.set_content(res.body, res.content_type);
    };
    impl_->server.Get(R"(/api/.*)", forward);
    impl_->server.Post(R"(/api/.*)", forward);
    if (static_dir) impl_->server.set_mount_point("/", static_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace evacnet
