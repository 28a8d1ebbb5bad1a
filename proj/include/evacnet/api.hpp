#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "evacnet/geo.hpp"
#include "evacnet/notice_store.hpp"

namespace evacnet {

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct ApiConfig {
    // When set, review-queue and feedback require `Authorization: Bearer <token>`.
    std::optional<std::string> reviewer_token;
    Clock clock = system_now;
};

/// Transport-free request handling; `serve_http` adapts it to a socket.
///
///   GET  /api/notices?at=          records active at `at` (default now)
///   GET  /api/notices/{id}         one record plus its supersedes chain
///   GET  /api/feed.geojson?at=
///   GET  /api/lookup?lon=&lat=&at=
///   GET  /api/stats?by=year|state|label
///   GET  /api/review-queue?limit=  (reviewer)
///   POST /api/feedback             (reviewer) FeedbackEntry JSON; with
///        "if_unreviewed": true an already reviewed record is left alone and
///        returned with 409.
class ApiRouter {
public:
    ApiRouter(NoticeStore& store, const GeometryIndex& geometry, ApiConfig config = {});

    ApiResponse handle(const ApiRequest& request) const;

private:
    NoticeStore& store_;
    const GeometryIndex& geometry_;
    ApiConfig config_;
};

/// Blocking HTTP server around a router. `static_dir`, if given, is mounted
/// at `/` for the browser console.
class HttpServer {
public:
    HttpServer(const ApiRouter& router, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~HttpServer();

    /// Returns the bound port (`port` 0 picks a free one). Throws Error(IoError).
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace evacnet
