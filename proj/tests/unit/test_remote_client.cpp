#include "doctest.h"

#include "check_error.hpp"
#include "evacnet/remote_client.hpp"
#include "stub_server.hpp"

using namespace evacnet;
using nlohmann::json;

namespace {

RetryPolicy quick() { return RetryPolicy{3, std::chrono::milliseconds(5), std::chrono::seconds(2)}; }

// /classify replying with fixed distributions.
void serve_rows(testing::StubServer& server, json rows, json* last_request = nullptr) {
    server.post("/classify", [rows, last_request](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        if (last_request) *last_request = body;
        testing::reply_json(res, json{{"model_id", body["model_id"]}, {"distributions", rows}}.dump());
    });
    server.start();
}

}  // namespace

TEST_CASE("pass-through of one valid distribution") {
    testing::StubServer server;
    json request;
    serve_rows(server, json::array({json::array({0.9, 0.05, 0.05})}), &request);
    const std::vector<std::string> texts{"text"};
    const auto out = remote_classify(texts, {server.url(), "bert-base"}, quick());
    REQUIRE(out.size() == 1);
    CHECK(out[0].mandatory() == doctest::Approx(0.9));
    CHECK(request["model_id"] == "bert-base");
    CHECK(request["texts"] == json::array({"text"}));
}

TEST_CASE("wrong arity is a protocol error") {
    testing::StubServer server;
    serve_rows(server, json::array({json::array({0.5, 0.5})}));
    const std::vector<std::string> texts{"text"};
    CHECK_ERROR_CODE(remote_classify(texts, {server.url(), "m"}, quick()), ErrorCode::ProtocolError);
}

TEST_CASE("row count mismatch is a protocol error") {
    testing::StubServer server;
    serve_rows(server, json::array({json::array({0.9, 0.05, 0.05}), json::array({0.9, 0.05, 0.05})}));
    const std::vector<std::string> texts{"text"};
    CHECK_ERROR_CODE(remote_classify(texts, {server.url(), "m"}, quick()), ErrorCode::ProtocolError);
}

TEST_CASE("non-normalized, negative and non-numeric rows are protocol errors") {
    for (const json& row : {json::array({0.6, 0.6, 0.1}), json::array({1.2, -0.1, -0.1}), json::array({"0.9", 0.05, 0.05}),
                            json::array({nullptr, 0.5, 0.5})}) {
        CAPTURE(row.dump());
        testing::StubServer server;
        serve_rows(server, json::array({row}));
        const std::vector<std::string> texts{"text"};
        CHECK_ERROR_CODE(remote_classify(texts, {server.url(), "m"}, quick()), ErrorCode::ProtocolError);
    }
}

TEST_CASE("missing distributions field and non-JSON bodies") {
    {
        testing::StubServer server;
        server.post("/classify", [](const httplib::Request&, httplib::Response& res) {
            testing::reply_json(res, R"({"model_id":"m"})");
        });
        server.start();
        const std::vector<std::string> texts{"a"};
        CHECK_ERROR_CODE(remote_classify(texts, {server.url(), "m"}, quick()), ErrorCode::ProtocolError);
    }
    {
        testing::StubServer server;
        server.post("/classify", [](const httplib::Request&, httplib::Response& res) { res.set_content("<html>", "text/html"); });
        server.start();
        const std::vector<std::string> texts{"a"};
        CHECK_ERROR_CODE(remote_classify(texts, {server.url(), "m"}, quick()), ErrorCode::ProtocolError);
    }
}

TEST_CASE("5xx is retried with backoff then raised as RetryableTransport") {
    testing::StubServer server;
    server.post("/classify", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    server.start();
    const std::vector<std::string> texts{"a"};
    CHECK_ERROR_CODE(remote_classify(texts, {server.url(), "m"}, quick()), ErrorCode::RetryableTransport);
    CHECK(server.hits() == 3);
}

TEST_CASE("a transient failure recovers on retry") {
    testing::StubServer server;
    std::atomic<int> calls{0};
    server.post("/classify", [&calls](const httplib::Request&, httplib::Response& res) {
        if (calls++ == 0) {
            res.status = 500;
            return;
        }
        testing::reply_json(res, R"({"model_id":"m","distributions":[[0.1,0.8,0.1]]})");
    });
    server.start();
    const std::vector<std::string> texts{"a"};
    const auto out = remote_classify(texts, {server.url(), "m"}, quick());
    CHECK(decide(out[0]) == NoticeLabel::Voluntary);
    CHECK(calls == 2);
}

TEST_CASE("unreachable endpoint") {
    int port = 0;
    {
        testing::StubServer probe;
        probe.start();
        port = probe.port();
    }
    const std::vector<std::string> texts{"a"};
    RetryPolicy policy{2, std::chrono::milliseconds(1), std::chrono::seconds(1)};
    CHECK_ERROR_CODE(remote_classify(texts, {"http://127.0.0.1:" + std::to_string(port), "m"}, policy),
                     ErrorCode::RetryableTransport);
}

TEST_CASE("endpoint validation") {
    CHECK_ERROR_CODE(validate(RemoteRef{"localhost:8000", "m"}), ErrorCode::InvalidEndpoint);
    CHECK_ERROR_CODE(RemoteClassifier(RemoteRef{"not a url", "m"}), ErrorCode::InvalidEndpoint);
    CHECK(validate(RemoteRef{"http://127.0.0.1:8000/shim", "m"}).path == "/shim");
}

TEST_CASE("batches preserve order and honor a base path") {
    testing::StubServer server;
    std::atomic<int> batches{0};
    server.post("/shim/classify", [&batches](const httplib::Request& req, httplib::Response& res) {
        ++batches;
        json rows = json::array();
        const json body = json::parse(req.body);
        for (const auto& t : body["texts"]) {
            const int i = std::stoi(t.get<std::string>());
            rows.push_back(i % 2 ? json::array({0.0, 1.0, 0.0}) : json::array({1.0, 0.0, 0.0}));
        }
        testing::reply_json(res, json{{"model_id", "m"}, {"distributions", rows}}.dump());
    });
    server.start();
    RemoteClassifier client({server.url() + "/shim", "m"}, quick(), 3, 4);
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back(std::to_string(i));
    const auto out = client.classify(texts);
    REQUIRE(out.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(decide(out[i]) == (i % 2 ? NoticeLabel::Voluntary : NoticeLabel::Mandatory));
    CHECK(batches == 3);
}

TEST_CASE("over-long texts are cut with a diagnostic") {
    testing::StubServer server;
    json request;
    serve_rows(server, json::array({json::array({0.0, 0.0, 1.0})}), &request);
    Diagnostics diagnostics;
    RemoteClassifier client({server.url(), "m"}, quick(), 3, 32, &diagnostics);
    const std::vector<std::string> texts{std::string(30000, 'x')};
    client.classify(texts);
    CHECK(request["texts"][0].get<std::string>().size() == kMaxRemoteTextChars);
    CHECK(diagnostics.count("TextTruncated") == 1);
}

TEST_CASE("truncate_chars counts code points") {
    bool cut = false;
    CHECK(truncate_chars("h\xC3\xA9llo", 2, &cut) == "h\xC3\xA9");
    CHECK(cut);
    CHECK(truncate_chars("abc", 3, &cut) == "abc");
    CHECK_FALSE(cut);
}

TEST_CASE("binary models answer with two columns") {
    testing::StubServer server;
    serve_rows(server, json::array({json::array({0.3, 0.7})}));
    RemoteClassifier client({server.url(), "m"}, quick(), 2);
    const std::vector<std::string> texts{"a"};
    const auto out = client.classify_binary(texts);
    CHECK(decide(out[0]) == BinaryLabel::NotNotice);
    CHECK_ERROR_CODE(client.classify(texts), ErrorCode::ProtocolError);
}
