#pragma once

#include <chrono>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "evacnet/classifier.hpp"
#include "evacnet/diagnostics.hpp"
#include "evacnet/url.hpp"

namespace evacnet {

struct LexicalRef {};

struct RemoteRef {
    std::string endpoint;
    std::string model_id;
};

using ClassifierRef = std::variant<LexicalRef, RemoteRef>;

/// Throws Error(InvalidEndpoint) unless `ref.endpoint` is an absolute http(s) URL.
Url validate(const RemoteRef& ref);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::chrono::seconds timeout{30};
};

/// Texts longer than this many characters are cut before dispatch; the
/// server applies its own token limit.
inline constexpr std::size_t kMaxRemoteTextChars = 20000;

/// POSTs `body` to `endpoint` + `path`. Connection failures, timeouts and
/// non-200 responses are retried with exponential backoff, then raised as
/// Error(RetryableTransport). An unparsable body raises Error(ProtocolError).
nlohmann::json post_json(const Url& endpoint, std::string_view path, const nlohmann::json& body,
                         const RetryPolicy& policy);

/// Client for `POST {endpoint}/classify`.
class RemoteClassifier final : public Classifier {
public:
    /// `arity` is 3 for three-class models and 2 for binary-task models.
    RemoteClassifier(RemoteRef ref, RetryPolicy policy = {}, int arity = 3, std::size_t batch_size = 32,
                     Diagnostics* diagnostics = nullptr);

    /// Throws Error(ProtocolError) if the model is binary.
    std::vector<LabelDistribution> classify(std::span<const std::string> texts) override;
    std::vector<BinaryDistribution> classify_binary(std::span<const std::string> texts) override;

    const RemoteRef& ref() const noexcept { return ref_; }

private:
    std::vector<std::vector<double>> request_rows(std::span<const std::string> texts);

    RemoteRef ref_;
    Url url_;
    RetryPolicy policy_;
    int arity_;
    std::size_t batch_size_;
    Diagnostics* diagnostics_;
};

/// One validated distribution per text, in order.
/// Throws Error(RetryableTransport | ProtocolError | InvalidEndpoint).
std::vector<LabelDistribution> remote_classify(std::span<const std::string> texts, const RemoteRef& ref,
                                               const RetryPolicy& policy = {});

/// Cuts at a UTF-8 code point boundary.
std::string truncate_chars(std::string_view text, std::size_t max_chars, bool* truncated = nullptr);

}  // namespace evacnet
