#include "evacnet/remote_client.hpp"

#include <thread>

#include "httplib.h"

#include "evacnet/error.hpp"

namespace evacnet {

using nlohmann::json;

Url validate(const RemoteRef& ref) {
    auto url = parse_url(ref.endpoint);
    if (!url) throw Error(ErrorCode::InvalidEndpoint, "not an absolute http(s) URL: '" + ref.endpoint + "'");
    return *url;
}

json post_json(const Url& endpoint, std::string_view path, const json& body, const RetryPolicy& policy) {
    const std::string target = endpoint.path_with(path);
    const std::string payload = body.dump();
    auto backoff = policy.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= std::max(policy.max_attempts, 1); ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(endpoint.origin());
        client.set_connection_timeout(policy.timeout);
        client.set_read_timeout(policy.timeout);
        client.set_write_timeout(policy.timeout);
        auto response = client.Post(target, payload, "application/json");
        if (!response) {
            last_error = httplib::to_string(response.error());
            continue;
        }
        if (response->status != 200) {
            last_error = "HTTP " + std::to_string(response->status);
            continue;
        }
        try {
            return json::parse(response->body);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ProtocolError, std::string("response is not JSON: ") + e.what());
        }
    }
    throw Error(ErrorCode::RetryableTransport,
                endpoint.origin() + target + " failed after " + std::to_string(policy.max_attempts) +
                    " attempt(s): " + last_error);
}

std::string truncate_chars(std::string_view text, std::size_t max_chars, bool* truncated) {
    std::size_t chars = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto byte = static_cast<unsigned char>(text[i]);
        if ((byte & 0xC0) != 0x80) {
            if (chars == max_chars) {
                if (truncated) *truncated = true;
                return std::string(text.substr(0, i));
            }
            ++chars;
        }
    }
    if (truncated) *truncated = false;
    return std::string(text);
}

RemoteClassifier::RemoteClassifier(RemoteRef ref, RetryPolicy policy, int arity, std::size_t batch_size,
                                   Diagnostics* diagnostics)
    : ref_(std::move(ref)),
      url_(validate(ref_)),
      policy_(policy),
      arity_(arity),
      batch_size_(std::max<std::size_t>(batch_size, 1)),
      diagnostics_(diagnostics) {
    if (arity_ != 2 && arity_ != 3) throw Error(ErrorCode::ProtocolError, "arity must be 2 or 3");
}

std::vector<std::vector<double>> RemoteClassifier::request_rows(std::span<const std::string> texts) {
    std::vector<std::vector<double>> rows;
    rows.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
        const auto batch = texts.subspan(start, std::min(batch_size_, texts.size() - start));
        json body{{"model_id", ref_.model_id}, {"texts", json::array()}};
        for (std::size_t i = 0; i < batch.size(); ++i) {
            bool cut = false;
            body["texts"].push_back(truncate_chars(batch[i], kMaxRemoteTextChars, &cut));
            if (cut && diagnostics_)
                diagnostics_->add("TextTruncated", "text #" + std::to_string(start + i) + " cut to " +
                                                       std::to_string(kMaxRemoteTextChars) + " characters");
        }
        const json reply = post_json(url_, "/classify", body, policy_);
        if (!reply.is_object() || !reply.contains("distributions") || !reply["distributions"].is_array())
            throw Error(ErrorCode::ProtocolError, "reply lacks a 'distributions' array");
        const auto& dists = reply["distributions"];
        if (dists.size() != batch.size())
            throw Error(ErrorCode::ProtocolError, "expected " + std::to_string(batch.size()) + " distributions, got " +
                                                      std::to_string(dists.size()));
        for (const auto& row : dists) {
            if (!row.is_array() || row.size() != static_cast<std::size_t>(arity_))
                throw Error(ErrorCode::ProtocolError, "distribution row has wrong arity: " + row.dump());
            std::vector<double> values;
            for (const auto& p : row) {
                if (!p.is_number()) throw Error(ErrorCode::ProtocolError, "non-numeric probability: " + row.dump());
                values.push_back(p.get<double>());
            }
            rows.push_back(std::move(values));
        }
    }
    return rows;
}

std::vector<LabelDistribution> RemoteClassifier::classify(std::span<const std::string> texts) {
    if (arity_ != 3) throw Error(ErrorCode::ProtocolError, "binary model cannot produce three-class output");
    std::vector<LabelDistribution> out;
    for (const auto& row : request_rows(texts)) {
        try {
            out.push_back(LabelDistribution::from(row[0], row[1], row[2]));
        } catch (const Error& e) {
            throw Error(ErrorCode::ProtocolError, e.what());
        }
    }
    return out;
}

std::vector<BinaryDistribution> RemoteClassifier::classify_binary(std::span<const std::string> texts) {
    if (arity_ == 3) return Classifier::classify_binary(texts);
    std::vector<BinaryDistribution> out;
    for (const auto& row : request_rows(texts)) {
        try {
            out.push_back(BinaryDistribution::from(row[0], row[1]));
        } catch (const Error& e) {
            throw Error(ErrorCode::ProtocolError, e.what());
        }
    }
    return out;
}

std::vector<LabelDistribution> remote_classify(std::span<const std::string> texts, const RemoteRef& ref,
                                               const RetryPolicy& policy) {
    RemoteClassifier client(ref, policy);
    return client.classify(texts);
}

}  // namespace evacnet
