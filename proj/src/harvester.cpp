#include "evacnet/harvester.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <openssl/evp.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "httplib.h"

#include "evacnet/error.hpp"
#include "evacnet/url.hpp"

namespace evacnet {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

bool is_token_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool is_ascii(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

std::string compose(std::string_view text) {
    if (is_ascii(text)) return std::string(text);
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) return std::string(text);
    const icu::UnicodeString source =
        icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    icu::UnicodeString composed = nfc->normalize(source, status);
    if (U_FAILURE(status)) return std::string(text);
    std::string out;
    composed.toUTF8String(out);
    return out;
}

/// Serializes requests to the same host so each waits `delay` after the previous.
class PolitenessGate {
public:
    explicit PolitenessGate(std::chrono::milliseconds delay) : delay_(delay) {}

    void acquire(const std::string& host) {
        if (delay_.count() <= 0 || host.empty()) return;
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            const auto now = std::chrono::steady_clock::now();
            auto& next = next_allowed_[host];
            slot = std::max(now, next);
            next = slot + delay_;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    std::chrono::milliseconds delay_;
    std::mutex mutex_;
    std::map<std::string, std::chrono::steady_clock::time_point> next_allowed_;
};

}  // namespace

std::optional<PrefilterMode> parse_prefilter_mode(std::string_view text) {
    if (text == "any" || text == "Any") return PrefilterMode::Any;
    if (text == "all" || text == "All") return PrefilterMode::All;
    return std::nullopt;
}

bool keyword_prefilter(std::string_view text, PrefilterMode mode) {
    bool hurricane = false;
    bool evacuation = false;
    std::string token;
    auto classify = [&] {
        if (token.rfind("hurricane", 0) == 0) hurricane = true;
        if (token.rfind("evacuat", 0) == 0 || token == "evacuee" || token == "evacuees") evacuation = true;
        token.clear();
    };
    for (char c : text) {
        if (is_token_char(c))
            token.push_back(lower(c));
        else if (!token.empty())
            classify();
    }
    if (!token.empty()) classify();
    return mode == PrefilterMode::Any ? (hurricane || evacuation) : (hurricane && evacuation);
}

std::string normalize(std::string_view text) {
    const std::string composed = compose(text);
    std::string out;
    out.reserve(composed.size());
    bool pending_space = false;
    for (char c : composed) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

DedupKey dedup_key(std::string_view normalized_text, const CountyFips& fips) {
    std::string material = fips.str();
    material.push_back('\0');
    material.append(normalized_text);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(material.data(), material.size(), digest, &length, EVP_sha256(), nullptr) != 1 || length < 8)
        throw Error(ErrorCode::IoError, "SHA-256 digest failed");
    DedupKey key = 0;
    for (int i = 0; i < 8; ++i) key = (key << 8) | digest[i];
    return key;
}

bool MemorySeenStore::insert(DedupKey key) {
    std::lock_guard lock(mutex_);
    return keys_.insert(key).second;
}

bool MemorySeenStore::contains(DedupKey key) const {
    std::lock_guard lock(mutex_);
    return keys_.count(key) != 0;
}

std::size_t MemorySeenStore::size() const {
    std::lock_guard lock(mutex_);
    return keys_.size();
}

HarvestResult harvest_cycle(std::span<const FetchTarget> targets_in, Fetcher& fetcher, SeenStore& seen,
                            const HarvestOptions& options, const Clock& clock) {
    std::vector<FetchTarget> targets(targets_in.begin(), targets_in.end());
    std::sort(targets.begin(), targets.end());
    const Timestamp fetched_at = clock();

    std::vector<std::vector<FetchedItem>> fetched(targets.size());
    std::vector<std::optional<std::string>> errors(targets.size());
    PolitenessGate gate(options.politeness_delay);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < targets.size(); i = next++) {
            const auto url = parse_url(targets[i].locator);
            gate.acquire(url ? url->host : std::string{});
            try {
                fetched[i] = fetcher.fetch(targets[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            } catch (...) {
                errors[i] = "unknown fetch failure";
            }
        }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(options.parallelism, 1), targets.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    HarvestResult result;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (errors[i]) {
            result.failures.push_back({targets[i], *errors[i]});
            continue;
        }
        auto& items = fetched[i];
        std::stable_sort(items.begin(), items.end(),
                         [](const FetchedItem& a, const FetchedItem& b) { return a.published_at < b.published_at; });
        for (auto& item : items) {
            ++result.fetched;
            std::string normalized = normalize(item.text);
            if (normalized.empty() || !keyword_prefilter(normalized, options.mode)) {
                ++result.filtered_out;
                continue;
            }
            const DedupKey key = dedup_key(normalized, targets[i].fips);
            if (!seen.insert(key)) {
                ++result.duplicates;
                continue;
            }
            result.candidates.push_back(CandidateText{
                .post = RawPost{.fips = targets[i].fips,
                                .channel_kind = targets[i].channel_kind,
                                .fetched_at = fetched_at,
                                .published_at = item.published_at,
                                .text = std::move(item.text),
                                .source_url = item.source_url.empty() ? targets[i].locator : item.source_url},
                .normalized_text = std::move(normalized),
                .dedup_key = key,
            });
        }
    }
    return result;
}

void ScriptedFetcher::enqueue(const CountyFips& fips, ChannelKind kind, FetchedItem item) {
    std::lock_guard lock(mutex_);
    queued_[{fips, kind}].push_back(std::move(item));
}

void ScriptedFetcher::fail_next(const CountyFips& fips, ChannelKind kind, std::string message) {
    std::lock_guard lock(mutex_);
    failures_[{fips, kind}] = std::move(message);
}

void ScriptedFetcher::clear() {
    std::lock_guard lock(mutex_);
    queued_.clear();
    failures_.clear();
}

std::size_t ScriptedFetcher::pending() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [key, items] : queued_) n += items.size();
    return n;
}

std::vector<FetchedItem> ScriptedFetcher::fetch(const FetchTarget& target) {
    std::lock_guard lock(mutex_);
    const Key key{target.fips, target.channel_kind};
    if (auto it = failures_.find(key); it != failures_.end()) {
        std::string message = std::move(it->second);
        failures_.erase(it);
        throw Error(ErrorCode::FetchFailed, target.locator + ": " + message);
    }
    auto it = queued_.find(key);
    if (it == queued_.end()) return {};
    std::vector<FetchedItem> items = std::move(it->second);
    queued_.erase(it);
    return items;
}

namespace {

void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string decode_entities(std::string_view s) {
    static const std::map<std::string_view, const char*> named = {
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
    };
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        const auto semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back('&');
            continue;
        }
        const auto name = s.substr(i + 1, semi - i - 1);
        if (!name.empty() && name[0] == '#') {
            const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
            try {
                const auto cp = std::stoul(std::string(name.substr(hex ? 2 : 1)), nullptr, hex ? 16 : 10);
                append_utf8(out, cp);
                i = semi;
                continue;
            } catch (const std::exception&) {
            }
        } else if (auto it = named.find(name); it != named.end()) {
            out.append(it->second);
            i = semi;
            continue;
        }
        out.push_back('&');
    }
    return out;
}

bool is_block_tag(std::string_view tag) {
    static const std::set<std::string_view> blocks = {
        "p",  "div", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "td", "th", "tr", "table", "br",
        "section", "article", "header", "footer", "blockquote", "pre", "dd", "dt", "main", "nav", "aside", "title",
    };
    return blocks.count(tag) != 0;
}

}  // namespace

std::vector<std::string> extract_text_blocks(std::string_view html) {
    std::vector<std::string> blocks;
    std::string current;
    auto flush = [&] {
        std::string block = normalize(decode_entities(current));
        if (!block.empty()) blocks.push_back(std::move(block));
        current.clear();
    };

    std::size_t i = 0;
    while (i < html.size()) {
        if (html[i] != '<') {
            current.push_back(html[i++]);
            continue;
        }
        if (html.compare(i, 4, "<!--") == 0) {
            const auto end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        const auto close = html.find('>', i);
        if (close == std::string_view::npos) break;
        std::string_view inside = html.substr(i + 1, close - i - 1);
        i = close + 1;
        const bool closing = !inside.empty() && inside.front() == '/';
        if (closing) inside.remove_prefix(1);
        std::string tag;
        for (char c : inside) {
            if (!is_token_char(c)) break;
            tag.push_back(lower(c));
        }
        if (!closing && (tag == "script" || tag == "style" || tag == "noscript" || tag == "template")) {
            const std::string end_tag = "</" + tag;
            std::size_t pos = i;
            while (pos < html.size()) {
                pos = html.find("</", pos);
                if (pos == std::string_view::npos) break;
                std::string candidate;
                for (std::size_t k = pos; k < html.size() && candidate.size() < end_tag.size(); ++k)
                    candidate.push_back(lower(html[k]));
                if (candidate == end_tag) break;
                pos += 2;
            }
            if (pos == std::string_view::npos) {
                i = html.size();
            } else {
                const auto end = html.find('>', pos);
                i = end == std::string_view::npos ? html.size() : end + 1;
            }
            continue;
        }
        // Inline tags (b, span, a...) never split a word.
        if (is_block_tag(tag)) flush();
    }
    flush();
    return blocks;
}

std::vector<FetchedItem> HttpPageFetcher::fetch(const FetchTarget& target) {
    const auto url = parse_url(target.locator);
    if (!url) throw Error(ErrorCode::FetchFailed, "not an http(s) locator: " + target.locator);
    httplib::Client client(url->origin());
    client.set_follow_location(true);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto response = client.Get(url->path);
    if (!response) throw Error(ErrorCode::FetchFailed, target.locator + ": " + httplib::to_string(response.error()));
    if (response->status != 200)
        throw Error(ErrorCode::FetchFailed, target.locator + ": HTTP " + std::to_string(response->status));
    std::vector<FetchedItem> items;
    for (auto& block : extract_text_blocks(response->body)) items.push_back({std::nullopt, std::move(block), target.locator});
    return items;
}

}  // namespace evacnet
