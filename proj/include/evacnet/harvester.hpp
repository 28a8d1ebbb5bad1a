#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evacnet/diagnostics.hpp"
#include "evacnet/source_registry.hpp"
#include "evacnet/time.hpp"

namespace evacnet {

enum class PrefilterMode { Any, All };

std::optional<PrefilterMode> parse_prefilter_mode(std::string_view text);

/// Term families: "hurricane"; any token starting with "evacuat";
/// "evacuee"/"evacuees". Matching is per token, case-insensitive.
bool keyword_prefilter(std::string_view text, PrefilterMode mode = PrefilterMode::Any);

/// NFC composition, CR/LF/tab to space, whitespace runs collapsed, ends trimmed.
std::string normalize(std::string_view text);

using DedupKey = std::uint64_t;

/// Exact-match key over (normalized text, county); rewordings stay distinct.
DedupKey dedup_key(std::string_view normalized_text, const CountyFips& fips);

struct RawPost {
    CountyFips fips;
    ChannelKind channel_kind;
    Timestamp fetched_at;
    std::optional<Timestamp> published_at;
    std::string text;
    std::string source_url;
};

struct CandidateText {
    RawPost post;
    std::string normalized_text;
    DedupKey dedup_key = 0;
};

/// What a fetcher returns per item.
struct FetchedItem {
    std::optional<Timestamp> published_at;
    std::string text;
    std::string source_url;
};

/// Pulls items for one target. Implementations may throw; harvest_cycle
/// isolates failures per target.
class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual std::vector<FetchedItem> fetch(const FetchTarget& target) = 0;
};

/// Seen-key store shared across cycles.
class SeenStore {
public:
    virtual ~SeenStore() = default;
    /// Returns true when the key was not present before.
    virtual bool insert(DedupKey key) = 0;
    virtual bool contains(DedupKey key) const = 0;
};

class MemorySeenStore final : public SeenStore {
public:
    bool insert(DedupKey key) override;
    bool contains(DedupKey key) const override;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::set<DedupKey> keys_;
};

struct HarvestOptions {
    PrefilterMode mode = PrefilterMode::Any;
    std::size_t parallelism = 8;
    std::chrono::milliseconds politeness_delay{0};
};

struct FetchFailure {
    FetchTarget target;
    std::string message;
};

struct HarvestResult {
    std::vector<CandidateText> candidates;
    std::vector<FetchFailure> failures;
    std::size_t fetched = 0;
    std::size_t filtered_out = 0;
    std::size_t duplicates = 0;
};

/// fetch -> normalize -> prefilter -> dedup against `seen`. Output is ordered by
/// target, then published_at (absent first), then fetch order.
HarvestResult harvest_cycle(std::span<const FetchTarget> targets, Fetcher& fetcher, SeenStore& seen,
                            const HarvestOptions& options, const Clock& clock);

/// Replay/test fetcher: items are queued per (fips, channel) and drained on
/// fetch. Targets can be scripted to fail.
class ScriptedFetcher final : public Fetcher {
public:
    void enqueue(const CountyFips& fips, ChannelKind kind, FetchedItem item);
    void fail_next(const CountyFips& fips, ChannelKind kind, std::string message);
    void clear();
    std::size_t pending() const;

    std::vector<FetchedItem> fetch(const FetchTarget& target) override;

private:
    using Key = std::pair<CountyFips, ChannelKind>;
    mutable std::mutex mutex_;
    std::map<Key, std::vector<FetchedItem>> queued_;
    std::map<Key, std::string> failures_;
};

/// Extracts visible text blocks (paragraphs, list items, headings, table
/// cells) from an HTML page. Script/style content is dropped and common
/// entities decoded.
std::vector<std::string> extract_text_blocks(std::string_view html);

/// GETs website locators over HTTP(S) and returns one item per text block.
/// Handle-style locators (no scheme) are rejected with FetchFailed.
class HttpPageFetcher final : public Fetcher {
public:
    explicit HttpPageFetcher(std::chrono::seconds timeout = std::chrono::seconds(15)) : timeout_(timeout) {}
    std::vector<FetchedItem> fetch(const FetchTarget& target) override;

private:
    std::chrono::seconds timeout_;
};

}  // namespace evacnet
