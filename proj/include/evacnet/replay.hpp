#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "evacnet/classifier.hpp"
#include "evacnet/geo.hpp"
#include "evacnet/harvester.hpp"
#include "evacnet/notice_store.hpp"
#include "evacnet/source_registry.hpp"

namespace evacnet {

/// One scenario line. NDJSON shapes:
///   {"at": T, "kind": "alert", "document": {...alert document...}}
///   {"at": T, "kind": "post", "fips": "12086", "channel": "gov_website",
///    "text": "...", "url": "...", "published_at": T?}
///   {"at": T, "kind": "close_all"}
struct ScenarioEvent {
    enum class Kind { Alert, Post, CloseAll };

    Timestamp at;
    Kind kind = Kind::CloseAll;
    std::size_t line = 0;
    nlohmann::json document;  // Alert
    std::optional<CountyFips> fips;  // Post
    ChannelKind channel = ChannelKind::GovSite;
    std::string text;
    std::string url;
    std::optional<Timestamp> published_at;
};

/// Blank lines skipped. Throws Error(MalformedScenario) on bad JSON, unknown
/// kinds, missing fields or timestamps that go backwards.
std::vector<ScenarioEvent> parse_scenario(std::istream& in);
std::vector<ScenarioEvent> load_scenario(const std::filesystem::path& path);

struct ReplayResult {
    // One compact JSON object per line, in processing order.
    std::vector<std::string> log;
    nlohmann::json snapshot;
    Timestamp final_at;
    // Classifier or store failures; the replay keeps going but exits nonzero.
    std::size_t errors = 0;

    int exit_code() const { return errors == 0 ? 0 : 1; }
};

/// Single-threaded; the simulated clock is the event time. Posts reach the
/// pipeline through a scripted fetcher, so targeting applies as in live runs.
ReplayResult run_replay(std::span<const ScenarioEvent> events, const Registry& registry,
                        const GeometryIndex& geometry, Classifier& classifier, NoticeStore& store,
                        HarvestOptions options = {});

/// Snapshot text as written by the CLI: two-space indent, trailing newline.
std::string snapshot_text(const nlohmann::json& snapshot);

struct ReportOutput {
    std::string table;
    // CSV with header `key,series,count`.
    std::string plot_data;
};

/// Year view is a Year x Label cross-tab; state and label views are counts.
ReportOutput render_report(const NoticeStore& store, GroupBy by);

}  // namespace evacnet
