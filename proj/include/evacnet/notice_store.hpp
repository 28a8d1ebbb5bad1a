#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "evacnet/classifier.hpp"
#include "evacnet/diagnostics.hpp"
#include "evacnet/eval.hpp"
#include "evacnet/geo.hpp"
#include "evacnet/harvester.hpp"

namespace evacnet {

enum class NoticeStatus { Active, Superseded, Closed, Rejected };

std::string_view to_string(NoticeStatus status);

struct NoticeRecord {
    std::string id;
    CountyFips scope_key = CountyFips::parse("00000");
    NoticeLabel label = NoticeLabel::NotNotice;
    LabelDistribution distribution = LabelDistribution::from(0, 0, 1);
    std::string text;
    std::string source_url;
    ChannelKind channel_kind = ChannelKind::GovSite;
    Timestamp observed_at;
    NoticeStatus status = NoticeStatus::Active;
    std::optional<std::string> supersedes;
    bool reviewed = false;
    // Interval during which the record was the scope's Active notice.
    std::optional<Timestamp> activated_at;
    std::optional<Timestamp> deactivated_at;

    bool active_at(Timestamp t) const {
        return activated_at && *activated_at <= t && (!deactivated_at || t < *deactivated_at);
    }
};

nlohmann::json to_json(const NoticeRecord& record);

struct UpsertOutcome {
    enum class Kind { Created, ClosedOnArrival, Dropped };
    Kind kind = Kind::Created;
    NoticeRecord record;
    std::optional<std::string> superseded_id;
};

enum class FeedbackAction { Confirm, Correct, Reject };

std::string_view to_string(FeedbackAction action);
std::optional<FeedbackAction> parse_feedback_action(std::string_view text);

struct FeedbackEntry {
    std::string notice_id;
    FeedbackAction action = FeedbackAction::Confirm;
    std::optional<NoticeLabel> corrected_label;  // required for Correct
    std::string reviewer_id;
    Timestamp at;
};

nlohmann::json to_json(const FeedbackEntry& entry);
/// Throws Error(MalformedDocument).
FeedbackEntry feedback_from_json(const nlohmann::json& doc);

struct AuditEntry {
    std::size_t seq = 0;
    FeedbackEntry entry;
};

enum class GroupBy { Year, State, Label };

std::optional<GroupBy> parse_group_by(std::string_view text);

struct CountRow {
    std::string key;
    std::size_t count = 0;
    bool operator==(const CountRow&) const = default;
};

struct CrossTabRow {
    std::string key;
    std::string series;
    std::size_t count = 0;
    bool operator==(const CrossTabRow&) const = default;
};

/// USPS abbreviation for a two-digit state FIPS prefix, or the prefix itself.
std::string state_abbreviation(std::string_view state_prefix);

/// Classified notices with lifecycle history. Writes are serialized; reads
/// take a shared lock and see a consistent state. A persistent store keeps
/// an append-only event log in SQLite and rebuilds itself by replaying it.
class NoticeStore {
public:
    static NoticeStore in_memory();
    /// Creates the database if missing. Throws Error(StoreFailure).
    static NoticeStore open(const std::filesystem::path& path);
    /// Existing stores only. Throws Error(UnreadableStore).
    static NoticeStore open_existing(const std::filesystem::path& path);

    NoticeStore(NoticeStore&&) noexcept;
    NoticeStore& operator=(NoticeStore&&) noexcept;
    ~NoticeStore();

    /// NotNotice decisions are archived as Rejected (unreviewed) and kept out
    /// of the feed. Otherwise precedence against the scope's Active record:
    /// Mandatory supersedes Voluntary, Voluntary never supersedes Mandatory,
    /// a same-label record supersedes only an older one. Losers are stored
    /// Closed on arrival.
    UpsertOutcome upsert(const CandidateText& candidate, const LabelDistribution& dist);

    /// Throws Error(UnknownNotice | MalformedDocument).
    NoticeRecord record_feedback(const FeedbackEntry& entry);
    /// Applies `entry` only if the record is still unreviewed, atomically.
    /// Returns false (and leaves `*current` holding the record) otherwise.
    bool record_feedback_if_unreviewed(const FeedbackEntry& entry, NoticeRecord* current);

    /// Operator close of every Active record; returns how many closed.
    std::size_t close_all(Timestamp at);

    std::vector<NoticeRecord> active(Timestamp at) const;
    std::vector<NoticeRecord> records() const;
    std::optional<NoticeRecord> get(const std::string& id) const;
    /// `id` followed by the records it transitively supersedes.
    std::vector<std::string> chain(const std::string& id) const;
    std::vector<AuditEntry> audit_log() const;
    /// Unreviewed records, least confident first.
    std::vector<NoticeRecord> review_queue(std::size_t limit) const;

    std::vector<LabeledExample> export_labeled() const;
    /// Non-Rejected records grouped by key, ascending.
    std::vector<CountRow> archive_stats(GroupBy by) const;
    /// Non-Rejected records by (key, label).
    std::vector<CrossTabRow> archive_crosstab(GroupBy by) const;

    /// Dedup keys persisted alongside the notices.
    SeenStore& seen();
    Diagnostics& diagnostics();

private:
    struct Impl;
    explicit NoticeStore(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

/// One feature per record active at `at`, in scope order. Records without
/// geometry get a null geometry and a `MissingGeometry` diagnostic.
nlohmann::json geojson_feed(const NoticeStore& store, const GeometryIndex& geometry, Timestamp at,
                            Diagnostics* diagnostics = nullptr);

/// Records active at `at` whose scope contains the point.
std::vector<NoticeRecord> lookup_point(const NoticeStore& store, const GeometryIndex& geometry, double lon, double lat,
                                       Timestamp at);

}  // namespace evacnet
