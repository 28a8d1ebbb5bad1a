#include "evacnet/notice_store.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <shared_mutex>

#include <sqlite3.h>

#include "evacnet/error.hpp"

namespace evacnet {

using nlohmann::json;

namespace {

// Thin RAII handle; every call runs under the store's writer lock.
class Database {
public:
    Database(const std::filesystem::path& path, int flags) {
        if (sqlite3_open_v2(path.string().c_str(), &handle_, flags, nullptr) != SQLITE_OK) {
            const std::string message = handle_ ? sqlite3_errmsg(handle_) : "out of memory";
            sqlite3_close(handle_);
            handle_ = nullptr;
            throw Error(ErrorCode::StoreFailure, path.string() + ": " + message);
        }
        sqlite3_busy_timeout(handle_, 5000);
    }
    Database(const Database&) = delete;
    Database& operator=(const Database&) = delete;
    ~Database() { sqlite3_close(handle_); }

    void exec(const std::string& sql) {
        char* err = nullptr;
        if (sqlite3_exec(handle_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
            const std::string message = err ? err : "unknown";
            sqlite3_free(err);
            throw Error(ErrorCode::StoreFailure, message + " in: " + sql);
        }
    }

    /// Binds text parameters in order and steps once; returns rows changed.
    int run(const std::string& sql, const std::vector<std::string>& params) {
        sqlite3_stmt* stmt = prepare(sql);
        for (std::size_t i = 0; i < params.size(); ++i)
            sqlite3_bind_text(stmt, static_cast<int>(i + 1), params[i].c_str(), static_cast<int>(params[i].size()),
                              SQLITE_TRANSIENT);
        const int rc = sqlite3_step(stmt);
        sqlite3_finalize(stmt);
        if (rc != SQLITE_DONE) throw Error(ErrorCode::StoreFailure, std::string(sqlite3_errmsg(handle_)) + " in: " + sql);
        return sqlite3_changes(handle_);
    }

    /// Collects the first `columns` text columns of every row.
    std::vector<std::vector<std::string>> query(const std::string& sql, int columns) {
        sqlite3_stmt* stmt = prepare(sql);
        std::vector<std::vector<std::string>> rows;
        int rc;
        while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
            std::vector<std::string> row;
            for (int c = 0; c < columns; ++c) {
                const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, c));
                row.emplace_back(text ? text : "");
            }
            rows.push_back(std::move(row));
        }
        sqlite3_finalize(stmt);
        if (rc != SQLITE_DONE) throw Error(ErrorCode::StoreFailure, std::string(sqlite3_errmsg(handle_)) + " in: " + sql);
        return rows;
    }

private:
    sqlite3_stmt* prepare(const std::string& sql) {
        sqlite3_stmt* stmt = nullptr;
        if (sqlite3_prepare_v2(handle_, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK)
            throw Error(ErrorCode::StoreFailure, std::string(sqlite3_errmsg(handle_)) + " in: " + sql);
        return stmt;
    }

    sqlite3* handle_ = nullptr;
};

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS events (seq INTEGER PRIMARY KEY AUTOINCREMENT, kind TEXT NOT NULL, payload TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS audit (seq INTEGER PRIMARY KEY AUTOINCREMENT, notice_id TEXT NOT NULL, action TEXT NOT NULL,
                                  reviewer_id TEXT NOT NULL, at TEXT NOT NULL, payload TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS seen (key TEXT PRIMARY KEY);
CREATE TRIGGER IF NOT EXISTS events_append_only_u BEFORE UPDATE ON events BEGIN SELECT RAISE(ABORT, 'append-only'); END;
CREATE TRIGGER IF NOT EXISTS events_append_only_d BEFORE DELETE ON events BEGIN SELECT RAISE(ABORT, 'append-only'); END;
CREATE TRIGGER IF NOT EXISTS audit_append_only_u BEFORE UPDATE ON audit BEGIN SELECT RAISE(ABORT, 'append-only'); END;
CREATE TRIGGER IF NOT EXISTS audit_append_only_d BEFORE DELETE ON audit BEGIN SELECT RAISE(ABORT, 'append-only'); END;
)sql";

json candidate_json(const CandidateText& c) {
    return json{{"fips", c.post.fips.str()},
                {"channel", std::string(to_string(c.post.channel_kind))},
                {"fetched_at", format_rfc3339(c.post.fetched_at)},
                {"published_at", c.post.published_at ? json(format_rfc3339(*c.post.published_at)) : json(nullptr)},
                {"text", c.post.text},
                {"source_url", c.post.source_url},
                {"normalized_text", c.normalized_text},
                {"dedup_key", std::to_string(c.dedup_key)}};
}

CandidateText candidate_from_json(const json& j) {
    CandidateText c{
        .post = RawPost{.fips = CountyFips::parse(j.at("fips").get<std::string>()),
                        .channel_kind = parse_channel_kind(j.at("channel").get<std::string>()).value(),
                        .fetched_at = parse_rfc3339(j.at("fetched_at").get<std::string>()),
                        .published_at = std::nullopt,
                        .text = j.at("text").get<std::string>(),
                        .source_url = j.at("source_url").get<std::string>()},
        .normalized_text = j.at("normalized_text").get<std::string>(),
        .dedup_key = std::stoull(j.at("dedup_key").get<std::string>()),
    };
    if (!j.at("published_at").is_null()) c.post.published_at = parse_rfc3339(j.at("published_at").get<std::string>());
    return c;
}

json distribution_json(const LabelDistribution& d) { return json::array({d.mandatory(), d.voluntary(), d.not_notice()}); }

Origin origin_for(ChannelKind kind) {
    return (kind == ChannelKind::Microblog || kind == ChannelKind::SocialPage) ? Origin::SocialMedia : Origin::Website;
}

}  // namespace

std::string_view to_string(NoticeStatus status) {
    switch (status) {
        case NoticeStatus::Active: return "Active";
        case NoticeStatus::Superseded: return "Superseded";
        case NoticeStatus::Closed: return "Closed";
        case NoticeStatus::Rejected: return "Rejected";
    }
    return "Active";
}

std::string_view to_string(FeedbackAction action) {
    switch (action) {
        case FeedbackAction::Confirm: return "confirm";
        case FeedbackAction::Correct: return "correct";
        case FeedbackAction::Reject: return "reject";
    }
    return "confirm";
}

std::optional<FeedbackAction> parse_feedback_action(std::string_view text) {
    if (text == "confirm" || text == "Confirm") return FeedbackAction::Confirm;
    if (text == "correct" || text == "Correct") return FeedbackAction::Correct;
    if (text == "reject" || text == "Reject") return FeedbackAction::Reject;
    return std::nullopt;
}

std::optional<GroupBy> parse_group_by(std::string_view text) {
    if (text == "year") return GroupBy::Year;
    if (text == "state") return GroupBy::State;
    if (text == "label") return GroupBy::Label;
    return std::nullopt;
}

json to_json(const NoticeRecord& r) {
    return json{{"id", r.id},
                {"fips", r.scope_key.str()},
                {"label", std::string(to_string(r.label))},
                {"distribution", distribution_json(r.distribution)},
                {"text", r.text},
                {"source_url", r.source_url},
                {"channel_kind", std::string(to_string(r.channel_kind))},
                {"observed_at", format_rfc3339(r.observed_at)},
                {"status", std::string(to_string(r.status))},
                {"supersedes", r.supersedes ? json(*r.supersedes) : json(nullptr)},
                {"reviewed", r.reviewed},
                {"activated_at", r.activated_at ? json(format_rfc3339(*r.activated_at)) : json(nullptr)},
                {"deactivated_at", r.deactivated_at ? json(format_rfc3339(*r.deactivated_at)) : json(nullptr)}};
}

json to_json(const FeedbackEntry& e) {
    json j{{"notice_id", e.notice_id},
           {"action", std::string(to_string(e.action))},
           {"reviewer_id", e.reviewer_id},
           {"at", format_rfc3339(e.at)}};
    if (e.corrected_label) j["label"] = std::string(to_string(*e.corrected_label));
    return j;
}

FeedbackEntry feedback_from_json(const json& doc) {
    auto fail = [](const std::string& why) { return Error(ErrorCode::MalformedDocument, "feedback: " + why); };
    if (!doc.is_object()) throw fail("not an object");
    auto str = [&](const char* key) {
        auto it = doc.find(key);
        if (it == doc.end() || !it->is_string()) throw fail(std::string("missing string '") + key + "'");
        return it->get<std::string>();
    };
    FeedbackEntry e;
    e.notice_id = str("notice_id");
    const auto action = parse_feedback_action(str("action"));
    if (!action) throw fail("unknown action");
    e.action = *action;
    e.reviewer_id = str("reviewer_id");
    try {
        e.at = parse_rfc3339(str("at"));
    } catch (const Error&) {
        throw fail("'at' is not RFC 3339");
    }
    if (auto it = doc.find("label"); it != doc.end() && !it->is_null()) {
        if (!it->is_string()) throw fail("label is not a string");
        e.corrected_label = parse_notice_label(it->get<std::string>());
        if (!e.corrected_label) throw fail("unknown label");
    }
    if (e.action == FeedbackAction::Correct && !e.corrected_label) throw fail("correct requires a label");
    return e;
}

std::string state_abbreviation(std::string_view prefix) {
    static const std::map<std::string_view, std::string_view> table = {
        {"01", "AL"}, {"02", "AK"}, {"04", "AZ"}, {"05", "AR"}, {"06", "CA"}, {"08", "CO"}, {"09", "CT"},
        {"10", "DE"}, {"11", "DC"}, {"12", "FL"}, {"13", "GA"}, {"15", "HI"}, {"16", "ID"}, {"17", "IL"},
        {"18", "IN"}, {"19", "IA"}, {"20", "KS"}, {"21", "KY"}, {"22", "LA"}, {"23", "ME"}, {"24", "MD"},
        {"25", "MA"}, {"26", "MI"}, {"27", "MN"}, {"28", "MS"}, {"29", "MO"}, {"30", "MT"}, {"31", "NE"},
        {"32", "NV"}, {"33", "NH"}, {"34", "NJ"}, {"35", "NM"}, {"36", "NY"}, {"37", "NC"}, {"38", "ND"},
        {"39", "OH"}, {"40", "OK"}, {"41", "OR"}, {"42", "PA"}, {"44", "RI"}, {"45", "SC"}, {"46", "SD"},
        {"47", "TN"}, {"48", "TX"}, {"49", "UT"}, {"50", "VT"}, {"51", "VA"}, {"53", "WA"}, {"54", "WV"},
        {"55", "WI"}, {"56", "WY"}, {"60", "AS"}, {"66", "GU"}, {"69", "MP"}, {"72", "PR"}, {"78", "VI"},
    };
    auto it = table.find(prefix);
    return it == table.end() ? std::string(prefix) : std::string(it->second);
}

struct NoticeStore::Impl {
    mutable std::shared_mutex mutex;
    std::unique_ptr<Database> db;

    std::vector<NoticeRecord> records;
    std::map<std::string, std::size_t> by_id;
    std::map<CountyFips, std::size_t> active_by_scope;
    // Latest activation/deactivation instant per scope; new intervals start
    // no earlier, so a scope's Active intervals never overlap.
    std::map<CountyFips, Timestamp> last_transition;
    std::vector<AuditEntry> audit;
    std::set<DedupKey> seen_keys;
    Diagnostics diagnostics;

    class Seen final : public SeenStore {
    public:
        explicit Seen(Impl& impl) : impl_(impl) {}
        bool insert(DedupKey key) override {
            std::unique_lock lock(impl_.mutex);
            if (impl_.seen_keys.count(key)) return false;
            if (impl_.db) impl_.db->run("INSERT OR IGNORE INTO seen(key) VALUES (?)", {std::to_string(key)});
            impl_.seen_keys.insert(key);
            return true;
        }
        bool contains(DedupKey key) const override {
            std::shared_lock lock(impl_.mutex);
            return impl_.seen_keys.count(key) != 0;
        }

    private:
        Impl& impl_;
    };
    Seen seen{*this};

    NoticeRecord& at(std::size_t i) { return records[i]; }

    Timestamp transition_time(const CountyFips& scope, Timestamp wanted) const {
        auto it = last_transition.find(scope);
        return it == last_transition.end() ? wanted : std::max(wanted, it->second);
    }

    void activate(std::size_t idx, Timestamp t) {
        auto& r = records[idx];
        r.status = NoticeStatus::Active;
        r.activated_at = t;
        r.deactivated_at.reset();
        active_by_scope[r.scope_key] = idx;
        last_transition[r.scope_key] = t;
    }

    void deactivate(std::size_t idx, NoticeStatus status, Timestamp t) {
        auto& r = records[idx];
        r.status = status;
        r.deactivated_at = t;
        active_by_scope.erase(r.scope_key);
        last_transition[r.scope_key] = t;
    }

    static bool outranks(const NoticeRecord& incoming, const NoticeRecord& current) {
        if (incoming.label == NoticeLabel::Mandatory && current.label == NoticeLabel::Voluntary) return true;
        if (incoming.label == NoticeLabel::Voluntary && current.label == NoticeLabel::Mandatory) return false;
        return incoming.observed_at > current.observed_at;
    }

    /// Places record `idx` (label Mandatory or Voluntary, not Active) into its
    /// scope's lifecycle. Returns the superseded record id, if any.
    std::optional<std::string> contend(std::size_t idx, Timestamp wanted, UpsertOutcome::Kind* kind) {
        auto& rec = records[idx];
        const Timestamp t = transition_time(rec.scope_key, wanted);
        auto cur = active_by_scope.find(rec.scope_key);
        if (cur == active_by_scope.end()) {
            activate(idx, t);
            *kind = UpsertOutcome::Kind::Created;
            return std::nullopt;
        }
        const std::size_t cur_idx = cur->second;
        if (outranks(rec, records[cur_idx])) {
            deactivate(cur_idx, NoticeStatus::Superseded, t);
            rec.supersedes = records[cur_idx].id;
            activate(idx, t);
            *kind = UpsertOutcome::Kind::Created;
            return records[cur_idx].id;
        }
        rec.status = NoticeStatus::Closed;
        *kind = UpsertOutcome::Kind::ClosedOnArrival;
        diagnostics.add("ClosedOnArrival", rec.id + " (" + std::string(to_string(rec.label)) + ") yields to active " +
                                               records[cur_idx].id + " (" +
                                               std::string(to_string(records[cur_idx].label)) + ") for " +
                                               rec.scope_key.str());
        return std::nullopt;
    }

    UpsertOutcome apply_upsert(const CandidateText& c, const LabelDistribution& dist) {
        char id[32];
        std::snprintf(id, sizeof id, "N%06zu", records.size() + 1);
        NoticeRecord rec;
        rec.id = id;
        rec.scope_key = c.post.fips;
        rec.distribution = dist;
        rec.label = decide(dist);
        rec.text = c.normalized_text;
        rec.source_url = c.post.source_url;
        rec.channel_kind = c.post.channel_kind;
        rec.observed_at = c.post.published_at.value_or(c.post.fetched_at);

        const std::size_t idx = records.size();
        records.push_back(rec);
        by_id[rec.id] = idx;

        UpsertOutcome outcome;
        if (rec.label == NoticeLabel::NotNotice) {
            records[idx].status = NoticeStatus::Rejected;
            outcome.kind = UpsertOutcome::Kind::Dropped;
        } else {
            outcome.superseded_id = contend(idx, records[idx].observed_at, &outcome.kind);
        }
        outcome.record = records[idx];
        return outcome;
    }

    NoticeRecord apply_feedback(const FeedbackEntry& e) {
        const std::size_t idx = by_id.at(e.notice_id);
        audit.push_back({audit.size() + 1, e});
        auto& rec = records[idx];
        switch (e.action) {
            case FeedbackAction::Confirm:
                rec.reviewed = true;
                break;
            case FeedbackAction::Reject:
                rec.reviewed = true;
                if (rec.status == NoticeStatus::Active)
                    deactivate(idx, NoticeStatus::Rejected, transition_time(rec.scope_key, e.at));
                else
                    rec.status = NoticeStatus::Rejected;
                break;
            case FeedbackAction::Correct: {
                const NoticeLabel label = *e.corrected_label;
                rec.reviewed = true;
                rec.label = label;
                if (rec.status == NoticeStatus::Active) {
                    if (label == NoticeLabel::NotNotice)
                        deactivate(idx, NoticeStatus::Closed, transition_time(rec.scope_key, e.at));
                } else if (label != NoticeLabel::NotNotice) {
                    if (!rec.activated_at) {
                        // Never published: enters the lifecycle now.
                        UpsertOutcome::Kind kind;
                        contend(idx, std::max(e.at, rec.observed_at), &kind);
                    } else if (rec.status == NoticeStatus::Rejected) {
                        rec.status = NoticeStatus::Closed;
                    }
                }
                break;
            }
        }
        return records[idx];
    }

    std::size_t apply_close_all(Timestamp at) {
        std::vector<std::size_t> open;
        for (const auto& [scope, idx] : active_by_scope) open.push_back(idx);
        for (auto idx : open) deactivate(idx, NoticeStatus::Closed, transition_time(records[idx].scope_key, at));
        return open.size();
    }

    void append_event(const std::string& kind, const json& payload) {
        if (db) db->run("INSERT INTO events(kind, payload) VALUES (?, ?)", {kind, payload.dump()});
    }

    template <typename F>
    auto transaction(F&& body) {
        if (!db) return body();
        db->exec("BEGIN IMMEDIATE");
        try {
            auto result = body();
            db->exec("COMMIT");
            return result;
        } catch (...) {
            db->exec("ROLLBACK");
            throw;
        }
    }

    NoticeRecord feedback_locked(const FeedbackEntry& entry) {
        if (!by_id.count(entry.notice_id)) throw Error(ErrorCode::UnknownNotice, entry.notice_id);
        if (entry.action == FeedbackAction::Correct && !entry.corrected_label)
            throw Error(ErrorCode::MalformedDocument, "correct requires a label");
        return transaction([&] {
            const json payload = to_json(entry);
            append_event("feedback", payload);
            if (db)
                db->run("INSERT INTO audit(notice_id, action, reviewer_id, at, payload) VALUES (?, ?, ?, ?, ?)",
                        {entry.notice_id, std::string(to_string(entry.action)), entry.reviewer_id,
                         format_rfc3339(entry.at), payload.dump()});
            return apply_feedback(entry);
        });
    }

    void replay() {
        for (const auto& row : db->query("SELECT kind, payload FROM events ORDER BY seq", 2)) {
            const json payload = json::parse(row[1]);
            const auto& kind = row[0];
            if (kind == "upsert") {
                const auto& d = payload.at("distribution");
                apply_upsert(candidate_from_json(payload.at("candidate")),
                             LabelDistribution::from(d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()));
            } else if (kind == "feedback") {
                apply_feedback(feedback_from_json(payload));
            } else if (kind == "close_all") {
                apply_close_all(parse_rfc3339(payload.at("at").get<std::string>()));
            } else {
                throw Error(ErrorCode::UnreadableStore, "unknown event kind '" + kind + "'");
            }
        }
        for (const auto& row : db->query("SELECT key FROM seen", 1)) seen_keys.insert(std::stoull(row[0]));
    }
};

NoticeStore::NoticeStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
NoticeStore::NoticeStore(NoticeStore&&) noexcept = default;
NoticeStore& NoticeStore::operator=(NoticeStore&&) noexcept = default;
NoticeStore::~NoticeStore() = default;

NoticeStore NoticeStore::in_memory() { return NoticeStore(std::make_unique<Impl>()); }

NoticeStore NoticeStore::open(const std::filesystem::path& path) {
    auto impl = std::make_unique<Impl>();
    impl->db = std::make_unique<Database>(path, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX);
    impl->db->exec(kSchema);
    try {
        impl->replay();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::UnreadableStore, path.string() + ": " + e.what());
    }
    return NoticeStore(std::move(impl));
}

NoticeStore NoticeStore::open_existing(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw Error(ErrorCode::UnreadableStore, "no store at " + path.string());
    try {
        auto impl = std::make_unique<Impl>();
        impl->db = std::make_unique<Database>(path, SQLITE_OPEN_READWRITE | SQLITE_OPEN_FULLMUTEX);
        impl->replay();
        return NoticeStore(std::move(impl));
    } catch (const std::exception& e) {
        throw Error(ErrorCode::UnreadableStore, path.string() + ": " + e.what());
    }
}

UpsertOutcome NoticeStore::upsert(const CandidateText& candidate, const LabelDistribution& dist) {
    std::unique_lock lock(impl_->mutex);
    return impl_->transaction([&] {
        impl_->append_event("upsert", json{{"candidate", candidate_json(candidate)}, {"distribution", distribution_json(dist)}});
        return impl_->apply_upsert(candidate, dist);
    });
}

NoticeRecord NoticeStore::record_feedback(const FeedbackEntry& entry) {
    std::unique_lock lock(impl_->mutex);
    return impl_->feedback_locked(entry);
}

bool NoticeStore::record_feedback_if_unreviewed(const FeedbackEntry& entry, NoticeRecord* current) {
    std::unique_lock lock(impl_->mutex);
    auto it = impl_->by_id.find(entry.notice_id);
    if (it != impl_->by_id.end() && impl_->records[it->second].reviewed) {
        if (current) *current = impl_->records[it->second];
        return false;
    }
    const auto updated = impl_->feedback_locked(entry);
    if (current) *current = updated;
    return true;
}

std::size_t NoticeStore::close_all(Timestamp at) {
    std::unique_lock lock(impl_->mutex);
    return impl_->transaction([&] {
        impl_->append_event("close_all", json{{"at", format_rfc3339(at)}});
        return impl_->apply_close_all(at);
    });
}

std::vector<NoticeRecord> NoticeStore::active(Timestamp at) const {
    std::shared_lock lock(impl_->mutex);
    std::vector<NoticeRecord> out;
    for (const auto& r : impl_->records)
        if (r.active_at(at)) out.push_back(r);
    std::sort(out.begin(), out.end(), [](const NoticeRecord& a, const NoticeRecord& b) {
        return std::tie(a.scope_key, a.id) < std::tie(b.scope_key, b.id);
    });
    return out;
}

std::vector<NoticeRecord> NoticeStore::records() const {
    std::shared_lock lock(impl_->mutex);
    return impl_->records;
}

std::optional<NoticeRecord> NoticeStore::get(const std::string& id) const {
    std::shared_lock lock(impl_->mutex);
    auto it = impl_->by_id.find(id);
    if (it == impl_->by_id.end()) return std::nullopt;
    return impl_->records[it->second];
}

std::vector<std::string> NoticeStore::chain(const std::string& id) const {
    std::shared_lock lock(impl_->mutex);
    std::vector<std::string> out;
    std::set<std::string> visited;
    std::optional<std::string> cursor = id;
    while (cursor && impl_->by_id.count(*cursor) && visited.insert(*cursor).second) {
        out.push_back(*cursor);
        cursor = impl_->records[impl_->by_id.at(*cursor)].supersedes;
    }
    return out;
}

std::vector<AuditEntry> NoticeStore::audit_log() const {
    std::shared_lock lock(impl_->mutex);
    return impl_->audit;
}

std::vector<NoticeRecord> NoticeStore::review_queue(std::size_t limit) const {
    std::shared_lock lock(impl_->mutex);
    std::vector<NoticeRecord> out;
    for (const auto& r : impl_->records)
        if (!r.reviewed) out.push_back(r);
    std::stable_sort(out.begin(), out.end(), [](const NoticeRecord& a, const NoticeRecord& b) {
        return a.distribution.max_component() < b.distribution.max_component();
    });
    if (out.size() > limit) out.resize(limit);
    return out;
}

std::vector<LabeledExample> NoticeStore::export_labeled() const {
    std::shared_lock lock(impl_->mutex);
    std::vector<LabeledExample> out;
    for (const auto& r : impl_->records) {
        if (!r.reviewed) continue;
        out.push_back(LabeledExample{
            .text = r.text,
            .gold = r.status == NoticeStatus::Rejected ? NoticeLabel::NotNotice : r.label,
            .origin = origin_for(r.channel_kind),
            .year = utc_year(r.observed_at),
            .scope = r.scope_key,
        });
    }
    return out;
}

namespace {

std::string group_key(const NoticeRecord& r, GroupBy by) {
    switch (by) {
        case GroupBy::Year: return std::to_string(utc_year(r.observed_at));
        case GroupBy::State: return state_abbreviation(r.scope_key.state_prefix());
        case GroupBy::Label: return std::string(to_string(r.label));
    }
    return {};
}

}  // namespace

std::vector<CountRow> NoticeStore::archive_stats(GroupBy by) const {
    std::shared_lock lock(impl_->mutex);
    std::map<std::string, std::size_t> counts;
    for (const auto& r : impl_->records)
        if (r.status != NoticeStatus::Rejected) ++counts[group_key(r, by)];
    std::vector<CountRow> out;
    for (const auto& [key, n] : counts) out.push_back({key, n});
    return out;
}

std::vector<CrossTabRow> NoticeStore::archive_crosstab(GroupBy by) const {
    std::shared_lock lock(impl_->mutex);
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (const auto& r : impl_->records)
        if (r.status != NoticeStatus::Rejected) ++counts[{group_key(r, by), std::string(to_string(r.label))}];
    std::vector<CrossTabRow> out;
    for (const auto& [key, n] : counts) out.push_back({key.first, key.second, n});
    return out;
}

SeenStore& NoticeStore::seen() { return impl_->seen; }
Diagnostics& NoticeStore::diagnostics() { return impl_->diagnostics; }

json geojson_feed(const NoticeStore& store, const GeometryIndex& geometry, Timestamp at, Diagnostics* diagnostics) {
    json features = json::array();
    for (const auto& r : store.active(at)) {
        json geom = geometry.geometry_for(r.scope_key);
        if (geom.is_null() && diagnostics) diagnostics->add("MissingGeometry", r.id + " scope " + r.scope_key.str());
        features.push_back({{"type", "Feature"},
                            {"id", r.id},
                            {"geometry", geom},
                            {"properties",
                             {{"id", r.id},
                              {"fips", r.scope_key.str()},
                              {"label", std::string(to_string(r.label))},
                              {"text", r.text},
                              {"source_url", r.source_url},
                              {"observed_at", format_rfc3339(r.observed_at)},
                              {"reviewed", r.reviewed},
                              {"supersedes", r.supersedes ? json(*r.supersedes) : json(nullptr)}}}});
    }
    return json{{"type", "FeatureCollection"}, {"features", features}};
}

std::vector<NoticeRecord> lookup_point(const NoticeStore& store, const GeometryIndex& geometry, double lon, double lat,
                                       Timestamp at) {
    std::vector<NoticeRecord> out;
    for (auto& r : store.active(at))
        if (geometry.scope_contains(r.scope_key, {lon, lat})) out.push_back(std::move(r));
    return out;
}

}  // namespace evacnet
