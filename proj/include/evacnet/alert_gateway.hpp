#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "evacnet/time.hpp"

namespace evacnet {

/// Five-digit county FIPS code (2-digit state + 3-digit county). State-level
/// issuers use the `SS000` form.
class CountyFips {
public:
    /// Throws Error(BadLength | NonDigit).
    static CountyFips parse(std::string_view code);

    const std::string& str() const noexcept { return code_; }
    std::string_view state_prefix() const noexcept { return std::string_view(code_).substr(0, 2); }
    bool is_state_key() const noexcept { return code_.compare(2, 3, "000") == 0; }

    auto operator<=>(const CountyFips&) const = default;

private:
    explicit CountyFips(std::string code) : code_(std::move(code)) {}
    std::string code_;
};

std::ostream& operator<<(std::ostream& os, const CountyFips& fips);

enum class EventType {
    HurricaneWarning,
    HurricaneWatch,
    TropicalStormWarning,
    TropicalStormWatch,
    TropicalCycloneStatement,
    Other,
};

std::string_view to_string(EventType type);

/// Exact case-insensitive match against the five tropical-cyclone event names.
EventType parse_event_type(std::string_view event_name);

inline bool is_relevant(EventType type) { return type != EventType::Other; }

struct HazardAlert {
    std::string alert_id;
    EventType event_type = EventType::Other;
    std::vector<std::string> same_codes;
    Timestamp sent_at;
    Timestamp effective_at;
    Timestamp expires_at;
    std::string sender;
    // Zone (UGC) codes only carried for diagnostics; targeting never reads them.
    std::vector<std::string> ugc_codes;
};

/// Throws Error(BadLength | NonDigit | BadPrefix).
CountyFips same_to_fips(std::string_view same);

/// Accepts a bare alert document or a GeoJSON-style feature whose
/// `properties` object carries the alert fields.
/// Throws Error(MissingGeocode | MalformedDocument).
HazardAlert ingest_alert_document(const nlohmann::json& doc);

/// Newline-delimited documents; blank lines skipped. Documents that fail to
/// ingest are reported through `rejects` (line number + reason) and skipped.
std::vector<HazardAlert> read_alert_stream(std::istream& in,
                                           std::vector<std::string>* rejects = nullptr);

/// A live feed payload: a FeatureCollection (`features` array) or one document.
std::vector<HazardAlert> ingest_alert_feed(const nlohmann::json& feed,
                                           std::vector<std::string>* rejects = nullptr);

struct TargetSet {
    std::set<CountyFips> counties;
    Timestamp computed_at;
    std::set<std::string> contributing_alert_ids;
    // Counties reached only through Tropical Cyclone Statements.
    std::set<CountyFips> statement_only_counties;
    // Relevant unexpired alerts that carried zone codes but no SAME codes.
    std::size_t zone_only_skipped = 0;
};

TargetSet compute_targets(std::span<const HazardAlert> alerts, Timestamp now);

/// Append-only alert buffer shared by pollers; last write wins per alert id.
class AlertBuffer {
public:
    void ingest(HazardAlert alert);
    std::vector<HazardAlert> snapshot() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<HazardAlert> alerts_;
};

}  // namespace evacnet
