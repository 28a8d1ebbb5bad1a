#include "evacnet/alert_gateway.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "evacnet/error.hpp"

namespace evacnet {

using nlohmann::json;

namespace {

bool all_digits(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; };
        if (lower(a[i]) != lower(b[i])) return false;
    }
    return true;
}

const json& require(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        throw Error(ErrorCode::MalformedDocument, std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key) {
    const json& v = require(obj, key);
    if (!v.is_string()) throw Error(ErrorCode::MalformedDocument, std::string("field '") + key + "' is not a string");
    return v.get<std::string>();
}

Timestamp require_time(const json& obj, const char* key) {
    const std::string text = require_string(obj, key);
    try {
        return parse_rfc3339(text);
    } catch (const Error&) {
        throw Error(ErrorCode::MalformedDocument, std::string("field '") + key + "' is not RFC 3339: " + text);
    }
}

std::vector<std::string> string_array(const json& v, const char* what) {
    if (!v.is_array()) throw Error(ErrorCode::MalformedDocument, std::string(what) + " is not an array");
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_string()) throw Error(ErrorCode::MalformedDocument, std::string(what) + " holds a non-string");
        out.push_back(e.get<std::string>());
    }
    return out;
}

}  // namespace

CountyFips CountyFips::parse(std::string_view code) {
    if (code.size() != 5) throw Error(ErrorCode::BadLength, "FIPS must have 5 digits: '" + std::string(code) + "'");
    if (!all_digits(code)) throw Error(ErrorCode::NonDigit, "FIPS must be decimal: '" + std::string(code) + "'");
    return CountyFips(std::string(code));
}

std::ostream& operator<<(std::ostream& os, const CountyFips& fips) { return os << fips.str(); }

std::string_view to_string(EventType type) {
    switch (type) {
        case EventType::HurricaneWarning: return "Hurricane Warning";
        case EventType::HurricaneWatch: return "Hurricane Watch";
        case EventType::TropicalStormWarning: return "Tropical Storm Warning";
        case EventType::TropicalStormWatch: return "Tropical Storm Watch";
        case EventType::TropicalCycloneStatement: return "Tropical Cyclone Statement";
        case EventType::Other: return "Other";
    }
    return "Other";
}

EventType parse_event_type(std::string_view name) {
    for (auto t : {EventType::HurricaneWarning, EventType::HurricaneWatch, EventType::TropicalStormWarning,
                   EventType::TropicalStormWatch, EventType::TropicalCycloneStatement}) {
        if (iequals(name, to_string(t))) return t;
    }
    return EventType::Other;
}

CountyFips same_to_fips(std::string_view same) {
    if (same.size() != 6) throw Error(ErrorCode::BadLength, "SAME code must have 6 digits: '" + std::string(same) + "'");
    if (!all_digits(same)) throw Error(ErrorCode::NonDigit, "SAME code must be decimal: '" + std::string(same) + "'");
    if (same.front() != '0') throw Error(ErrorCode::BadPrefix, "SAME code must start with 0: '" + std::string(same) + "'");
    return CountyFips::parse(same.substr(1));
}

HazardAlert ingest_alert_document(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "alert document is not an object");
    const json& body = (doc.contains("properties") && doc["properties"].is_object()) ? doc["properties"] : doc;

    HazardAlert alert;
    alert.alert_id = require_string(body, "id");
    if (alert.alert_id.empty()) throw Error(ErrorCode::MalformedDocument, "empty alert id");
    alert.event_type = parse_event_type(require_string(body, "event"));
    alert.sent_at = require_time(body, "sent");
    alert.effective_at = require_time(body, "effective");
    alert.expires_at = require_time(body, "expires");
    if (alert.expires_at < alert.effective_at)
        throw Error(ErrorCode::MalformedDocument, "expires precedes effective for " + alert.alert_id);
    if (auto it = body.find("senderName"); it != body.end() && it->is_string()) alert.sender = it->get<std::string>();

    auto geo = body.find("geocode");
    if (geo == body.end() || !geo->is_object())
        throw Error(ErrorCode::MissingGeocode, "alert " + alert.alert_id + " has no geocode block");
    if (auto it = geo->find("SAME"); it != geo->end() && !it->is_null()) {
        alert.same_codes = string_array(*it, "geocode.SAME");
        for (const auto& code : alert.same_codes) {
            try {
                same_to_fips(code);
            } catch (const Error& e) {
                throw Error(ErrorCode::MalformedDocument, "alert " + alert.alert_id + ": " + e.what());
            }
        }
    }
    if (auto it = geo->find("UGC"); it != geo->end() && !it->is_null()) alert.ugc_codes = string_array(*it, "geocode.UGC");
    if (alert.same_codes.empty() && alert.ugc_codes.empty())
        throw Error(ErrorCode::MissingGeocode, "alert " + alert.alert_id + " has an empty geocode block");
    return alert;
}

std::vector<HazardAlert> ingest_alert_feed(const json& feed, std::vector<std::string>* rejects) {
    std::vector<HazardAlert> out;
    auto ingest_one = [&](const json& doc, std::size_t index) {
        try {
            out.push_back(ingest_alert_document(doc));
        } catch (const Error& e) {
            if (rejects) rejects->push_back("#" + std::to_string(index) + ": " + e.what());
        }
    };
    if (feed.is_object() && feed.contains("features") && feed["features"].is_array()) {
        std::size_t i = 0;
        for (const auto& f : feed["features"]) ingest_one(f, i++);
    } else {
        ingest_one(feed, 0);
    }
    return out;
}

std::vector<HazardAlert> read_alert_stream(std::istream& in, std::vector<std::string>* rejects) {
    std::vector<HazardAlert> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(ingest_alert_document(json::parse(line)));
        } catch (const json::exception& e) {
            if (rejects) rejects->push_back("line " + std::to_string(line_no) + ": MalformedDocument: " + e.what());
        } catch (const Error& e) {
            if (rejects) rejects->push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

TargetSet compute_targets(std::span<const HazardAlert> alerts, Timestamp now) {
    TargetSet targets;
    targets.computed_at = now;
    std::set<CountyFips> via_watch_or_warning;
    std::set<CountyFips> via_statement;
    std::set<std::string> zone_only_ids;
    for (const auto& alert : alerts) {
        if (!is_relevant(alert.event_type) || alert.expires_at <= now) continue;
        if (alert.same_codes.empty()) {
            zone_only_ids.insert(alert.alert_id);
            continue;
        }
        targets.contributing_alert_ids.insert(alert.alert_id);
        auto& bucket = alert.event_type == EventType::TropicalCycloneStatement ? via_statement : via_watch_or_warning;
        for (const auto& code : alert.same_codes) {
            const auto fips = same_to_fips(code);
            bucket.insert(fips);
            targets.counties.insert(fips);
        }
    }
    std::set_difference(via_statement.begin(), via_statement.end(), via_watch_or_warning.begin(),
                        via_watch_or_warning.end(),
                        std::inserter(targets.statement_only_counties, targets.statement_only_counties.end()));
    targets.zone_only_skipped = zone_only_ids.size();
    return targets;
}

void AlertBuffer::ingest(HazardAlert alert) {
    std::lock_guard lock(mutex_);
    auto it = std::find_if(alerts_.begin(), alerts_.end(),
                           [&](const HazardAlert& a) { return a.alert_id == alert.alert_id; });
    if (it != alerts_.end())
        *it = std::move(alert);
    else
        alerts_.push_back(std::move(alert));
}

std::vector<HazardAlert> AlertBuffer::snapshot() const {
    std::lock_guard lock(mutex_);
    return alerts_;
}

std::size_t AlertBuffer::size() const {
    std::lock_guard lock(mutex_);
    return alerts_.size();
}

}  // namespace evacnet
