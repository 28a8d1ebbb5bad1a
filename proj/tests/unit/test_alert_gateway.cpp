#include <sstream>

#include "doctest.h"

#include "check_error.hpp"
#include "evacnet/alert_gateway.hpp"

using namespace evacnet;
using nlohmann::json;

namespace {

Timestamp at(const char* s) { return parse_rfc3339(s); }

json alert_doc(const std::string& id, const std::string& event, std::vector<std::string> same,
               const std::string& expires = "2019-09-04T00:00:00Z") {
    return json{{"id", id},
                {"event", event},
                {"sent", "2019-08-30T12:00:00Z"},
                {"effective", "2019-08-30T12:00:00Z"},
                {"expires", expires},
                {"senderName", "NWS Miami FL"},
                {"geocode", {{"SAME", same}, {"UGC", {"FLZ173"}}}}};
}

HazardAlert make(const std::string& id, EventType type, std::vector<std::string> same,
                 const char* expires = "2019-09-04T00:00:00Z") {
    HazardAlert a;
    a.alert_id = id;
    a.event_type = type;
    a.same_codes = std::move(same);
    a.sent_at = a.effective_at = at("2019-08-30T12:00:00Z");
    a.expires_at = at(expires);
    return a;
}

std::set<std::string> fips_strings(const std::set<CountyFips>& s) {
    std::set<std::string> out;
    for (const auto& f : s) out.insert(f.str());
    return out;
}

}  // namespace

TEST_CASE("ingest maps a hurricane warning and copies SAME codes verbatim") {
    const auto a = ingest_alert_document(alert_doc("urn:hw-1", "Hurricane Warning", {"012086"}));
    CHECK(a.alert_id == "urn:hw-1");
    CHECK(a.event_type == EventType::HurricaneWarning);
    CHECK(a.same_codes == std::vector<std::string>{"012086"});
    CHECK(a.sender == "NWS Miami FL");
    CHECK(a.ugc_codes == std::vector<std::string>{"FLZ173"});
    CHECK(format_rfc3339(a.expires_at) == "2019-09-04T00:00:00Z");
}

TEST_CASE("unknown event names map to Other") {
    CHECK(ingest_alert_document(alert_doc("f", "Flood Warning", {"012011"})).event_type == EventType::Other);
    CHECK(parse_event_type("hurricane WATCH") == EventType::HurricaneWatch);
    CHECK(parse_event_type("Tropical Cyclone Statement") == EventType::TropicalCycloneStatement);
    CHECK(parse_event_type("Hurricane Warning ") == EventType::Other);
    CHECK(parse_event_type("Extreme Wind Warning") == EventType::Other);
}

TEST_CASE("feature wrapper is unwrapped") {
    const json feature{{"type", "Feature"}, {"properties", alert_doc("w", "Tropical Storm Warning", {"012011"})}};
    CHECK(ingest_alert_document(feature).event_type == EventType::TropicalStormWarning);
}

TEST_CASE("geocode and field errors") {
    json doc = alert_doc("x", "Hurricane Warning", {"012086"});
    doc.erase("geocode");
    CHECK_ERROR_CODE(ingest_alert_document(doc), ErrorCode::MissingGeocode);

    doc["geocode"] = json::object();
    CHECK_ERROR_CODE(ingest_alert_document(doc), ErrorCode::MissingGeocode);

    json no_id = alert_doc("x", "Hurricane Warning", {"012086"});
    no_id.erase("id");
    CHECK_ERROR_CODE(ingest_alert_document(no_id), ErrorCode::MalformedDocument);

    CHECK_ERROR_CODE(ingest_alert_document(alert_doc("x", "Hurricane Warning", {"12086"})), ErrorCode::MalformedDocument);
    CHECK_ERROR_CODE(ingest_alert_document(alert_doc("x", "Hurricane Warning", {"012086"}, "2019-08-29T00:00:00Z")),
                     ErrorCode::MalformedDocument);
    CHECK_ERROR_CODE(ingest_alert_document(json::array()), ErrorCode::MalformedDocument);
}

TEST_CASE("same_to_fips") {
    CHECK(same_to_fips("012086").str() == "12086");
    CHECK_ERROR_CODE(same_to_fips("12086"), ErrorCode::BadLength);
    CHECK_ERROR_CODE(same_to_fips("0A2086"), ErrorCode::NonDigit);
    CHECK_ERROR_CODE(same_to_fips("112086"), ErrorCode::BadPrefix);
}

TEST_CASE("prepending a zero then same_to_fips is the identity") {
    for (int i = 0; i < 100000; i += 7) {
        char buf[6];
        std::snprintf(buf, sizeof buf, "%05d", i);
        CHECK(same_to_fips(std::string("0") + buf).str() == buf);
    }
}

TEST_CASE("CountyFips validation and state keys") {
    CHECK_ERROR_CODE(CountyFips::parse("1208"), ErrorCode::BadLength);
    CHECK_ERROR_CODE(CountyFips::parse("12o86"), ErrorCode::NonDigit);
    CHECK(CountyFips::parse("12000").is_state_key());
    CHECK_FALSE(CountyFips::parse("12086").is_state_key());
    CHECK(CountyFips::parse("12086").state_prefix() == "12");
}

TEST_CASE("compute_targets keeps only relevant unexpired alerts") {
    const Timestamp now = at("2019-08-31T00:00:00Z");
    std::vector<HazardAlert> alerts{make("hw", EventType::HurricaneWarning, {"012086"}),
                                    make("flood", EventType::Other, {"012011"})};
    auto t = compute_targets(alerts, now);
    CHECK(fips_strings(t.counties) == std::set<std::string>{"12086"});
    CHECK(t.contributing_alert_ids == std::set<std::string>{"hw"});
    CHECK(t.computed_at == now);

    CHECK(compute_targets({}, now).counties.empty());

    std::vector<HazardAlert> twice{make("a", EventType::HurricaneWarning, {"012086"}),
                                   make("b", EventType::HurricaneWatch, {"012086"})};
    t = compute_targets(twice, now);
    CHECK(t.counties.size() == 1);
    CHECK(t.contributing_alert_ids == std::set<std::string>{"a", "b"});
}

TEST_CASE("expiry is checked against the compute time, strictly") {
    std::vector<HazardAlert> alerts{make("hw", EventType::HurricaneWarning, {"012086"}, "2019-09-01T00:00:00Z")};
    CHECK(compute_targets(alerts, at("2019-08-31T23:59:59Z")).counties.size() == 1);
    CHECK(compute_targets(alerts, at("2019-09-01T00:00:00Z")).counties.empty());
}

TEST_CASE("statement-only counties are flagged, zone-only alerts counted") {
    auto zone_only = make("z", EventType::HurricaneWarning, {});
    zone_only.ugc_codes = {"FLZ173"};
    std::vector<HazardAlert> alerts{make("tcs", EventType::TropicalCycloneStatement, {"012011", "012086"}),
                                    make("hw", EventType::HurricaneWarning, {"012086"}), zone_only};
    const auto t = compute_targets(alerts, at("2019-08-31T00:00:00Z"));
    CHECK(fips_strings(t.counties) == std::set<std::string>{"12011", "12086"});
    CHECK(fips_strings(t.statement_only_counties) == std::set<std::string>{"12011"});
    CHECK(t.zone_only_skipped == 1);
    CHECK_FALSE(t.contributing_alert_ids.count("z"));
}

TEST_CASE("compute_targets is order independent and idempotent") {
    std::vector<HazardAlert> alerts{make("a", EventType::HurricaneWarning, {"012086", "012087"}),
                                    make("b", EventType::TropicalStormWatch, {"012011"}),
                                    make("c", EventType::Other, {"012099"}),
                                    make("d", EventType::HurricaneWatch, {"013001"}, "2019-08-30T13:00:00Z")};
    const Timestamp now = at("2019-08-31T00:00:00Z");
    const auto first = compute_targets(alerts, now);
    std::reverse(alerts.begin(), alerts.end());
    const auto second = compute_targets(alerts, now);
    CHECK(first.counties == second.counties);
    CHECK(first.contributing_alert_ids == second.contributing_alert_ids);
    CHECK(fips_strings(first.counties) == std::set<std::string>{"12011", "12086", "12087"});
}

TEST_CASE("NDJSON stream skips blank lines and reports rejects by line") {
    std::stringstream in;
    in << alert_doc("a", "Hurricane Warning", {"012086"}).dump() << "\n\n"
       << "{not json\n"
       << json{{"id", "b"}, {"event", "Hurricane Watch"}}.dump() << "\n"
       << alert_doc("c", "Hurricane Watch", {"012011"}).dump() << "\n";
    std::vector<std::string> rejects;
    const auto alerts = read_alert_stream(in, &rejects);
    REQUIRE(alerts.size() == 2);
    CHECK(alerts[1].alert_id == "c");
    REQUIRE(rejects.size() == 2);
    CHECK(rejects[0].rfind("line 3", 0) == 0);
    CHECK(rejects[1].rfind("line 4", 0) == 0);
}

TEST_CASE("feed collections ingest each feature") {
    const json feed{{"type", "FeatureCollection"},
                    {"features",
                     {json{{"properties", alert_doc("a", "Hurricane Warning", {"012086"})}},
                      json{{"properties", {{"id", "broken"}}}}}}};
    std::vector<std::string> rejects;
    CHECK(ingest_alert_feed(feed, &rejects).size() == 1);
    CHECK(rejects.size() == 1);
}

TEST_CASE("alert buffer is last-write-wins per id") {
    AlertBuffer buffer;
    buffer.ingest(make("a", EventType::HurricaneWatch, {"012086"}));
    buffer.ingest(make("b", EventType::HurricaneWatch, {"012011"}));
    buffer.ingest(make("a", EventType::HurricaneWarning, {"012086"}));
    const auto snap = buffer.snapshot();
    REQUIRE(snap.size() == 2);
    CHECK(snap[0].event_type == EventType::HurricaneWarning);
}

TEST_CASE("RFC 3339 parsing") {
    CHECK(format_rfc3339(at("2019-08-30T08:00:00-04:00")) == "2019-08-30T12:00:00Z");
    CHECK(format_rfc3339(at("2019-08-30T12:00:00.750Z")) == "2019-08-30T12:00:00Z");
    CHECK(format_rfc3339(at("2020-02-29T23:59:59+00:00")) == "2020-02-29T23:59:59Z");
    CHECK(format_rfc3339(at("2019-08-30 12:00:00Z")) == "2019-08-30T12:00:00Z");
    CHECK(utc_year(at("2019-12-31T23:30:00-02:00")) == 2020);
    CHECK_ERROR_CODE(parse_rfc3339("2019/08/30T12:00:00Z"), ErrorCode::MalformedTimestamp);
    CHECK_ERROR_CODE(parse_rfc3339("2019-02-30T12:00:00Z"), ErrorCode::MalformedTimestamp);
    CHECK_ERROR_CODE(parse_rfc3339("2019-08-30T12:00:00"), ErrorCode::MalformedTimestamp);
}
