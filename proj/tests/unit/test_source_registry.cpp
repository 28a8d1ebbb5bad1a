#include <sstream>

#include "doctest.h"

#include "check_error.hpp"
#include "evacnet/csv.hpp"
#include "evacnet/source_registry.hpp"

using namespace evacnet;

namespace {

const char* kHeader = "fips,county_name,state,gov_website,em_website,microblog_handle,social_page\n";

Registry parse(const std::string& text) {
    std::istringstream in(text);
    return Registry::parse(in);
}

TargetSet targets(std::initializer_list<const char*> codes) {
    TargetSet t;
    for (const char* c : codes) t.counties.insert(CountyFips::parse(c));
    return t;
}

}  // namespace

TEST_CASE("four-channel row loads with every channel") {
    const auto reg = parse(std::string(kHeader) +
                           "12086,Miami-Dade,FL,https://miamidade.gov,https://miamidade.gov/em,@MiamiDadeEM,"
                           "miamidadecounty\n");
    const auto* row = reg.find(CountyFips::parse("12086"));
    REQUIRE(row != nullptr);
    CHECK(row->county_name == "Miami-Dade");
    CHECK(row->state == "FL");
    CHECK(row->gov_website == "https://miamidade.gov");
    CHECK(row->em_website == "https://miamidade.gov/em");
    CHECK(row->microblog_handle == "@MiamiDadeEM");
    CHECK(row->social_page == "miamidadecounty");
    CHECK(row->channel_count() == 4);
}

TEST_CASE("registry errors") {
    CHECK_ERROR_CODE(parse(std::string(kHeader) + "12086,A,FL,https://a,,,\n12086,B,FL,https://b,,,\n"),
                     ErrorCode::DuplicateFips);
    CHECK_ERROR_CODE(parse("fips,county_name,state,gov_website,em_website,microblog_handle\n12086,A,FL,x,,\n"),
                     ErrorCode::MissingRequiredColumn);
    CHECK_ERROR_CODE(parse(kHeader), ErrorCode::EmptyRegistry);
    CHECK_ERROR_CODE(parse(""), ErrorCode::EmptyRegistry);
    CHECK_ERROR_CODE(parse(std::string(kHeader) + "12086,A,FL,,, ,\n"), ErrorCode::AtLeastOneChannel);
    CHECK_ERROR_CODE(parse(std::string(kHeader) + "1208,A,FL,https://a,,,\n"), ErrorCode::MalformedRow);
    CHECK_ERROR_CODE(parse(std::string(kHeader) + "12086,A,fl,https://a,,,\n"), ErrorCode::MalformedRow);
}

TEST_CASE("quoted cells, extra columns and column order") {
    const auto reg = parse(
        "state,fips,county_name,notes,gov_website,em_website,microblog_handle,social_page\r\n"
        "LA,22057,\"Lafourche, Parish\",\"said \"\"hi\"\"\",https://lafourchegov.org,,,\r\n"
        "FL,12000,Florida,,https://floridadisaster.org,,@FLSERT,\r\n");
    const auto* row = reg.find(CountyFips::parse("22057"));
    REQUIRE(row != nullptr);
    CHECK(row->county_name == "Lafourche, Parish");
    CHECK(row->extra.at("notes") == "said \"hi\"");
    CHECK(row->channel_count() == 1);
    CHECK(reg.find(CountyFips::parse("12000"))->microblog_handle == "@FLSERT");
}

TEST_CASE("fetch_targets yields one target per present channel") {
    const auto reg = parse(std::string(kHeader) +
                           "12086,Miami-Dade,FL,https://miamidade.gov,https://miamidade.gov/em,@MiamiDadeEM,mdc\n"
                           "12011,Broward,FL,https://broward.org,,@BrowardEOC,\n");
    auto plan = fetch_targets(reg, targets({"12086"}));
    REQUIRE(plan.targets.size() == 4);
    CHECK(plan.targets[0].channel_kind == ChannelKind::GovSite);
    CHECK(plan.targets[3].channel_kind == ChannelKind::SocialPage);
    CHECK(plan.targets[2].locator == "@MiamiDadeEM");
    CHECK(plan.missing_counties.empty());

    plan = fetch_targets(reg, targets({"99999"}));
    CHECK(plan.targets.empty());
    REQUIRE(plan.missing_counties.size() == 1);
    CHECK(plan.missing_counties[0].str() == "99999");

    CHECK(fetch_targets(reg, TargetSet{}).targets.empty());

    // |targets| equals the summed channel counts of matched counties.
    plan = fetch_targets(reg, targets({"12086", "12011", "99999"}));
    CHECK(plan.targets.size() == 4 + 2);
    CHECK(std::is_sorted(plan.targets.begin(), plan.targets.end()));
}

TEST_CASE("reloading unchanged text gives an identical registry") {
    const std::string text = std::string(kHeader) + "12086,Miami-Dade,FL,https://miamidade.gov,,,\n";
    CHECK(parse(text) == parse(text));
}

TEST_CASE("registry handle swaps atomically") {
    RegistryHandle handle(parse(std::string(kHeader) + "12086,A,FL,https://a,,,\n"));
    const auto before = handle.get();
    handle.replace(parse(std::string(kHeader) + "12011,B,FL,https://b,,,\n"));
    CHECK(before->find(CountyFips::parse("12086")) != nullptr);
    CHECK(handle.get()->find(CountyFips::parse("12011")) != nullptr);
    CHECK(handle.get()->find(CountyFips::parse("12086")) == nullptr);
}

TEST_CASE("channel kind spellings") {
    CHECK(parse_channel_kind("gov_website") == ChannelKind::GovSite);
    CHECK(parse_channel_kind("EmSite") == ChannelKind::EmSite);
    CHECK(parse_channel_kind("microblog") == ChannelKind::Microblog);
    CHECK(parse_channel_kind("social_page") == ChannelKind::SocialPage);
    CHECK_FALSE(parse_channel_kind("fax"));
}

TEST_CASE("csv reader") {
    std::istringstream in("\xEF\xBB\xBF" "a,b\n\n\"x\ny\",\"\"\"q\"\"\"\n1,\n");
    const auto rows = csv::read(in);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][0] == "a");
    CHECK(rows[1][0] == "x\ny");
    CHECK(rows[1][1] == "\"q\"");
    CHECK(rows[2] == csv::Row{"1", ""});

    std::istringstream bad("a,\"open\n");
    CHECK_ERROR_CODE(csv::read(bad), ErrorCode::MalformedRow);

    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("say \"x\"") == "\"say \"\"x\"\"\"");
}
