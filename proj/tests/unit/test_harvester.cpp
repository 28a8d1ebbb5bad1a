#include <chrono>
#include <random>

#include "doctest.h"

#include "appendix_a.hpp"
#include "check_error.hpp"
#include "evacnet/harvester.hpp"
#include "evacnet/url.hpp"
#include "stub_server.hpp"

using namespace evacnet;

namespace {

const CountyFips kMiami = CountyFips::parse("12086");
const CountyFips kBroward = CountyFips::parse("12011");
const CountyFips kPalm = CountyFips::parse("12099");

std::string_view case_text(int number) {
    for (const auto& c : fixtures::kAppendixCases)
        if (c.case_number == number) return c.text;
    return {};
}

Clock fixed_clock(const char* at) {
    const auto t = parse_rfc3339(at);
    return [t] { return t; };
}

// Throws for one locator, otherwise returns the same text per target.
class FlakyFetcher final : public Fetcher {
public:
    std::vector<FetchedItem> fetch(const FetchTarget& target) override {
        if (target.locator == "https://broken.example") throw std::runtime_error("connection reset");
        return {{std::nullopt, "Mandatory evacuation for zone A in " + target.fips.str(), ""}};
    }
};

}  // namespace

TEST_CASE("prefilter examples") {
    CHECK(keyword_prefilter(case_text(75), PrefilterMode::Any));
    CHECK_FALSE(keyword_prefilter(case_text(75), PrefilterMode::All));
    CHECK_FALSE(keyword_prefilter("Sandbag locations open at 9am", PrefilterMode::Any));
    CHECK_FALSE(keyword_prefilter("Sandbag locations open at 9am", PrefilterMode::All));
    CHECK(keyword_prefilter("Hurricane shelter list posted", PrefilterMode::Any));
    CHECK_FALSE(keyword_prefilter("Hurricane shelter list posted", PrefilterMode::All));
    for (const auto& c : fixtures::kAppendixCases) CHECK(keyword_prefilter(c.text, PrefilterMode::Any));
}

TEST_CASE("prefilter term families") {
    CHECK(keyword_prefilter("EVACUEES welcome", PrefilterMode::Any));
    CHECK(keyword_prefilter("an evacuee shelter", PrefilterMode::Any));
    CHECK(keyword_prefilter("Evacuating now", PrefilterMode::Any));
    CHECK(keyword_prefilter("#HurricaneDorian evacuation", PrefilterMode::All));
    CHECK(keyword_prefilter("hurricanes; evacuate", PrefilterMode::All));
    CHECK_FALSE(keyword_prefilter("nonevacuation zone", PrefilterMode::Any));
    CHECK_FALSE(keyword_prefilter("evacu", PrefilterMode::Any));
    CHECK_FALSE(keyword_prefilter("evacuees2", PrefilterMode::Any));
}

TEST_CASE("All implies Any over random texts") {
    const std::vector<std::string> words{"hurricane", "Hurricanes", "evacuate", "evacuation", "evacuee", "storm",
                                         "shelter",   "EVACUATED",  "zone",     "water",      "the",     "#hurricane"};
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        std::string text;
        const int n = static_cast<int>(rng() % 8);
        for (int w = 0; w < n; ++w) text += words[rng() % words.size()] + (rng() % 2 ? " " : ", ");
        if (keyword_prefilter(text, PrefilterMode::All)) CHECK(keyword_prefilter(text, PrefilterMode::Any));
    }
}

TEST_CASE("normalize") {
    CHECK(normalize("  Evacuate   now ") == "Evacuate now");
    CHECK(normalize("") == "");
    CHECK(normalize("a\r\nb\tc\n\n d") == "a b c d");
    CHECK(normalize(case_text(528)).find("... More Parish") != std::string::npos);
    // e + combining acute composes to U+00E9.
    CHECK(normalize("Caf\x65\xCC\x81 open") == "Caf\xC3\xA9 open");
    // Non-breaking space is not ASCII whitespace and is kept.
    CHECK(normalize("a\xC2\xA0 b") == "a\xC2\xA0 b");
}

TEST_CASE("normalize is idempotent over random byte mixes") {
    const std::vector<std::string> pieces{" ", "\t", "\r\n", "A", "e\xCC\x81", "\xC3\xA9", "...", "More", "\xE2\x80\x94",
                                          "  ", "x", "\n"};
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        std::string text;
        const int n = static_cast<int>(rng() % 12);
        for (int k = 0; k < n; ++k) text += pieces[rng() % pieces.size()];
        const auto once = normalize(text);
        CHECK(normalize(once) == once);
        CHECK(once.find("  ") == std::string::npos);
        if (!once.empty()) {
            CHECK(once.front() != ' ');
            CHECK(once.back() != ' ');
        }
    }
}

TEST_CASE("dedup key") {
    // Reference values: first 8 bytes (big-endian) of SHA-256 over fips, NUL, text.
    CHECK(dedup_key("Evacuate now", kMiami) == 1587625804395128939ULL);
    CHECK(dedup_key("Evacuate now", kBroward) == 13118774953281846849ULL);
    CHECK(dedup_key("Evacuate now", kMiami) == dedup_key("Evacuate now", kMiami));
    CHECK(dedup_key("Evacuate now", kMiami) != dedup_key("Evacuate now.", kMiami));
    CHECK(dedup_key("Mandatory evacuation for zone A", kMiami) !=
          dedup_key("Zone A is under a mandatory evacuation", kMiami));
}

TEST_CASE("harvest cycle: first pass yields, repeat is deduplicated") {
    const std::vector<FetchTarget> targets{{kMiami, ChannelKind::GovSite, "https://miamidade.gov"}};
    ScriptedFetcher fetcher;
    MemorySeenStore seen;
    fetcher.enqueue(kMiami, ChannelKind::GovSite, {std::nullopt, std::string(case_text(75)), ""});
    auto result = harvest_cycle(targets, fetcher, seen, {}, fixed_clock("2020-08-26T12:00:00Z"));
    REQUIRE(result.candidates.size() == 1);
    const auto& c = result.candidates[0];
    CHECK(c.post.fips == kMiami);
    CHECK(c.post.source_url == "https://miamidade.gov");
    CHECK(format_rfc3339(c.post.fetched_at) == "2020-08-26T12:00:00Z");
    CHECK(c.normalized_text == normalize(case_text(75)));
    CHECK(c.dedup_key == dedup_key(c.normalized_text, kMiami));

    fetcher.enqueue(kMiami, ChannelKind::GovSite, {std::nullopt, std::string(case_text(75)) + "  ", ""});
    result = harvest_cycle(targets, fetcher, seen, {}, fixed_clock("2020-08-26T12:02:00Z"));
    CHECK(result.candidates.empty());
    CHECK(result.duplicates == 1);
}

TEST_CASE("harvest cycle isolates a failing target") {
    const std::vector<FetchTarget> targets{{kMiami, ChannelKind::GovSite, "https://miamidade.gov"},
                                           {kBroward, ChannelKind::GovSite, "https://broken.example"},
                                           {kPalm, ChannelKind::GovSite, "https://pbc.gov"}};
    FlakyFetcher fetcher;
    MemorySeenStore seen;
    HarvestOptions options;
    options.parallelism = 3;
    const auto result = harvest_cycle(targets, fetcher, seen, options, fixed_clock("2020-08-26T12:00:00Z"));
    REQUIRE(result.candidates.size() == 2);
    CHECK(result.candidates[0].post.fips == kMiami);
    CHECK(result.candidates[1].post.fips == kPalm);
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].target.fips == kBroward);
    CHECK(result.failures[0].message.find("connection reset") != std::string::npos);
}

TEST_CASE("scripted failures and filtering counts") {
    ScriptedFetcher fetcher;
    fetcher.fail_next(kMiami, ChannelKind::Microblog, "rate limited");
    fetcher.enqueue(kMiami, ChannelKind::GovSite, {std::nullopt, "Sandbag locations open at 9am", ""});
    fetcher.enqueue(kMiami, ChannelKind::GovSite, {std::nullopt, "   ", ""});
    const std::vector<FetchTarget> targets{{kMiami, ChannelKind::GovSite, "https://miamidade.gov"},
                                           {kMiami, ChannelKind::Microblog, "@MiamiDadeEM"}};
    MemorySeenStore seen;
    const auto result = harvest_cycle(targets, fetcher, seen, {}, fixed_clock("2020-08-26T12:00:00Z"));
    CHECK(result.candidates.empty());
    CHECK(result.fetched == 2);
    CHECK(result.filtered_out == 2);
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].message.find("rate limited") != std::string::npos);
    CHECK(fetcher.pending() == 0);
}

TEST_CASE("emission order: target, then published_at with absent first, then fetch order") {
    ScriptedFetcher fetcher;
    auto t = [](const char* s) { return std::optional<Timestamp>(parse_rfc3339(s)); };
    fetcher.enqueue(kMiami, ChannelKind::GovSite, {t("2019-08-31T00:00:00Z"), "evacuation b", ""});
    fetcher.enqueue(kMiami, ChannelKind::GovSite, {std::nullopt, "evacuation a", ""});
    fetcher.enqueue(kMiami, ChannelKind::GovSite, {t("2019-08-30T00:00:00Z"), "evacuation c", ""});
    fetcher.enqueue(kMiami, ChannelKind::GovSite, {t("2019-08-30T00:00:00Z"), "evacuation d", ""});
    fetcher.enqueue(kBroward, ChannelKind::EmSite, {std::nullopt, "evacuation e", "https://b/e"});
    const std::vector<FetchTarget> targets{{kMiami, ChannelKind::GovSite, "https://m"},
                                           {kBroward, ChannelKind::EmSite, "https://b"}};
    MemorySeenStore seen;
    HarvestOptions options;
    options.parallelism = 8;
    const auto result = harvest_cycle(targets, fetcher, seen, options, fixed_clock("2019-09-01T00:00:00Z"));
    std::vector<std::string> order;
    for (const auto& c : result.candidates) order.push_back(c.normalized_text);
    CHECK(order == std::vector<std::string>{"evacuation e", "evacuation a", "evacuation c", "evacuation d",
                                            "evacuation b"});
    CHECK(result.candidates[0].post.source_url == "https://b/e");
}

TEST_CASE("parallel harvest matches sequential harvest") {
    std::vector<FetchTarget> targets;
    for (int i = 1; i <= 40; ++i) {
        char buf[6];
        std::snprintf(buf, sizeof buf, "12%03d", i);
        targets.push_back({CountyFips::parse(buf), ChannelKind::GovSite, std::string("https://c") + buf});
    }
    auto run = [&](std::size_t parallelism) {
        ScriptedFetcher fetcher;
        for (const auto& tg : targets)
            for (int k = 0; k < 3; ++k)
                fetcher.enqueue(tg.fips, tg.channel_kind, {std::nullopt, "evacuate item " + std::to_string(k), ""});
        MemorySeenStore seen;
        HarvestOptions options;
        options.parallelism = parallelism;
        std::vector<std::pair<std::string, DedupKey>> out;
        for (const auto& c : harvest_cycle(targets, fetcher, seen, options, fixed_clock("2019-09-01T00:00:00Z")).candidates)
            out.emplace_back(c.post.fips.str(), c.dedup_key);
        return out;
    };
    const auto sequential = run(1);
    CHECK(sequential.size() == 120);
    CHECK(run(8) == sequential);
}

TEST_CASE("politeness delay spaces requests to one host") {
    ScriptedFetcher fetcher;
    const std::vector<FetchTarget> targets{{kMiami, ChannelKind::GovSite, "https://same.example/a"},
                                           {kMiami, ChannelKind::EmSite, "https://same.example/b"},
                                           {kMiami, ChannelKind::SocialPage, "https://same.example/c"}};
    MemorySeenStore seen;
    HarvestOptions options;
    options.parallelism = 3;
    options.politeness_delay = std::chrono::milliseconds(60);
    const auto start = std::chrono::steady_clock::now();
    harvest_cycle(targets, fetcher, seen, options, fixed_clock("2019-09-01T00:00:00Z"));
    CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(120));
}

TEST_CASE("text block extraction") {
    const auto blocks = extract_text_blocks(
        "<html><head><title>EM</title><style>p{color:red}</style><script>var evacuate=1;</script></head>"
        "<body><!-- <p>hidden</p> --><h1>Hurricane&nbsp;Update</h1>"
        "<p>Mandatory <b>evacu</b>ation for zone&#160;A &amp; B.</p><ul><li>Shelter&#x3A; North High</li></ul>"
        "<noscript>enable js</noscript></body></html>");
    CHECK(blocks == std::vector<std::string>{"EM", "Hurricane Update", "Mandatory evacuation for zone\xC2\xA0" "A & B.",
                                             "Shelter: North High"});
}

TEST_CASE("HTTP page fetcher") {
    testing::StubServer server;
    server.get("/em", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<p>Voluntary evacuation for Zone B</p><p>Shelters open</p>", "text/html");
    });
    server.get("/gone", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });
    server.start();

    HttpPageFetcher fetcher(std::chrono::seconds(2));
    const auto items = fetcher.fetch({kMiami, ChannelKind::EmSite, server.url() + "/em"});
    REQUIRE(items.size() == 2);
    CHECK(items[0].text == "Voluntary evacuation for Zone B");
    CHECK(items[0].source_url == server.url() + "/em");
    CHECK_ERROR_CODE(fetcher.fetch({kMiami, ChannelKind::EmSite, server.url() + "/gone"}), ErrorCode::FetchFailed);
    CHECK_ERROR_CODE(fetcher.fetch({kMiami, ChannelKind::Microblog, "@MiamiDadeEM"}), ErrorCode::FetchFailed);
}

TEST_CASE("url parsing") {
    const auto u = parse_url("https://Example.org:8443/api/v1?x=1#frag");
    REQUIRE(u);
    CHECK(u->host == "Example.org");
    CHECK(u->port == 8443);
    CHECK(u->path == "/api/v1?x=1");
    CHECK(u->origin() == "https://Example.org:8443");
    CHECK(parse_url("http://h")->path_with("classify") == "/classify");
    CHECK(parse_url("http://h/base/")->path_with("/classify") == "/base/classify");
    CHECK_FALSE(parse_url("ftp://h/"));
    CHECK_FALSE(parse_url("@handle"));
    CHECK_FALSE(parse_url("http://:80/"));
    CHECK_FALSE(parse_url("http://h:99999/"));
}
