#include "doctest.h"

#include "check_error.hpp"

#include "evacnet/geo.hpp"

using namespace evacnet;
using nlohmann::json;

namespace {

// Fixture layout (degrees): Miami-Dade 12086 is the square
// lon [-80.5, -80.0] x lat [25.5, 26.0]; Collier 12021 shares its west edge
// and Broward 12011 its north edge. Volusia 12127 has a square hole, Monroe
// 12087 is two disjoint squares. Georgia has 13051 and 13127.
const GeometryIndex& fixture() {
    static const GeometryIndex index = GeometryIndex::load(std::string(EVACNET_TEST_DATA) + "/geometry.geojson");
    return index;
}

CountyFips fips(const char* s) { return CountyFips::parse(s); }

Ring square(double w, double s, double e, double n) { return {{w, s}, {e, s}, {e, n}, {w, n}, {w, s}}; }

json feature(const std::string& code, json geometry) {
    return json{{"type", "Feature"}, {"properties", {{"fips", code}}}, {"geometry", std::move(geometry)}};
}

json collection(json features) { return json{{"type", "FeatureCollection"}, {"features", std::move(features)}}; }

}  // namespace

TEST_CASE("fixture loads every county") {
    CHECK(fixture().size() == 10);
    REQUIRE(fixture().find(fips("12086")) != nullptr);
    CHECK(fixture().find(fips("12001")) == nullptr);
}

TEST_CASE("points inside and outside the Miami-Dade square") {
    const auto& g = fixture();
    CHECK(g.scope_contains(fips("12086"), {-80.25, 25.75}));
    CHECK(g.scope_contains(fips("12086"), {-80.49, 25.51}));
    CHECK_FALSE(g.scope_contains(fips("12086"), {-79.99, 25.75}));
    CHECK_FALSE(g.scope_contains(fips("12086"), {-80.25, 25.49}));
    CHECK_FALSE(g.scope_contains(fips("12086"), {-80.25, 26.25}));
}

TEST_CASE("a point on a shared vertical edge belongs to the east county") {
    const auto& g = fixture();
    const LonLat on_edge{-80.5, 25.75};
    CHECK(g.scope_contains(fips("12086"), on_edge));
    CHECK_FALSE(g.scope_contains(fips("12021"), on_edge));
}

TEST_CASE("a point on a shared horizontal edge belongs to the north county") {
    const auto& g = fixture();
    const LonLat on_edge{-80.25, 26.0};
    CHECK(g.scope_contains(fips("12011"), on_edge));
    CHECK_FALSE(g.scope_contains(fips("12086"), on_edge));
}

TEST_CASE("exactly one county claims each shared-edge point") {
    const auto& g = fixture();
    for (double lat = 25.55; lat < 26.0; lat += 0.05) {
        const LonLat p{-80.5, lat};
        CHECK(g.scope_contains(fips("12086"), p) + g.scope_contains(fips("12021"), p) == 1);
    }
    for (double lon = -80.45; lon < -80.0; lon += 0.05) {
        const LonLat p{lon, 26.0};
        CHECK(g.scope_contains(fips("12086"), p) + g.scope_contains(fips("12011"), p) == 1);
    }
}

TEST_CASE("holes are outside") {
    const auto& g = fixture();
    CHECK(g.scope_contains(fips("12127"), {-81.4, 29.0}));
    CHECK_FALSE(g.scope_contains(fips("12127"), {-81.0, 29.0}));
}

TEST_CASE("multipolygon counties match any part") {
    const auto& g = fixture();
    CHECK(g.scope_contains(fips("12087"), {-81.75, 24.6}));
    CHECK(g.scope_contains(fips("12087"), {-80.75, 24.9}));
    CHECK_FALSE(g.scope_contains(fips("12087"), {-81.25, 24.7}));
}

TEST_CASE("state keys cover every county of the state") {
    const auto& g = fixture();
    CHECK(g.counties_in_state(fips("12000")).size() == 8);
    CHECK(g.counties_in_state(fips("13000")).size() == 2);
    CHECK(g.scope_contains(fips("12000"), {-80.25, 25.75}));
    CHECK(g.scope_contains(fips("13000"), {-81.25, 32.0}));
    CHECK_FALSE(g.scope_contains(fips("13000"), {-80.25, 25.75}));
    CHECK_FALSE(g.scope_contains(fips("22000"), {-80.25, 25.75}));
    CHECK_FALSE(g.scope_contains(fips("12003"), {-80.25, 25.75}));
}

TEST_CASE("geometry_for returns GeoJSON geometry or null") {
    const auto& g = fixture();
    const auto miami = g.geometry_for(fips("12086"));
    CHECK(miami["type"] == "Polygon");
    CHECK(miami["coordinates"][0].size() == 5);
    CHECK(miami["coordinates"][0][0] == json::array({-80.5, 25.5}));

    CHECK(g.geometry_for(fips("12087"))["type"] == "MultiPolygon");
    const auto georgia = g.geometry_for(fips("13000"));
    CHECK(georgia["type"] == "MultiPolygon");
    CHECK(georgia["coordinates"].size() == 2);
    CHECK(g.geometry_for(fips("12003")).is_null());
    CHECK(g.geometry_for(fips("48000")).is_null());
}

TEST_CASE("polygon containment without an index") {
    const Polygon donut{square(0, 0, 10, 10), square(3, 3, 6, 6)};
    CHECK(contains(donut, {1, 1}));
    CHECK_FALSE(contains(donut, {4, 4}));
    CHECK_FALSE(contains(donut, {11, 4}));
    // Non-convex L shape.
    const Polygon ell{{{0, 0}, {4, 0}, {4, 1}, {1, 1}, {1, 4}, {0, 4}, {0, 0}}};
    CHECK(contains(ell, {0.5, 3.5}));
    CHECK(contains(ell, {3.5, 0.5}));
    CHECK_FALSE(contains(ell, {2, 2}));
}

TEST_CASE("malformed geometry documents") {
    CHECK_ERROR_CODE(GeometryIndex::from_geojson(json::object()), ErrorCode::MalformedGeometry);
    CHECK_ERROR_CODE(GeometryIndex::from_geojson(json{{"type", "Feature"}}), ErrorCode::MalformedGeometry);

    const json ring = json::array({json::array({0, 0}), json::array({1, 0}), json::array({1, 1}), json::array({0, 0})});
    const json open_ring = json::array({json::array({0, 0}), json::array({1, 0}), json::array({1, 1}), json::array({0, 1})});
    const json poly{{"type", "Polygon"}, {"coordinates", json::array({ring})}};
    CHECK(GeometryIndex::from_geojson(collection(json::array({feature("12086", poly)}))).size() == 1);

    CHECK_ERROR_CODE(GeometryIndex::from_geojson(collection(json::array(
                         {feature("12086", {{"type", "Polygon"}, {"coordinates", json::array({open_ring})}})}))),
                     ErrorCode::MalformedGeometry);
    CHECK_ERROR_CODE(GeometryIndex::from_geojson(collection(json::array({feature("12086", poly), feature("12086", poly)}))),
                     ErrorCode::MalformedGeometry);
    CHECK_ERROR_CODE(GeometryIndex::from_geojson(collection(json::array({feature("1208", poly)}))),
                     ErrorCode::MalformedGeometry);
    CHECK_ERROR_CODE(GeometryIndex::from_geojson(collection(
                         json::array({feature("12086", {{"type", "Point"}, {"coordinates", {0, 0}}})}))),
                     ErrorCode::MalformedGeometry);
    json no_fips = feature("12086", poly);
    no_fips["properties"].erase("fips");
    CHECK_ERROR_CODE(GeometryIndex::from_geojson(collection(json::array({no_fips}))), ErrorCode::MalformedGeometry);
}

TEST_CASE("loading a missing geometry file") {
    CHECK_ERROR_CODE(GeometryIndex::load("/nonexistent/geometry.geojson"), ErrorCode::IoError);
}
