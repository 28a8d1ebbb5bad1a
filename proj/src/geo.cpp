#include "evacnet/geo.hpp"

#include <fstream>

#include "evacnet/error.hpp"

namespace evacnet {

using nlohmann::json;

bool ring_crossings_odd(const Ring& ring, LonLat p) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const LonLat& a = ring[i];
        const LonLat& b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x_cross = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if (p.lon < x_cross) inside = !inside;
        }
    }
    return inside;
}

bool contains(const Polygon& polygon, LonLat p) {
    bool inside = false;
    for (const auto& ring : polygon)
        if (ring.size() >= 4 && ring_crossings_odd(ring, p)) inside = !inside;
    return inside;
}

bool contains(const CountyGeometry& county, LonLat p) {
    for (const auto& poly : county.polygons)
        if (contains(poly, p)) return true;
    return false;
}

namespace {

LonLat parse_position(const json& v) {
    if (!v.is_array() || v.size() < 2 || !v[0].is_number() || !v[1].is_number())
        throw Error(ErrorCode::MalformedGeometry, "position must be [lon, lat]");
    return {v[0].get<double>(), v[1].get<double>()};
}

Polygon parse_polygon(const json& rings) {
    if (!rings.is_array() || rings.empty()) throw Error(ErrorCode::MalformedGeometry, "polygon needs rings");
    Polygon poly;
    for (const auto& r : rings) {
        if (!r.is_array() || r.size() < 4) throw Error(ErrorCode::MalformedGeometry, "ring needs at least 4 positions");
        Ring ring;
        for (const auto& pos : r) ring.push_back(parse_position(pos));
        if (!(ring.front() == ring.back())) throw Error(ErrorCode::MalformedGeometry, "ring is not closed");
        poly.push_back(std::move(ring));
    }
    return poly;
}

json ring_json(const Ring& ring) {
    json out = json::array();
    for (const auto& p : ring) out.push_back({p.lon, p.lat});
    return out;
}

json polygon_json(const Polygon& poly) {
    json out = json::array();
    for (const auto& r : poly) out.push_back(ring_json(r));
    return out;
}

}  // namespace

GeometryIndex GeometryIndex::from_geojson(const json& doc) {
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array())
        throw Error(ErrorCode::MalformedGeometry, "expected a FeatureCollection");
    GeometryIndex index;
    for (const auto& feature : doc["features"]) {
        const auto props = feature.find("properties");
        if (props == feature.end() || !props->is_object() || !props->contains("fips") || !(*props)["fips"].is_string())
            throw Error(ErrorCode::MalformedGeometry, "feature lacks properties.fips");
        const std::string fips_text = (*props)["fips"].get<std::string>();
        std::optional<CountyFips> fips;
        try {
            fips = CountyFips::parse(fips_text);
        } catch (const Error& e) {
            throw Error(ErrorCode::MalformedGeometry, e.what());
        }
        const auto geom = feature.find("geometry");
        if (geom == feature.end() || !geom->is_object())
            throw Error(ErrorCode::MalformedGeometry, "feature " + fips_text + " lacks geometry");
        const std::string type = geom->value("type", "");
        CountyGeometry county{*fips, {}};
        if (type == "Polygon") {
            county.polygons.push_back(parse_polygon(geom->at("coordinates")));
        } else if (type == "MultiPolygon") {
            for (const auto& p : geom->at("coordinates")) county.polygons.push_back(parse_polygon(p));
        } else {
            throw Error(ErrorCode::MalformedGeometry, "unsupported geometry type '" + type + "'");
        }
        auto [it, fresh] = index.counties_.emplace(*fips, std::move(county));
        if (!fresh) throw Error(ErrorCode::MalformedGeometry, "duplicate fips " + fips_text);
    }
    return index;
}

GeometryIndex GeometryIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open geometry " + path.string());
    try {
        return from_geojson(json::parse(in));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedGeometry, e.what());
    }
}

const CountyGeometry* GeometryIndex::find(const CountyFips& fips) const {
    auto it = counties_.find(fips);
    return it == counties_.end() ? nullptr : &it->second;
}

std::vector<const CountyGeometry*> GeometryIndex::counties_in_state(const CountyFips& state_key) const {
    std::vector<const CountyGeometry*> out;
    for (const auto& [fips, county] : counties_)
        if (fips.state_prefix() == state_key.state_prefix() && !fips.is_state_key()) out.push_back(&county);
    return out;
}

json GeometryIndex::geometry_for(const CountyFips& scope) const {
    std::vector<const CountyGeometry*> parts;
    if (const auto* county = find(scope))
        parts.push_back(county);
    else if (scope.is_state_key())
        parts = counties_in_state(scope);
    if (parts.empty()) return nullptr;

    std::vector<const Polygon*> polys;
    for (const auto* c : parts)
        for (const auto& p : c->polygons) polys.push_back(&p);
    if (polys.size() == 1) return json{{"type", "Polygon"}, {"coordinates", polygon_json(*polys.front())}};
    json coords = json::array();
    for (const auto* p : polys) coords.push_back(polygon_json(*p));
    return json{{"type", "MultiPolygon"}, {"coordinates", coords}};
}

bool GeometryIndex::scope_contains(const CountyFips& scope, LonLat p) const {
    if (const auto* county = find(scope)) return contains(*county, p);
    if (!scope.is_state_key()) return false;
    for (const auto* county : counties_in_state(scope))
        if (contains(*county, p)) return true;
    return false;
}

}  // namespace evacnet
