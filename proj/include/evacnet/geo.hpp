#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "evacnet/alert_gateway.hpp"

namespace evacnet {

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
    bool operator==(const LonLat&) const = default;
};

/// Closed ring: first vertex repeated as the last.
using Ring = std::vector<LonLat>;

/// Outer ring plus any holes. Containment uses the even-odd rule across all
/// rings, so holes need no special casing.
using Polygon = std::vector<Ring>;

struct CountyGeometry {
    CountyFips fips;
    std::vector<Polygon> polygons;
};

/// Crossing-number test with a half-open edge rule: a point exactly on a
/// shared vertical edge belongs to the polygon on its east side, and a point
/// on a shared horizontal edge to the polygon on its north side.
bool ring_crossings_odd(const Ring& ring, LonLat p);
bool contains(const Polygon& polygon, LonLat p);
bool contains(const CountyGeometry& county, LonLat p);

/// County boundaries keyed by FIPS.
class GeometryIndex {
public:
    /// FeatureCollection with `properties.fips` and Polygon/MultiPolygon
    /// geometries in (lon, lat) degrees. Throws Error(MalformedGeometry).
    static GeometryIndex from_geojson(const nlohmann::json& doc);
    static GeometryIndex load(const std::filesystem::path& path);

    const CountyGeometry* find(const CountyFips& fips) const;
    /// Counties whose FIPS starts with the state's two-digit prefix.
    std::vector<const CountyGeometry*> counties_in_state(const CountyFips& state_key) const;

    /// GeoJSON geometry for a scope key: the county polygon(s), or for an
    /// `SS000` key every county of that state. Null when nothing is known.
    nlohmann::json geometry_for(const CountyFips& scope) const;
    /// True if the point lies in the scope's county, or for a state key in
    /// any county of that state.
    bool scope_contains(const CountyFips& scope, LonLat p) const;

    std::size_t size() const noexcept { return counties_.size(); }

private:
    std::map<CountyFips, CountyGeometry> counties_;
};

}  // namespace evacnet
