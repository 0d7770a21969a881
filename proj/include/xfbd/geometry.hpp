#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xfbd {

/// Damage taxonomy. Codes 0-4 are the mask pixel values; Unclassified is a
/// label-only subtype that never appears in a mask.
enum class DamageClass : std::uint8_t {
    Background = 0,
    NoDamage = 1,
    MinorDamage = 2,
    MajorDamage = 3,
    Destroyed = 4,
    Unclassified = 5,
};

constexpr int kNumDamageClasses = 4;  // NoDamage..Destroyed

/// Severity order: NoDamage < MinorDamage < MajorDamage < Destroyed.
inline bool severity_less(DamageClass a, DamageClass b) {
    return static_cast<int>(a) < static_cast<int>(b);
}

const char* subtype_name(DamageClass cls);
DamageClass subtype_from_name(std::string_view name, bool* known = nullptr);

struct Vertex {
    double x = 0;
    double y = 0;
    bool operator==(const Vertex&) const = default;
};

/// Closed outer ring (first vertex == last) with an opaque uid and a label.
struct BuildingPolygon {
    std::string uid;
    std::vector<Vertex> ring;
    DamageClass label = DamageClass::NoDamage;
};

/// Parses the outer ring of a WKT POLYGON. Rings with holes and
/// MULTIPOLYGONs are rejected (UnsupportedGeometry); anything that does not
/// scan as "POLYGON ((x y, ...))" with >= 3 distinct vertices is
/// MalformedWkt. The returned ring is normalized: first vertex equals last.
std::vector<Vertex> parse_wkt_polygon(std::string_view text);

/// Inverse of parse_wkt_polygon; coordinates are emitted with shortest
/// round-trip formatting so parse(serialize(ring)) == ring exactly.
std::string wkt_from_ring(const std::vector<Vertex>& ring);

struct SceneAnnotation {
    std::string scene_id;
    int width = 0;
    int height = 0;
    std::vector<BuildingPolygon> buildings;
    std::vector<std::string> warnings;  // clamped vertices, rejected geometries, ...
};

/// Clamps every vertex into [0,width] x [0,height]; returns the number of
/// vertices that moved and appends a warning per affected polygon.
int clamp_annotation(SceneAnnotation& annotation);

/// Parses an xBD-style label document:
///   { "metadata": {"width": W, "height": H},
///     "features": {"xy": [ {"wkt": "POLYGON ...",
///                           "properties": {"uid": ..., "subtype": ...}} ]} }
/// Unknown fields are ignored. Unsupported geometries are skipped with a
/// warning. width/height fall back to the hints when metadata is absent.
SceneAnnotation annotation_from_json(const std::string& text, const std::string& scene_id,
                                     int width_hint = 0, int height_hint = 0);

std::string annotation_to_json(const SceneAnnotation& annotation);

}  // namespace xfbd
