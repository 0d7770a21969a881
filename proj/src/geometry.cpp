#include "xfbd/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xfbd/errors.hpp"

namespace xfbd {

const char* subtype_name(DamageClass cls) {
    switch (cls) {
        case DamageClass::Background: return "background";
        case DamageClass::NoDamage: return "no-damage";
        case DamageClass::MinorDamage: return "minor-damage";
        case DamageClass::MajorDamage: return "major-damage";
        case DamageClass::Destroyed: return "destroyed";
        case DamageClass::Unclassified: return "un-classified";
    }
    return "unknown";
}

DamageClass subtype_from_name(std::string_view name, bool* known) {
    if (known) *known = true;
    if (name == "no-damage") return DamageClass::NoDamage;
    if (name == "minor-damage") return DamageClass::MinorDamage;
    if (name == "major-damage") return DamageClass::MajorDamage;
    if (name == "destroyed") return DamageClass::Destroyed;
    if (name == "un-classified") return DamageClass::Unclassified;
    if (known) *known = false;
    return DamageClass::Unclassified;
}

namespace {

void skip_ws(std::string_view text, std::size_t& pos) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
}

double parse_number(std::string_view text, std::size_t& pos) {
    skip_ws(text, pos);
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
    if (ec != std::errc()) throw MalformedWkt("expected a coordinate at offset " + std::to_string(pos));
    pos = static_cast<std::size_t>(ptr - text.data());
    return value;
}

void expect(std::string_view text, std::size_t& pos, char c) {
    skip_ws(text, pos);
    if (pos >= text.size() || text[pos] != c)
        throw MalformedWkt(std::string("expected '") + c + "' at offset " + std::to_string(pos));
    ++pos;
}

}  // namespace

std::vector<Vertex> parse_wkt_polygon(std::string_view text) {
    std::size_t pos = 0;
    skip_ws(text, pos);
    if (text.substr(pos).starts_with("MULTIPOLYGON"))
        throw UnsupportedGeometry("MULTIPOLYGON is not supported");
    if (!text.substr(pos).starts_with("POLYGON"))
        throw MalformedWkt("text does not begin with POLYGON");
    pos += 7;

    expect(text, pos, '(');
    expect(text, pos, '(');

    std::vector<Vertex> ring;
    while (true) {
        Vertex v;
        v.x = parse_number(text, pos);
        v.y = parse_number(text, pos);
        ring.push_back(v);
        skip_ws(text, pos);
        if (pos >= text.size()) throw MalformedWkt("unbalanced parentheses");
        if (text[pos] == ',') {
            ++pos;
            continue;
        }
        if (text[pos] == ')') {
            ++pos;
            break;
        }
        throw MalformedWkt("unexpected character at offset " + std::to_string(pos));
    }

    skip_ws(text, pos);
    if (pos < text.size() && text[pos] == ',')
        throw UnsupportedGeometry("polygons with interior rings (holes) are not supported");
    expect(text, pos, ')');
    skip_ws(text, pos);
    if (pos != text.size()) throw MalformedWkt("trailing characters after polygon");

    // Normalize: close the ring, then require >= 3 distinct vertices.
    if (ring.front() != ring.back()) ring.push_back(ring.front());
    std::set<std::pair<double, double>> distinct;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) distinct.insert({ring[i].x, ring[i].y});
    if (distinct.size() < 3) throw MalformedWkt("ring has fewer than 3 distinct vertices");
    return ring;
}

namespace {

std::string format_coord(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

std::string wkt_from_ring(const std::vector<Vertex>& ring) {
    std::string out = "POLYGON ((";
    for (std::size_t i = 0; i < ring.size(); ++i) {
        if (i) out += ", ";
        out += format_coord(ring[i].x);
        out += ' ';
        out += format_coord(ring[i].y);
    }
    out += "))";
    return out;
}

int clamp_annotation(SceneAnnotation& annotation) {
    int moved = 0;
    for (auto& building : annotation.buildings) {
        int moved_here = 0;
        for (auto& v : building.ring) {
            const double cx = std::clamp(v.x, 0.0, static_cast<double>(annotation.width));
            const double cy = std::clamp(v.y, 0.0, static_cast<double>(annotation.height));
            if (cx != v.x || cy != v.y) {
                v.x = cx;
                v.y = cy;
                ++moved_here;
            }
        }
        if (moved_here > 0)
            annotation.warnings.push_back("polygon " + building.uid + ": clamped " +
                                          std::to_string(moved_here) + " out-of-frame vertices");
        moved += moved_here;
    }
    return moved;
}

SceneAnnotation annotation_from_json(const std::string& text, const std::string& scene_id,
                                     int width_hint, int height_hint) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw BadJson(scene_id + ": " + e.what());
    }

    SceneAnnotation annotation;
    annotation.scene_id = scene_id;
    annotation.width = width_hint;
    annotation.height = height_hint;
    if (doc.contains("metadata") && doc["metadata"].is_object()) {
        const auto& md = doc["metadata"];
        if (md.contains("width")) annotation.width = md["width"].get<int>();
        if (md.contains("height")) annotation.height = md["height"].get<int>();
    }
    if (annotation.width <= 0 || annotation.height <= 0)
        throw BadJson(scene_id + ": no image dimensions (metadata.width/height missing)");

    if (!doc.contains("features") || !doc["features"].is_object() ||
        !doc["features"].contains("xy") || !doc["features"]["xy"].is_array())
        throw BadJson(scene_id + ": missing features.xy array");

    std::set<std::string> seen_uids;
    int index = 0;
    for (const auto& feature : doc["features"]["xy"]) {
        ++index;
        if (!feature.is_object() || !feature.contains("wkt")) {
            annotation.warnings.push_back("feature #" + std::to_string(index) + ": no wkt, skipped");
            continue;
        }
        BuildingPolygon building;
        if (feature.contains("properties") && feature["properties"].is_object()) {
            const auto& props = feature["properties"];
            if (props.contains("uid")) building.uid = props["uid"].get<std::string>();
            if (props.contains("subtype")) {
                bool known = false;
                building.label = subtype_from_name(props["subtype"].get<std::string>(), &known);
                if (!known)
                    annotation.warnings.push_back("feature #" + std::to_string(index) +
                                                  ": unknown subtype '" +
                                                  props["subtype"].get<std::string>() +
                                                  "', treated as un-classified");
            }
        }
        if (building.uid.empty()) building.uid = "feature-" + std::to_string(index);
        if (!seen_uids.insert(building.uid).second)
            throw BadJson(scene_id + ": duplicate uid " + building.uid);

        try {
            building.ring = parse_wkt_polygon(feature["wkt"].get<std::string>());
        } catch (const UnsupportedGeometry& e) {
            annotation.warnings.push_back("feature " + building.uid + ": rejected geometry (" +
                                          e.what() + ")");
            continue;
        } catch (const MalformedWkt& e) {
            annotation.warnings.push_back("feature " + building.uid + ": malformed wkt (" +
                                          e.what() + ")");
            continue;
        }
        annotation.buildings.push_back(std::move(building));
    }

    clamp_annotation(annotation);
    return annotation;
}

std::string annotation_to_json(const SceneAnnotation& annotation) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& building : annotation.buildings) {
        features.push_back({
            {"wkt", wkt_from_ring(building.ring)},
            {"properties", {{"uid", building.uid}, {"subtype", subtype_name(building.label)}}},
        });
    }
    nlohmann::json doc = {
        {"metadata", {{"width", annotation.width}, {"height", annotation.height}}},
        {"features", {{"xy", features}}},
    };
    return doc.dump(2);
}

}  // namespace xfbd
