#include "xfbd/objects.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include <json.hpp>

#include "xfbd/errors.hpp"

namespace xfbd {

namespace {

// Union-find over pixel labels for the classical two-pass labeling.
struct UnionFind {
    std::vector<int> parent;
    int make() {
        parent.push_back(static_cast<int>(parent.size()));
        return parent.back();
    }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

std::vector<Component> connected_components(const ClassMask& loc, int connectivity) {
    const int w = loc.width, h = loc.height;
    std::vector<int> labels(static_cast<std::size_t>(w) * h, -1);
    UnionFind uf;

    // First pass: scan row-major, merging with already-visited neighbors
    // (west, north, and the diagonals for 8-connectivity).
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!loc.at(x, y)) continue;
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            int label = -1;
            auto consider = [&](int nx, int ny) {
                if (nx < 0 || nx >= w || ny < 0) return;
                const int other = labels[static_cast<std::size_t>(ny) * w + nx];
                if (other < 0) return;
                if (label < 0)
                    label = other;
                else
                    uf.unite(label, other);
            };
            consider(x - 1, y);
            consider(x, y - 1);
            if (connectivity == 8) {
                consider(x - 1, y - 1);
                consider(x + 1, y - 1);
            }
            labels[idx] = label >= 0 ? label : uf.make();
        }

    // Second pass: resolve roots and bucket pixels.
    std::vector<int> root_to_component(uf.parent.size(), -1);
    std::vector<Component> components;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (labels[idx] < 0) continue;
            const int root = uf.find(labels[idx]);
            if (root_to_component[root] < 0) {
                root_to_component[root] = static_cast<int>(components.size());
                components.push_back(Component{{}, PixelBox{x, y, x, y}, 0});
            }
            Component& comp = components[root_to_component[root]];
            comp.pixels.emplace_back(x, y);
            comp.bbox.x0 = std::min(comp.bbox.x0, x);
            comp.bbox.y0 = std::min(comp.bbox.y0, y);
            comp.bbox.x1 = std::max(comp.bbox.x1, x);
            comp.bbox.y1 = std::max(comp.bbox.y1, y);
            ++comp.area;
        }

    std::sort(components.begin(), components.end(), [](const Component& a, const Component& b) {
        if (a.bbox.y0 != b.bbox.y0) return a.bbox.y0 < b.bbox.y0;
        if (a.bbox.x0 != b.bbox.x0) return a.bbox.x0 < b.bbox.x0;
        return a.pixels.front() < b.pixels.front();
    });
    return components;
}

DamageClass majority_vote_label(const Component& comp, const ClassMask& dam, bool* degenerate) {
    std::array<int, 5> histogram{};
    for (const auto& [x, y] : comp.pixels) histogram[dam.at(x, y)]++;

    int best_class = 0, best_count = 0;
    for (int c = 4; c >= 1; --c)  // ties break toward higher severity
        if (histogram[c] > best_count) {
            best_count = histogram[c];
            best_class = c;
        }
    if (degenerate) *degenerate = best_count == 0;
    if (best_count == 0) return DamageClass::NoDamage;
    return static_cast<DamageClass>(best_class);
}

DetectionSet masks_to_detections(const ClassMask& loc, const ClassMask& dam,
                                 const DetectionConfig& config, const std::string& scene_id) {
    if (!loc.same_shape(dam)) throw DimensionMismatch("loc and dam masks differ in shape");
    DetectionSet set;
    set.scene_id = scene_id;
    for (const Component& comp : connected_components(loc, config.connectivity)) {
        if (config.min_area > 0 && comp.area < config.min_area) continue;
        Detection det;
        det.bbox = comp.bbox;
        det.label = majority_vote_label(comp, dam);
        det.area = comp.area;
        det.origin = DetectionOrigin::FromMask;
        set.detections.push_back(det);
    }
    return set;
}

DetectionSet annotation_to_detections(const SceneAnnotation& annotation, int* excluded) {
    DetectionSet set;
    set.scene_id = annotation.scene_id;
    int skipped = 0;
    for (const auto& building : annotation.buildings) {
        if (building.label == DamageClass::Unclassified) {
            ++skipped;
            continue;
        }
        int area = 0;
        const PixelBox box =
            raster_footprint_bbox(building, annotation.width, annotation.height, &area);
        if (box.empty()) {
            ++skipped;
            continue;
        }
        Detection det;
        det.bbox = box;
        det.label = building.label;
        det.area = area;
        det.origin = DetectionOrigin::FromAnnotation;
        set.detections.push_back(det);
    }
    if (excluded) *excluded = skipped;
    return set;
}

double iou(const PixelBox& a, const PixelBox& b) {
    const int ix0 = std::max(a.x0, b.x0);
    const int iy0 = std::max(a.y0, b.y0);
    const int ix1 = std::min(a.x1, b.x1);
    const int iy1 = std::min(a.y1, b.y1);
    if (ix1 < ix0 || iy1 < iy0) return 0.0;
    const long long inter = static_cast<long long>(ix1 - ix0 + 1) * (iy1 - iy0 + 1);
    const long long uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string to_coco_json(const DetectionSet& set, int width, int height) {
    nlohmann::json annotations = nlohmann::json::array();
    int next_id = 1;
    for (const auto& det : set.detections) {
        annotations.push_back({
            {"id", next_id++},
            {"image_id", 1},
            {"bbox", {det.bbox.x0, det.bbox.y0, det.bbox.x1 - det.bbox.x0 + 1,
                      det.bbox.y1 - det.bbox.y0 + 1}},
            {"category_id", static_cast<int>(det.label)},
            {"score", det.score},
            {"area", det.area},
        });
    }
    nlohmann::json categories = nlohmann::json::array();
    for (int c = 1; c <= kNumDamageClasses; ++c)
        categories.push_back({{"id", c}, {"name", subtype_name(static_cast<DamageClass>(c))}});
    nlohmann::json doc = {
        {"images", {{{"id", 1}, {"file_name", set.scene_id}, {"width", width}, {"height", height}}}},
        {"annotations", annotations},
        {"categories", categories},
    };
    return doc.dump(2);
}

}  // namespace xfbd
