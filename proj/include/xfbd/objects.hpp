#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xfbd/geometry.hpp"
#include "xfbd/raster.hpp"

namespace xfbd {

/// One connected blob of nonzero localization pixels.
struct Component {
    std::vector<std::pair<int, int>> pixels;  // (x, y)
    PixelBox bbox;
    int area = 0;
};

/// Labels nonzero pixels into components under 4- or 8-connectivity.
/// Components are ordered by (bbox min row, bbox min col) for determinism.
std::vector<Component> connected_components(const ClassMask& loc, int connectivity);

/// Most frequent non-background class among the component's damage pixels;
/// ties break toward higher severity. Components with no damage pixels
/// return NoDamage and set *degenerate.
DamageClass majority_vote_label(const Component& comp, const ClassMask& dam,
                                bool* degenerate = nullptr);

enum class DetectionOrigin { FromMask, FromAnnotation };

struct Detection {
    PixelBox bbox;
    DamageClass label = DamageClass::NoDamage;
    double score = 1.0;
    int area = 0;  // footprint pixel count
    DetectionOrigin origin = DetectionOrigin::FromMask;
};

struct DetectionSet {
    std::string scene_id;
    std::vector<Detection> detections;
};

struct DetectionConfig {
    int connectivity = 8;
    int min_area = 0;  // components below this pixel count are dropped; 0 = off
};

/// One detection per connected component of loc: tight bbox, majority-vote
/// label from dam, score 1.0.
DetectionSet masks_to_detections(const ClassMask& loc, const ClassMask& dam,
                                 const DetectionConfig& config, const std::string& scene_id = "");

/// One detection per labeled polygon: rasterized-footprint bbox, the
/// polygon's own label. Un-classified buildings are excluded (counted in
/// *excluded); polygons with empty footprints are skipped likewise.
DetectionSet annotation_to_detections(const SceneAnnotation& annotation, int* excluded = nullptr);

/// Intersection over union with inclusive pixel-count areas.
double iou(const PixelBox& a, const PixelBox& b);

/// COCO-style serialization: categories 1..4 are the damage classes, bboxes
/// are [x, y, w, h] in pixel counts.
std::string to_coco_json(const DetectionSet& set, int width, int height);

}  // namespace xfbd
