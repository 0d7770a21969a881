#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xfbd/geometry.hpp"
#include "xfbd/image.hpp"

namespace xfbd {

/// Inclusive pixel rectangle. Empty boxes are represented by x0 > x1.
struct PixelBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = -1;
    int y1 = -1;

    bool empty() const { return x1 < x0 || y1 < y0; }
    long long area() const {
        return empty() ? 0 : static_cast<long long>(x1 - x0 + 1) * (y1 - y0 + 1);
    }
    bool operator==(const PixelBox&) const = default;
};

/// Per-pixel class raster; values are DamageClass codes 0..4.
struct ClassMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    static ClassMask zeros(int width, int height);

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    bool same_shape(const ClassMask& other) const {
        return width == other.width && height == other.height;
    }

    /// Binary localization view: 1 where value != 0.
    ClassMask binary() const;

    bool operator==(const ClassMask&) const = default;
};

ClassMask mask_from_image(const ImageBuffer& img);
ImageBuffer mask_to_image(const ClassMask& mask);

/// Even-odd point-in-polygon test against pixel center (x+0.5, y+0.5).
bool polygon_contains_center(const std::vector<Vertex>& ring, int x, int y);

/// Sets class_code on every pixel whose center lies inside the ring
/// (even-odd rule); later calls overwrite earlier ones. Returns the number
/// of pixels written. Degenerate polygons write 0 pixels.
int rasterize_polygon(const BuildingPolygon& poly, ClassMask& mask, DamageClass class_code);

/// Tight bbox of the rasterized footprint; empty when nothing rasterizes.
/// When area is given it receives the footprint pixel count.
PixelBox raster_footprint_bbox(const BuildingPolygon& poly, int width, int height,
                               int* area = nullptr);

struct TargetMasks {
    ClassMask loc;     // binary building/background
    ClassMask dam;     // class codes 1..4
    ClassMask ignore;  // 1 where pixels belong to un-classified buildings
    int unclassified_count = 0;
    std::vector<std::string> warnings;
};

/// Rasterizes the annotation into localization and damage target masks in
/// annotation order. Un-classified buildings rasterize as NoDamage and are
/// flagged in the ignore mask so scoring can exclude them.
TargetMasks build_target_masks(const SceneAnnotation& annotation);

struct Chip {
    ImageBuffer pre_patch;
    ImageBuffer post_patch;
    int pad_size = 0;
    DamageClass label = DamageClass::NoDamage;
    std::string source_uid;
    bool downscaled = false;
};

/// Crops both images to the polygon's rasterized bbox, zeroes non-building
/// pixels, and centers the patch on a pad_size square of zeros. Patches that
/// exceed pad_size are nearest-neighbor downscaled to fit (flagged).
Chip extract_chip(const ImageBuffer& pre, const ImageBuffer& post, const BuildingPolygon& poly,
                  int pad_size);

}  // namespace xfbd
