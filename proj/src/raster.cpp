#include "xfbd/raster.hpp"

#include <algorithm>
#include <cmath>

#include "xfbd/errors.hpp"

namespace xfbd {

ClassMask ClassMask::zeros(int width, int height) {
    ClassMask mask;
    mask.width = width;
    mask.height = height;
    mask.data.assign(static_cast<std::size_t>(width) * height, 0);
    return mask;
}

ClassMask ClassMask::binary() const {
    ClassMask out = *this;
    for (auto& v : out.data) v = v != 0 ? 1 : 0;
    return out;
}

ClassMask mask_from_image(const ImageBuffer& img) {
    if (img.channels != 1) throw DimensionMismatch("class mask images must be single-channel");
    ClassMask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.data = img.data;
    for (auto v : mask.data)
        if (v > 4) throw IoError("mask contains value " + std::to_string(v) + " outside 0..4");
    return mask;
}

ImageBuffer mask_to_image(const ClassMask& mask) {
    ImageBuffer img;
    img.width = mask.width;
    img.height = mask.height;
    img.channels = 1;
    img.data = mask.data;
    return img;
}

bool polygon_contains_center(const std::vector<Vertex>& ring, int x, int y) {
    const double px = x + 0.5;
    const double py = y + 0.5;
    bool inside = false;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double y1 = ring[i].y, y2 = ring[i + 1].y;
        if ((y1 > py) == (y2 > py)) continue;
        const double x1 = ring[i].x, x2 = ring[i + 1].x;
        const double x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1);
        if (px < x_cross) inside = !inside;
    }
    return inside;
}

namespace {

PixelBox ring_pixel_range(const std::vector<Vertex>& ring, int width, int height) {
    double min_x = ring[0].x, max_x = ring[0].x, min_y = ring[0].y, max_y = ring[0].y;
    for (const auto& v : ring) {
        min_x = std::min(min_x, v.x);
        max_x = std::max(max_x, v.x);
        min_y = std::min(min_y, v.y);
        max_y = std::max(max_y, v.y);
    }
    PixelBox box;
    box.x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    box.y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    box.x1 = std::min(width - 1, static_cast<int>(std::ceil(max_x)));
    box.y1 = std::min(height - 1, static_cast<int>(std::ceil(max_y)));
    return box;
}

}  // namespace

int rasterize_polygon(const BuildingPolygon& poly, ClassMask& mask, DamageClass class_code) {
    if (poly.ring.size() < 4) return 0;
    const PixelBox range = ring_pixel_range(poly.ring, mask.width, mask.height);
    if (range.empty()) return 0;
    int count = 0;
    for (int y = range.y0; y <= range.y1; ++y)
        for (int x = range.x0; x <= range.x1; ++x)
            if (polygon_contains_center(poly.ring, x, y)) {
                mask.at(x, y) = static_cast<std::uint8_t>(class_code);
                ++count;
            }
    return count;
}

PixelBox raster_footprint_bbox(const BuildingPolygon& poly, int width, int height, int* area) {
    PixelBox box;
    if (area) *area = 0;
    if (poly.ring.size() < 4) return box;
    const PixelBox range = ring_pixel_range(poly.ring, width, height);
    if (range.empty()) return box;
    box = {width, height, -1, -1};
    int count = 0;
    for (int y = range.y0; y <= range.y1; ++y)
        for (int x = range.x0; x <= range.x1; ++x)
            if (polygon_contains_center(poly.ring, x, y)) {
                box.x0 = std::min(box.x0, x);
                box.y0 = std::min(box.y0, y);
                box.x1 = std::max(box.x1, x);
                box.y1 = std::max(box.y1, y);
                ++count;
            }
    if (count == 0) box = PixelBox{};
    if (area) *area = count;
    return box;
}

TargetMasks build_target_masks(const SceneAnnotation& annotation) {
    TargetMasks out;
    out.dam = ClassMask::zeros(annotation.width, annotation.height);
    out.ignore = ClassMask::zeros(annotation.width, annotation.height);

    for (const auto& building : annotation.buildings) {
        DamageClass code = building.label;
        if (code == DamageClass::Unclassified) {
            code = DamageClass::NoDamage;
            ++out.unclassified_count;
            rasterize_polygon(building, out.ignore, DamageClass::NoDamage);
            out.warnings.push_back("building " + building.uid +
                                   ": un-classified, rasterized as no-damage");
        }
        if (code == DamageClass::Background) {
            out.warnings.push_back("building " + building.uid + ": background label skipped");
            continue;
        }
        const int count = rasterize_polygon(building, out.dam, code);
        if (count == 0)
            out.warnings.push_back("building " + building.uid + ": degenerate polygon, 0 pixels");
    }
    out.loc = out.dam.binary();
    return out;
}

namespace {

ImageBuffer masked_crop(const ImageBuffer& img, const ClassMask& footprint, const PixelBox& box) {
    ImageBuffer patch = ImageBuffer::zeros(box.x1 - box.x0 + 1, box.y1 - box.y0 + 1, img.channels);
    for (int y = box.y0; y <= box.y1; ++y)
        for (int x = box.x0; x <= box.x1; ++x) {
            if (!footprint.at(x, y)) continue;
            for (int c = 0; c < img.channels; ++c)
                patch.at(x - box.x0, y - box.y0, c) = img.at(x, y, c);
        }
    return patch;
}

ImageBuffer nearest_resize(const ImageBuffer& img, int new_w, int new_h) {
    ImageBuffer out = ImageBuffer::zeros(new_w, new_h, img.channels);
    for (int y = 0; y < new_h; ++y) {
        const int sy = std::min(img.height - 1, static_cast<int>(static_cast<long long>(y) * img.height / new_h));
        for (int x = 0; x < new_w; ++x) {
            const int sx = std::min(img.width - 1, static_cast<int>(static_cast<long long>(x) * img.width / new_w));
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

ImageBuffer center_pad(const ImageBuffer& patch, int pad_size) {
    ImageBuffer out = ImageBuffer::zeros(pad_size, pad_size, patch.channels);
    const int off_x = (pad_size - patch.width) / 2;
    const int off_y = (pad_size - patch.height) / 2;
    for (int y = 0; y < patch.height; ++y)
        for (int x = 0; x < patch.width; ++x)
            for (int c = 0; c < patch.channels; ++c)
                out.at(x + off_x, y + off_y, c) = patch.at(x, y, c);
    return out;
}

}  // namespace

Chip extract_chip(const ImageBuffer& pre, const ImageBuffer& post, const BuildingPolygon& poly,
                  int pad_size) {
    if (!pre.same_shape(post)) throw DimensionMismatch("pre/post images differ in shape");

    ClassMask footprint = ClassMask::zeros(pre.width, pre.height);
    const int count = rasterize_polygon(poly, footprint, DamageClass::NoDamage);
    if (count == 0) throw EmptyPolygon("polygon " + poly.uid + " rasterizes to 0 pixels");
    const PixelBox box = raster_footprint_bbox(poly, pre.width, pre.height);

    Chip chip;
    chip.pad_size = pad_size;
    chip.label = poly.label;
    chip.source_uid = poly.uid;
    chip.pre_patch = masked_crop(pre, footprint, box);
    chip.post_patch = masked_crop(post, footprint, box);

    if (chip.pre_patch.width > pad_size || chip.pre_patch.height > pad_size) {
        const double scale =
            static_cast<double>(pad_size) / std::max(chip.pre_patch.width, chip.pre_patch.height);
        const int new_w = std::max(1, static_cast<int>(std::floor(chip.pre_patch.width * scale)));
        const int new_h = std::max(1, static_cast<int>(std::floor(chip.pre_patch.height * scale)));
        chip.pre_patch = nearest_resize(chip.pre_patch, new_w, new_h);
        chip.post_patch = nearest_resize(chip.post_patch, new_w, new_h);
        chip.downscaled = true;
    }
    chip.pre_patch = center_pad(chip.pre_patch, pad_size);
    chip.post_patch = center_pad(chip.post_patch, pad_size);
    return chip;
}

}  // namespace xfbd
