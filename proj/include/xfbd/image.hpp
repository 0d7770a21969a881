#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xfbd {

/// 8-bit raster, row-major, interleaved channels (1 = grayscale, 3 = RGB).
/// Pixel values are stored losslessly as bytes; at_f() exposes the [0,1]
/// floating view used for numeric work.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    static ImageBuffer zeros(int width, int height, int channels);

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at_f(int x, int y, int c = 0) const { return at(x, y, c) / 255.0; }

    bool same_shape(const ImageBuffer& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }
    std::size_t size() const { return data.size(); }

    bool operator==(const ImageBuffer&) const = default;
};

/// Decodes an 8-bit PNG. Palette/16-bit/alpha variants are normalized to
/// 8-bit gray or RGB. Throws MissingFile / IoError.
ImageBuffer read_png(const std::string& path);

/// Encodes as 8-bit grayscale (1 channel) or RGB (3 channels) PNG.
/// Encoding is deterministic: identical buffers produce identical files.
void write_png(const ImageBuffer& img, const std::string& path);

}  // namespace xfbd
