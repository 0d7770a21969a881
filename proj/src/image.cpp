#include "xfbd/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "xfbd/errors.hpp"

namespace xfbd {

ImageBuffer ImageBuffer::zeros(int width, int height, int channels) {
    ImageBuffer img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.data.assign(static_cast<std::size_t>(width) * height * channels, 0);
    return img;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_thrower(png_structp, png_const_charp msg) {
    throw IoError(std::string("png: ") + msg);
}

void png_warning_sink(png_structp, png_const_charp) {}

}  // namespace

ImageBuffer read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw MissingFile("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             png_error_thrower, png_warning_sink);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }

    ImageBuffer img;
    try {
        png_init_io(png, fp.get());
        png_read_info(png, info);

        const png_byte color_type = png_get_color_type(png, info);
        const png_byte bit_depth = png_get_bit_depth(png, info);

        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (bit_depth == 16) png_set_strip_16(png);
        if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) {
            png_set_tRNS_to_alpha(png);
            png_set_strip_alpha(png);
        }
        png_set_interlace_handling(png);
        png_read_update_info(png, info);

        img.width = static_cast<int>(png_get_image_width(png, info));
        img.height = static_cast<int>(png_get_image_height(png, info));
        img.channels = static_cast<int>(png_get_channels(png, info));
        if (img.channels != 1 && img.channels != 3)
            throw IoError(path + ": unsupported channel count " + std::to_string(img.channels));

        img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
        std::vector<png_bytep> rows(img.height);
        const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
        for (int y = 0; y < img.height; ++y) rows[y] = img.data.data() + y * stride;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const ImageBuffer& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3)
        throw IoError("write_png: channels must be 1 or 3");
    if (img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw IoError("write_png: data length does not match dimensions");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              png_error_thrower, png_warning_sink);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }

    try {
        png_init_io(png, fp.get());
        const int color_type = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
        png_set_IHDR(png, info, img.width, img.height, 8, color_type, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);

        const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
        for (int y = 0; y < img.height; ++y)
            png_write_row(png, const_cast<png_bytep>(img.data.data() + y * stride));
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

}  // namespace xfbd
