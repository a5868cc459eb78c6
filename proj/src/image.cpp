#include "warpfield/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace warpfield {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

void save_png(const ImageU8& image, const std::string& path) {
    if (image.channels != 1 && image.channels != 3)
        throw std::runtime_error("save_png: only gray or RGB images");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot open " + path + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("png_create_write_struct failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng write error for " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width, image.height, 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(image.height);
    for (int j = 0; j < image.height; ++j)
        rows[j] = const_cast<png_bytep>(image.data.data() +
                                        static_cast<size_t>(j) * image.width * image.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageU8 load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("png_create_read_struct failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng read error for " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    ImageU8 image;
    image.width = static_cast<int>(png_get_image_width(png, info));
    image.height = static_cast<int>(png_get_image_height(png, info));
    image.channels = static_cast<int>(png_get_channels(png, info));
    if (image.channels != 1 && image.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error(path + ": unsupported channel count after conversion");
    }
    image.data.resize(static_cast<size_t>(image.width) * image.height * image.channels);
    std::vector<png_bytep> rows(image.height);
    for (int j = 0; j < image.height; ++j)
        rows[j] = image.data.data() + static_cast<size_t>(j) * image.width * image.channels;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

ImageF to_float(const ImageU8& image) {
    ImageF out{image.width, image.height, image.channels, {}};
    out.data.resize(image.data.size());
    for (size_t i = 0; i < image.data.size(); ++i)
        out.data[i] = static_cast<float>(image.data[i]) / 255.0f;
    return out;
}

ImageU8 to_u8(const ImageF& image) {
    ImageU8 out{image.width, image.height, image.channels, {}};
    out.data.resize(image.data.size());
    for (size_t i = 0; i < image.data.size(); ++i) {
        float v = std::clamp(image.data[i], 0.0f, 1.0f);
        out.data[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    return out;
}

void save_fimg(const ImageF& image, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write("FIMG", 4);
    uint32_t dims[3] = {static_cast<uint32_t>(image.width), static_cast<uint32_t>(image.height),
                        static_cast<uint32_t>(image.channels)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(image.data.data()),
              static_cast<std::streamsize>(image.data.size() * sizeof(float)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

ImageF load_fimg(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "FIMG", 4) != 0)
        throw std::runtime_error(path + ": not a FIMG file");
    uint32_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    ImageF image{static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                 static_cast<int>(dims[2]), {}};
    image.data.resize(static_cast<size_t>(dims[0]) * dims[1] * dims[2]);
    in.read(reinterpret_cast<char*>(image.data.data()),
            static_cast<std::streamsize>(image.data.size() * sizeof(float)));
    if (!in) throw std::runtime_error(path + ": truncated FIMG file");
    return image;
}

std::vector<uint8_t> mask_from_image(const ImageU8& image) {
    std::vector<uint8_t> mask(static_cast<size_t>(image.width) * image.height);
    for (size_t p = 0; p < mask.size(); ++p) {
        int lum = 0;
        for (int c = 0; c < image.channels; ++c) lum += image.data[p * image.channels + c];
        mask[p] = lum > 127 * image.channels ? 1 : 0;
    }
    return mask;
}

}  // namespace warpfield
