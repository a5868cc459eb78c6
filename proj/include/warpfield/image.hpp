// Row-major image containers and file I/O: 8-bit PNG in/out and the FIMG
// float-image format (magic "FIMG", u32 LE width/height/channels, f32 LE
// row-major data).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace warpfield {

struct ImageF {
    int width = 0, height = 0, channels = 0;
    std::vector<float> data;  // index ((j * width) + i) * channels + c

    static ImageF zeros(int width, int height, int channels) {
        return {width, height, channels,
                std::vector<float>(static_cast<size_t>(width) * height * channels, 0.0f)};
    }
    float& at(int i, int j, int c) {
        return data[(static_cast<size_t>(j) * width + i) * channels + c];
    }
    float at(int i, int j, int c) const {
        return data[(static_cast<size_t>(j) * width + i) * channels + c];
    }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

struct ImageU8 {
    int width = 0, height = 0, channels = 0;
    std::vector<uint8_t> data;

    static ImageU8 zeros(int width, int height, int channels) {
        return {width, height, channels,
                std::vector<uint8_t>(static_cast<size_t>(width) * height * channels, 0)};
    }
    uint8_t& at(int i, int j, int c) {
        return data[(static_cast<size_t>(j) * width + i) * channels + c];
    }
    uint8_t at(int i, int j, int c) const {
        return data[(static_cast<size_t>(j) * width + i) * channels + c];
    }
};

// PNG, 8-bit. Writing accepts 1 (gray) or 3 (RGB) channels. Reading returns
// the stored channel count with palette/16-bit/alpha inputs reduced to
// gray or RGB.
void save_png(const ImageU8& image, const std::string& path);
ImageU8 load_png(const std::string& path);

// Float image in [0,1] from 8-bit, and back (values clamped and rounded).
ImageF to_float(const ImageU8& image);
ImageU8 to_u8(const ImageF& image);

void save_fimg(const ImageF& image, const std::string& path);
ImageF load_fimg(const std::string& path);

// Boolean mask from a gray or RGB image: foreground where luminance > 127.
std::vector<uint8_t> mask_from_image(const ImageU8& image);

}  // namespace warpfield
