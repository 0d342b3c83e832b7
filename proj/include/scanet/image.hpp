#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scanet {

// 8-bit interleaved image, 1 (gray) or 3 (rgb) channels.
struct ImageU8 {
    int width = 0, height = 0, channels = 0;
    std::vector<uint8_t> pixels;  // row-major, interleaved

    uint8_t& at(int y, int x, int c) { return pixels[(static_cast<size_t>(y) * width + x) * channels + c]; }
    uint8_t at(int y, int x, int c) const { return pixels[(static_cast<size_t>(y) * width + x) * channels + c]; }
};

// Decodes PNG, JPEG, PGM or PPM by sniffing the magic bytes. Throws with the
// offending path on failure.
ImageU8 load_image(const std::string& path);

// Writers used for masks, stage dumps and synthetic-set export.
void save_pgm(const std::string& path, const ImageU8& gray);
void save_ppm(const std::string& path, const ImageU8& rgb);
void save_png(const std::string& path, const ImageU8& img);

// Separable bilinear resize (half-pixel centers).
ImageU8 resize_bilinear(const ImageU8& img, int out_w, int out_h);
// Nearest-neighbor resize; preserves the value set (binary masks stay binary).
ImageU8 resize_nearest(const ImageU8& img, int out_w, int out_h);

}  // namespace scanet
