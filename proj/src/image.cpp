#include "scanet/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <jpeglib.h>
#include <png.h>

namespace scanet {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw std::runtime_error("cannot decode '" + path + "': " + why);
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

// --- netpbm (P2/P3 ascii, P5/P6 binary), 8-bit ---

int pnm_next_int(const std::vector<uint8_t>& buf, size_t& pos, const std::string& path) {
    while (pos < buf.size()) {
        if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else if (std::isspace(buf[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= buf.size() || !std::isdigit(buf[pos])) fail(path, "malformed pnm header");
    int v = 0;
    while (pos < buf.size() && std::isdigit(buf[pos])) v = v * 10 + (buf[pos++] - '0');
    return v;
}

ImageU8 load_pnm(const std::vector<uint8_t>& buf, const std::string& path) {
    const char kind = static_cast<char>(buf[1]);
    const int channels = (kind == '3' || kind == '6') ? 3 : 1;
    const bool ascii = kind == '2' || kind == '3';
    size_t pos = 2;
    ImageU8 img;
    img.width = pnm_next_int(buf, pos, path);
    img.height = pnm_next_int(buf, pos, path);
    const int maxval = pnm_next_int(buf, pos, path);
    if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 255) {
        fail(path, "unsupported pnm geometry or depth");
    }
    img.channels = channels;
    const size_t count = static_cast<size_t>(img.width) * img.height * channels;
    img.pixels.resize(count);
    if (ascii) {
        for (size_t i = 0; i < count; ++i) {
            img.pixels[i] = static_cast<uint8_t>(pnm_next_int(buf, pos, path) * 255 / maxval);
        }
    } else {
        ++pos;  // single whitespace after maxval
        if (buf.size() < pos + count) fail(path, "truncated pnm payload");
        std::memcpy(img.pixels.data(), buf.data() + pos, count);
        if (maxval != 255) {
            for (uint8_t& p : img.pixels) p = static_cast<uint8_t>(p * 255 / maxval);
        }
    }
    return img;
}

// --- png via libpng ---

struct PngReadState {
    const uint8_t* data;
    size_t size;
    size_t pos;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t len) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + len > st->size) {
        png_error(png, "read past end");
        return;
    }
    std::memcpy(out, st->data + st->pos, len);
    st->pos += len;
}

ImageU8 load_png_mem(const std::vector<uint8_t>& buf, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(path, "png init failed");
    }
    std::vector<png_bytep> rows;
    ImageU8 img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "corrupt png");
    }
    PngReadState st{buf.data(), buf.size(), 0};
    png_set_read_fn(png, &st, png_mem_read);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
        png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = static_cast<int>(png_get_channels(png, info));
    if (img.channels != 1 && img.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "unsupported png channel count");
    }
    img.pixels.resize(static_cast<size_t>(img.width) * img.height * img.channels);
    rows.resize(static_cast<size_t>(img.height));
    const size_t stride = static_cast<size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y) rows[static_cast<size_t>(y)] = img.pixels.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

// --- jpeg via libjpeg ---

struct JpegErr {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
};

void jpeg_on_error(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErr*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

ImageU8 load_jpeg_mem(const std::vector<uint8_t>& buf, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegErr jerr;
    cinfo.err = jpeg_std_error(&jerr.mgr);
    jerr.mgr.error_exit = jpeg_on_error;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        fail(path, "corrupt jpeg");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, buf.data(), static_cast<unsigned long>(buf.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    ImageU8 img;
    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.channels = static_cast<int>(cinfo.output_components);
    img.pixels.resize(static_cast<size_t>(img.width) * img.height * img.channels);
    const size_t stride = static_cast<size_t>(img.width) * img.channels;
    while (cinfo.output_scanline < cinfo.output_height) {
        uint8_t* row = img.pixels.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

}  // namespace

ImageU8 load_image(const std::string& path) {
    const std::vector<uint8_t> buf = read_file(path);
    if (buf.size() < 8) fail(path, "file too small");
    if (buf[0] == 0x89 && buf[1] == 'P' && buf[2] == 'N' && buf[3] == 'G') {
        return load_png_mem(buf, path);
    }
    if (buf[0] == 0xFF && buf[1] == 0xD8) {
        return load_jpeg_mem(buf, path);
    }
    if (buf[0] == 'P' && buf[1] >= '2' && buf[1] <= '6') {
        return load_pnm(buf, path);
    }
    fail(path, "unknown image format");
}

void save_pgm(const std::string& path, const ImageU8& gray) {
    if (gray.channels != 1) throw std::invalid_argument("save_pgm: expected 1 channel");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "P5\n" << gray.width << " " << gray.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.pixels.data()),
              static_cast<std::streamsize>(gray.pixels.size()));
    if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void save_ppm(const std::string& path, const ImageU8& rgb) {
    if (rgb.channels != 3) throw std::invalid_argument("save_ppm: expected 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "P6\n" << rgb.width << " " << rgb.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.pixels.data()),
              static_cast<std::streamsize>(rgb.pixels.size()));
    if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void save_png(const std::string& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3) {
        throw std::invalid_argument("save_png: expected 1 or 3 channels");
    }
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot write '" + path + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw std::runtime_error("png write failed for '" + path + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const size_t stride = static_cast<size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() + y * stride));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

ImageU8 resize_bilinear(const ImageU8& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize: bad target size");
    ImageU8 out;
    out.width = out_w;
    out.height = out_h;
    out.channels = img.channels;
    out.pixels.resize(static_cast<size_t>(out_w) * out_h * img.channels);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
                const double bot = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
                const double v = top * (1.0 - wy) + bot * wy;
                out.at(y, x, c) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

ImageU8 resize_nearest(const ImageU8& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize: bad target size");
    ImageU8 out;
    out.width = out_w;
    out.height = out_h;
    out.channels = img.channels;
    out.pixels.resize(static_cast<size_t>(out_w) * out_h * img.channels);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const int iy = std::min(static_cast<int>((y + 0.5) * sy), img.height - 1);
        for (int x = 0; x < out_w; ++x) {
            const int ix = std::min(static_cast<int>((x + 0.5) * sx), img.width - 1);
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(iy, ix, c);
        }
    }
    return out;
}

}  // namespace scanet
