#include "gsplan/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "gsplan/errors.hpp"

namespace gsplan {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t quantize(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
    if (img.width <= 0 || img.height <= 0) throw PreconditionError("write_png: empty image");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_png: encode failed for " + path);
    }
    png_init_io(png, fp.get());
    const int color_type = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width, img.height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<size_t>(x) * img.channels + c] = quantize(img.at(x, y, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_png: decode failed for " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize everything to 8-bit gray or RGB.
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    const int width = png_get_image_width(png, info);
    const int height = png_get_image_height(png, info);
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("read_png: unsupported channel count in " + path);
    }

    Image img(width, height, channels);
    std::vector<uint8_t> row(static_cast<size_t>(width) * channels);
    for (int y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) = row[static_cast<size_t>(x) * channels + c] / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_pfm(const std::string& path, const Image& img) {
    if (img.width <= 0 || img.height <= 0) throw PreconditionError("write_pfm: empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_pfm: cannot open " + path);
    out << (img.channels == 3 ? "PF" : "Pf") << "\n"
        << img.width << " " << img.height << "\n"
        << "-1.0\n";
    // Bottom-up row order, little-endian floats.
    for (int y = img.height - 1; y >= 0; --y) {
        const float* row = img.pixels.data() + static_cast<size_t>(y) * img.width * img.channels;
        out.write(reinterpret_cast<const char*>(row),
                  static_cast<std::streamsize>(sizeof(float) * img.width * img.channels));
    }
    if (!out) throw IoError("write_pfm: short write to " + path);
}

Image read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_pfm: cannot open " + path);
    std::string magic;
    in >> magic;
    int channels;
    if (magic == "PF")
        channels = 3;
    else if (magic == "Pf")
        channels = 1;
    else
        throw FormatError("read_pfm: bad magic in " + path);
    int width = 0, height = 0;
    double scale = 0;
    in >> width >> height >> scale;
    if (!in || width <= 0 || height <= 0 || scale == 0)
        throw FormatError("read_pfm: bad header in " + path);
    in.get();  // single whitespace separating header from data

    Image img(width, height, channels);
    const size_t row_floats = static_cast<size_t>(width) * channels;
    std::vector<float> row(row_floats);
    for (int y = height - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(float) * row_floats));
        if (!in) throw FormatError("read_pfm: truncated data in " + path);
        if (scale > 0) {  // big-endian payload
            for (float& f : row) {
                uint32_t u;
                std::memcpy(&u, &f, 4);
                u = __builtin_bswap32(u);
                std::memcpy(&f, &u, 4);
            }
        }
        std::copy(row.begin(), row.end(),
                  img.pixels.begin() + static_cast<size_t>(y) * row_floats);
    }
    return img;
}

Image read_image(const std::string& path) {
    const auto dot = path.find_last_of('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".pfm") return read_pfm(path);
    if (ext == ".png") return read_png(path);
    throw FormatError("read_image: unsupported extension for " + path);
}

}  // namespace gsplan
