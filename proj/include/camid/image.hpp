#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <zlib.h>

#include "camid/audio.hpp"  // detail byte/file helpers
#include "camid/error.hpp"
#include "camid/tensor.hpp"

namespace camid {

// Interleaved RGB, doubles in [0, 1], row-major height x width x 3.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;

    double& at(std::size_t y, std::size_t x, std::size_t c) {
        return pixels[(y * width + x) * 3 + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * 3 + c];
    }
};

namespace detail {

inline std::uint32_t read_u32be(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void push_u32be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

inline unsigned char paeth_predict(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<unsigned char>(a);
    if (pb <= pc) return static_cast<unsigned char>(b);
    return static_cast<unsigned char>(c);
}

}  // namespace detail

inline constexpr unsigned char kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

// 8-bit non-interlaced PNG, color types 0/2/3/4/6. Alpha is dropped,
// grayscale is replicated across the three channels.
inline RgbImage read_png(const std::filesystem::path& path) {
    const auto bytes = detail::read_binary_file(path);
    const std::string where = path.string();
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0) {
        throw DataError("not a PNG file: " + where);
    }

    std::size_t width = 0, height = 0;
    int color_type = -1;
    std::vector<unsigned char> idat;
    std::vector<unsigned char> palette;  // r,g,b triples
    bool saw_iend = false;

    std::size_t pos = 8;
    while (pos + 12 <= bytes.size() && !saw_iend) {
        const std::uint32_t len = detail::read_u32be(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw DataError("truncated PNG chunk: " + where);
        const unsigned char* type = &bytes[pos + 4];
        const unsigned char* data = &bytes[pos + 8];
        const std::uint32_t want_crc = detail::read_u32be(data + len);
        uLong crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, type, 4);
        if (len > 0) crc = crc32(crc, data, len);
        if (static_cast<std::uint32_t>(crc) != want_crc) {
            throw DataError("PNG chunk CRC mismatch: " + where);
        }

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw DataError("bad PNG IHDR: " + where);
            width = detail::read_u32be(data);
            height = detail::read_u32be(data + 4);
            const int bit_depth = data[8];
            color_type = data[9];
            const int interlace = data[12];
            if (width == 0 || height == 0) throw DataError("empty PNG image: " + where);
            if (bit_depth != 8) {
                throw DataError("unsupported PNG bit depth " + std::to_string(bit_depth) + ": " +
                                where);
            }
            if (color_type != 0 && color_type != 2 && color_type != 3 && color_type != 4 &&
                color_type != 6) {
                throw DataError("unsupported PNG color type " + std::to_string(color_type) + ": " +
                                where);
            }
            if (interlace != 0) throw DataError("interlaced PNG not supported: " + where);
        } else if (std::memcmp(type, "PLTE", 4) == 0) {
            if (len % 3 != 0 || len == 0) throw DataError("bad PNG palette: " + where);
            palette.assign(data, data + len);
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }
    if (color_type < 0) throw DataError("PNG missing IHDR: " + where);
    if (!saw_iend) throw DataError("PNG missing IEND: " + where);
    if (idat.empty()) throw DataError("PNG has no image data: " + where);
    if (color_type == 3 && palette.empty()) throw DataError("paletted PNG missing PLTE: " + where);

    const std::size_t channels =
        color_type == 2 ? 3 : color_type == 4 ? 2 : color_type == 6 ? 4 : 1;
    const std::size_t stride = width * channels;
    std::vector<unsigned char> raw(height * (stride + 1));
    uLongf raw_len = raw.size();
    const int zrc = uncompress(raw.data(), &raw_len, idat.data(), idat.size());
    if (zrc != Z_OK || raw_len != raw.size()) {
        throw DataError("corrupt PNG image data: " + where);
    }

    // Undo per-row filters in place (filter byte stays in front of each row).
    for (std::size_t y = 0; y < height; ++y) {
        unsigned char* row = &raw[y * (stride + 1)];
        const unsigned char filter = row[0];
        unsigned char* cur = row + 1;
        const unsigned char* up = y > 0 ? &raw[(y - 1) * (stride + 1)] + 1 : nullptr;
        switch (filter) {
            case 0:
                break;
            case 1:
                for (std::size_t i = channels; i < stride; ++i) cur[i] += cur[i - channels];
                break;
            case 2:
                if (up)
                    for (std::size_t i = 0; i < stride; ++i) cur[i] += up[i];
                break;
            case 3:
                for (std::size_t i = 0; i < stride; ++i) {
                    const int a = i >= channels ? cur[i - channels] : 0;
                    const int b = up ? up[i] : 0;
                    cur[i] = static_cast<unsigned char>(cur[i] + (a + b) / 2);
                }
                break;
            case 4:
                for (std::size_t i = 0; i < stride; ++i) {
                    const int a = i >= channels ? cur[i - channels] : 0;
                    const int b = up ? up[i] : 0;
                    const int c = (up && i >= channels) ? up[i - channels] : 0;
                    cur[i] += detail::paeth_predict(a, b, c);
                }
                break;
            default:
                throw DataError("unknown PNG row filter " + std::to_string(filter) + ": " + where);
        }
    }

    RgbImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(width * height * 3);
    for (std::size_t y = 0; y < height; ++y) {
        const unsigned char* row = &raw[y * (stride + 1)] + 1;
        for (std::size_t x = 0; x < width; ++x) {
            unsigned char r, g, b;
            const unsigned char* px = row + x * channels;
            switch (color_type) {
                case 0:
                case 4:
                    r = g = b = px[0];
                    break;
                case 3: {
                    const std::size_t idx = std::size_t(px[0]) * 3;
                    if (idx + 2 >= palette.size()) {
                        throw DataError("PNG palette index out of range: " + where);
                    }
                    r = palette[idx];
                    g = palette[idx + 1];
                    b = palette[idx + 2];
                    break;
                }
                default:  // 2 and 6
                    r = px[0];
                    g = px[1];
                    b = px[2];
                    break;
            }
            img.at(y, x, 0) = r / 255.0;
            img.at(y, x, 1) = g / 255.0;
            img.at(y, x, 2) = b / 255.0;
        }
    }
    return img;
}

// 8-bit RGB PNG, filter 0 on every row.
inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
    if (img.width == 0 || img.height == 0 || img.pixels.size() != img.width * img.height * 3) {
        throw ValidationError("write_png: malformed image");
    }
    const std::size_t stride = img.width * 3;
    std::vector<unsigned char> raw(img.height * (stride + 1));
    for (std::size_t y = 0; y < img.height; ++y) {
        unsigned char* row = &raw[y * (stride + 1)];
        row[0] = 0;
        for (std::size_t i = 0; i < stride; ++i) {
            const double v = std::clamp(img.pixels[y * stride + i], 0.0, 1.0);
            row[1 + i] = static_cast<unsigned char>(std::lrint(v * 255.0));
        }
    }
    std::vector<unsigned char> compressed(compressBound(raw.size()));
    uLongf clen = compressed.size();
    if (compress2(compressed.data(), &clen, raw.data(), raw.size(), Z_DEFAULT_COMPRESSION) !=
        Z_OK) {
        throw Error("PNG compression failed");
    }
    compressed.resize(clen);

    std::vector<unsigned char> out;
    out.reserve(compressed.size() + 128);
    out.insert(out.end(), kPngSignature, kPngSignature + 8);
    auto put_chunk = [&out](const char* type, const unsigned char* data, std::size_t len) {
        detail::push_u32be(out, static_cast<std::uint32_t>(len));
        const std::size_t type_at = out.size();
        out.insert(out.end(), type, type + 4);
        if (len > 0) out.insert(out.end(), data, data + len);
        uLong crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, &out[type_at], static_cast<uInt>(4 + len));
        detail::push_u32be(out, static_cast<std::uint32_t>(crc));
    };
    unsigned char ihdr[13];
    ihdr[0] = static_cast<unsigned char>(img.width >> 24);
    ihdr[1] = static_cast<unsigned char>(img.width >> 16);
    ihdr[2] = static_cast<unsigned char>(img.width >> 8);
    ihdr[3] = static_cast<unsigned char>(img.width);
    ihdr[4] = static_cast<unsigned char>(img.height >> 24);
    ihdr[5] = static_cast<unsigned char>(img.height >> 16);
    ihdr[6] = static_cast<unsigned char>(img.height >> 8);
    ihdr[7] = static_cast<unsigned char>(img.height);
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 2;   // RGB
    ihdr[10] = 0;  // compression
    ihdr[11] = 0;  // filter
    ihdr[12] = 0;  // interlace
    put_chunk("IHDR", ihdr, 13);
    put_chunk("IDAT", compressed.data(), compressed.size());
    put_chunk("IEND", nullptr, 0);
    detail::write_binary_file(path, out);
}

// Binary PPM, maxval <= 255.
inline RgbImage read_ppm(const std::filesystem::path& path) {
    const auto bytes = detail::read_binary_file(path);
    const std::string where = path.string();
    std::size_t pos = 0;

    auto next_token = [&]() -> std::string {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(bytes[pos++]);
        if (tok.empty()) throw DataError("truncated PPM header: " + where);
        return tok;
    };

    if (next_token() != "P6") throw DataError("not a binary PPM (P6) file: " + where);
    long width, height, maxval;
    try {
        width = std::stol(next_token());
        height = std::stol(next_token());
        maxval = std::stol(next_token());
    } catch (const std::exception&) {
        throw DataError("bad PPM header: " + where);
    }
    if (width <= 0 || height <= 0) throw DataError("empty PPM image: " + where);
    if (maxval <= 0 || maxval > 255) {
        throw DataError("unsupported PPM maxval " + std::to_string(maxval) + ": " + where);
    }
    ++pos;  // the single whitespace after maxval
    const std::size_t need = std::size_t(width) * std::size_t(height) * 3;
    if (pos + need > bytes.size()) throw DataError("truncated PPM pixel data: " + where);

    RgbImage img;
    img.width = std::size_t(width);
    img.height = std::size_t(height);
    img.pixels.resize(need);
    for (std::size_t i = 0; i < need; ++i) {
        img.pixels[i] = bytes[pos + i] / static_cast<double>(maxval);
    }
    return img;
}

inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
    if (img.width == 0 || img.height == 0 || img.pixels.size() != img.width * img.height * 3) {
        throw ValidationError("write_ppm: malformed image");
    }
    std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                         "\n255\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(out.size() + img.pixels.size());
    for (const double v : img.pixels) {
        out.push_back(static_cast<unsigned char>(std::lrint(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
    detail::write_binary_file(path, out);
}

// Content-sniffed loader; the extension is not trusted.
inline RgbImage load_frame(const std::filesystem::path& path) {
    const auto bytes = detail::read_binary_file(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
        return read_png(path);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
        return read_ppm(path);
    }
    throw DataError("unrecognized frame format (need PNG or binary PPM): " + path.string());
}

// Corner-aligned bilinear resize. Same-size input is returned unchanged.
inline RgbImage resize_bilinear(const RgbImage& img, std::size_t out_width,
                                std::size_t out_height) {
    if (out_width == 0 || out_height == 0) {
        throw ValidationError("resize target must be non-empty");
    }
    if (img.width == 0 || img.height == 0) throw ValidationError("resize of empty image");
    if (out_width == img.width && out_height == img.height) return img;

    auto src_pos = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
        if (n_out <= 1 || n_in <= 1) return 0.0;
        return static_cast<double>(i) * static_cast<double>(n_in - 1) /
               static_cast<double>(n_out - 1);
    };

    RgbImage out;
    out.width = out_width;
    out.height = out_height;
    out.pixels.resize(out_width * out_height * 3);
    for (std::size_t y = 0; y < out_height; ++y) {
        const double sy = src_pos(y, out_height, img.height);
        auto y0 = static_cast<std::size_t>(sy);
        if (y0 + 1 >= img.height) y0 = img.height - 1;
        const std::size_t y1 = y0 + 1 < img.height ? y0 + 1 : y0;
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_width; ++x) {
            const double sx = src_pos(x, out_width, img.width);
            auto x0 = static_cast<std::size_t>(sx);
            if (x0 + 1 >= img.width) x0 = img.width - 1;
            const std::size_t x1 = x0 + 1 < img.width ? x0 + 1 : x0;
            const double fx = sx - static_cast<double>(x0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
                const double bot = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
                out.at(y, x, c) = top * (1.0 - fy) + bot * fy;
            }
        }
    }
    return out;
}

// Channel-major (3, H, W) tensor from interleaved pixels.
inline Tensor to_tensor(const RgbImage& img) {
    Tensor t;
    t.shape = {3, img.height, img.width};
    t.data.resize(3 * img.height * img.width);
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                t.at3(c, y, x) = img.at(y, x, c);
            }
        }
    }
    return t;
}

// Frame files of a video directory, sorted by filename.
inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DataError("frame directory does not exist: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".ppm") files.push_back(entry.path());
    }
    if (files.empty()) throw DataError("no frame images in directory: " + dir.string());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
    return files;
}

// At most max_count indices spread evenly over [0, count). Returns all of
// them when count <= max_count.
inline std::vector<std::size_t> subsample_indices(std::size_t count, std::size_t max_count) {
    if (count == 0) throw ValidationError("cannot subsample an empty sequence");
    if (max_count == 0) throw ValidationError("subsample target must be >= 1");
    std::vector<std::size_t> idx;
    if (count <= max_count) {
        idx.resize(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = i;
        return idx;
    }
    idx.resize(max_count);
    if (max_count == 1) {
        idx[0] = (count - 1) / 2;
        return idx;
    }
    for (std::size_t i = 0; i < max_count; ++i) {
        idx[i] = i * (count - 1) / (max_count - 1);
    }
    return idx;
}

}  // namespace camid
