#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "camid/error.hpp"

namespace camid {

// Mono audio in [-1, 1].
struct AudioSignal {
    std::vector<double> samples;
    unsigned sample_rate = 0;

    void validate() const {
        if (sample_rate == 0) throw ValidationError("audio sample rate must be positive");
        if (samples.empty()) throw ValidationError("audio signal must contain at least one sample");
        for (const double s : samples) {
            if (!std::isfinite(s)) throw ValidationError("audio signal contains non-finite samples");
        }
    }
};

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void push_u32le(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
}

inline void push_u16le(std::vector<unsigned char>& v, std::uint16_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}

inline std::vector<unsigned char> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_binary_file(const std::filesystem::path& path,
                              const std::vector<unsigned char>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace detail

// RIFF/WAVE reader: PCM 16-bit little-endian, 1 or 2 channels, any rate.
// Stereo is averaged down to mono.
inline AudioSignal read_wav(const std::filesystem::path& path) {
    const auto bytes = detail::read_binary_file(path);
    const auto fail = [&](const std::string& why) -> DataError {
        return DataError("bad WAV file " + path.string() + ": " + why);
    };
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw fail("missing RIFF/WAVE header");
    }

    unsigned channels = 0, sample_rate = 0, bits = 0;
    bool have_fmt = false;
    std::size_t data_off = 0, data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t len = detail::read_u32le(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + len > bytes.size()) throw fail("truncated chunk");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (len < 16) throw fail("short fmt chunk");
            const std::uint16_t format = detail::read_u16le(bytes.data() + body);
            channels = detail::read_u16le(bytes.data() + body + 2);
            sample_rate = detail::read_u32le(bytes.data() + body + 4);
            bits = detail::read_u16le(bytes.data() + body + 14);
            if (format != 1) throw fail("only PCM (format 1) is supported");
            if (bits != 16) throw fail("only 16-bit samples are supported");
            if (channels < 1 || channels > 2) throw fail("only 1 or 2 channels are supported");
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data_off = body;
            data_len = len;
        }
        pos = body + len + (len & 1);  // chunks are word-aligned
    }
    if (!have_fmt) throw fail("no fmt chunk");
    if (data_off == 0) throw fail("no data chunk");
    if (sample_rate == 0) throw fail("zero sample rate");

    const std::size_t frame_bytes = 2u * channels;
    const std::size_t frames = data_len / frame_bytes;
    if (frames == 0) throw fail("empty data chunk");

    AudioSignal out;
    out.sample_rate = sample_rate;
    out.samples.resize(frames);
    const unsigned char* p = bytes.data() + data_off;
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (unsigned ch = 0; ch < channels; ++ch) {
            const std::int16_t s =
                static_cast<std::int16_t>(detail::read_u16le(p + i * frame_bytes + 2 * ch));
            acc += static_cast<double>(s) / 32768.0;
        }
        out.samples[i] = acc / channels;
    }
    return out;
}

inline void write_wav_pcm16(const std::filesystem::path& path, const std::vector<double>& samples,
                            unsigned sample_rate) {
    std::vector<unsigned char> bytes;
    bytes.reserve(44 + samples.size() * 2);
    const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
    bytes.insert(bytes.end(), {'R', 'I', 'F', 'F'});
    detail::push_u32le(bytes, 36 + data_len);
    bytes.insert(bytes.end(), {'W', 'A', 'V', 'E'});
    bytes.insert(bytes.end(), {'f', 'm', 't', ' '});
    detail::push_u32le(bytes, 16);
    detail::push_u16le(bytes, 1);  // PCM
    detail::push_u16le(bytes, 1);  // mono
    detail::push_u32le(bytes, sample_rate);
    detail::push_u32le(bytes, sample_rate * 2);
    detail::push_u16le(bytes, 2);
    detail::push_u16le(bytes, 16);
    bytes.insert(bytes.end(), {'d', 'a', 't', 'a'});
    detail::push_u32le(bytes, data_len);
    for (const double v : samples) {
        double c = v;
        if (c > 1.0) c = 1.0;
        if (c < -1.0) c = -1.0;
        const auto s = static_cast<std::int16_t>(std::lrint(c * 32767.0));
        detail::push_u16le(bytes, static_cast<std::uint16_t>(s));
    }
    detail::write_binary_file(path, bytes);
}

// Linear-interpolation resampler. Identity when the rate already matches.
inline AudioSignal resample_linear(const AudioSignal& in, unsigned target_rate) {
    in.validate();
    if (target_rate == 0) throw ValidationError("target sample rate must be positive");
    if (in.sample_rate == target_rate) return in;

    const std::size_t n_in = in.samples.size();
    const double ratio = static_cast<double>(in.sample_rate) / target_rate;
    const std::size_t n_out =
        n_in == 1 ? 1
                  : static_cast<std::size_t>(
                        std::floor(static_cast<double>(n_in - 1) / ratio)) + 1;

    AudioSignal out;
    out.sample_rate = target_rate;
    out.samples.resize(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double pos = i * ratio;
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = lo + 1 < n_in ? lo + 1 : lo;
        const double frac = pos - static_cast<double>(lo);
        out.samples[i] = in.samples[lo] * (1.0 - frac) + in.samples[hi] * frac;
    }
    return out;
}

}  // namespace camid
