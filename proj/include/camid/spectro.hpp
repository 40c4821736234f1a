#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "camid/audio.hpp"
#include "camid/error.hpp"

namespace camid {

enum class WindowKind { Hann, Rect };

inline const char* to_string(WindowKind k) {
    return k == WindowKind::Hann ? "hann" : "rect";
}

inline WindowKind window_kind_from_string(const std::string& s) {
    if (s == "hann") return WindowKind::Hann;
    if (s == "rect") return WindowKind::Rect;
    throw ValidationError("unknown window kind: '" + s + "'");
}

// One STFT resolution. Window sizes are powers of two so the transform can
// run on the radix-2 FFT.
struct StftConfig {
    std::size_t window_size = 1024;
    std::size_t hop_size = 256;
    WindowKind window_kind = WindowKind::Hann;

    void validate() const {
        if (window_size < 2) throw ValidationError("window_size must be >= 2");
        if ((window_size & (window_size - 1)) != 0) {
            throw ValidationError("window_size must be a power of two, got " +
                                  std::to_string(window_size));
        }
        if (hop_size < 1) throw ValidationError("hop_size must be >= 1");
        if (hop_size > window_size) throw ValidationError("hop_size must not exceed window_size");
    }
};

// Symmetric window taper, coefficients in [0, 1].
inline std::vector<double> make_window(WindowKind kind, std::size_t window_size) {
    if (window_size < 2) throw ValidationError("window size must be >= 2");
    std::vector<double> w(window_size, 1.0);
    if (kind == WindowKind::Hann) {
        const double denom = static_cast<double>(window_size - 1);
        for (std::size_t i = 0; i < window_size; ++i) {
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
        }
    }
    return w;
}

// Magnitude spectrogram, frames x bins row-major. bins = window/2 + 1,
// frames = floor((len - window) / hop) + 1 (trailing partial windows dropped).
struct Spectrogram {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<double> magnitudes;
    std::vector<double> frame_times;  // seconds, window centers
    std::vector<double> bin_freqs;    // Hz

    double& at(std::size_t t, std::size_t f) { return magnitudes[t * bins + f]; }
    double at(std::size_t t, std::size_t f) const { return magnitudes[t * bins + f]; }
};

namespace detail {

// In-place iterative radix-2 FFT. Size must be a power of two.
inline void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
    const std::size_t n = re.size();
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::size_t a = i + k, b = i + k + len / 2;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

}  // namespace detail

// Windowed, hopped DFT magnitudes. Frames start at t*hop; no padding, so a
// signal shorter than one window is an error.
inline Spectrogram stft(const AudioSignal& signal, const StftConfig& cfg) {
    cfg.validate();
    signal.validate();
    const std::size_t n = signal.samples.size();
    const std::size_t w = cfg.window_size;
    if (n < w) {
        throw DataError("signal too short for STFT: " + std::to_string(n) + " samples < window " +
                        std::to_string(w));
    }

    Spectrogram out;
    out.frames = (n - w) / cfg.hop_size + 1;
    out.bins = w / 2 + 1;
    out.magnitudes.resize(out.frames * out.bins);
    out.frame_times.resize(out.frames);
    out.bin_freqs.resize(out.bins);
    for (std::size_t f = 0; f < out.bins; ++f) {
        out.bin_freqs[f] =
            static_cast<double>(f) * signal.sample_rate / static_cast<double>(w);
    }

    const auto window = make_window(cfg.window_kind, w);
    std::vector<double> re(w), im(w);
    for (std::size_t t = 0; t < out.frames; ++t) {
        const std::size_t off = t * cfg.hop_size;
        out.frame_times[t] =
            (static_cast<double>(off) + static_cast<double>(w) / 2.0) / signal.sample_rate;
        for (std::size_t i = 0; i < w; ++i) {
            re[i] = signal.samples[off + i] * window[i];
            im[i] = 0.0;
        }
        detail::fft_radix2(re, im);
        for (std::size_t f = 0; f < out.bins; ++f) {
            out.at(t, f) = std::hypot(re[f], im[f]);
        }
    }
    return out;
}

// Hz -> Mel, 2595 * log10(1 + f/700).
inline double mel_scale(double hz) {
    if (hz < 0.0) throw ValidationError("mel_scale: frequency must be non-negative");
    return 2595.0 * std::log10(1.0 + hz / 700.0);
}

// Mel -> Hz, the inverse map.
inline double inverse_mel(double mel) {
    if (mel < 0.0) throw ValidationError("inverse_mel: mel value must be non-negative");
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular Mel filterbank, bins x mels row-major, weights in [0, 1].
// Edge/center frequencies are snapped to the STFT bin grid, so each filter
// peaks at exactly 1 on the bin nearest its Mel-spaced center.
struct MelFilterBank {
    std::size_t bins = 0;
    std::size_t mels = 0;
    std::vector<double> weights;
    std::vector<double> center_freqs;  // mels + 2 snapped edge/center points, Hz
    double f_min = 0.0;
    double f_max = 0.0;

    double& at(std::size_t bin, std::size_t mel) { return weights[bin * mels + mel]; }
    double at(std::size_t bin, std::size_t mel) const { return weights[bin * mels + mel]; }
};

inline MelFilterBank build_filterbank(std::size_t num_bins, std::size_t num_mels, double f_min,
                                      double f_max, double sample_rate) {
    if (num_mels < 1) throw ValidationError("filterbank needs at least one Mel band");
    if (num_bins < num_mels + 2) {
        throw ValidationError("filterbank needs num_bins >= num_mels + 2 (got " +
                              std::to_string(num_bins) + " bins for " + std::to_string(num_mels) +
                              " bands)");
    }
    if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0)) {
        throw ValidationError("filterbank frequency range must satisfy 0 <= f_min < f_max <= "
                              "sample_rate/2");
    }

    // Bin k sits at k * (sr/2) / (num_bins - 1) Hz.
    const double bin_step = (sample_rate / 2.0) / static_cast<double>(num_bins - 1);

    const double mel_lo = mel_scale(f_min);
    const double mel_hi = mel_scale(f_max);
    std::vector<std::size_t> point_bins(num_mels + 2);
    MelFilterBank bank;
    bank.bins = num_bins;
    bank.mels = num_mels;
    bank.f_min = f_min;
    bank.f_max = f_max;
    bank.center_freqs.resize(num_mels + 2);
    for (std::size_t i = 0; i < num_mels + 2; ++i) {
        const double mel =
            mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(num_mels + 1);
        const double hz = inverse_mel(mel);
        std::size_t bin = static_cast<std::size_t>(std::lrint(hz / bin_step));
        if (bin >= num_bins) bin = num_bins - 1;
        point_bins[i] = bin;
        bank.center_freqs[i] = bin * bin_step;
    }
    for (std::size_t i = 1; i < num_mels + 2; ++i) {
        if (point_bins[i] <= point_bins[i - 1]) {
            throw ValidationError("degenerate Mel filterbank: filter " + std::to_string(i - 1) +
                                  " has no frequency support; reduce num_mels or enlarge the FFT");
        }
    }

    bank.weights.assign(num_bins * num_mels, 0.0);
    for (std::size_t p = 0; p < num_mels; ++p) {
        const double f_lo = bank.center_freqs[p];
        const double f_c = bank.center_freqs[p + 1];
        const double f_hi = bank.center_freqs[p + 2];
        for (std::size_t k = point_bins[p]; k <= point_bins[p + 2]; ++k) {
            const double f = k * bin_step;
            double w = 0.0;
            if (f >= f_lo && f < f_c) {
                w = (f - f_lo) / (f_c - f_lo);
            } else if (f >= f_c && f < f_hi) {
                w = (f_hi - f) / (f_hi - f_c);
            }
            bank.at(k, p) = w;
        }
    }
    return bank;
}

// ln(X H + eps), frames x mels. Every value is >= ln(eps).
struct LogMelSpectrogram {
    std::size_t frames = 0;
    std::size_t mels = 0;
    std::vector<double> values;
    double epsilon = 0.0;

    double& at(std::size_t t, std::size_t m) { return values[t * mels + m]; }
    double at(std::size_t t, std::size_t m) const { return values[t * mels + m]; }
};

inline LogMelSpectrogram log_mel(const Spectrogram& spec, const MelFilterBank& bank,
                                 double epsilon) {
    if (!(epsilon > 0.0)) throw ValidationError("log_mel epsilon must be > 0");
    if (spec.bins != bank.bins) {
        throw ShapeError("log_mel: spectrogram has " + std::to_string(spec.bins) +
                         " bins but filterbank expects " + std::to_string(bank.bins));
    }

    // Column support ranges; the filterbank is sparse.
    std::vector<std::size_t> lo(bank.mels, bank.bins), hi(bank.mels, 0);
    for (std::size_t k = 0; k < bank.bins; ++k) {
        for (std::size_t p = 0; p < bank.mels; ++p) {
            if (bank.at(k, p) != 0.0) {
                if (k < lo[p]) lo[p] = k;
                if (k + 1 > hi[p]) hi[p] = k + 1;
            }
        }
    }

    LogMelSpectrogram out;
    out.frames = spec.frames;
    out.mels = bank.mels;
    out.epsilon = epsilon;
    out.values.resize(out.frames * out.mels);
    for (std::size_t t = 0; t < spec.frames; ++t) {
        const double* row = &spec.magnitudes[t * spec.bins];
        for (std::size_t p = 0; p < bank.mels; ++p) {
            double acc = 0.0;
            for (std::size_t k = lo[p]; k < hi[p]; ++k) {
                acc += row[k] * bank.at(k, p);
            }
            out.at(t, p) = std::log(acc + epsilon);
        }
    }
    return out;
}

// Corner-aligned linear resampling along the frame (time) axis.
inline std::vector<double> resample_time_linear(const std::vector<double>& values,
                                                std::size_t frames, std::size_t mels,
                                                std::size_t target_frames) {
    if (target_frames < 1) throw ValidationError("target frame count must be >= 1");
    if (frames * mels != values.size()) throw ShapeError("resample_time_linear: bad dimensions");
    if (frames == target_frames) return values;

    std::vector<double> out(target_frames * mels);
    for (std::size_t i = 0; i < target_frames; ++i) {
        double pos = 0.0;
        if (target_frames > 1 && frames > 1) {
            pos = static_cast<double>(i) * static_cast<double>(frames - 1) /
                  static_cast<double>(target_frames - 1);
        }
        auto t0 = static_cast<std::size_t>(pos);
        if (t0 >= frames - 1) t0 = frames - 1;
        const std::size_t t1 = t0 + 1 < frames ? t0 + 1 : t0;
        const double frac = pos - static_cast<double>(t0);
        for (std::size_t m = 0; m < mels; ++m) {
            out[i * mels + m] =
                values[t0 * mels + m] * (1.0 - frac) + values[t1 * mels + m] * frac;
        }
    }
    return out;
}

// Three STFT resolutions stacked into one 3 x frames x mels image.
struct LogMelImage {
    std::size_t frames = 0;
    std::size_t mels = 0;
    std::array<StftConfig, 3> source_configs{};
    std::vector<double> values;  // channel-major, 3 * frames * mels

    double& at(std::size_t c, std::size_t t, std::size_t m) {
        return values[(c * frames + t) * mels + m];
    }
    double at(std::size_t c, std::size_t t, std::size_t m) const {
        return values[(c * frames + t) * mels + m];
    }
};

// Each channel runs stft -> log_mel independently, then is resampled along
// the time axis to target_frames so the channels align.
inline LogMelImage three_channel_logmel(const AudioSignal& signal,
                                        const std::array<StftConfig, 3>& cfgs,
                                        std::size_t num_mels, double epsilon,
                                        std::size_t target_frames, double f_min = 0.0,
                                        double f_max = 0.0) {
    if (target_frames < 1) throw ValidationError("target frame count must be >= 1");
    const double nyquist = signal.sample_rate / 2.0;
    const double hi = f_max > 0.0 ? f_max : nyquist;

    LogMelImage img;
    img.frames = target_frames;
    img.mels = num_mels;
    img.source_configs = cfgs;
    img.values.resize(3 * target_frames * num_mels);
    for (std::size_t c = 0; c < 3; ++c) {
        const Spectrogram spec = stft(signal, cfgs[c]);
        const MelFilterBank bank =
            build_filterbank(spec.bins, num_mels, f_min, hi, signal.sample_rate);
        const LogMelSpectrogram lm = log_mel(spec, bank, epsilon);
        const auto resampled =
            resample_time_linear(lm.values, lm.frames, lm.mels, target_frames);
        std::memcpy(&img.values[c * target_frames * num_mels], resampled.data(),
                    resampled.size() * sizeof(double));
    }
    return img;
}

// --- LMG1 feature file -----------------------------------------------------
// magic "LMG1", u32 channels, u32 frames, u32 mels (little-endian), then
// channel-major float32 little-endian values.

inline void write_logmel_image(const std::filesystem::path& path, const LogMelImage& img) {
    std::vector<unsigned char> bytes;
    bytes.reserve(16 + img.values.size() * 4);
    bytes.insert(bytes.end(), {'L', 'M', 'G', '1'});
    detail::push_u32le(bytes, 3);
    detail::push_u32le(bytes, static_cast<std::uint32_t>(img.frames));
    detail::push_u32le(bytes, static_cast<std::uint32_t>(img.mels));
    for (const double v : img.values) {
        const auto f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        detail::push_u32le(bytes, u);
    }
    detail::write_binary_file(path, bytes);
}

inline LogMelImage read_logmel_image(const std::filesystem::path& path) {
    const auto bytes = detail::read_binary_file(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), "LMG1", 4) != 0) {
        throw DataError("not an LMG1 feature file: " + path.string());
    }
    const std::uint32_t channels = detail::read_u32le(bytes.data() + 4);
    const std::uint32_t frames = detail::read_u32le(bytes.data() + 8);
    const std::uint32_t mels = detail::read_u32le(bytes.data() + 12);
    if (channels != 3) {
        throw DataError("LMG1 file must have 3 channels: " + path.string());
    }
    const std::size_t count = static_cast<std::size_t>(channels) * frames * mels;
    if (bytes.size() != 16 + count * 4) {
        throw DataError("LMG1 file has wrong payload size: " + path.string());
    }
    LogMelImage img;
    img.frames = frames;
    img.mels = mels;
    img.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t u = detail::read_u32le(bytes.data() + 16 + i * 4);
        float f;
        std::memcpy(&f, &u, 4);
        img.values[i] = static_cast<double>(f);
    }
    return img;
}

}  // namespace camid
