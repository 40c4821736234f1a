#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "camid/audio.hpp"
#include "camid/config.hpp"
#include "camid/image.hpp"
#include "camid/rng.hpp"

namespace camid {

// Synthetic 5-class dataset: each class is a fixed two-tone chord buried in
// Gaussian noise at 10 dB SNR plus video frames tinted with a class color
// under per-pixel noise. Both modalities are separable, which is the point:
// the end-to-end suite needs a dataset a small network can actually learn.
struct SynthSpec {
    std::size_t classes = 5;
    std::size_t videos_per_class = 50;
    std::size_t frames_per_video = 8;
    std::size_t frame_size = 48;       // generated; the pipeline resizes down
    unsigned sample_rate = 22050;
    double duration_s = 1.0;
    double snr_db = 10.0;
    std::uint64_t seed = 42;
};

namespace detail {

inline constexpr std::array<std::array<double, 2>, 5> kToneHz = {{
    {500.0, 1500.0},
    {2200.0, 3200.0},
    {3900.0, 4900.0},
    {5600.0, 6600.0},
    {7300.0, 8300.0},
}};

inline constexpr std::array<std::array<double, 3>, 5> kClassColor = {{
    {0.85, 0.15, 0.15},
    {0.15, 0.85, 0.15},
    {0.15, 0.15, 0.85},
    {0.85, 0.85, 0.15},
    {0.15, 0.85, 0.85},
}};

}  // namespace detail

// Fixture-sized run settings: same feature resolutions as the defaults,
// smaller images and a short training schedule so five folds finish in
// minutes on one core.
inline RunConfig synth_run_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.spectro.num_mels = 40;
    cfg.spectro.target_frames = 40;
    cfg.frames.size = 16;
    cfg.frames.per_video = 4;
    cfg.train.learning_rate = 0.07;
    cfg.train.batch_size = 16;
    cfg.train.epochs = 20;
    return cfg;
}

// Writes audio/, frames/, manifest.csv and config.json under `out`.
inline void generate_synth_fixture(const std::filesystem::path& out, const SynthSpec& spec) {
    if (spec.classes > detail::kToneHz.size()) {
        throw ValidationError("synth fixture supports at most " +
                              std::to_string(detail::kToneHz.size()) + " classes");
    }
    std::filesystem::create_directories(out / "audio");
    std::filesystem::create_directories(out / "frames");

    const auto n_samples =
        static_cast<std::size_t>(spec.duration_s * static_cast<double>(spec.sample_rate));
    // Two half-amplitude sines carry power 0.25; scale noise for the target SNR.
    const double signal_power = 0.25;
    const double noise_sigma =
        std::sqrt(signal_power / std::pow(10.0, spec.snr_db / 10.0));

    std::string manifest = "video_id,class_id,category,audio_path,frames_dir\n";
    for (std::size_t cls = 0; cls < spec.classes; ++cls) {
        for (std::size_t v = 0; v < spec.videos_per_class; ++v) {
            const std::string video_id =
                "c" + std::to_string(cls) + "_v" + (v < 10 ? "0" : "") + std::to_string(v);
            Rng rng(derive_seed(spec.seed, "synth-" + video_id));

            const double f1 = detail::kToneHz[cls][0];
            const double f2 = detail::kToneHz[cls][1];
            const double phi1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double phi2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
            std::vector<double> samples(n_samples);
            for (std::size_t i = 0; i < n_samples; ++i) {
                const double t = static_cast<double>(i) / spec.sample_rate;
                samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * f1 * t + phi1) +
                             0.5 * std::sin(2.0 * std::numbers::pi * f2 * t + phi2) +
                             noise_sigma * rng.normal();
            }
            const std::filesystem::path wav = out / "audio" / (video_id + ".wav");
            write_wav_pcm16(wav, samples, spec.sample_rate);

            const std::filesystem::path frames_dir = out / "frames" / video_id;
            std::filesystem::create_directories(frames_dir);
            for (std::size_t f = 0; f < spec.frames_per_video; ++f) {
                RgbImage img;
                img.width = spec.frame_size;
                img.height = spec.frame_size;
                img.pixels.resize(spec.frame_size * spec.frame_size * 3);
                for (std::size_t p = 0; p < img.pixels.size(); ++p) {
                    const double base = detail::kClassColor[cls][p % 3];
                    img.pixels[p] = std::clamp(base + rng.uniform(-0.15, 0.15), 0.0, 1.0);
                }
                // zero-padded so directory listings sort in frame order
                char name[20];
                std::snprintf(name, sizeof(name), "frame_%03zu.png", f);
                write_png(frames_dir / name, img);
            }

            manifest += video_id + "," + std::to_string(cls) + ",native,audio/" + video_id +
                        ".wav,frames/" + video_id + "\n";
        }
    }
    write_text_file(out / "manifest.csv", manifest);
    save_run_config(out / "config.json", synth_run_config(spec.seed));
}

}  // namespace camid
