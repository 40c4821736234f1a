#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "camid/error.hpp"
#include "camid/net.hpp"
#include "camid/spectro.hpp"

namespace camid {

// Everything an experiment run needs, loaded from one JSON document.
// Unknown keys are rejected so typos fail loudly.
struct RunConfig {
    std::uint64_t seed = 42;
    std::size_t folds = 5;
    bool train_jointly = false;     // default: one model per category
    bool standardize_inputs = true; // per-sample zero-mean/unit-std at assembly

    struct Spectro {
        unsigned sample_rate = 22050;  // audio is resampled to this
        // 64 bands: the finest default resolution (1024-sample windows at
        // 22050 Hz) cannot keep 128 snapped centers distinct; 64 leaves margin.
        std::size_t num_mels = 64;
        double epsilon = 1e-6;
        std::size_t target_frames = 0;  // 0: use the middle resolution's count
        double f_min = 0.0;
        double f_max = 0.0;  // 0: Nyquist
        std::array<StftConfig, 3> resolutions{{{1024, 256, WindowKind::Hann},
                                               {2048, 512, WindowKind::Hann},
                                               {4096, 1024, WindowKind::Hann}}};
    } spectro;

    struct Frames {
        std::size_t size = 256;        // square resize target
        std::size_t per_video = 32;    // uniform subsample cap
    } frames;

    TrainConfig train;

    struct Fusion {
        double floor = 1e-12;
        bool normalize = false;  // display-only row normalization of fused CSVs
    } fusion;

    // Optional explicit architectures; dense units of 0 mean "class count".
    std::optional<NetworkSpec> audio_net;
    std::optional<NetworkSpec> visual_net;

    void validate() const {
        if (folds < 2) throw ValidationError("config: folds must be >= 2");
        if (spectro.sample_rate == 0) throw ValidationError("config: sample_rate must be > 0");
        if (spectro.num_mels < 1) throw ValidationError("config: num_mels must be >= 1");
        if (!(spectro.epsilon > 0.0)) throw ValidationError("config: epsilon must be > 0");
        for (const auto& r : spectro.resolutions) r.validate();
        if (frames.size < 4) throw ValidationError("config: frame size must be >= 4");
        if (frames.per_video < 1) throw ValidationError("config: frames per_video must be >= 1");
        train.validate();
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ValidationError("config: unknown key '" + key + "' in " + where);
    }
}

inline StftConfig stft_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"window_size", "hop_size", "window"}, "stft resolution");
    StftConfig c;
    c.window_size = j.value("window_size", c.window_size);
    c.hop_size = j.value("hop_size", c.hop_size);
    if (j.contains("window")) c.window_kind = window_kind_from_string(j.at("window"));
    return c;
}

inline nlohmann::json stft_to_json(const StftConfig& c) {
    return {{"window_size", c.window_size},
            {"hop_size", c.hop_size},
            {"window", to_string(c.window_kind)}};
}

inline NetworkSpec net_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"layers"}, "network");
    NetworkSpec spec;  // input shape and class count get filled by the pipeline
    for (const auto& lj : j.at("layers")) {
        detail::reject_unknown_keys(
            lj, {"kind", "out_channels", "kernel", "stride", "padding", "units"}, "layer");
        LayerSpec l;
        l.kind = layer_kind_from_string(lj.at("kind"));
        l.out_channels = lj.value("out_channels", std::size_t{0});
        l.kernel = lj.value("kernel", std::size_t{0});
        l.stride = lj.value("stride", std::size_t{1});
        l.padding = lj.value("padding", std::size_t{0});
        l.units = lj.value("units", std::size_t{0});
        spec.layers.push_back(l);
    }
    return spec;
}

inline nlohmann::json net_to_json(const NetworkSpec& spec) {
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerSpec& l : spec.layers) {
        nlohmann::json lj = {{"kind", to_string(l.kind)}};
        if (l.kind == LayerKind::Conv2d) {
            lj["out_channels"] = l.out_channels;
            lj["kernel"] = l.kernel;
            lj["stride"] = l.stride;
            lj["padding"] = l.padding;
        } else if (l.kind == LayerKind::MaxPool2d) {
            lj["kernel"] = l.kernel;
            lj["stride"] = l.stride;
        } else if (l.kind == LayerKind::Dense) {
            lj["units"] = l.units;
        }
        layers.push_back(lj);
    }
    return {{"layers", layers}};
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
                                {"seed", "folds", "train_jointly", "standardize_inputs", "spectro",
                                 "frames", "train", "fusion", "audio_net", "visual_net"},
                                "top level");
    RunConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.folds = j.value("folds", cfg.folds);
        cfg.train_jointly = j.value("train_jointly", cfg.train_jointly);
        cfg.standardize_inputs = j.value("standardize_inputs", cfg.standardize_inputs);
        if (j.contains("spectro")) {
            const auto& s = j.at("spectro");
            detail::reject_unknown_keys(
                s, {"sample_rate", "num_mels", "epsilon", "target_frames", "f_min", "f_max",
                    "resolutions"},
                "spectro");
            cfg.spectro.sample_rate = s.value("sample_rate", cfg.spectro.sample_rate);
            cfg.spectro.num_mels = s.value("num_mels", cfg.spectro.num_mels);
            cfg.spectro.epsilon = s.value("epsilon", cfg.spectro.epsilon);
            cfg.spectro.target_frames = s.value("target_frames", cfg.spectro.target_frames);
            cfg.spectro.f_min = s.value("f_min", cfg.spectro.f_min);
            cfg.spectro.f_max = s.value("f_max", cfg.spectro.f_max);
            if (s.contains("resolutions")) {
                const auto& res = s.at("resolutions");
                if (!res.is_array() || res.size() != 3) {
                    throw ValidationError("config: spectro.resolutions must list exactly 3 entries");
                }
                for (std::size_t i = 0; i < 3; ++i) {
                    cfg.spectro.resolutions[i] = detail::stft_from_json(res[i]);
                }
            }
        }
        if (j.contains("frames")) {
            const auto& f = j.at("frames");
            detail::reject_unknown_keys(f, {"size", "per_video"}, "frames");
            cfg.frames.size = f.value("size", cfg.frames.size);
            cfg.frames.per_video = f.value("per_video", cfg.frames.per_video);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            detail::reject_unknown_keys(
                t, {"learning_rate", "batch_size", "epochs", "init_scale"}, "train");
            cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            cfg.train.init_scale = t.value("init_scale", cfg.train.init_scale);
        }
        if (j.contains("fusion")) {
            const auto& f = j.at("fusion");
            detail::reject_unknown_keys(f, {"floor", "normalize"}, "fusion");
            cfg.fusion.floor = f.value("floor", cfg.fusion.floor);
            cfg.fusion.normalize = f.value("normalize", cfg.fusion.normalize);
        }
        if (j.contains("audio_net")) cfg.audio_net = detail::net_from_json(j.at("audio_net"));
        if (j.contains("visual_net")) cfg.visual_net = detail::net_from_json(j.at("visual_net"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

// All fields materialized, defaults included, for run provenance.
inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["folds"] = cfg.folds;
    j["train_jointly"] = cfg.train_jointly;
    j["standardize_inputs"] = cfg.standardize_inputs;
    j["spectro"] = {{"sample_rate", cfg.spectro.sample_rate},
                    {"num_mels", cfg.spectro.num_mels},
                    {"epsilon", cfg.spectro.epsilon},
                    {"target_frames", cfg.spectro.target_frames},
                    {"f_min", cfg.spectro.f_min},
                    {"f_max", cfg.spectro.f_max},
                    {"resolutions",
                     {detail::stft_to_json(cfg.spectro.resolutions[0]),
                      detail::stft_to_json(cfg.spectro.resolutions[1]),
                      detail::stft_to_json(cfg.spectro.resolutions[2])}}};
    j["frames"] = {{"size", cfg.frames.size}, {"per_video", cfg.frames.per_video}};
    j["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"init_scale", cfg.train.init_scale}};
    j["fusion"] = {{"floor", cfg.fusion.floor}, {"normalize", cfg.fusion.normalize}};
    if (cfg.audio_net) j["audio_net"] = detail::net_to_json(*cfg.audio_net);
    if (cfg.visual_net) j["visual_net"] = detail::net_to_json(*cfg.visual_net);
    return j;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

inline void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
    write_text_file(path, run_config_to_json(cfg).dump(2) + "\n");
}

}  // namespace camid
