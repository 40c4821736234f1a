#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "camid/config.hpp"
#include "camid/evalstat.hpp"
#include "camid/fusion.hpp"
#include "camid/image.hpp"
#include "camid/manifest.hpp"
#include "camid/net.hpp"
#include "camid/report.hpp"
#include "camid/spectro.hpp"

namespace camid {

namespace fs = std::filesystem;

inline const std::vector<std::string>& modalities() {
    static const std::vector<std::string> m = {"audio", "visual"};
    return m;
}

// Training scope name when one model serves every category.
inline constexpr const char* kJointScope = "joint";

struct PipelineContext {
    fs::path out;
    RunConfig config;
    DatasetManifest manifest;

    std::vector<const ManifestEntry*> category_videos(const std::string& category) const {
        if (category == kJointScope) {
            std::vector<const ManifestEntry*> all;
            for (const auto& e : manifest.entries) all.push_back(&e);
            return all;
        }
        return manifest.in_category(category);
    }
};

inline fs::path fold_dir(const fs::path& out, std::size_t fold) {
    return out / ("fold" + std::to_string(fold));
}

inline fs::path category_dir(const fs::path& out, std::size_t fold, const std::string& category) {
    return fold_dir(out, fold) / category;
}

inline fs::path cell_dir(const fs::path& out, std::size_t fold, const std::string& category,
                         const std::string& modality) {
    return category_dir(out, fold, category) / modality;
}

namespace detail {

// Rethrow with stage context, keeping the error type (and thus exit code).
template <typename F>
auto with_context(const std::string& prefix, F&& f) {
    try {
        return f();
    } catch (const ValidationError& e) {
        throw ValidationError(prefix + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(prefix + ": " + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError(prefix + ": " + e.what());
    }
}

// Joint zero-mean/unit-std over all channels of one sample. Keeping a
// single scale per sample preserves the relative channel levels (which
// carry the class signal) while taming the raw log/pixel ranges.
inline void standardize_inplace(Tensor& t) {
    if (t.data.empty()) return;
    double mean = 0.0;
    for (const double v : t.data) mean += v;
    mean /= static_cast<double>(t.data.size());
    double ss = 0.0;
    for (const double v : t.data) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(t.data.size()));
    if (sd < 1e-12) sd = 1.0;
    for (double& v : t.data) v = (v - mean) / sd;
}

inline Tensor feature_to_tensor(LogMelImage img) {
    Tensor t;
    t.shape = {3, img.frames, img.mels};
    t.data = std::move(img.values);
    return t;
}

inline std::string fold_csv_name(const std::string& category) {
    return "folds_" + category + ".csv";
}

}  // namespace detail

// --- truth CSV -------------------------------------------------------------

inline void write_truth_csv(const fs::path& path,
                            const std::vector<std::pair<std::string, int>>& rows) {
    std::string out = "sample_id,class_id\n";
    for (const auto& [id, cls] : rows) out += id + "," + std::to_string(cls) + "\n";
    write_text_file(path, out);
}

inline std::vector<std::pair<std::string, int>> read_truth_csv(const fs::path& path) {
    const auto rows = read_csv(path);
    const std::string where = path.string();
    if (rows.empty() || rows[0] != std::vector<std::string>{"sample_id", "class_id"}) {
        throw DataError("not a truth CSV (expected sample_id,class_id header): " + where);
    }
    std::vector<std::pair<std::string, int>> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 2) throw DataError("malformed truth row in " + where);
        out.emplace_back(rows[r][0], static_cast<int>(parse_long(rows[r][1], where)));
    }
    return out;
}

// --- extraction --------------------------------------------------------------

// Number of frames the middle STFT resolution produces for this signal;
// used when the config leaves target_frames at 0.
inline std::size_t middle_resolution_frames(const AudioSignal& signal, const RunConfig& cfg) {
    const StftConfig& mid = cfg.spectro.resolutions[1];
    if (signal.samples.size() < mid.window_size) {
        throw DataError("audio too short for the middle STFT resolution");
    }
    return (signal.samples.size() - mid.window_size) / mid.hop_size + 1;
}

inline AudioSignal load_audio(const fs::path& path, unsigned sample_rate) {
    return resample_linear(read_wav(path), sample_rate);
}

// Computes fold splits, materializes config + manifest into `out`, then
// writes per-video audio features (3-channel log-Mel) and resized frame
// tensors. Stratification runs first so an impossible split fails before
// any feature work.
inline void extract_features(const DatasetManifest& manifest, RunConfig cfg, const fs::path& out) {
    cfg.validate();
    if (manifest.num_classes() < 2) {
        throw ValidationError("dataset needs at least 2 classes");
    }

    fs::create_directories(out);

    // Fold plans per category (every category uses its own derived seed).
    for (const std::string& category : manifest.categories()) {
        const auto videos = manifest.in_category(category);
        std::vector<int> labels;
        std::vector<std::string> ids;
        for (const auto* v : videos) {
            labels.push_back(v->class_id);
            ids.push_back(v->video_id);
        }
        const auto folds = detail::with_context(
            "category " + category, [&] {
                return stratified_kfold(labels, cfg.folds,
                                        derive_seed(cfg.seed, "folds-" + category));
            });
        write_folds_csv(out / detail::fold_csv_name(category), folds, ids);
    }

    // Pin the time axis now so every feature file agrees and the
    // materialized config is self-contained.
    if (cfg.spectro.target_frames == 0) {
        const auto probe =
            load_audio(manifest.entries.front().audio_path, cfg.spectro.sample_rate);
        cfg.spectro.target_frames = middle_resolution_frames(probe, cfg);
    }
    save_run_config(out / "config.json", cfg);
    write_manifest(out / "manifest.csv", manifest);

    fs::create_directories(out / "features" / "audio");
    for (const ManifestEntry& e : manifest.entries) {
        detail::with_context("video '" + e.video_id + "'", [&] {
            const AudioSignal signal = load_audio(e.audio_path, cfg.spectro.sample_rate);
            const LogMelImage img = three_channel_logmel(
                signal, cfg.spectro.resolutions, cfg.spectro.num_mels, cfg.spectro.epsilon,
                cfg.spectro.target_frames, cfg.spectro.f_min, cfg.spectro.f_max);
            write_logmel_image(out / "features" / "audio" / (e.video_id + ".lmg"), img);

            const auto frames = list_frames(e.frames_dir);
            const auto picks = subsample_indices(frames.size(), cfg.frames.per_video);
            const fs::path vdir = out / "features" / "visual" / e.video_id;
            fs::create_directories(vdir);
            for (std::size_t i = 0; i < picks.size(); ++i) {
                const RgbImage frame = load_frame(frames[picks[i]]);
                const RgbImage resized = resize_bilinear(frame, cfg.frames.size, cfg.frames.size);
                const Tensor t = to_tensor(resized);
                LogMelImage fimg;
                fimg.frames = cfg.frames.size;
                fimg.mels = cfg.frames.size;
                fimg.values = t.data;
                char name[32];
                std::snprintf(name, sizeof name, "f%03zu.lmg", i);
                write_logmel_image(vdir / name, fimg);
            }
        });
    }
}

// Opens an artifacts directory produced by extract_features.
inline PipelineContext open_pipeline(const fs::path& out) {
    if (!fs::is_regular_file(out / "config.json") || !fs::is_regular_file(out / "manifest.csv")) {
        throw ValidationError("artifacts directory " + out.string() +
                              " is missing config.json/manifest.csv; run extract first");
    }
    PipelineContext ctx;
    ctx.out = out;
    ctx.config = load_run_config(out / "config.json");
    ctx.manifest = validate_manifest(out / "manifest.csv");
    return ctx;
}

// --- sample assembly ---------------------------------------------------------

inline Tensor load_audio_sample(const PipelineContext& ctx, const std::string& video_id) {
    Tensor t = detail::feature_to_tensor(
        read_logmel_image(ctx.out / "features" / "audio" / (video_id + ".lmg")));
    if (ctx.config.standardize_inputs) detail::standardize_inplace(t);
    return t;
}

inline std::vector<Tensor> load_visual_samples(const PipelineContext& ctx,
                                               const std::string& video_id) {
    const fs::path vdir = ctx.out / "features" / "visual" / video_id;
    if (!fs::is_directory(vdir)) {
        throw DataError("missing visual features for video '" + video_id + "'");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(vdir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".lmg") {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) throw DataError("no visual features for video '" + video_id + "'");
    std::sort(files.begin(), files.end());
    std::vector<Tensor> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        Tensor t = detail::feature_to_tensor(read_logmel_image(f));
        if (ctx.config.standardize_inputs) detail::standardize_inplace(t);
        out.push_back(std::move(t));
    }
    return out;
}

namespace detail {

struct SplitIds {
    std::vector<std::string> train, val, test;
};

// Video ids of one fold's splits within one category (or all categories
// merged for the joint scope).
inline SplitIds fold_split_ids(const PipelineContext& ctx, std::size_t fold,
                               const std::string& category) {
    const std::vector<std::string> cats = category == kJointScope
                                              ? ctx.manifest.categories()
                                              : std::vector<std::string>{category};
    SplitIds out;
    for (const std::string& cat : cats) {
        const auto videos = ctx.manifest.in_category(cat);
        std::vector<std::string> ids;
        for (const auto* v : videos) ids.push_back(v->video_id);
        const auto folds = read_folds_csv(ctx.out / fold_csv_name(cat), ids);
        if (fold >= folds.size()) {
            throw ValidationError("fold " + std::to_string(fold) + " out of range (have " +
                                  std::to_string(folds.size()) + ")");
        }
        for (const std::size_t i : folds[fold].train_ids) out.train.push_back(ids[i]);
        for (const std::size_t i : folds[fold].val_ids) out.val.push_back(ids[i]);
        for (const std::size_t i : folds[fold].test_ids) out.test.push_back(ids[i]);
    }
    return out;
}

inline std::map<std::string, int> label_by_video(const DatasetManifest& manifest) {
    std::map<std::string, int> m;
    for (const auto& e : manifest.entries) m[e.video_id] = e.class_id;
    return m;
}

inline std::vector<Sample> assemble_samples(const PipelineContext& ctx,
                                            const std::vector<std::string>& video_ids,
                                            const std::string& modality) {
    const auto labels = label_by_video(ctx.manifest);
    std::vector<Sample> samples;
    for (const std::string& id : video_ids) {
        const auto cls = static_cast<std::size_t>(labels.at(id));
        if (modality == "audio") {
            samples.push_back({load_audio_sample(ctx, id), cls});
        } else {
            for (Tensor& t : load_visual_samples(ctx, id)) {
                samples.push_back({std::move(t), cls});
            }
        }
    }
    return samples;
}

inline NetworkSpec network_for(const PipelineContext& ctx, const std::string& modality,
                               const std::vector<std::size_t>& input_shape) {
    const std::size_t num_classes = ctx.manifest.num_classes();
    const auto& chosen = modality == "audio" ? ctx.config.audio_net : ctx.config.visual_net;
    if (!chosen) return default_network(input_shape, num_classes);
    NetworkSpec spec = *chosen;
    spec.input_shape = input_shape;
    spec.num_classes = num_classes;
    for (LayerSpec& l : spec.layers) {
        if (l.kind == LayerKind::Dense && l.units == 0) l.units = num_classes;
    }
    spec.validate();
    return spec;
}

// Probabilities for one video under a trained model: the audio modality is
// one sample, the visual modality averages per-frame softmax outputs.
inline std::vector<double> video_probs(const PipelineContext& ctx, const NetworkSpec& spec,
                                       const ParamSet& params, const std::string& video_id,
                                       const std::string& modality) {
    if (modality == "audio") {
        auto [logits, cache] = forward(spec, params, load_audio_sample(ctx, video_id));
        return softmax(logits);
    }
    std::vector<std::vector<double>> frame_probs;
    for (const Tensor& t : load_visual_samples(ctx, video_id)) {
        auto [logits, cache] = forward(spec, params, t);
        frame_probs.push_back(softmax(logits));
    }
    return average_frame_probs(frame_probs);
}

}  // namespace detail

// --- per-fold stages ---------------------------------------------------------

// Trains one modality of one fold and writes model.nmc + train_log.json.
// `category` may be a manifest category or the joint scope.
inline void train_fold(const PipelineContext& ctx, std::size_t fold, const std::string& category,
                       const std::string& modality) {
    detail::with_context(
        "fold " + std::to_string(fold) + ", category " + category + ", modality " + modality,
        [&] {
            const auto split = detail::fold_split_ids(ctx, fold, category);
            const auto samples = detail::assemble_samples(ctx, split.train, modality);
            if (samples.empty()) throw DataError("no training samples");

            const NetworkSpec spec = detail::network_for(ctx, modality, samples[0].input.shape);
            TrainConfig tc = ctx.config.train;
            tc.seed = derive_seed(ctx.config.seed, "train-" + category + "-" + modality +
                                                       "-fold" + std::to_string(fold));
            const TrainResult result = train(spec, samples, tc);

            const fs::path dir = cell_dir(ctx.out, fold, category, modality);
            fs::create_directories(dir);
            save_checkpoint(dir / "model.nmc", spec, result.params);

            // Validation accuracy is monitoring only; use the serialized
            // (float32) parameters, the same ones prediction will see.
            auto [saved_spec, saved_params] = load_checkpoint(dir / "model.nmc");
            nlohmann::json log;
            log["network"] = spec.describe();
            log["param_count"] = spec.param_count();
            log["seed"] = tc.seed;
            log["train_samples"] = samples.size();
            log["loss_history"] = result.loss_history;
            if (!split.val.empty()) {
                std::vector<int> preds, truth;
                const auto labels = detail::label_by_video(ctx.manifest);
                for (const std::string& id : split.val) {
                    const auto probs =
                        detail::video_probs(ctx, saved_spec, saved_params, id, modality);
                    preds.push_back(static_cast<int>(
                        std::max_element(probs.begin(), probs.end()) - probs.begin()));
                    truth.push_back(labels.at(id));
                }
                log["val_videos"] = split.val.size();
                log["val_accuracy"] = accuracy(preds, truth);
            }
            write_text_file(dir / "train_log.json", log.dump(2) + "\n");
        });
}

// Writes probs.csv for one fold/category/modality plus the category's
// truth.csv. Predictions always run from the serialized checkpoint.
inline void predict_fold(const PipelineContext& ctx, std::size_t fold,
                         const std::string& category, const std::string& modality) {
    detail::with_context(
        "fold " + std::to_string(fold) + ", category " + category + ", modality " + modality,
        [&] {
            const std::string scope = ctx.config.train_jointly ? kJointScope : category;
            const fs::path model = cell_dir(ctx.out, fold, scope, modality) / "model.nmc";
            if (!fs::is_regular_file(model)) {
                throw ValidationError("missing checkpoint " + model.string() +
                                      "; run train first");
            }
            auto [spec, params] = load_checkpoint(model);

            const auto split = detail::fold_split_ids(ctx, fold, category);
            const auto labels = detail::label_by_video(ctx.manifest);

            ProbabilityMatrix m;
            for (std::size_t c = 0; c < spec.num_classes; ++c) {
                m.class_ids.push_back(static_cast<int>(c));
            }
            std::vector<std::pair<std::string, int>> truth;
            for (const std::string& id : split.test) {
                m.sample_ids.push_back(id);
                for (const double v : detail::video_probs(ctx, spec, params, id, modality)) {
                    m.scores.push_back(v);
                }
                truth.emplace_back(id, labels.at(id));
            }

            const fs::path dir = cell_dir(ctx.out, fold, category, modality);
            fs::create_directories(dir);
            write_probability_csv(dir / "probs.csv", m);
            write_truth_csv(category_dir(ctx.out, fold, category) / "truth.csv", truth);
        });
}

// Product or sum fusion of the two unimodal probability files of one
// fold/category.
inline void fuse_fold(const PipelineContext& ctx, std::size_t fold, const std::string& category,
                      const std::string& rule) {
    detail::with_context(
        "fold " + std::to_string(fold) + ", category " + category + ", rule " + rule, [&] {
            if (rule != "product" && rule != "sum") {
                throw ValidationError("fusion rule must be 'product' or 'sum'");
            }
            const fs::path dir = category_dir(ctx.out, fold, category);
            std::vector<ProbabilityMatrix> mats;
            for (const std::string& modality : modalities()) {
                const fs::path p = dir / modality / "probs.csv";
                if (!fs::is_regular_file(p)) {
                    throw ValidationError("missing " + p.string() + "; run predict first");
                }
                mats.push_back(read_probability_csv(p));
            }
            ProbabilityMatrix fused = rule == "product"
                                          ? product_fuse(mats, ctx.config.fusion.floor)
                                          : sum_fuse(mats);
            if (ctx.config.fusion.normalize) normalize_rows(fused);
            write_probability_csv(dir / ("fused_" + rule + ".csv"), fused);
        });
}

// --- evaluation and reports ---------------------------------------------------

inline const std::vector<std::string>& conditions() {
    static const std::vector<std::string> c = {"audio", "visual", "product", "sum"};
    return c;
}

namespace detail {

struct CellData {
    std::vector<int> truth;
    std::map<std::string, std::vector<int>> preds;  // per condition
};

// Predictions and truth for every (fold, category) cell, loaded from the
// probability CSVs so evaluation sees exactly what was written to disk.
inline std::map<std::pair<std::size_t, std::string>, CellData> collect_cells(
    const PipelineContext& ctx) {
    std::map<std::pair<std::size_t, std::string>, CellData> cells;
    for (std::size_t fold = 0; fold < ctx.config.folds; ++fold) {
        for (const std::string& category : ctx.manifest.categories()) {
            detail::with_context(
                "fold " + std::to_string(fold) + ", category " + category, [&] {
                    const fs::path dir = category_dir(ctx.out, fold, category);
                    CellData cell;
                    const auto truth_rows = read_truth_csv(dir / "truth.csv");
                    std::map<std::string, int> truth_by_id(truth_rows.begin(), truth_rows.end());

                    for (const std::string& cond : conditions()) {
                        const fs::path p = cond == "audio" || cond == "visual"
                                               ? dir / cond / "probs.csv"
                                               : dir / ("fused_" + cond + ".csv");
                        if (!fs::is_regular_file(p)) {
                            throw ValidationError("missing " + p.string() +
                                                  "; run the full pipeline first");
                        }
                        const ProbabilityMatrix m = read_probability_csv(p);
                        if (cell.truth.empty()) {
                            for (const auto& id : m.sample_ids) {
                                cell.truth.push_back(truth_by_id.at(id));
                            }
                        }
                        cell.preds[cond] = predict_classes(m);
                    }
                    cells[{fold, category}] = std::move(cell);
                });
        }
    }
    return cells;
}

inline const std::vector<std::pair<std::string, std::string>>& comparisons() {
    // system-1 vs system-2 pairs reported by the significance tables
    static const std::vector<std::pair<std::string, std::string>> c = {
        {"product", "sum"},   {"product", "audio"}, {"product", "visual"},
        {"sum", "audio"},     {"sum", "visual"},
    };
    return c;
}

}  // namespace detail

// Per-fold machine-readable metrics: accuracy_folds.csv and significance.csv.
inline void evaluate(const PipelineContext& ctx) {
    const auto cells = detail::collect_cells(ctx);
    fs::create_directories(ctx.out / "reports");

    std::string acc = "fold,category,condition,accuracy\n";
    std::string sig = "fold,category,comparison,b,c,p_value,verdict\n";
    for (const auto& [key, cell] : cells) {
        const auto& [fold, category] = key;
        for (const std::string& cond : conditions()) {
            acc += std::to_string(fold) + "," + category + "," + cond + "," +
                   format_full(accuracy(cell.preds.at(cond), cell.truth)) + "\n";
        }
        for (const auto& [sys1, sys2] : detail::comparisons()) {
            const ContingencyTable t =
                mcnemar_contingency(cell.preds.at(sys1), cell.preds.at(sys2), cell.truth);
            const double p = mcnemar_exact_p(t.b, t.c);
            sig += std::to_string(fold) + "," + category + "," + sys1 + "_vs_" + sys2 + "," +
                   std::to_string(t.b) + "," + std::to_string(t.c) + "," + format_pvalue(p) +
                   "," + to_string(classify_significance(p)) + "\n";
        }
    }
    write_text_file(ctx.out / "reports" / "accuracy_folds.csv", acc);
    write_text_file(ctx.out / "reports" / "significance.csv", sig);
}

// fused − unimodal mean-accuracy deltas (percentage points), both rules
// against both unimodal baselines.
inline std::map<std::string, double> improvement_report(
    const std::map<std::string, double>& unimodal_means,
    const std::map<std::string, double>& fused_means) {
    std::map<std::string, double> out;
    for (const auto& [fused_key, fused_val] : fused_means) {
        for (const auto& [uni_key, uni_val] : unimodal_means) {
            out[fused_key + "_vs_" + uni_key] = fused_val - uni_val;
        }
    }
    return out;
}

// Arithmetic mean of per-category means.
inline double cross_category_mean(const std::vector<double>& category_means) {
    if (category_means.empty()) {
        throw ValidationError("cross_category_mean: no categories");
    }
    double sum = 0.0;
    for (const double v : category_means) sum += v;
    return sum / static_cast<double>(category_means.size());
}

// Presentation tables: per-fold accuracy with Mean ± StD rows, per-fold
// McNemar p-values, improvement deltas, and cross-category means.
inline void report(const PipelineContext& ctx) {
    const auto cells = detail::collect_cells(ctx);
    const auto categories = ctx.manifest.categories();
    const std::size_t k = ctx.config.folds;
    fs::create_directories(ctx.out / "reports");

    auto fold_labels = [&] {
        std::vector<std::string> rows;
        for (std::size_t f = 0; f < k; ++f) rows.push_back("fold" + std::to_string(f));
        return rows;
    }();

    auto accuracy_of = [&](std::size_t fold, const std::string& category,
                           const std::string& cond) {
        const auto& cell = cells.at({fold, category});
        return accuracy(cell.preds.at(cond), cell.truth);
    };

    // Accuracy tables: unimodal (audio/visual) and fused (product/sum).
    auto build_accuracy_table = [&](const std::vector<std::string>& conds) {
        ReportTable t;
        t.row_labels = fold_labels;
        for (const std::string& cond : conds) {
            for (const std::string& cat : categories) t.columns.push_back(cond + "/" + cat);
        }
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<double> row;
            for (const std::string& cond : conds) {
                for (const std::string& cat : categories) {
                    row.push_back(accuracy_of(f, cat, cond));
                }
            }
            t.values.push_back(std::move(row));
        }
        return t;
    };
    write_text_file(ctx.out / "reports" / "accuracy_unimodal.csv",
                    render_report_csv(build_accuracy_table({"audio", "visual"})));
    write_text_file(ctx.out / "reports" / "accuracy_fused.csv",
                    render_report_csv(build_accuracy_table({"product", "sum"})));

    // Significance tables, one p-value per fold and category.
    auto build_p_table = [&](const std::vector<std::pair<std::string, std::string>>& pairs) {
        ReportTable t;
        t.mean_std_row = false;
        t.row_labels = fold_labels;
        for (const auto& [s1, s2] : pairs) {
            for (const std::string& cat : categories) {
                t.columns.push_back(s1 + "_vs_" + s2 + "/" + cat);
            }
        }
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<double> row;
            for (const auto& [s1, s2] : pairs) {
                for (const std::string& cat : categories) {
                    const auto& cell = cells.at({f, cat});
                    const ContingencyTable ct =
                        mcnemar_contingency(cell.preds.at(s1), cell.preds.at(s2), cell.truth);
                    row.push_back(mcnemar_exact_p(ct.b, ct.c));
                }
            }
            t.values.push_back(std::move(row));
        }
        return t;
    };
    write_text_file(ctx.out / "reports" / "mcnemar_product_vs_sum.csv",
                    render_pvalue_csv(build_p_table({{"product", "sum"}})));
    write_text_file(ctx.out / "reports" / "mcnemar_fused_vs_unimodal.csv",
                    render_pvalue_csv(build_p_table({{"product", "audio"},
                                                     {"product", "visual"},
                                                     {"sum", "audio"},
                                                     {"sum", "visual"}})));

    // Mean accuracy per condition and category feeds the improvement and
    // cross-category summaries.
    std::map<std::string, std::map<std::string, double>> mean_by_cond_cat;
    std::map<std::string, std::size_t> samples_by_cat;
    for (const std::string& cond : conditions()) {
        for (const std::string& cat : categories) {
            std::vector<double> vals;
            for (std::size_t f = 0; f < k; ++f) vals.push_back(accuracy_of(f, cat, cond));
            mean_by_cond_cat[cond][cat] = mean_std(vals).first;
        }
    }
    for (const std::string& cat : categories) {
        std::size_t n = 0;
        for (std::size_t f = 0; f < k; ++f) n += cells.at({f, cat}).truth.size();
        samples_by_cat[cat] = n;
    }

    std::string improvement = "category,product_vs_audio,product_vs_visual,sum_vs_audio,"
                              "sum_vs_visual\n";
    for (const std::string& cat : categories) {
        const auto deltas = improvement_report(
            {{"audio", mean_by_cond_cat["audio"][cat]}, {"visual", mean_by_cond_cat["visual"][cat]}},
            {{"product", mean_by_cond_cat["product"][cat]}, {"sum", mean_by_cond_cat["sum"][cat]}});
        improvement += cat + "," + format_fixed(deltas.at("product_vs_audio"), 2) + "," +
                       format_fixed(deltas.at("product_vs_visual"), 2) + "," +
                       format_fixed(deltas.at("sum_vs_audio"), 2) + "," +
                       format_fixed(deltas.at("sum_vs_visual"), 2) + "\n";
    }
    write_text_file(ctx.out / "reports" / "improvement.csv", improvement);

    std::string cross = "condition,arithmetic_mean,sample_weighted_mean\n";
    for (const std::string& cond : conditions()) {
        std::vector<double> means;
        double weighted = 0.0;
        std::size_t total = 0;
        for (const std::string& cat : categories) {
            means.push_back(mean_by_cond_cat[cond][cat]);
            weighted += mean_by_cond_cat[cond][cat] * static_cast<double>(samples_by_cat[cat]);
            total += samples_by_cat[cat];
        }
        cross += cond + "," + format_fixed(cross_category_mean(means), 2) + "," +
                 format_fixed(weighted / static_cast<double>(total), 2) + "\n";
    }
    write_text_file(ctx.out / "reports" / "cross_category_mean.csv", cross);
}

// --- end to end ----------------------------------------------------------------

// extract -> (train, predict, fuse) per fold -> evaluate -> report.
inline void run_experiment(const DatasetManifest& manifest, const RunConfig& cfg,
                           const fs::path& out) {
    extract_features(manifest, cfg, out);
    const PipelineContext ctx = open_pipeline(out);

    const std::vector<std::string> train_scopes =
        ctx.config.train_jointly ? std::vector<std::string>{kJointScope}
                                 : ctx.manifest.categories();
    for (std::size_t fold = 0; fold < ctx.config.folds; ++fold) {
        for (const std::string& scope : train_scopes) {
            for (const std::string& modality : modalities()) {
                train_fold(ctx, fold, scope, modality);
            }
        }
        for (const std::string& category : ctx.manifest.categories()) {
            for (const std::string& modality : modalities()) {
                predict_fold(ctx, fold, category, modality);
            }
            fuse_fold(ctx, fold, category, "product");
            fuse_fold(ctx, fold, category, "sum");
        }
    }
    evaluate(ctx);
    report(ctx);
}

}  // namespace camid
