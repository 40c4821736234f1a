// Command-line front end for the identification pipeline. Exit codes:
// 0 success, 2 validation/usage error, 3 runtime or data error.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "camid/pipeline.hpp"
#include "camid/synth.hpp"

namespace {

struct SeedOption {
    std::uint64_t value = 42;
    bool set = false;
};

void add_seed(CLI::App* cmd, SeedOption& seed) {
    cmd->add_option("--seed", seed.value, "random seed (overrides the config's seed)")
        ->each([&seed](const std::string&) { seed.set = true; });
}

camid::RunConfig load_config_or_default(const std::string& path, const SeedOption& seed) {
    camid::RunConfig cfg = path.empty() ? camid::RunConfig{} : camid::load_run_config(path);
    if (seed.set) cfg.seed = seed.value;
    return cfg;
}

std::vector<std::string> train_scopes(const camid::PipelineContext& ctx,
                                      const std::string& category) {
    if (!category.empty()) return {category};
    if (ctx.config.train_jointly) return {camid::kJointScope};
    return ctx.manifest.categories();
}

std::vector<std::string> predict_categories(const camid::PipelineContext& ctx,
                                            const std::string& category) {
    if (!category.empty()) return {category};
    return ctx.manifest.categories();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camera/device model identification from audio and video frames"};
    app.require_subcommand(1);

    // extract
    auto* extract = app.add_subcommand("extract", "compute features and fold plans");
    std::string ex_manifest, ex_config, ex_out;
    SeedOption ex_seed;
    extract->add_option("--manifest", ex_manifest, "dataset manifest CSV")
        ->required()
        ->check(CLI::ExistingFile);
    extract->add_option("--config", ex_config, "run config JSON (defaults apply if omitted)")
        ->check(CLI::ExistingFile);
    extract->add_option("--out", ex_out, "artifacts directory")->required();
    add_seed(extract, ex_seed);
    extract->callback([&] {
        const auto manifest = camid::validate_manifest(ex_manifest);
        const auto cfg = load_config_or_default(ex_config, ex_seed);
        camid::extract_features(manifest, cfg, ex_out);
        std::cout << "extracted features for " << manifest.entries.size() << " videos into "
                  << ex_out << "\n";
    });

    // train
    auto* train = app.add_subcommand("train", "train one fold of one modality");
    std::string tr_out, tr_modality, tr_category;
    std::size_t tr_fold = 0;
    train->add_option("--out", tr_out, "artifacts directory")->required();
    train->add_option("--fold", tr_fold, "fold index")->required();
    train->add_option("--modality", tr_modality, "audio or visual")
        ->required()
        ->check(CLI::IsMember({"audio", "visual"}));
    train->add_option("--category", tr_category, "category (default: every training scope)");
    train->callback([&] {
        const auto ctx = camid::open_pipeline(tr_out);
        for (const auto& scope : train_scopes(ctx, tr_category)) {
            camid::train_fold(ctx, tr_fold, scope, tr_modality);
            std::cout << "trained fold " << tr_fold << " " << scope << " " << tr_modality << "\n";
        }
    });

    // predict
    auto* predict = app.add_subcommand("predict", "write test-split probabilities for one fold");
    std::string pr_out, pr_modality, pr_category;
    std::size_t pr_fold = 0;
    predict->add_option("--out", pr_out, "artifacts directory")->required();
    predict->add_option("--fold", pr_fold, "fold index")->required();
    predict->add_option("--modality", pr_modality, "audio or visual")
        ->required()
        ->check(CLI::IsMember({"audio", "visual"}));
    predict->add_option("--category", pr_category, "category (default: all)");
    predict->callback([&] {
        const auto ctx = camid::open_pipeline(pr_out);
        for (const auto& cat : predict_categories(ctx, pr_category)) {
            camid::predict_fold(ctx, pr_fold, cat, pr_modality);
            std::cout << "predicted fold " << pr_fold << " " << cat << " " << pr_modality << "\n";
        }
    });

    // fuse
    auto* fuse = app.add_subcommand("fuse", "fuse the two modalities of one fold");
    std::string fu_out, fu_rule, fu_category;
    std::size_t fu_fold = 0;
    fuse->add_option("--out", fu_out, "artifacts directory")->required();
    fuse->add_option("--fold", fu_fold, "fold index")->required();
    fuse->add_option("--rule", fu_rule, "product or sum")
        ->required()
        ->check(CLI::IsMember({"product", "sum"}));
    fuse->add_option("--category", fu_category, "category (default: all)");
    fuse->callback([&] {
        const auto ctx = camid::open_pipeline(fu_out);
        for (const auto& cat : predict_categories(ctx, fu_category)) {
            camid::fuse_fold(ctx, fu_fold, cat, fu_rule);
            std::cout << "fused fold " << fu_fold << " " << cat << " (" << fu_rule << ")\n";
        }
    });

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "per-fold accuracy and significance CSVs");
    std::string ev_out;
    evaluate->add_option("--out", ev_out, "artifacts directory")->required();
    evaluate->callback([&] {
        camid::evaluate(camid::open_pipeline(ev_out));
        std::cout << "wrote " << ev_out << "/reports/accuracy_folds.csv and significance.csv\n";
    });

    // report
    auto* report = app.add_subcommand("report", "accuracy/significance tables and summaries");
    std::string re_out;
    report->add_option("--out", re_out, "artifacts directory")->required();
    report->callback([&] {
        camid::report(camid::open_pipeline(re_out));
        std::cout << "wrote report tables under " << re_out << "/reports\n";
    });

    // mcnemar
    auto* mcnemar = app.add_subcommand("mcnemar", "McNemar test between two probability CSVs");
    std::string mc_a, mc_b, mc_truth;
    bool mc_chi2 = false;
    mcnemar->add_option("--a", mc_a, "probability CSV of system 1")
        ->required()
        ->check(CLI::ExistingFile);
    mcnemar->add_option("--b", mc_b, "probability CSV of system 2")
        ->required()
        ->check(CLI::ExistingFile);
    mcnemar->add_option("--truth", mc_truth, "truth CSV (sample_id,class_id)")
        ->required()
        ->check(CLI::ExistingFile);
    mcnemar->add_flag("--chi2", mc_chi2, "use the continuity-corrected chi-square approximation");
    mcnemar->callback([&] {
        const auto a = camid::read_probability_csv(mc_a);
        const auto b = camid::read_probability_csv(mc_b);
        if (a.sample_ids != b.sample_ids) {
            throw camid::ValidationError("the two probability files list different samples");
        }
        const auto truth_rows = camid::read_truth_csv(mc_truth);
        std::map<std::string, int> truth_by_id(truth_rows.begin(), truth_rows.end());
        std::vector<int> truth;
        for (const auto& id : a.sample_ids) {
            const auto it = truth_by_id.find(id);
            if (it == truth_by_id.end()) {
                throw camid::ValidationError("truth file is missing sample '" + id + "'");
            }
            truth.push_back(it->second);
        }
        const auto t = camid::mcnemar_contingency(camid::predict_classes(a),
                                                  camid::predict_classes(b), truth);
        const double p =
            mc_chi2 ? camid::mcnemar_chi2_p(t.b, t.c) : camid::mcnemar_exact_p(t.b, t.c);
        std::cout << "b=" << t.b << " c=" << t.c << " p_value=" << camid::format_pvalue(p)
                  << " verdict=" << camid::to_string(camid::classify_significance(p)) << "\n";
    });

    // synth-fixture
    auto* synth = app.add_subcommand("synth-fixture", "generate the synthetic dataset");
    std::string sy_out;
    SeedOption sy_seed;
    synth->add_option("--out", sy_out, "fixture directory")->required();
    add_seed(synth, sy_seed);
    synth->callback([&] {
        camid::SynthSpec spec;
        spec.seed = sy_seed.value;
        camid::generate_synth_fixture(sy_out, spec);
        std::cout << "wrote synthetic fixture (" << spec.classes << " classes x "
                  << spec.videos_per_class << " videos) into " << sy_out << "\n";
    });

    // run
    auto* run = app.add_subcommand("run", "full experiment: extract, train, fuse, report");
    std::string ru_manifest, ru_config, ru_out;
    SeedOption ru_seed;
    run->add_option("--manifest", ru_manifest, "dataset manifest CSV")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--config", ru_config, "run config JSON (defaults apply if omitted)")
        ->check(CLI::ExistingFile);
    run->add_option("--out", ru_out, "artifacts directory")->required();
    add_seed(run, ru_seed);
    run->callback([&] {
        const auto manifest = camid::validate_manifest(ru_manifest);
        const auto cfg = load_config_or_default(ru_config, ru_seed);
        camid::run_experiment(manifest, cfg, ru_out);
        std::cout << "experiment complete; reports under " << ru_out << "/reports\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const camid::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
