#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "camid/csv.hpp"
#include "camid/error.hpp"
#include "camid/rng.hpp"

namespace camid {

// One cross-validation fold, as indices into the label vector. Validation
// is carved out of the training portion, so the three sets partition the
// dataset.
struct FoldAssignment {
    std::size_t fold_index = 0;
    std::vector<std::size_t> train_ids;
    std::vector<std::size_t> val_ids;
    std::vector<std::size_t> test_ids;
    std::uint64_t seed = 0;
};

// Per-class seeded shuffle, then round-robin test assignment (shuffled
// position i lands in test fold i mod k). Validation takes the first 10%
// (floor) of each class's remaining shuffled order. Deterministic, and
// independent of class iteration order thanks to per-class seed streams.
inline std::vector<FoldAssignment> stratified_kfold(const std::vector<int>& labels,
                                                    std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("stratified_kfold: k must be >= 2");
    if (labels.empty()) throw ValidationError("stratified_kfold: no samples");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [cls, ids] : by_class) {
        if (ids.size() < k) {
            throw ValidationError("stratified_kfold: class " + std::to_string(cls) + " has only " +
                                  std::to_string(ids.size()) + " samples, need at least " +
                                  std::to_string(k));
        }
    }

    std::vector<FoldAssignment> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        folds[f].fold_index = f;
        folds[f].seed = seed;
    }
    for (auto& [cls, ids] : by_class) {
        Rng rng(derive_seed(seed, "strat-" + std::to_string(cls)));
        rng.shuffle(ids);
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (i % k == f) {
                    folds[f].test_ids.push_back(ids[i]);
                } else {
                    rest.push_back(ids[i]);
                }
            }
            const std::size_t n_val = rest.size() / 10;
            for (std::size_t i = 0; i < rest.size(); ++i) {
                (i < n_val ? folds[f].val_ids : folds[f].train_ids).push_back(rest[i]);
            }
        }
    }
    for (auto& fold : folds) {
        std::sort(fold.train_ids.begin(), fold.train_ids.end());
        std::sort(fold.val_ids.begin(), fold.val_ids.end());
        std::sort(fold.test_ids.begin(), fold.test_ids.end());
    }
    return folds;
}

// 100 * matches / N.
inline double accuracy(const std::vector<int>& preds, const std::vector<int>& truth) {
    if (preds.size() != truth.size()) {
        throw ShapeError("accuracy: prediction and truth lengths differ");
    }
    if (preds.empty()) throw ValidationError("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == truth[i]) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

// Table rows report fold spreads with the n denominator; the n-1 variant
// stays available for callers that want an unbiased estimate.
enum class StdMode { Population, Sample };

inline std::pair<double, double> mean_std(const std::vector<double>& values,
                                          StdMode mode = StdMode::Population) {
    if (values.size() < 2) throw ValidationError("mean_std needs at least 2 values");
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double denom = mode == StdMode::Population ? static_cast<double>(values.size())
                                                     : static_cast<double>(values.size() - 1);
    return {mean, std::sqrt(ss / denom)};
}

// a: both correct, b: only system 1 correct, c: only system 2 correct,
// d: both wrong.
struct ContingencyTable {
    std::size_t a = 0, b = 0, c = 0, d = 0;
};

inline ContingencyTable mcnemar_contingency(const std::vector<int>& preds1,
                                            const std::vector<int>& preds2,
                                            const std::vector<int>& truth) {
    if (preds1.size() != truth.size() || preds2.size() != truth.size()) {
        throw ShapeError("mcnemar_contingency: input lengths differ");
    }
    ContingencyTable t;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool ok1 = preds1[i] == truth[i];
        const bool ok2 = preds2[i] == truth[i];
        if (ok1 && ok2) ++t.a;
        else if (ok1) ++t.b;
        else if (ok2) ++t.c;
        else ++t.d;
    }
    return t;
}

namespace detail {

// C(n, i) for i = 0..n via Pascal addition. Exact in 64-bit for n <= 50.
inline std::vector<unsigned long long> binomial_row(std::size_t n) {
    std::vector<unsigned long long> row(n + 1, 1);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = i; j >= 1; --j) row[j] += row[j - 1];
    }
    return row;
}

}  // namespace detail

// Exact two-sided binomial test on the n = b + c discordant pairs:
// p = min(1, 2 * sum_{i=0}^{min(b,c)} C(n,i) / 2^n), and 1.0 when n = 0.
// Small n uses exact integer sums (so results match brute-force enumeration
// bit for bit); larger n switches to log-space accumulation.
inline double mcnemar_exact_p(std::size_t b, std::size_t c) {
    const std::size_t n = b + c;
    if (n == 0) return 1.0;
    const std::size_t m = std::min(b, c);
    if (n <= 50) {
        const auto row = detail::binomial_row(n);
        unsigned long long sum = 0;
        for (std::size_t i = 0; i <= m; ++i) sum += row[i];
        return std::min(1.0, 2.0 * static_cast<double>(sum) / std::exp2(static_cast<double>(n)));
    }
    const double log2n = static_cast<double>(n) * std::log(2.0);
    double tail = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
        const double log_comb = std::lgamma(static_cast<double>(n) + 1.0) -
                                std::lgamma(static_cast<double>(i) + 1.0) -
                                std::lgamma(static_cast<double>(n - i) + 1.0);
        tail += std::exp(log_comb - log2n);
    }
    return std::min(1.0, 2.0 * tail);
}

// Continuity-corrected chi-square approximation, for callers that prefer
// the classic large-sample form.
inline double mcnemar_chi2_p(std::size_t b, std::size_t c) {
    const std::size_t n = b + c;
    if (n == 0) return 1.0;
    const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c));
    const double adj = std::max(diff - 1.0, 0.0);
    const double chi2 = adj * adj / static_cast<double>(n);
    return std::erfc(std::sqrt(chi2 / 2.0));
}

enum class Verdict { NotSignificant, Significant, HighlySignificant };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::NotSignificant: return "not significant";
        case Verdict::Significant: return "significant";
        case Verdict::HighlySignificant: return "highly significant";
    }
    return "?";
}

// p < 0.01 highly significant; p in [0.01, 0.05] significant; else not.
inline Verdict classify_significance(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p-value must lie in [0, 1]");
    if (p < 0.01) return Verdict::HighlySignificant;
    if (p <= 0.05) return Verdict::Significant;
    return Verdict::NotSignificant;
}

// --- fold CSV ------------------------------------------------------------
// sample_id,fold,split with split in {train,val,test}, rows ordered by fold
// then sample id.

inline void write_folds_csv(const std::filesystem::path& path,
                            const std::vector<FoldAssignment>& folds,
                            const std::vector<std::string>& sample_ids) {
    std::string out = "sample_id,fold,split\n";
    for (const FoldAssignment& f : folds) {
        auto emit = [&](const std::vector<std::size_t>& ids, const char* split) {
            for (const std::size_t i : ids) {
                if (i >= sample_ids.size()) {
                    throw ShapeError("write_folds_csv: sample index out of range");
                }
                out += sample_ids[i] + "," + std::to_string(f.fold_index) + "," + split + "\n";
            }
        };
        emit(f.train_ids, "train");
        emit(f.val_ids, "val");
        emit(f.test_ids, "test");
    }
    write_text_file(path, out);
}

inline std::vector<FoldAssignment> read_folds_csv(const std::filesystem::path& path,
                                                  const std::vector<std::string>& sample_ids) {
    const auto rows = read_csv(path);
    const std::string where = path.string();
    if (rows.empty() || rows[0] != std::vector<std::string>{"sample_id", "fold", "split"}) {
        throw DataError("not a fold CSV (expected sample_id,fold,split header): " + where);
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < sample_ids.size(); ++i) index[sample_ids[i]] = i;

    std::vector<FoldAssignment> folds;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 3) {
            throw DataError("fold CSV row " + std::to_string(r) + " malformed: " + where);
        }
        const auto it = index.find(rows[r][0]);
        if (it == index.end()) {
            throw DataError("fold CSV names unknown sample '" + rows[r][0] + "': " + where);
        }
        const long f = parse_long(rows[r][1], where);
        if (f < 0) throw DataError("negative fold index: " + where);
        if (static_cast<std::size_t>(f) >= folds.size()) {
            folds.resize(static_cast<std::size_t>(f) + 1);
            for (std::size_t i = 0; i < folds.size(); ++i) folds[i].fold_index = i;
        }
        FoldAssignment& fold = folds[static_cast<std::size_t>(f)];
        if (rows[r][2] == "train") fold.train_ids.push_back(it->second);
        else if (rows[r][2] == "val") fold.val_ids.push_back(it->second);
        else if (rows[r][2] == "test") fold.test_ids.push_back(it->second);
        else throw DataError("fold CSV split must be train/val/test: " + where);
    }
    return folds;
}

}  // namespace camid
