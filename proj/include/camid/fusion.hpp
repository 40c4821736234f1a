#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "camid/csv.hpp"
#include "camid/error.hpp"

namespace camid {

// Per-sample class scores. Unimodal matrices hold softmax outputs (each
// sample's scores sum to 1); fused matrices hold raw products/sums and are
// only required to stay non-negative and finite.
struct ProbabilityMatrix {
    std::vector<int> class_ids;            // C, ascending
    std::vector<std::string> sample_ids;   // N
    std::vector<double> scores;            // N x C row-major

    std::size_t num_classes() const { return class_ids.size(); }
    std::size_t num_samples() const { return sample_ids.size(); }

    double& at(std::size_t sample, std::size_t cls) {
        return scores[sample * class_ids.size() + cls];
    }
    double at(std::size_t sample, std::size_t cls) const {
        return scores[sample * class_ids.size() + cls];
    }

    void validate() const {
        if (class_ids.empty()) throw ValidationError("probability matrix has no classes");
        if (scores.size() != sample_ids.size() * class_ids.size()) {
            throw ShapeError("probability matrix score count does not match ids");
        }
        for (const double v : scores) {
            if (!std::isfinite(v) || v < 0.0) {
                throw ValidationError("probability matrix entries must be finite and >= 0");
            }
        }
    }
};

namespace detail {

// Fusion inputs must agree on shape and on sample/class orderings.
inline void require_aligned(const std::vector<ProbabilityMatrix>& mats, const char* what) {
    if (mats.size() < 2) throw ValidationError(std::string(what) + " needs at least 2 matrices");
    const auto& first = mats.front();
    first.validate();
    for (std::size_t i = 1; i < mats.size(); ++i) {
        mats[i].validate();
        if (mats[i].class_ids != first.class_ids) {
            throw ValidationError(std::string(what) + ": class orderings differ between inputs");
        }
        if (mats[i].sample_ids != first.sample_ids) {
            throw ValidationError(std::string(what) + ": sample orderings differ between inputs");
        }
    }
}

}  // namespace detail

// Arithmetic mean of per-frame probability vectors (one video's frames).
inline std::vector<double> average_frame_probs(const std::vector<std::vector<double>>& frames) {
    if (frames.empty()) throw ValidationError("cannot average an empty frame list");
    const std::size_t c = frames.front().size();
    std::vector<double> mean(c, 0.0);
    for (const auto& p : frames) {
        if (p.size() != c) throw ShapeError("frame probability vectors have mixed lengths");
        double sum = 0.0;
        for (const double v : p) sum += v;
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ValidationError("frame probability vector does not sum to 1");
        }
        for (std::size_t i = 0; i < c; ++i) mean[i] += p[i];
    }
    for (double& v : mean) v /= static_cast<double>(frames.size());
    return mean;
}

// Hadamard product across modalities. Entries are floored (default 1e-12)
// before multiplying so a single zero cannot veto a class; floor <= 0
// disables that. No renormalization.
inline ProbabilityMatrix product_fuse(const std::vector<ProbabilityMatrix>& mats,
                                      double floor = 1e-12) {
    detail::require_aligned(mats, "product_fuse");
    ProbabilityMatrix out = mats.front();
    if (floor > 0.0) {
        for (double& v : out.scores) v = std::max(v, floor);
    }
    for (std::size_t i = 1; i < mats.size(); ++i) {
        for (std::size_t j = 0; j < out.scores.size(); ++j) {
            const double v = floor > 0.0 ? std::max(mats[i].scores[j], floor) : mats[i].scores[j];
            out.scores[j] *= v;
        }
    }
    return out;
}

// Elementwise sum across modalities. No renormalization.
inline ProbabilityMatrix sum_fuse(const std::vector<ProbabilityMatrix>& mats) {
    detail::require_aligned(mats, "sum_fuse");
    ProbabilityMatrix out = mats.front();
    for (std::size_t i = 1; i < mats.size(); ++i) {
        for (std::size_t j = 0; j < out.scores.size(); ++j) {
            out.scores[j] += mats[i].scores[j];
        }
    }
    return out;
}

// Display-only normalization: scales each sample's scores to sum to 1.
inline void normalize_rows(ProbabilityMatrix& m) {
    const std::size_t c = m.num_classes();
    for (std::size_t n = 0; n < m.num_samples(); ++n) {
        double sum = 0.0;
        for (std::size_t k = 0; k < c; ++k) sum += m.at(n, k);
        if (sum > 0.0) {
            for (std::size_t k = 0; k < c; ++k) m.at(n, k) /= sum;
        }
    }
}

// Per-sample argmax; ties go to the lowest class index.
inline std::vector<int> predict_classes(const ProbabilityMatrix& m) {
    m.validate();
    if (m.num_samples() == 0) throw ValidationError("cannot predict from an empty matrix");
    std::vector<int> labels(m.num_samples());
    for (std::size_t n = 0; n < m.num_samples(); ++n) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < m.num_classes(); ++k) {
            if (m.at(n, k) > m.at(n, best)) best = k;
        }
        labels[n] = m.class_ids[best];
    }
    return labels;
}

// --- CSV interchange ---------------------------------------------------
// Header sample_id,<class_id_0>,...; one row per sample; values printed
// with full precision so write -> read -> write is byte-identical.

inline void write_probability_csv(const std::filesystem::path& path,
                                  const ProbabilityMatrix& m) {
    m.validate();
    std::string out = "sample_id";
    for (const int c : m.class_ids) out += "," + std::to_string(c);
    out += "\n";
    for (std::size_t n = 0; n < m.num_samples(); ++n) {
        out += m.sample_ids[n];
        for (std::size_t k = 0; k < m.num_classes(); ++k) {
            out += "," + format_full(m.at(n, k));
        }
        out += "\n";
    }
    write_text_file(path, out);
}

inline ProbabilityMatrix read_probability_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    const std::string where = path.string();
    if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "sample_id") {
        throw DataError("not a probability CSV (expected sample_id,<class>... header): " + where);
    }
    ProbabilityMatrix m;
    for (std::size_t k = 1; k < rows[0].size(); ++k) {
        m.class_ids.push_back(static_cast<int>(parse_long(rows[0][k], where + " header")));
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) {
            throw DataError("row " + std::to_string(r) + " has wrong field count: " + where);
        }
        m.sample_ids.push_back(rows[r][0]);
        for (std::size_t k = 1; k < rows[r].size(); ++k) {
            m.scores.push_back(parse_double(rows[r][k], where));
        }
    }
    m.validate();
    return m;
}

}  // namespace camid
