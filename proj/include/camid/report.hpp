#pragma once

#include <string>
#include <vector>

#include "camid/csv.hpp"
#include "camid/error.hpp"
#include "camid/evalstat.hpp"

namespace camid {

// Fold-by-condition table in the accuracy-table layout: one row per fold,
// ending with a "Mean ± StD" row. That row is always recomputed from the
// fold rows at render time; it cannot go stale.
struct ReportTable {
    std::string row_header = "fold";
    std::vector<std::string> columns;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> values;  // row-major, rows x columns
    bool mean_std_row = true;

    void validate() const {
        if (columns.empty()) throw ValidationError("report table has no columns");
        if (row_labels.size() != values.size()) {
            throw ShapeError("report table row labels do not match value rows");
        }
        for (const auto& row : values) {
            if (row.size() != columns.size()) {
                throw ShapeError("report table row width does not match columns");
            }
        }
        if (mean_std_row && values.size() < 2) {
            throw ValidationError("mean/std row needs at least 2 fold rows");
        }
    }
};

inline std::string render_report_csv(const ReportTable& table, int decimals = 2,
                                     StdMode mode = StdMode::Population) {
    table.validate();
    std::string out = table.row_header;
    for (const auto& c : table.columns) out += "," + c;
    out += "\n";
    for (std::size_t r = 0; r < table.values.size(); ++r) {
        out += table.row_labels[r];
        for (const double v : table.values[r]) out += "," + format_fixed(v, decimals);
        out += "\n";
    }
    if (table.mean_std_row) {
        out += "Mean ± StD";
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            std::vector<double> col;
            col.reserve(table.values.size());
            for (const auto& row : table.values) col.push_back(row[c]);
            const auto [mean, sd] = mean_std(col, mode);
            out += "," + format_fixed(mean, decimals) + " ± " + format_fixed(sd, decimals);
        }
        out += "\n";
    }
    return out;
}

// p-value tables print with significant digits instead of fixed decimals,
// and without an aggregate row.
inline std::string render_pvalue_csv(const ReportTable& table) {
    ReportTable t = table;
    t.mean_std_row = false;
    t.validate();
    std::string out = t.row_header;
    for (const auto& c : t.columns) out += "," + c;
    out += "\n";
    for (std::size_t r = 0; r < t.values.size(); ++r) {
        out += t.row_labels[r];
        for (const double v : t.values[r]) out += "," + format_pvalue(v);
        out += "\n";
    }
    return out;
}

}  // namespace camid
