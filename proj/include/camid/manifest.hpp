#pragma once

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "camid/csv.hpp"
#include "camid/error.hpp"

namespace camid {

inline const std::set<std::string>& known_categories() {
    static const std::set<std::string> cats = {"native", "whatsapp", "youtube"};
    return cats;
}

struct ManifestEntry {
    std::string video_id;
    int class_id = 0;
    std::string category;
    std::filesystem::path audio_path;
    std::filesystem::path frames_dir;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path source;  // the manifest file itself

    std::size_t num_classes() const {
        int max_id = -1;
        for (const auto& e : entries) max_id = std::max(max_id, e.class_id);
        return static_cast<std::size_t>(max_id + 1);
    }

    std::vector<std::string> categories() const {
        std::set<std::string> s;
        for (const auto& e : entries) s.insert(e.category);
        return {s.begin(), s.end()};
    }

    std::vector<const ManifestEntry*> in_category(const std::string& category) const {
        std::vector<const ManifestEntry*> out;
        for (const auto& e : entries) {
            if (e.category == category) out.push_back(&e);
        }
        return out;
    }
};

// Parses and fully checks a manifest CSV. Relative paths are resolved
// against the manifest's directory. All violations are collected into one
// error message rather than failing on the first.
inline DatasetManifest validate_manifest(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    const std::string where = path.string();
    const std::vector<std::string> header = {"video_id", "class_id", "category", "audio_path",
                                             "frames_dir"};
    if (rows.empty() || rows[0] != header) {
        throw ValidationError(
            "manifest must start with header video_id,class_id,category,audio_path,frames_dir: " +
            where);
    }
    if (rows.size() < 2) throw ValidationError("manifest has no entries: " + where);

    const std::filesystem::path base = path.parent_path();
    DatasetManifest manifest;
    manifest.source = path;
    std::vector<std::string> problems;
    std::set<std::string> seen_ids;
    std::set<int> class_ids;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        std::string rowname = "row " + std::to_string(r);
        if (rows[r].size() != header.size()) {
            problems.push_back(rowname + ": expected 5 fields, got " +
                               std::to_string(rows[r].size()));
            continue;
        }
        ManifestEntry e;
        e.video_id = rows[r][0];
        if (!e.video_id.empty()) rowname += " (" + e.video_id + ")";
        if (e.video_id.empty()) {
            problems.push_back(rowname + ": empty video_id");
        } else if (!seen_ids.insert(e.video_id).second) {
            problems.push_back(rowname + ": duplicate video_id '" + e.video_id + "'");
        }
        try {
            const long cid = parse_long(rows[r][1], where);
            if (cid < 0) {
                problems.push_back(rowname + ": negative class_id " + rows[r][1]);
            } else {
                e.class_id = static_cast<int>(cid);
                class_ids.insert(e.class_id);
            }
        } catch (const DataError&) {
            problems.push_back(rowname + ": class_id '" + rows[r][1] + "' is not an integer");
        }
        e.category = rows[r][2];
        if (!known_categories().count(e.category)) {
            problems.push_back(rowname + ": unknown category '" + e.category +
                               "' (expected native, whatsapp or youtube)");
        }
        e.audio_path = rows[r][3];
        if (e.audio_path.is_relative()) e.audio_path = base / e.audio_path;
        if (!std::filesystem::is_regular_file(e.audio_path)) {
            problems.push_back(rowname + ": audio file missing: " + e.audio_path.string());
        }
        e.frames_dir = rows[r][4];
        if (e.frames_dir.is_relative()) e.frames_dir = base / e.frames_dir;
        if (!std::filesystem::is_directory(e.frames_dir)) {
            problems.push_back(rowname + ": frames directory missing: " + e.frames_dir.string());
        }
        manifest.entries.push_back(std::move(e));
    }

    if (!class_ids.empty()) {
        const int max_id = *class_ids.rbegin();
        for (int c = 0; c <= max_id; ++c) {
            if (!class_ids.count(c)) {
                problems.push_back("class ids are not contiguous: " + std::to_string(c) +
                                   " is missing (max id " + std::to_string(max_id) + ")");
            }
        }
    }

    if (!problems.empty()) {
        std::string msg = "manifest " + where + " is invalid:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ValidationError(msg);
    }
    return manifest;
}

// Re-emits a manifest (with already-resolved paths) so later pipeline
// stages can run without the original file.
inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::string out = "video_id,class_id,category,audio_path,frames_dir\n";
    for (const auto& e : manifest.entries) {
        out += e.video_id + "," + std::to_string(e.class_id) + "," + e.category + "," +
               e.audio_path.string() + "," + e.frames_dir.string() + "\n";
    }
    write_text_file(path, out);
}

}  // namespace camid
