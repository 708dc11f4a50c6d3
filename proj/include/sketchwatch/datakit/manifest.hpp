// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/datakit/annotated.hpp"
#include "sketchwatch/datakit/split.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sketchwatch::datakit {

/// One line of a manifest: {path, phrase, has_annotations, split}. `path` is
/// relative to the manifest's directory unless absolute.
struct ManifestEntry {
    std::string path;
    std::string phrase;
    bool has_annotations = false;
    SplitName split = SplitName::Train;

    bool operator==(const ManifestEntry &) const = default;
};

nlohmann::json to_json(const ManifestEntry &e);
ManifestEntry manifest_entry_from_json(const nlohmann::json &j);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path &file);
void write_manifest(const std::filesystem::path &file, const std::vector<ManifestEntry> &entries);

void save_session(const std::filesystem::path &file, const AnnotatedSession &s);
AnnotatedSession load_session(const std::filesystem::path &file);

struct Dataset {
    std::vector<ManifestEntry> entries;
    std::vector<AnnotatedSession> sessions; // parallel to entries
};

/// Loads every session listed in the manifest, or only those of `only`.
Dataset load_dataset(const std::filesystem::path &manifest, std::optional<SplitName> only = std::nullopt);

/// Writes sessions/<id>.json under `dir` and dir/manifest.jsonl with the split of
/// each session. Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path &dir, const std::vector<AnnotatedSession> &sessions,
                                    const SplitResult &splits);

/// Session id reduced to characters safe in a file name.
std::string file_stem(std::string_view session_id);

} // namespace sketchwatch::datakit
