// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/datakit/manifest.hpp"

#include "sketchwatch/common/error.hpp"

#include <cctype>
#include <fstream>
#include <set>

namespace sketchwatch::datakit {

namespace fs = std::filesystem;

nlohmann::json to_json(const ManifestEntry &e)
{
    return {{"path", e.path}, {"phrase", e.phrase}, {"has_annotations", e.has_annotations},
            {"split", to_string(e.split)}};
}

ManifestEntry manifest_entry_from_json(const nlohmann::json &j)
{
    try {
        ManifestEntry e;
        e.path = j.at("path").get<std::string>();
        e.phrase = j.at("phrase").get<std::string>();
        e.has_annotations = j.at("has_annotations").get<bool>();
        e.split = split_name_from_string(j.at("split").get<std::string>());
        return e;
    } catch (const nlohmann::json::exception &ex) {
        throw Error(Errc::malformed, std::string("bad manifest entry: ") + ex.what());
    }
}

std::vector<ManifestEntry> read_manifest(const fs::path &file)
{
    std::ifstream in(file);
    if (!in)
        throw Error(Errc::io, "cannot open manifest " + file.string());
    std::vector<ManifestEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception &ex) {
            throw Error(Errc::malformed, file.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
        out.push_back(manifest_entry_from_json(j));
    }
    return out;
}

void write_manifest(const fs::path &file, const std::vector<ManifestEntry> &entries)
{
    std::ofstream out(file);
    if (!out)
        throw Error(Errc::io, "cannot write manifest " + file.string());
    for (const auto &e : entries)
        out << to_json(e).dump() << '\n';
    if (!out)
        throw Error(Errc::io, "write failed for " + file.string());
}

void save_session(const fs::path &file, const AnnotatedSession &s)
{
    std::ofstream out(file);
    if (!out)
        throw Error(Errc::io, "cannot write " + file.string());
    out << to_json(s).dump(1) << '\n';
    if (!out)
        throw Error(Errc::io, "write failed for " + file.string());
}

AnnotatedSession load_session(const fs::path &file)
{
    std::ifstream in(file);
    if (!in)
        throw Error(Errc::io, "cannot open " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &ex) {
        throw Error(Errc::malformed, file.string() + ": " + ex.what());
    }
    return annotated_session_from_json(j);
}

Dataset load_dataset(const fs::path &manifest, std::optional<SplitName> only)
{
    Dataset d;
    const fs::path base = manifest.parent_path();
    for (auto &e : read_manifest(manifest)) {
        if (only && e.split != *only)
            continue;
        const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : base / e.path;
        auto s = load_session(p);
        if (s.phrase != e.phrase || s.has_annotations() != e.has_annotations)
            throw Error(Errc::malformed, "manifest entry disagrees with " + p.string());
        d.sessions.push_back(std::move(s));
        d.entries.push_back(std::move(e));
    }
    return d;
}

std::string file_stem(std::string_view session_id)
{
    std::string out;
    for (char c : session_id)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    if (out.empty() || out.front() == '.')
        out.insert(out.begin(), '_');
    return out;
}

fs::path write_dataset(const fs::path &dir, const std::vector<AnnotatedSession> &sessions, const SplitResult &splits)
{
    std::vector<SplitName> which(sessions.size());
    std::vector<int> seen(sessions.size(), 0);
    auto mark = [&](const std::vector<std::size_t> &ids, SplitName n) {
        for (std::size_t i : ids) {
            if (i >= sessions.size())
                throw Error(Errc::invalid_argument, "split index out of range");
            which[i] = n;
            ++seen[i];
        }
    };
    mark(splits.train, SplitName::Train);
    mark(splits.val, SplitName::Val);
    mark(splits.test, SplitName::Test);
    for (int c : seen)
        if (c != 1)
            throw Error(Errc::invalid_argument, "splits must cover every session exactly once");

    std::error_code ec;
    fs::create_directories(dir / "sessions", ec);
    if (ec)
        throw Error(Errc::io, "cannot create " + (dir / "sessions").string() + ": " + ec.message());
    std::vector<ManifestEntry> entries;
    std::set<std::string> used;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        std::string stem = file_stem(sessions[i].session_id);
        for (int k = 1; !used.insert(stem).second; ++k)
            stem = file_stem(sessions[i].session_id) + "_" + std::to_string(k);
        const std::string rel = "sessions/" + stem + ".json";
        save_session(dir / rel, sessions[i]);
        entries.push_back({rel, sessions[i].phrase, sessions[i].has_annotations(), which[i]});
    }
    const fs::path manifest = dir / "manifest.jsonl";
    write_manifest(manifest, entries);
    return manifest;
}

} // namespace sketchwatch::datakit
