#pragma once

// Annotation project directory: project.json, graph files, label logs.
//
//   project.json    {"id", "paper": {"1": file, "2": file}, "reviews": [file...],
//                    "annotators": [...], "settings": {...}}
//   pragmatics.jsonl, links.jsonl   append-only label logs

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "itgkit/commands.hpp"
#include "itgkit/error.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/io.hpp"
#include "itgkit/links.hpp"
#include "itgkit/pragmatics.hpp"

namespace itgkit {

namespace fs = std::filesystem;

inline constexpr const char* kProjectFile = "project.json";
inline constexpr const char* kPragmaticsFile = "pragmatics.jsonl";
inline constexpr const char* kLinksFile = "links.jsonl";

/// A stored label line with its 1-based position in the log (the supersession token).
struct StoredLine {
    std::uint64_t rev = 0;
    nlohmann::json record;
};

struct ProjectSnapshot {
    std::string id;
    fs::path dir;
    cmd::Settings settings;
    std::vector<std::string> annotators;
    std::map<int, IntertextualGraph> paper;  // version -> graph
    std::vector<IntertextualGraph> reviews;
    IntertextualGraph joint;  // earliest paper version plus reviews
    DocumentId paper_doc;

    LabelStore pragmatics;
    LinkLabelStore links;
    std::uint64_t pragmatics_lines = 0;
    std::uint64_t links_lines = 0;
    std::map<std::pair<std::string, std::string>, std::uint64_t> pragmatic_rev;  // (node, annotator)
    std::map<std::tuple<std::string, std::string, std::string>, std::uint64_t> link_rev;

    [[nodiscard]] const IntertextualGraph* paper_version(int v) const {
        auto it = paper.find(v);
        return it == paper.end() ? nullptr : &it->second;
    }
};

inline int parse_version(std::string_view s) {
    if (!s.empty() && (s.front() == 'v' || s.front() == 'V')) s.remove_prefix(1);
    const long v = text::first_integer(s);
    if (v < 1 || std::to_string(v) != s) throw UsageError("bad version '" + std::string(s) + "'");
    return static_cast<int>(v);
}

inline ProjectSnapshot load_project(const fs::path& dir) {
    const auto pj = dir / kProjectFile;
    if (!fs::exists(pj)) throw NotFoundError("no project at " + dir.string());
    ProjectSnapshot s;
    s.dir = dir;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(pj));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(pj.string() + ": " + e.what());
    }
    s.id = j.value("id", dir.filename().string());
    s.settings = cmd::settings_from_json(j.value("settings", nlohmann::json::object()), dir);
    s.annotators = j.value("annotators", std::vector<std::string>{});
    if (!j.contains("paper") || j.at("paper").empty()) throw MissingLayerError("paper");
    for (const auto& [v, file] : j.at("paper").items())
        s.paper.emplace(parse_version(v), cmd::load_graph(cmd::resolve_path(dir, file.get<std::string>())));
    for (const auto& r : j.value("reviews", nlohmann::json::array()))
        s.reviews.push_back(cmd::load_graph(cmd::resolve_path(dir, r.get<std::string>())));
    const auto& first = s.paper.begin()->second;
    s.paper_doc = first.documents().front().id;
    std::vector<const IntertextualGraph*> rs;
    for (const auto& r : s.reviews) rs.push_back(&r);
    s.joint = cmd::join(first, rs);

    for (const auto& rec : io::read_jsonl(dir / kPragmaticsFile).records) {
        auto r = pragmatic_record_from_json(rec);
        s.pragmatic_rev[{r.node.value, r.annotator}] = ++s.pragmatics_lines;
        s.pragmatics.put(std::move(r));
    }
    for (const auto& rec : io::read_jsonl(dir / kLinksFile).records) {
        auto r = link_record_from_json(rec);
        s.link_rev[{r.review.value, r.paper.value, r.annotator}] = ++s.links_lines;
        s.links.put(std::move(r));
    }
    return s;
}

/// Alignment of two stored paper versions with the project's metric and threshold.
inline cmd::AlignOutputs project_alignment(const ProjectSnapshot& p, int from, int to) {
    const auto* a = p.paper_version(from);
    const auto* b = p.paper_version(to);
    if (!a) throw NotFoundError("project '" + p.id + "' has no paper version " + std::to_string(from));
    if (!b) throw NotFoundError("project '" + p.id + "' has no paper version " + std::to_string(to));
    return cmd::align_outputs(*a, *b, p.settings.metric, p.settings.threshold);
}

/// Joint statistics of the project: earliest paper version against the next one.
inline cmd::StatsOutputs project_stats(const ProjectSnapshot& p) {
    if (p.pragmatics.empty()) throw MissingLayerError("pragmatics");
    if (p.paper.size() < 2) throw MissingLayerError("revision");
    const int v1 = p.paper.begin()->first;
    const int v2 = std::next(p.paper.begin())->first;
    cmd::LoadedBundle lb;
    lb.id = p.id;
    lb.paper = p.paper.at(v1);
    lb.reviews = p.reviews;
    lb.pragmatics = p.pragmatics;
    if (!p.links.empty()) lb.links = p.links;
    lb.revision = p.paper.at(v2);
    lb.alignment = project_alignment(p, v1, v2).result;
    return cmd::stats_outputs({lb}, p.settings);
}

/// Cheap change detector: name, size and mtime of every file in the project directory.
using Fingerprint = std::vector<std::tuple<std::string, std::uintmax_t, std::int64_t>>;

inline Fingerprint fingerprint(const fs::path& dir) {
    Fingerprint f;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (!e.is_regular_file(ec)) continue;
        const auto t = e.last_write_time(ec).time_since_epoch();
        f.emplace_back(e.path().filename().string(), e.file_size(ec),
                       std::chrono::duration_cast<std::chrono::nanoseconds>(t).count());
    }
    std::sort(f.begin(), f.end());
    return f;
}

}  // namespace itgkit
