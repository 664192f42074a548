#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>

#include "itgkit/graph_json.hpp"
#include "itgkit/io.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& rel) { return fs::path(ITGKIT_FIXTURES) / rel; }
inline fs::path data_file(const std::string& rel) { return fs::path(ITGKIT_DATA) / rel; }

inline itgkit::IntertextualGraph load(const std::string& rel) {
    return itgkit::deserialize(itgkit::io::read_file(fixture(rel)));
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("itgkit-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    fs::path operator/(const std::string& rel) const { return path / rel; }
};

struct CliResult {
    int code = -1;
    std::string output;  // stdout and stderr
};

inline std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

inline CliResult run_cli(const std::string& args) {
    CliResult r;
    const std::string cmd = quote(ITGKIT_CLI) + " " + args + " 2>&1";
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.output.append(buf.data(), n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

/// Project directory with both paper versions, both reviews and the fixture label logs.
inline void make_project(const fs::path& dir, bool with_labels = true, bool with_v2 = true) {
    fs::create_directories(dir);
    for (const char* f : {"article_v1.graph.json", "article_v2.graph.json", "rev1.graph.json", "rev2.graph.json"})
        fs::copy_file(fixture(std::string("generated/") + f), dir / f, fs::copy_options::overwrite_existing);
    if (with_labels) {
        fs::copy_file(fixture("pragmatics.jsonl"), dir / "pragmatics.jsonl", fs::copy_options::overwrite_existing);
        fs::copy_file(fixture("links.jsonl"), dir / "links.jsonl", fs::copy_options::overwrite_existing);
    }
    std::string paper = with_v2 ? R"({"1": "article_v1.graph.json", "2": "article_v2.graph.json"})"
                                : R"({"1": "article_v1.graph.json"})";
    itgkit::io::write_file_atomic(dir / "project.json",
                                  R"({"id": "cellcount", "paper": )" + paper +
                                      R"(, "reviews": ["rev1.graph.json", "rev2.graph.json"],)"
                                      R"( "annotators": ["ann1", "ann2"], "settings": {}})" "\n");
}

}  // namespace testing_support
