#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "itgkit/error.hpp"

namespace itgkit::io {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a temporary sibling and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

/// Appends one line and fsyncs before returning.
inline void append_line_durable(const std::filesystem::path& path, std::string_view line) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw Error("cannot open '" + path.string() + "' for append");
    std::string buf(line);
    buf.push_back('\n');
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
        const auto n = ::write(fd, p, left);
        if (n <= 0) {
            ::close(fd);
            throw Error("append to '" + path.string() + "' failed");
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
}

/// Cuts an unterminated final line (an interrupted append) so the next append starts on a
/// fresh line. Returns true if anything was removed.
inline bool drop_partial_tail(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return false;
    const auto bytes = read_file(path);
    if (bytes.empty() || bytes.back() == '\n') return false;
    const auto nl = bytes.rfind('\n');
    std::filesystem::resize_file(path, nl == std::string::npos ? 0 : nl + 1);
    return true;
}

struct JsonLines {
    std::vector<nlohmann::json> records;
    bool truncated_tail = false;  // a partial final line was ignored
};

/// Parses JSON-lines. An unparsable final line without a terminating newline is treated as
/// an interrupted append and dropped; any other bad line is an error.
inline JsonLines parse_jsonl(std::string_view bytes) {
    JsonLines out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < bytes.size()) {
        const auto nl = bytes.find('\n', pos);
        const bool last = nl == std::string_view::npos;
        const auto line = bytes.substr(pos, last ? std::string_view::npos : nl - pos);
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            try {
                out.records.push_back(nlohmann::json::parse(line));
            } catch (const nlohmann::json::parse_error&) {
                if (!last) throw ParseError("bad JSON on line " + std::to_string(line_no), pos);
                out.truncated_tail = true;
            }
        }
        if (last) break;
        pos = nl + 1;
    }
    return out;
}

inline JsonLines read_jsonl(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    return parse_jsonl(read_file(path));
}

using Timestamp = std::chrono::sys_seconds;

inline std::string format_timestamp(Timestamp t) {
    const std::time_t tt = t.time_since_epoch().count();
    std::tm tm{};
    ::gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Timestamp parse_timestamp(std::string_view s) {
    std::tm tm{};
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    char z = 0;
    const std::string str(s);
    if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &se, &z) != 7 || z != 'Z')
        throw ParseError("bad timestamp '" + str + "' (want YYYY-MM-DDTHH:MM:SSZ)");
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = se;
    return Timestamp(std::chrono::seconds(::timegm(&tm)));
}

inline Timestamp now() {
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

}  // namespace itgkit::io
