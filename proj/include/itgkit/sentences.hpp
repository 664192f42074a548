#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "itgkit/text.hpp"

namespace itgkit {

/// Byte offsets into the split text; `text` is the slice [start, end).
struct SentenceSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string text;

    friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

using SentenceSplitter = std::function<std::vector<SentenceSpan>(std::string_view)>;

/// Lowercased tokens (without the final period) that do not end a sentence.
inline const std::set<std::string, std::less<>>& default_abbreviations() {
    static const std::set<std::string, std::less<>> list = {
        "al",  "approx", "ca",  "cf",  "ch",   "co",   "dr",   "e.g",  "eq",  "eqs", "fig",
        "figs", "i.e",   "inc", "jr",  "ltd",  "mr",   "mrs",  "ms",   "no",  "nos", "p",
        "pp",  "prof",   "ref", "refs", "resp", "sec", "sect", "sp",   "spp", "sr",  "st",
        "suppl", "tab",  "var", "viz", "vol",  "vs",   "wt",
    };
    return list;
}

class RuleSentenceSplitter {
  public:
    RuleSentenceSplitter() : abbreviations_(default_abbreviations()) {}
    explicit RuleSentenceSplitter(std::set<std::string, std::less<>> abbreviations)
        : abbreviations_(std::move(abbreviations)) {}

    std::vector<SentenceSpan> operator()(std::string_view s) const {
        std::vector<SentenceSpan> out;
        const std::size_t n = s.size();
        std::size_t start = skip_space(s, 0);
        std::size_t i = start;
        while (i < n) {
            const char c = s[i];
            if (c != '.' && c != '?' && c != '!') {
                ++i;
                continue;
            }
            std::size_t j = i + 1;
            while (j < n && (s[j] == '.' || s[j] == '?' || s[j] == '!')) ++j;
            j = skip_closers(s, j);
            if (j < n && !text::is_space(s[j])) {
                i = j;
                continue;
            }
            const std::size_t k = skip_space(s, j);
            const bool lower_follows = k < n && s[k] >= 'a' && s[k] <= 'z';
            if (c == '.' && j == i + 1 && (lower_follows || is_abbreviation(s, start, i))) {
                i = j;
                continue;
            }
            emit(out, s, start, j);
            start = k;
            i = k;
        }
        if (start < n) emit(out, s, start, n);
        return out;
    }

  private:
    static std::size_t skip_space(std::string_view s, std::size_t i) {
        while (i < s.size() && text::is_space(s[i])) ++i;
        return i;
    }

    // Closing brackets and quotes, including U+201D and U+2019.
    static std::size_t skip_closers(std::string_view s, std::size_t j) {
        for (;;) {
            if (j < s.size() && (s[j] == ')' || s[j] == ']' || s[j] == '"' || s[j] == '\'')) {
                ++j;
            } else if (j < s.size() && s.substr(j, 3) == "\xE2\x80\x9D") {
                j += 3;
            } else if (j < s.size() && s.substr(j, 3) == "\xE2\x80\x99") {
                j += 3;
            } else {
                return j;
            }
        }
    }

    bool is_abbreviation(std::string_view s, std::size_t start, std::size_t dot) const {
        std::size_t b = dot;
        while (b > start && !text::is_space(s[b - 1]) && s[b - 1] != '(' && s[b - 1] != '[') --b;
        if (b == dot) return false;
        return abbreviations_.contains(text::to_lower(s.substr(b, dot - b)));
    }

    static void emit(std::vector<SentenceSpan>& out, std::string_view s, std::size_t b, std::size_t e) {
        while (e > b && text::is_space(s[e - 1])) --e;
        if (e > b) out.push_back(SentenceSpan{b, e, std::string(s.substr(b, e - b))});
    }

    std::set<std::string, std::less<>> abbreviations_;
};

/// Deterministic rule-based split on terminal punctuation, honoring the default
/// abbreviation list.
inline std::vector<SentenceSpan> split_sentences(std::string_view paragraph) {
    static const RuleSentenceSplitter splitter;
    return splitter(paragraph);
}

}  // namespace itgkit
