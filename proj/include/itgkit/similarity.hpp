#pragma once

// String similarity for alignment and quote resolution.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "itgkit/text.hpp"

namespace itgkit {

namespace detail {

// Bit-parallel edit distance (Myers 1999, multi-word blocks after Hyyro). With `substring`
// set, the pattern may match any substring of the text (top row all zero) and the minimum
// over end positions is returned.
inline std::size_t bit_parallel_distance(const std::u32string& pattern, const std::u32string& textv, bool substring) {
    const std::size_t m = pattern.size();
    if (m == 0) return 0;
    const std::size_t words = (m + 63) / 64;
    std::unordered_map<char32_t, std::vector<std::uint64_t>> peq;
    for (std::size_t i = 0; i < m; ++i) {
        auto& v = peq[pattern[i]];
        if (v.empty()) v.assign(words, 0);
        v[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    const std::vector<std::uint64_t> none(words, 0);
    std::vector<std::uint64_t> vp(words, ~std::uint64_t{0});
    std::vector<std::uint64_t> vn(words, 0);
    const std::uint64_t last = std::uint64_t{1} << ((m - 1) % 64);
    std::size_t score = m;
    std::size_t best = m;
    for (char32_t c : textv) {
        auto it = peq.find(c);
        const auto& eq = it == peq.end() ? none : it->second;
        std::uint64_t hp_carry = substring ? 0 : 1;
        std::uint64_t hn_carry = 0;
        for (std::size_t w = 0; w < words; ++w) {
            const std::uint64_t x = eq[w] | hn_carry;
            const std::uint64_t d0 = (((x & vp[w]) + vp[w]) ^ vp[w]) | x | vn[w];
            std::uint64_t hp = vn[w] | ~(d0 | vp[w]);
            std::uint64_t hn = d0 & vp[w];
            if (w == words - 1) {
                if (hp & last) ++score;
                if (hn & last) --score;
            }
            const std::uint64_t hp_out = hp >> 63;
            const std::uint64_t hn_out = hn >> 63;
            hp = (hp << 1) | hp_carry;
            hn = (hn << 1) | hn_carry;
            vp[w] = hn | ~(d0 | hp);
            vn[w] = hp & d0;
            hp_carry = hp_out;
            hn_carry = hn_out;
        }
        best = std::min(best, score);
    }
    return substring ? best : score;
}

}  // namespace detail

/// Levenshtein distance over Unicode code points.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    auto ua = text::utf8_decode(a);
    auto ub = text::utf8_decode(b);
    if (ua.size() < ub.size()) std::swap(ua, ub);
    if (ub.empty()) return ua.size();
    return detail::bit_parallel_distance(ub, ua, false);
}

/// 1 - distance / max(|a|, |b|) in code points; two empty strings are identical (1.0).
inline double levenshtein_ratio(std::string_view a, std::string_view b) {
    const auto la = text::utf8_decode(a).size();
    const auto lb = text::utf8_decode(b).size();
    const auto longest = std::max(la, lb);
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

/// Jaccard index of the lowercased whitespace token sets; two empty sets give 1.0.
inline double word_overlap(std::string_view a, std::string_view b) {
    std::set<std::string> sa;
    std::set<std::string> sb;
    for (auto& t : text::split_ws(a)) sa.insert(text::to_lower(t));
    for (auto& t : text::split_ws(b)) sb.insert(text::to_lower(t));
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : sa)
        if (sb.contains(t)) ++inter;
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

/// Best edit similarity of `needle` against any substring of `haystack`:
/// 1 - min_substring_distance / |needle|. Exact containment scores 1.0.
inline double substring_similarity(std::string_view needle, std::string_view haystack) {
    const auto un = text::utf8_decode(needle);
    if (un.empty()) return 1.0;
    const auto uh = text::utf8_decode(haystack);
    const auto d = detail::bit_parallel_distance(un, uh, true);
    return 1.0 - static_cast<double>(d) / static_cast<double>(un.size());
}

}  // namespace itgkit
