#pragma once

// Rule-based explicit anchors in review sentences ("Fig. 4", "the discussion", quotes,
// "second paragraph", page/line markers) and their resolution to paper nodes.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "itgkit/error.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/similarity.hpp"
#include "itgkit/text.hpp"

namespace itgkit {

enum class AnchorType { lin, pag, col, par, quo, sec, fig, tab, box, ref };

inline constexpr AnchorType kAnchorTypes[] = {AnchorType::lin, AnchorType::pag, AnchorType::col, AnchorType::par,
                                              AnchorType::quo, AnchorType::sec, AnchorType::fig, AnchorType::tab,
                                              AnchorType::box, AnchorType::ref};

inline std::string_view to_string(AnchorType t) {
    switch (t) {
        case AnchorType::lin: return "lin";
        case AnchorType::pag: return "pag";
        case AnchorType::col: return "col";
        case AnchorType::par: return "par";
        case AnchorType::quo: return "quo";
        case AnchorType::sec: return "sec";
        case AnchorType::fig: return "fig";
        case AnchorType::tab: return "tab";
        case AnchorType::box: return "box";
        case AnchorType::ref: return "ref";
    }
    return "sec";
}

inline AnchorType parse_anchor_type(std::string_view s) {
    for (auto t : kAnchorTypes)
        if (to_string(t) == s) return t;
    throw ParseError("unknown anchor type '" + std::string(s) + "'");
}

/// Target kinds an anchor type may resolve to.
inline bool kind_compatible(AnchorType t, NodeKind k) {
    switch (t) {
        case AnchorType::fig: return k == NodeKind::figure;
        case AnchorType::tab:
        case AnchorType::box: return k == NodeKind::table;
        case AnchorType::sec: return k == NodeKind::section_title;
        case AnchorType::quo:
        case AnchorType::par: return k == NodeKind::paragraph || k == NodeKind::sentence;
        case AnchorType::ref: return k == NodeKind::reference;
        case AnchorType::lin:
        case AnchorType::pag:
        case AnchorType::col: return false;
    }
    return false;
}

// How the key group is turned into a lookup key.
enum class KeyNormalization { number, section, quote, ordinal, reference, raw };

inline KeyNormalization parse_key_normalization(std::string_view s) {
    if (s == "number") return KeyNormalization::number;
    if (s == "section") return KeyNormalization::section;
    if (s == "quote") return KeyNormalization::quote;
    if (s == "ordinal") return KeyNormalization::ordinal;
    if (s == "reference") return KeyNormalization::reference;
    if (s == "raw") return KeyNormalization::raw;
    throw ParseError("unknown normalization '" + std::string(s) + "'");
}

struct AnchorPattern {
    AnchorType type = AnchorType::sec;
    std::string pattern;  // ECMAScript; "{sections}" expands to the section-name alternation
    KeyNormalization normalization = KeyNormalization::raw;
    int span_group = 0;
    int key_group = 0;
    bool icase = true;
    std::size_t min_words = 0;  // on the key group
};

inline std::vector<AnchorPattern> anchor_patterns_from_json(const nlohmann::json& j) {
    std::vector<AnchorPattern> out;
    try {
        const auto& arr = j.contains("patterns") ? j.at("patterns") : j;
        for (const auto& p : arr) {
            AnchorPattern a;
            a.type = parse_anchor_type(p.at("type").get<std::string>());
            a.pattern = p.at("pattern").get<std::string>();
            a.normalization = parse_key_normalization(p.value("normalization", "raw"));
            a.span_group = p.value("span_group", 0);
            a.key_group = p.value("key_group", 0);
            a.icase = p.value("icase", true);
            a.min_words = p.value("min_words", std::size_t{0});
            out.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad pattern file: ") + e.what());
    }
    return out;
}

inline constexpr std::string_view kDefaultPatternsJson = R"json({
  "patterns": [
    {"type": "fig", "pattern": "\\b(?:supplementary\\s+)?fig(?:ure)?s?\\.?\\s*(\\d+)[a-z]?\\b", "normalization": "number", "key_group": 1},
    {"type": "tab", "pattern": "\\btab(?:le)?s?\\.?\\s*(\\d+)\\b", "normalization": "number", "key_group": 1},
    {"type": "box", "pattern": "\\bbox(?:es)?\\s*(\\d+)\\b", "normalization": "number", "key_group": 1},
    {"type": "sec", "pattern": "\\bsec(?:tion|t)?s?\\.?\\s*(\\d+(?:\\.\\d+)*)\\b", "normalization": "number", "key_group": 1},
    {"type": "sec", "pattern": "\\b({sections})\\b", "normalization": "section", "key_group": 1},
    {"type": "sec", "pattern": "\\b({headings})\\s+(?:sub)?sections?\\b", "normalization": "section", "span_group": 1, "key_group": 1},
    {"type": "sec", "pattern": "\\b(?:sub)?sections?\\s+(?:on\\s+|titled\\s+|called\\s+)?[\"“‘']?({headings})\\b", "normalization": "section", "span_group": 1, "key_group": 1},
    {"type": "quo", "pattern": "\"([^\"]+)\"", "normalization": "quote", "key_group": 1, "min_words": 3},
    {"type": "quo", "pattern": "“(.+?)”", "normalization": "quote", "key_group": 1, "min_words": 3},
    {"type": "quo", "pattern": "‘(.+?)’(?![A-Za-z])", "normalization": "quote", "key_group": 1, "min_words": 3},
    {"type": "quo", "pattern": "(?:^|[\\s(])'([^']+)'(?=[\\s.,;:!?)]|$)", "normalization": "quote", "span_group": 0, "key_group": 1, "min_words": 3},
    {"type": "par", "pattern": "\\b(first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth|last|final|\\d+(?:st|nd|rd|th))\\s+para(?:graph)?s?\\b", "normalization": "ordinal", "key_group": 1},
    {"type": "par", "pattern": "\\bpara(?:graph)?s?\\.?\\s*(\\d+)\\b", "normalization": "ordinal", "key_group": 1},
    {"type": "pag", "pattern": "\\b(?:pages?|pp?\\.|pg\\.?)\\s*(\\d+)\\b", "normalization": "number", "key_group": 1},
    {"type": "lin", "pattern": "\\b(?:lines?|ll?\\.)\\s*(\\d+)\\b", "normalization": "number", "key_group": 1},
    {"type": "col", "pattern": "\\b(?:columns?|cols?\\.)\\s*(\\d+)\\b", "normalization": "number", "key_group": 1},
    {"type": "col", "pattern": "\\b(left|right|first|second)[\\s-]+(?:hand\\s+)?column\\b", "normalization": "raw", "key_group": 1},
    {"type": "ref", "pattern": "\\[(\\d+)(?:\\s*[,–-]\\s*\\d+)*\\]", "normalization": "reference", "key_group": 1},
    {"type": "ref", "pattern": "\\b(?:references?|refs?\\.?)\\s*(\\d+)\\b", "normalization": "reference", "key_group": 1},
    {"type": "ref", "pattern": "\\(([A-Z][A-Za-z'\\-]+(?:\\s+et\\s+al\\.?)?,?\\s+(?:19|20)\\d\\d[a-z]?)\\)", "normalization": "reference", "key_group": 1, "icase": false}
  ]
})json";

inline const std::vector<AnchorPattern>& default_anchor_patterns() {
    static const std::vector<AnchorPattern> p = anchor_patterns_from_json(nlohmann::json::parse(kDefaultPatternsJson));
    return p;
}

/// Section names recognized even when the paper has no such heading.
inline const std::vector<std::string>& canonical_section_names() {
    static const std::vector<std::string> names = {
        "abstract",        "introduction",        "background",   "materials and methods",
        "methods",         "methodology",         "results",      "discussion",
        "conclusions",     "conclusion",          "limitations",  "related work",
        "implementation",  "use cases",           "data availability", "acknowledgements",
        "references",      "supplementary material",
    };
    return names;
}

namespace detail {

inline bool is_section_stopword(std::string_view w) {
    static const std::set<std::string, std::less<>> stop = {"a", "an", "and", "the", "of", "in", "on", "for", "to", "section"};
    return stop.contains(w);
}

// Numbers are dropped so "2. Methods" folds like "methods".
inline std::vector<std::string> section_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (auto& t : text::word_tokens(s)) {
        if (is_section_stopword(t)) continue;
        if (std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
        out.push_back(std::move(t));
    }
    return out;
}

inline std::string regex_escape(std::string_view s) {
    static const std::string_view special = R"(\^$.|?*+()[]{}/)";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string_view::npos) out += '\\';
        out += c;
    }
    return out;
}

inline std::size_t word_count(std::string_view s) { return text::split_ws(s).size(); }

inline long ordinal_value(std::string_view w) {
    static const std::map<std::string, long, std::less<>> words = {
        {"first", 1}, {"second", 2}, {"third", 3}, {"fourth", 4}, {"fifth", 5},  {"sixth", 6},
        {"seventh", 7}, {"eighth", 8}, {"ninth", 9}, {"tenth", 10}, {"last", -1}, {"final", -1}};
    const auto lw = text::to_lower(w);
    if (auto it = words.find(lw); it != words.end()) return it->second;
    return text::first_integer(lw);
}

}  // namespace detail

/// Folded section key: lowercase word tokens without stopwords and numbering.
inline std::string section_key(std::string_view title) {
    std::string out;
    for (const auto& t : detail::section_tokens(title)) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

struct ExplicitAnchor {
    NodeId sentence;
    std::size_t start = 0;  // byte offsets into the sentence content
    std::size_t end = 0;
    AnchorType type = AnchorType::sec;
    std::string surface;
    std::string key;
    std::optional<std::string> context_section;  // par only: sec key mentioned in the same sentence

    friend bool operator==(const ExplicitAnchor&, const ExplicitAnchor&) = default;
};

struct ExplicitLink {
    ExplicitAnchor anchor;
    std::optional<NodeId> target;
    std::string reason;  // set when unresolved: not-found | no-such-coordinate | below-threshold | no-context
    double similarity = 0.0;  // quo only

    [[nodiscard]] bool resolved() const { return target.has_value(); }
};

struct ExplicitLinkOptions {
    double quote_threshold = 0.8;
    double section_fuzzy_threshold = 0.85;
};

namespace detail {

/// Regex alternation over multi-word names, longest first. Empty input never matches.
inline std::string alternation(const std::set<std::string>& names) {
    if (names.empty()) return "(?!)";
    std::vector<std::string> sorted(names.begin(), names.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    std::string out;
    for (const auto& n : sorted) {
        if (!out.empty()) out += '|';
        std::string esc;
        for (const auto& w : text::split_ws(n)) {
            if (!esc.empty()) esc += "\\s+";
            esc += regex_escape(w);
        }
        out += esc;
    }
    return out;
}

}  // namespace detail

/// Anchor detector bound to one paper: the section alternation includes the paper's own
/// headings next to the canonical names.
class AnchorDetector {
  public:
    AnchorDetector(const std::vector<AnchorPattern>& patterns, const std::vector<std::string>& section_titles) {
        std::set<std::string> names;
        for (const auto& n : canonical_section_names()) names.insert(text::normalize_space(text::to_lower(n)));
        // The paper's own headings are only taken with a "section" cue next to them; bare
        // phrases like "image analysis" are too common in review prose.
        std::set<std::string> headings;
        for (const auto& t : section_titles) {
            auto n = text::normalize_space(text::to_lower(t));
            // Strip leading numbering like "2." or "3.1".
            std::size_t i = 0;
            while (i < n.size() && ((n[i] >= '0' && n[i] <= '9') || n[i] == '.' || n[i] == ' ')) ++i;
            n = n.substr(i);
            if (n.size() >= 4 && !names.contains(n)) headings.insert(n);
        }
        const std::string alternation = detail::alternation(names);
        const std::string heading_alt = detail::alternation(headings);
        for (const auto& p : patterns) {
            std::string src = p.pattern;
            if (auto pos = src.find("{sections}"); pos != std::string::npos) src.replace(pos, 10, alternation);
            if (auto pos = src.find("{headings}"); pos != std::string::npos) src.replace(pos, 10, heading_alt);
            auto flags = std::regex::ECMAScript;
            if (p.icase) flags |= std::regex::icase;
            try {
                compiled_.push_back(Compiled{p, std::regex(src, flags)});
            } catch (const std::regex_error& e) {
                throw ParseError("bad anchor pattern '" + p.pattern + "': " + e.what());
            }
        }
    }

    /// Non-overlapping anchors ordered by start; overlaps go to the longest match, then
    /// to the earlier pattern.
    [[nodiscard]] std::vector<ExplicitAnchor> detect(const NodeId& sentence, const std::string& content) const {
        struct Candidate {
            ExplicitAnchor a;
            std::size_t pattern;
        };
        std::vector<Candidate> cands;
        for (std::size_t pi = 0; pi < compiled_.size(); ++pi) {
            const auto& c = compiled_[pi];
            for (std::sregex_iterator it(content.begin(), content.end(), c.re), end; it != end; ++it) {
                const auto& m = *it;
                if (m.length(0) == 0) continue;
                const auto& span = m[c.p.span_group];
                const auto& keym = m[c.p.key_group];
                if (!span.matched || !keym.matched) continue;
                const std::string raw_key = keym.str();
                if (c.p.min_words && detail::word_count(raw_key) < c.p.min_words) continue;
                ExplicitAnchor a;
                a.sentence = sentence;
                a.type = c.p.type;
                a.start = static_cast<std::size_t>(span.first - content.begin());
                a.end = static_cast<std::size_t>(span.second - content.begin());
                if (c.p.span_group == 0 && c.p.type == AnchorType::quo) {
                    // Leading context char of the ASCII single-quote pattern is not part of the anchor.
                    while (a.start < a.end && content[a.start] != '\'' && content[a.start] != '"' &&
                           static_cast<unsigned char>(content[a.start]) < 0x80)
                        ++a.start;
                }
                a.surface = content.substr(a.start, a.end - a.start);
                a.key = normalize_key(c.p.normalization, raw_key);
                if (a.key.empty()) continue;
                cands.push_back(Candidate{std::move(a), pi});
            }
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
            const auto lx = x.a.end - x.a.start;
            const auto ly = y.a.end - y.a.start;
            if (lx != ly) return lx > ly;
            if (x.pattern != y.pattern) return x.pattern < y.pattern;
            return x.a.start < y.a.start;
        });
        std::vector<ExplicitAnchor> chosen;
        for (auto& c : cands) {
            bool overlaps = false;
            for (const auto& k : chosen)
                if (c.a.start < k.end && k.start < c.a.end) {
                    overlaps = true;
                    break;
                }
            if (!overlaps) chosen.push_back(std::move(c.a));
        }
        std::sort(chosen.begin(), chosen.end(),
                  [](const ExplicitAnchor& x, const ExplicitAnchor& y) { return x.start < y.start; });
        for (auto& a : chosen) {
            if (a.type != AnchorType::par) continue;
            std::optional<std::size_t> best;
            std::size_t best_gap = 0;
            for (const auto& s : chosen) {
                if (s.type != AnchorType::sec) continue;
                const std::size_t gap = s.start > a.end ? s.start - a.end : a.start - std::min(a.start, s.end);
                if (!best || gap < best_gap) {
                    best = static_cast<std::size_t>(&s - chosen.data());
                    best_gap = gap;
                }
            }
            if (best) a.context_section = chosen[*best].key;
        }
        return chosen;
    }

  private:
    struct Compiled {
        AnchorPattern p;
        std::regex re;
    };
    std::vector<Compiled> compiled_;

    static std::string normalize_key(KeyNormalization n, const std::string& raw) {
        switch (n) {
            case KeyNormalization::number: {
                // Dotted section numbers keep their path.
                std::string out;
                for (char c : raw)
                    if ((c >= '0' && c <= '9') || (c == '.' && !out.empty())) out += c;
                while (!out.empty() && out.back() == '.') out.pop_back();
                return out;
            }
            case KeyNormalization::section: return section_key(raw);
            case KeyNormalization::quote: return text::normalize_space(raw);
            case KeyNormalization::ordinal: {
                const long v = detail::ordinal_value(raw);
                return v == 0 ? std::string() : std::to_string(v);
            }
            case KeyNormalization::reference: return text::normalize_space(raw);
            case KeyNormalization::raw: return text::to_lower(text::normalize_space(raw));
        }
        return raw;
    }
};

inline std::vector<std::string> section_titles(const IntertextualGraph& g, const DocumentId& doc) {
    std::vector<std::string> out;
    for (const auto* n : g.nodes_of(doc, NodeKind::section_title)) out.push_back(n->content);
    return out;
}

/// Detection with the default pattern inventory and no paper-specific headings.
inline std::vector<ExplicitAnchor> detect_anchors(const NodeId& sentence, const std::string& content) {
    static const AnchorDetector detector(default_anchor_patterns(), {});
    return detector.detect(sentence, content);
}

namespace detail {

inline const Node* first_by_label(const IntertextualGraph& g, const DocumentId& doc, NodeKind kind, long number,
                                  const std::function<bool(const Node&)>& accept) {
    for (const auto* n : g.nodes_of(doc, kind)) {
        if (!accept(*n)) continue;
        auto it = n->meta.find("label");
        if (it != n->meta.end() && text::first_integer(it->second) == number) return n;
    }
    return nullptr;
}

inline bool meta_is(const Node& n, const char* key, const char* value) {
    auto it = n.meta.find(key);
    return it != n.meta.end() && it->second == value;
}

inline std::string strip_label_dots(std::string s) {
    while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
    return s;
}

}  // namespace detail

inline std::optional<NodeId> resolve_section(const IntertextualGraph& g, const DocumentId& doc, const std::string& key,
                                             double fuzzy_threshold = 0.85) {
    const auto secs = g.nodes_of(doc, NodeKind::section_title);
    if (key.empty()) return std::nullopt;
    if (std::isdigit(static_cast<unsigned char>(key.front()))) {
        for (const auto* s : secs) {
            auto it = s->meta.find("label");
            if (it != s->meta.end() && detail::strip_label_dots(text::normalize_space(it->second)) == key) return s->id;
        }
        for (const auto* s : secs) {
            auto it = s->meta.find("position");
            if (it != s->meta.end() && it->second == key) return s->id;
        }
        return std::nullopt;
    }
    for (const auto* s : secs)
        if (section_key(s->content) == key) return s->id;
    for (const auto* s : secs)
        if (levenshtein_ratio(section_key(s->content), key) >= fuzzy_threshold) return s->id;
    // "methods" against "Materials and Methods": every anchor token occurs in the title.
    const auto want = detail::section_tokens(key);
    for (const auto* s : secs) {
        const auto have = detail::section_tokens(s->content);
        const std::set<std::string> hs(have.begin(), have.end());
        if (!want.empty() && std::all_of(want.begin(), want.end(), [&](const std::string& w) { return hs.contains(w); }))
            return s->id;
    }
    return std::nullopt;
}

/// Resolution of one anchor against a paper document. Never throws for missing targets.
inline ExplicitLink resolve_target(const ExplicitAnchor& anchor, const IntertextualGraph& g, const DocumentId& doc,
                                   const ExplicitLinkOptions& opt = {}) {
    ExplicitLink link{anchor, std::nullopt, "", 0.0};
    auto not_found = [&] {
        link.reason = "not-found";
        return link;
    };
    switch (anchor.type) {
        case AnchorType::lin:
        case AnchorType::pag:
        case AnchorType::col:
            link.reason = "no-such-coordinate";
            return link;
        case AnchorType::sec: {
            auto s = resolve_section(g, doc, anchor.key, opt.section_fuzzy_threshold);
            if (!s) return not_found();
            link.target = *s;
            return link;
        }
        case AnchorType::fig:
        case AnchorType::tab:
        case AnchorType::box: {
            const long number = text::first_integer(anchor.key);
            const Node* n = nullptr;
            if (anchor.type == AnchorType::fig)
                n = detail::first_by_label(g, doc, NodeKind::figure, number,
                                           [](const Node& x) { return !detail::meta_is(x, "type", "supplementary"); });
            else if (anchor.type == AnchorType::tab)
                n = detail::first_by_label(g, doc, NodeKind::table, number,
                                           [](const Node& x) { return !detail::meta_is(x, "type", "box"); });
            else
                n = detail::first_by_label(g, doc, NodeKind::table, number,
                                           [](const Node& x) { return detail::meta_is(x, "type", "box"); });
            if (!n) return not_found();
            link.target = n->id;
            return link;
        }
        case AnchorType::quo: {
            const auto needle = text::fold(anchor.key);
            if (needle.empty()) return not_found();
            for (NodeKind kind : {NodeKind::sentence, NodeKind::paragraph}) {
                const Node* best = nullptr;
                double best_sim = -1.0;
                for (const auto* n : g.nodes_of(doc, kind)) {
                    const double s = substring_similarity(needle, text::fold(n->content));
                    if (s > best_sim) {
                        best_sim = s;
                        best = n;
                    }
                }
                if (best && best_sim >= opt.quote_threshold) {
                    link.target = best->id;
                    link.similarity = best_sim;
                    return link;
                }
                link.similarity = std::max(link.similarity, best_sim);
            }
            link.reason = "below-threshold";
            return link;
        }
        case AnchorType::par: {
            const long ord = std::stol(anchor.key);
            std::vector<const Node*> paras;
            if (anchor.context_section) {
                auto s = resolve_section(g, doc, *anchor.context_section, opt.section_fuzzy_threshold);
                if (!s) {
                    link.reason = "no-context";
                    return link;
                }
                for (const auto* p : g.nodes_of(doc, NodeKind::paragraph))
                    if (ancestor_at(g, p->id, NodeKind::section_title) == *s) paras.push_back(p);
            } else {
                // Without a section, count body paragraphs; the abstract is not part of that count.
                for (const auto* p : g.nodes_of(doc, NodeKind::paragraph))
                    if (!ancestor_at(g, p->id, NodeKind::abstract)) paras.push_back(p);
            }
            if (paras.empty()) return not_found();
            const Node* n = nullptr;
            if (ord == -1) n = paras.back();
            else if (ord >= 1 && static_cast<std::size_t>(ord) <= paras.size()) n = paras[static_cast<std::size_t>(ord - 1)];
            if (!n) return not_found();
            link.target = n->id;
            return link;
        }
        case AnchorType::ref: {
            const auto refs = g.nodes_of(doc, NodeKind::reference);
            const long number = text::first_integer(anchor.key);
            const bool numeric = !anchor.key.empty() && std::isdigit(static_cast<unsigned char>(anchor.key.front()));
            if (numeric) {
                for (const auto* r : refs) {
                    auto it = r->meta.find("label");
                    if (it != r->meta.end() && text::first_integer(it->second) == number) {
                        link.target = r->id;
                        return link;
                    }
                }
                if (number >= 1 && static_cast<std::size_t>(number) <= refs.size()) {
                    link.target = refs[static_cast<std::size_t>(number - 1)]->id;
                    return link;
                }
                return not_found();
            }
            // Author-year: surname and year both present in the reference text.
            const auto words = text::split_ws(anchor.key);
            if (words.empty()) return not_found();
            std::string surname = text::to_lower(words.front());
            while (!surname.empty() && surname.back() == ',') surname.pop_back();
            std::string year;
            for (char c : anchor.key)
                if (c >= '0' && c <= '9') year += c;
            for (const auto* r : refs) {
                const auto lc = text::to_lower(r->content);
                if (lc.find(surname) != std::string::npos && (year.empty() || lc.find(year) != std::string::npos)) {
                    link.target = r->id;
                    return link;
                }
            }
            return not_found();
        }
    }
    return not_found();
}

struct ExplicitExtraction {
    std::vector<ExplicitLink> links;
    std::size_t edges_added = 0;
};

/// Detect and resolve anchors for every sentence of `review_doc` against `paper_doc`.
/// Pure: the graph is not touched.
inline std::vector<ExplicitLink> explicit_links(const IntertextualGraph& g, const DocumentId& review_doc,
                                                const DocumentId& paper_doc,
                                                const std::vector<AnchorPattern>& patterns = default_anchor_patterns(),
                                                const ExplicitLinkOptions& opt = {}) {
    const AnchorDetector detector(patterns, section_titles(g, paper_doc));
    std::vector<ExplicitLink> out;
    for (const auto& id : reading_order(g, review_doc)) {
        const auto& n = g.node(id);
        if (n.kind != NodeKind::sentence) continue;
        for (const auto& a : detector.detect(n.id, n.content)) out.push_back(resolve_target(a, g, paper_doc, opt));
    }
    return out;
}

/// Adds one link/explicit edge per resolved (sentence, target) pair not already present.
inline std::size_t add_explicit_edges(IntertextualGraph& g, const std::vector<ExplicitLink>& links) {
    std::set<std::pair<std::string, std::string>> have;
    for (const auto& e : g.edges())
        if (e.kind == EdgeKind::link && e.subtype == LinkSubtype::explicit_link) have.emplace(e.src.value, e.dst.value);
    std::size_t added = 0;
    for (const auto& l : links) {
        if (!l.target) continue;
        if (!kind_compatible(l.anchor.type, g.node(*l.target).kind))
            throw InvariantError("anchor type " + std::string(to_string(l.anchor.type)) + " cannot target a " +
                                 std::string(to_string(g.node(*l.target).kind)));
        if (!have.emplace(l.anchor.sentence.value, l.target->value).second) continue;
        g.add_edge(l.anchor.sentence, *l.target, EdgeKind::link, LinkSubtype::explicit_link, "rule-parser");
        ++added;
    }
    return added;
}

inline ExplicitExtraction extract_explicit_links(IntertextualGraph& joint, const DocumentId& review_doc,
                                                 const DocumentId& paper_doc,
                                                 const std::vector<AnchorPattern>& patterns = default_anchor_patterns(),
                                                 const ExplicitLinkOptions& opt = {}) {
    ExplicitExtraction x;
    x.links = explicit_links(joint, review_doc, paper_doc, patterns, opt);
    x.edges_added = add_explicit_edges(joint, x.links);
    return x;
}

/// Flat report: sentence, span, type, surface, key, target or "unresolved:<reason>".
inline std::string explicit_links_tsv(const std::vector<ExplicitLink>& links) {
    auto clean = [](std::string s) {
        for (auto& c : s)
            if (c == '\t' || c == '\n' || c == '\r') c = ' ';
        return s;
    };
    std::ostringstream out;
    out << "sentence\tspan\ttype\tsurface\tkey\ttarget\n";
    for (const auto& l : links) {
        out << l.anchor.sentence.value << '\t' << l.anchor.start << '-' << l.anchor.end << '\t'
            << to_string(l.anchor.type) << '\t' << clean(l.anchor.surface) << '\t' << clean(l.anchor.key) << '\t'
            << (l.target ? l.target->value : "unresolved:" + l.reason) << '\n';
    }
    return out.str();
}

inline nlohmann::json to_json(const ExplicitLink& l) {
    nlohmann::json j = {{"sentence", l.anchor.sentence.value},
                        {"start", l.anchor.start},
                        {"end", l.anchor.end},
                        {"type", to_string(l.anchor.type)},
                        {"surface", l.anchor.surface},
                        {"key", l.anchor.key}};
    if (l.anchor.context_section) j["context_section"] = *l.anchor.context_section;
    if (l.target) j["target"] = l.target->value;
    else j["unresolved"] = l.reason;
    if (l.anchor.type == AnchorType::quo) j["similarity"] = l.similarity;
    return j;
}

/// Resolved links whose target kind is not allowed for their anchor type.
inline std::size_t kind_violations(const IntertextualGraph& g, const std::vector<ExplicitLink>& links) {
    std::size_t bad = 0;
    for (const auto& l : links)
        if (l.target && !kind_compatible(l.anchor.type, g.node(*l.target).kind)) ++bad;
    return bad;
}

}  // namespace itgkit
