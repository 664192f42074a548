#pragma once

// Version alignment: one-to-one matching of paragraph and section-title nodes between two
// revisions, maximizing total gated similarity, plus change reporting.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "itgkit/assignment.hpp"
#include "itgkit/error.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/similarity.hpp"
#include "itgkit/text.hpp"

namespace itgkit {

enum class SimilarityMetric { levenshtein_ratio, word_overlap, combined };

inline std::string_view to_string(SimilarityMetric m) {
    switch (m) {
        case SimilarityMetric::levenshtein_ratio: return "levenshtein";
        case SimilarityMetric::word_overlap: return "overlap";
        case SimilarityMetric::combined: return "combined";
    }
    return "levenshtein";
}

inline SimilarityMetric parse_similarity_metric(std::string_view s) {
    if (s == "levenshtein" || s == "levenshtein-ratio") return SimilarityMetric::levenshtein_ratio;
    if (s == "overlap" || s == "word-overlap") return SimilarityMetric::word_overlap;
    if (s == "combined") return SimilarityMetric::combined;
    throw UsageError("unknown metric '" + std::string(s) + "' (levenshtein|overlap|combined)");
}

inline double similarity(std::string_view a, std::string_view b, SimilarityMetric metric) {
    switch (metric) {
        case SimilarityMetric::levenshtein_ratio: return levenshtein_ratio(a, b);
        case SimilarityMetric::word_overlap: return word_overlap(a, b);
        case SimilarityMetric::combined: return 0.5 * (levenshtein_ratio(a, b) + word_overlap(a, b));
    }
    return 0.0;
}

struct AlignNode {
    NodeId id;
    NodeKind kind = NodeKind::paragraph;
    std::string content;
};

inline constexpr double kDefaultAlignThreshold = 0.3;

/// 0 across node kinds or below the threshold, the similarity otherwise.
inline double score(const AlignNode& a, const AlignNode& b, SimilarityMetric metric,
                    double threshold = kDefaultAlignThreshold) {
    if (a.kind != b.kind) return 0.0;
    const double s = similarity(a.content, b.content, metric);
    return s >= threshold ? s : 0.0;
}

struct AlignmentProblem {
    DocumentId doc;
    std::vector<AlignNode> new_nodes;
    std::vector<AlignNode> old_nodes;
    SimilarityMetric metric = SimilarityMetric::levenshtein_ratio;
    double threshold = kDefaultAlignThreshold;
};

inline bool is_alignable(NodeKind k) { return k == NodeKind::paragraph || k == NodeKind::section_title; }

inline std::vector<AlignNode> alignable_nodes(const IntertextualGraph& g, const DocumentId& doc) {
    std::vector<AlignNode> out;
    for (const auto* n : g.nodes_of(doc))
        if (is_alignable(n->kind)) out.push_back(AlignNode{n->id, n->kind, n->content});
    return out;
}

/// Alignment problem over the first document of each graph. Both must carry the same
/// document id.
inline AlignmentProblem make_alignment_problem(const IntertextualGraph& old_graph, const IntertextualGraph& new_graph,
                                               SimilarityMetric metric = SimilarityMetric::levenshtein_ratio,
                                               double threshold = kDefaultAlignThreshold) {
    if (old_graph.documents().empty() || new_graph.documents().empty())
        throw UsageError("alignment needs two non-empty graphs");
    const auto& od = old_graph.documents().front();
    const auto& nd = new_graph.documents().front();
    if (od.id != nd.id)
        throw UsageError("document-id mismatch: '" + od.id.value + "' vs '" + nd.id.value + "'");
    if (threshold < 0.0 || threshold > 1.0) throw UsageError("threshold must lie in [0, 1]");
    return AlignmentProblem{od.id, alignable_nodes(new_graph, nd.id), alignable_nodes(old_graph, od.id), metric,
                            threshold};
}

struct AlignedPair {
    NodeId new_node;
    NodeId old_node;
    double score = 0.0;

    friend bool operator==(const AlignedPair&, const AlignedPair&) = default;
};

struct AlignmentResult {
    DocumentId doc;
    SimilarityMetric metric = SimilarityMetric::levenshtein_ratio;
    double threshold = kDefaultAlignThreshold;
    std::vector<AlignedPair> edges;  // new -> old, in new-version order
    std::vector<NodeId> added;
    std::vector<NodeId> deleted;
    std::vector<AlignedPair> modified;
    std::vector<AlignedPair> unchanged;
    double objective = 0.0;
};

namespace detail {

struct PreparedText {
    std::u32string chars;
    std::set<std::string> words;
};

inline PreparedText prepare(const std::string& s) {
    PreparedText p{text::utf8_decode(s), {}};
    for (auto& t : text::split_ws(s)) p.words.insert(text::to_lower(t));
    return p;
}

inline double prepared_levenshtein(const PreparedText& a, const PreparedText& b, double threshold) {
    const std::size_t la = a.chars.size();
    const std::size_t lb = b.chars.size();
    const std::size_t longest = std::max(la, lb);
    if (longest == 0) return 1.0;
    const std::size_t gap = la > lb ? la - lb : lb - la;
    // Distance is at least the length gap; skip pairs that cannot reach the threshold.
    if (1.0 - static_cast<double>(gap) / static_cast<double>(longest) < threshold) return 0.0;
    if (a.chars == b.chars) return 1.0;
    const auto& lng = la >= lb ? a.chars : b.chars;
    const auto& sht = la >= lb ? b.chars : a.chars;
    const std::size_t d = sht.empty() ? lng.size() : bit_parallel_distance(sht, lng, false);
    return 1.0 - static_cast<double>(d) / static_cast<double>(longest);
}

inline double prepared_overlap(const PreparedText& a, const PreparedText& b) {
    if (a.words.empty() && b.words.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : a.words)
        if (b.words.contains(t)) ++inter;
    return static_cast<double>(inter) / static_cast<double>(a.words.size() + b.words.size() - inter);
}

inline double prepared_score(const AlignNode& na, const PreparedText& a, const AlignNode& nb, const PreparedText& b,
                             SimilarityMetric metric, double threshold) {
    if (na.kind != nb.kind) return 0.0;
    double s = 0.0;
    switch (metric) {
        case SimilarityMetric::levenshtein_ratio: s = prepared_levenshtein(a, b, threshold); break;
        case SimilarityMetric::word_overlap: s = prepared_overlap(a, b); break;
        case SimilarityMetric::combined: s = 0.5 * (prepared_levenshtein(a, b, 0.0) + prepared_overlap(a, b)); break;
    }
    return s >= threshold ? s : 0.0;
}

}  // namespace detail

/// Gated score matrix, rows = new nodes, columns = old nodes.
inline WeightMatrix score_matrix(const AlignmentProblem& p) {
    std::vector<detail::PreparedText> nt;
    std::vector<detail::PreparedText> ot;
    for (const auto& n : p.new_nodes) nt.push_back(detail::prepare(n.content));
    for (const auto& n : p.old_nodes) ot.push_back(detail::prepare(n.content));
    WeightMatrix w(p.new_nodes.size(), p.old_nodes.size());
    for (std::size_t i = 0; i < p.new_nodes.size(); ++i)
        for (std::size_t j = 0; j < p.old_nodes.size(); ++j)
            w(i, j) = detail::prepared_score(p.new_nodes[i], nt[i], p.old_nodes[j], ot[j], p.metric, p.threshold);
    return w;
}

/// Exact maximizer of the summed score under one-to-one constraints. Among optimal
/// alignments the one closest to the diagonal (smallest total index offset) wins, and
/// aligned pairs are preferred over leaving nodes unaligned.
inline AlignmentResult align_versions(const AlignmentProblem& p) {
    const auto w = score_matrix(p);
    const double unmatched_cost = static_cast<double>(std::max(w.rows, w.cols));
    const auto m = max_weight_matching(w, [&](std::optional<std::size_t> r, std::optional<std::size_t> c) {
        if (!r || !c) return unmatched_cost;
        return static_cast<double>(*r > *c ? *r - *c : *c - *r);
    });

    AlignmentResult res;
    res.doc = p.doc;
    res.metric = p.metric;
    res.threshold = p.threshold;
    std::vector<bool> old_used(p.old_nodes.size(), false);
    for (std::size_t i = 0; i < p.new_nodes.size(); ++i) {
        if (!m.row_to_col[i]) {
            res.added.push_back(p.new_nodes[i].id);
            continue;
        }
        const std::size_t j = *m.row_to_col[i];
        old_used[j] = true;
        AlignedPair pair{p.new_nodes[i].id, p.old_nodes[j].id, w(i, j)};
        res.objective += pair.score;
        res.edges.push_back(pair);
        (pair.score >= 1.0 ? res.unchanged : res.modified).push_back(pair);
    }
    for (std::size_t j = 0; j < p.old_nodes.size(); ++j)
        if (!old_used[j]) res.deleted.push_back(p.old_nodes[j].id);
    return res;
}

inline nlohmann::json to_json(const AlignmentResult& r) {
    using nlohmann::json;
    auto pairs = [](const std::vector<AlignedPair>& v) {
        json a = json::array();
        for (const auto& e : v) a.push_back({{"new", e.new_node.value}, {"old", e.old_node.value}, {"score", e.score}});
        return a;
    };
    auto ids = [](const std::vector<NodeId>& v) {
        json a = json::array();
        for (const auto& id : v) a.push_back(id.value);
        return a;
    };
    return {{"doc", r.doc.value},
            {"edges", pairs(r.edges)},
            {"added", ids(r.added)},
            {"deleted", ids(r.deleted)},
            {"modified", pairs(r.modified)},
            {"unchanged", pairs(r.unchanged)},
            {"objective", r.objective},
            {"meta",
             {{"metric", to_string(r.metric)},
              {"threshold", r.threshold},
              {"word_overlap", "jaccard"},
              {"zero_score_edges", "forbidden"},
              {"solver", "hungarian"}}}};
}

inline AlignmentResult alignment_from_json(const nlohmann::json& j) {
    try {
        AlignmentResult r;
        r.doc = DocumentId(j.at("doc").get<std::string>());
        const auto& meta = j.at("meta");
        r.metric = parse_similarity_metric(meta.at("metric").get<std::string>());
        r.threshold = meta.at("threshold").get<double>();
        for (const auto& e : j.at("edges")) {
            AlignedPair p{NodeId(e.at("new").get<std::string>()), NodeId(e.at("old").get<std::string>()),
                          e.at("score").get<double>()};
            r.edges.push_back(p);
            (p.score >= 1.0 ? r.unchanged : r.modified).push_back(p);
        }
        for (const auto& a : j.at("added")) r.added.emplace_back(a.get<std::string>());
        for (const auto& d : j.at("deleted")) r.deleted.emplace_back(d.get<std::string>());
        r.objective = j.at("objective").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad alignment JSON: ") + e.what());
    }
}

struct SectionChange {
    std::string title;
    std::optional<NodeId> old_section;
    std::optional<NodeId> new_section;
    std::string status;  // added | deleted | modified | unchanged | none (text outside sections)
    std::size_t added = 0;
    std::size_t deleted = 0;
    std::size_t modified = 0;
    std::size_t unchanged = 0;
};

struct DiffReport {
    std::size_t added = 0;
    std::size_t deleted = 0;
    std::size_t modified = 0;
    std::size_t unchanged = 0;
    long node_delta = 0;  // alignable nodes in new minus old; negative when the revision shrank
    std::vector<SectionChange> sections;
};

/// Change summary of an alignment against the graphs it was computed from.
inline DiffReport diff_report(const AlignmentResult& r, const IntertextualGraph& old_graph,
                              const IntertextualGraph& new_graph) {
    const auto old_nodes = alignable_nodes(old_graph, r.doc);
    const auto new_nodes = alignable_nodes(new_graph, r.doc);
    std::set<NodeId> old_ids;
    std::set<NodeId> new_ids;
    for (const auto& n : old_nodes) old_ids.insert(n.id);
    for (const auto& n : new_nodes) new_ids.insert(n.id);
    auto check = [](const std::set<NodeId>& ids, const NodeId& id) {
        if (!ids.contains(id)) throw UsageError("alignment does not match graphs: unknown node '" + id.value + "'");
    };
    for (const auto& e : r.edges) {
        check(new_ids, e.new_node);
        check(old_ids, e.old_node);
    }
    for (const auto& a : r.added) check(new_ids, a);
    for (const auto& d : r.deleted) check(old_ids, d);
    if (r.edges.size() + r.added.size() != new_nodes.size() || r.edges.size() + r.deleted.size() != old_nodes.size())
        throw UsageError("alignment does not match graphs: node counts differ");

    DiffReport rep;
    rep.added = r.added.size();
    rep.deleted = r.deleted.size();
    rep.modified = r.modified.size();
    rep.unchanged = r.unchanged.size();
    rep.node_delta = static_cast<long>(new_nodes.size()) - static_cast<long>(old_nodes.size());

    std::map<NodeId, const AlignedPair*> by_new;
    std::map<NodeId, const AlignedPair*> by_old;
    for (const auto& e : r.edges) {
        by_new[e.new_node] = &e;
        by_old[e.old_node] = &e;
    }

    std::map<NodeId, std::size_t> entry_of_old;
    std::map<NodeId, std::size_t> entry_of_new;
    rep.sections.push_back(SectionChange{"", std::nullopt, std::nullopt, "none"});
    for (const auto& n : old_nodes) {
        if (n.kind != NodeKind::section_title) continue;
        SectionChange s{n.content, n.id, std::nullopt, "deleted"};
        if (auto it = by_old.find(n.id); it != by_old.end()) {
            s.new_section = it->second->new_node;
            s.status = it->second->score >= 1.0 ? "unchanged" : "modified";
            entry_of_new[it->second->new_node] = rep.sections.size();
        }
        entry_of_old[n.id] = rep.sections.size();
        rep.sections.push_back(std::move(s));
    }
    for (const auto& n : new_nodes) {
        if (n.kind != NodeKind::section_title || entry_of_new.contains(n.id)) continue;
        entry_of_new[n.id] = rep.sections.size();
        rep.sections.push_back(SectionChange{n.content, std::nullopt, n.id, "added"});
    }
    auto entry = [](const IntertextualGraph& g, const NodeId& id, const std::map<NodeId, std::size_t>& m) {
        auto sec = ancestor_at(g, id, NodeKind::section_title);
        if (!sec) return std::size_t{0};
        auto it = m.find(*sec);
        return it == m.end() ? std::size_t{0} : it->second;
    };
    for (const auto& n : new_nodes) {
        auto& s = rep.sections[entry(new_graph, n.id, entry_of_new)];
        auto it = by_new.find(n.id);
        if (it == by_new.end()) ++s.added;
        else if (it->second->score >= 1.0) ++s.unchanged;
        else ++s.modified;
    }
    for (const auto& d : r.deleted) ++rep.sections[entry(old_graph, d, entry_of_old)].deleted;
    if (rep.sections[0].added + rep.sections[0].deleted + rep.sections[0].modified + rep.sections[0].unchanged == 0)
        rep.sections.erase(rep.sections.begin());
    return rep;
}

inline nlohmann::json to_json(const DiffReport& d) {
    nlohmann::json sections = nlohmann::json::array();
    for (const auto& s : d.sections) {
        nlohmann::json j = {{"title", s.title},      {"status", s.status},       {"added", s.added},
                            {"deleted", s.deleted},  {"modified", s.modified},   {"unchanged", s.unchanged}};
        j["old"] = s.old_section ? nlohmann::json(s.old_section->value) : nlohmann::json(nullptr);
        j["new"] = s.new_section ? nlohmann::json(s.new_section->value) : nlohmann::json(nullptr);
        sections.push_back(std::move(j));
    }
    return {{"added", d.added},         {"deleted", d.deleted},       {"modified", d.modified},
            {"unchanged", d.unchanged}, {"node_delta", d.node_delta}, {"sections", std::move(sections)}};
}

/// Side-by-side style text diff in new-version order; deleted nodes appear where their old
/// position falls. Prefixes: '=' unchanged, '~' modified, '+' added, '-' deleted.
inline std::string diff_text(const AlignmentResult& r, const AlignmentProblem& p) {
    std::unordered_map<std::string, std::size_t> old_pos;
    for (std::size_t j = 0; j < p.old_nodes.size(); ++j) old_pos[p.old_nodes[j].id.value] = j;
    std::map<NodeId, const AlignedPair*> by_new;
    for (const auto& e : r.edges) by_new[e.new_node] = &e;
    std::set<NodeId> deleted(r.deleted.begin(), r.deleted.end());

    std::ostringstream out;
    auto tag = [](const AlignNode& n) { return "[" + std::string(to_string(n.kind)) + "] "; };
    std::size_t next_old = 0;
    auto flush_deleted = [&](std::size_t upto) {
        for (; next_old < upto && next_old < p.old_nodes.size(); ++next_old) {
            const auto& o = p.old_nodes[next_old];
            if (deleted.contains(o.id)) out << "- " << tag(o) << o.content << "\n";
        }
    };
    for (const auto& n : p.new_nodes) {
        auto it = by_new.find(n.id);
        if (it == by_new.end()) {
            out << "+ " << tag(n) << n.content << "\n";
            continue;
        }
        const std::size_t j = old_pos.at(it->second->old_node.value);
        flush_deleted(j);
        next_old = std::max(next_old, j + 1);
        if (it->second->score >= 1.0) {
            out << "= " << tag(n) << n.content << "\n";
        } else {
            std::ostringstream sc;
            sc.precision(3);
            sc << std::fixed << it->second->score;
            out << "~ " << tag(n) << "(" << sc.str() << ")\n";
            out << "  < " << p.old_nodes[j].content << "\n";
            out << "  > " << n.content << "\n";
        }
    }
    flush_deleted(p.old_nodes.size());
    return out.str();
}

}  // namespace itgkit
