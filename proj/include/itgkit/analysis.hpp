#pragma once

// Cross-layer statistics over joint paper/review/revision bundles: linking by review
// pragmatics, incoming links per paper section group, change probability given links.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "itgkit/align.hpp"
#include "itgkit/error.hpp"
#include "itgkit/explicit_links.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/links.hpp"
#include "itgkit/pragmatics.hpp"
#include "itgkit/text.hpp"

namespace itgkit {

enum class SectionGroup { title, abstract, introduction, methods, results, discussion, conclusions, other };

inline constexpr std::array<SectionGroup, 8> kSectionGroups = {
    SectionGroup::title,   SectionGroup::abstract,   SectionGroup::introduction, SectionGroup::methods,
    SectionGroup::results, SectionGroup::discussion, SectionGroup::conclusions,  SectionGroup::other};

inline std::string_view to_string(SectionGroup g) {
    switch (g) {
        case SectionGroup::title: return "title";
        case SectionGroup::abstract: return "abstract";
        case SectionGroup::introduction: return "introduction";
        case SectionGroup::methods: return "methods";
        case SectionGroup::results: return "results";
        case SectionGroup::discussion: return "discussion";
        case SectionGroup::conclusions: return "conclusions";
        case SectionGroup::other: return "other";
    }
    return "other";
}

inline SectionGroup parse_section_group(std::string_view s) {
    for (auto g : kSectionGroups)
        if (to_string(g) == s) return g;
    throw ParseError("unknown section group '" + std::string(s) + "'");
}

/// Ordered keyword table; the first group with a keyword inside the folded title wins.
struct SectionMap {
    std::vector<std::pair<SectionGroup, std::vector<std::string>>> groups;
};

inline SectionMap section_map_from_json(const nlohmann::json& j) {
    SectionMap m;
    try {
        for (const auto& g : j.at("groups")) {
            std::vector<std::string> kws;
            for (const auto& k : g.at("keywords")) kws.push_back(text::fold(k.get<std::string>()));
            m.groups.emplace_back(parse_section_group(g.at("group").get<std::string>()), std::move(kws));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad section map: ") + e.what());
    }
    return m;
}

inline constexpr std::string_view kDefaultSectionMapJson = R"json({
  "groups": [
    {"group": "abstract", "keywords": ["abstract"]},
    {"group": "introduction", "keywords": ["introduction", "background", "rationale", "overview"]},
    {"group": "methods", "keywords": ["methods", "method", "methodology", "materials", "patients", "implementation", "study design", "experimental", "procedures", "protocol", "operation", "data collection", "statistical analysis"]},
    {"group": "results", "keywords": ["results", "result", "findings", "case report", "case presentation", "use case", "use cases", "evaluation"]},
    {"group": "discussion", "keywords": ["discussion", "limitations"]},
    {"group": "conclusions", "keywords": ["conclusions", "conclusion", "concluding remarks", "summary", "outlook"]}
  ]
})json";

inline const SectionMap& default_section_map() {
    static const SectionMap m = section_map_from_json(nlohmann::json::parse(kDefaultSectionMapJson));
    return m;
}

/// Keyword lookup on whole folded tokens; unknown titles map to other.
inline SectionGroup normalize_section_title(std::string_view title, const SectionMap& map = default_section_map()) {
    const std::string folded = " " + text::fold(title) + " ";
    for (const auto& [group, kws] : map.groups)
        for (const auto& k : kws)
            if (!k.empty() && folded.find(" " + k + " ") != std::string::npos) return group;
    return SectionGroup::other;
}

/// Section group of a paper node: title, abstract, or the top-level section it sits in.
inline SectionGroup section_group_of(const IntertextualGraph& g, const NodeId& node,
                                     const SectionMap& map = default_section_map()) {
    std::optional<NodeId> top_section;
    for (std::optional<NodeId> cur = node; cur; cur = g.parent(*cur)) {
        const auto& n = g.node(*cur);
        if (n.kind == NodeKind::article_title) return SectionGroup::title;
        if (n.kind == NodeKind::abstract) return SectionGroup::abstract;
        if (n.kind == NodeKind::section_title) top_section = n.id;
    }
    if (!top_section) return SectionGroup::other;
    return normalize_section_title(g.node(*top_section).content, map);
}

enum class Channel { explicit_link, implicit_link };

inline std::string_view to_string(Channel c) { return c == Channel::explicit_link ? "explicit" : "implicit"; }

/// Review-to-paper link at analysis granularity: sentence-level targets are lifted to
/// their paragraph; section titles, figures and tables stay as they are.
struct EffectiveLink {
    NodeId source;
    NodeId target;
    Channel channel = Channel::explicit_link;

    friend auto operator<=>(const EffectiveLink&, const EffectiveLink&) = default;
};

struct JointBundle {
    std::string id;
    std::string domain;
    IntertextualGraph graph;  // paper v1 and its reviews, with explicit and implicit link edges
    DocumentId paper;
    std::vector<DocumentId> reviews;
    std::map<NodeId, PragmaticLabel> pragmatics;  // one label per review sentence
    std::optional<IntertextualGraph> revision;
    std::optional<AlignmentResult> alignment;  // revision -> paper v1
    std::vector<EffectiveLink> links;
};

struct BundleInputs {
    std::string id;
    std::string domain;
    const IntertextualGraph* paper = nullptr;
    std::vector<const IntertextualGraph*> reviews;
    const LabelStore* pragmatics = nullptr;
    const LinkLabelStore* link_labels = nullptr;
    const IntertextualGraph* revision = nullptr;
    std::optional<AlignmentResult> alignment;
    std::vector<AnchorPattern> patterns = default_anchor_patterns();
    std::size_t min_agreeing = 2;
};

inline std::vector<EffectiveLink> effective_links(const IntertextualGraph& g) {
    std::set<EffectiveLink> seen;
    std::vector<EffectiveLink> out;
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::link) continue;
        Channel c;
        if (e.subtype == LinkSubtype::explicit_link) c = Channel::explicit_link;
        else if (e.subtype == LinkSubtype::implicit_link) c = Channel::implicit_link;
        else continue;
        auto up = ancestor_at(g, e.dst, NodeKind::paragraph);
        EffectiveLink l{e.src, up ? *up : e.dst, c};
        if (seen.insert(l).second) out.push_back(std::move(l));
    }
    return out;
}

/// Joins the layers of one paper. Explicit links come from the rule parser; implicit links
/// are the pairs enough annotators marked linked with no dissent.
inline JointBundle build_bundle(const BundleInputs& in) {
    if (!in.paper) throw MissingLayerError("paper");
    JointBundle b;
    b.id = in.id;
    b.domain = in.domain;
    merge_into(b.graph, *in.paper);
    b.paper = in.paper->documents().front().id;
    for (const auto* r : in.reviews) {
        merge_into(b.graph, *r);
        for (const auto& d : r->documents()) b.reviews.push_back(d.id);
    }
    for (const auto& r : b.reviews) extract_explicit_links(b.graph, r, b.paper, in.patterns);
    if (in.link_labels) {
        for (const auto& l : agreed_implicit_links(*in.link_labels, in.min_agreeing)) {
            if (!b.graph.contains(l.review) || !b.graph.contains(l.paper)) continue;
            b.graph.add_edge(l.review, l.paper, EdgeKind::link, LinkSubtype::implicit_link, "dual-agreement");
        }
    }
    if (in.pragmatics) {
        for (auto& [node, label] : resolved_pragmatics(*in.pragmatics))
            if (b.graph.contains(node)) b.pragmatics.emplace(node, label);
    }
    if (in.revision) b.revision = *in.revision;
    b.alignment = in.alignment;
    b.links = effective_links(b.graph);
    return b;
}

struct ClassLinking {
    std::size_t sentences = 0;
    double explicit_rate = 0.0;
    double implicit_rate = 0.0;
    double unlinked_rate = 0.0;  // neither channel
};

struct LinkingByPragmatics {
    std::array<ClassLinking, kPragmaticLabelCount> classes{};
    std::size_t sentences = 0;
};

/// Per pragmatic class: share of labeled review sentences with an explicit link, with an
/// implicit link, and with none. Channels are counted independently.
inline LinkingByPragmatics linking_rate_by_pragmatics(const std::vector<const JointBundle*>& bundles) {
    LinkingByPragmatics out;
    std::array<std::array<std::size_t, 3>, kPragmaticLabelCount> counts{};
    bool any_labels = false;
    for (const auto* b : bundles) {
        if (!b->pragmatics.empty()) any_labels = true;
        std::set<NodeId> ex, im;
        for (const auto& l : b->links) (l.channel == Channel::explicit_link ? ex : im).insert(l.source);
        for (const auto& rdoc : b->reviews)
            for (const auto* n : b->graph.nodes_of(rdoc, NodeKind::sentence)) {
                auto it = b->pragmatics.find(n->id);
                if (it == b->pragmatics.end()) continue;
                const auto c = index_of(it->second);
                ++out.classes[c].sentences;
                ++out.sentences;
                const bool e = ex.contains(n->id);
                const bool i = im.contains(n->id);
                if (e) ++counts[c][0];
                if (i) ++counts[c][1];
                if (!e && !i) ++counts[c][2];
            }
    }
    if (!any_labels) throw MissingLayerError("pragmatics");
    for (std::size_t c = 0; c < kPragmaticLabelCount; ++c) {
        const double n = static_cast<double>(out.classes[c].sentences);
        if (n == 0) continue;
        out.classes[c].explicit_rate = static_cast<double>(counts[c][0]) / n;
        out.classes[c].implicit_rate = static_cast<double>(counts[c][1]) / n;
        out.classes[c].unlinked_rate = static_cast<double>(counts[c][2]) / n;
    }
    return out;
}

inline LinkingByPragmatics linking_rate_by_pragmatics(const JointBundle& b) {
    return linking_rate_by_pragmatics(std::vector<const JointBundle*>{&b});
}

struct SectionLinks {
    std::size_t occurrences = 0;
    std::size_t raw_links = 0;
    double total = 0.0;  // links per occurrence
    std::array<double, 2> by_channel{};
    // by_class[class][channel]; links from unlabeled sentences only count in the totals
    std::array<std::array<double, 2>, kPragmaticLabelCount> by_class{};
};

/// Incoming links per section group, divided by how often the group occurs.
inline std::map<SectionGroup, SectionLinks> links_per_section(const std::vector<const JointBundle*>& bundles,
                                                             const SectionMap& map = default_section_map()) {
    std::map<SectionGroup, SectionLinks> out;
    for (auto g : kSectionGroups) out[g];
    std::map<SectionGroup, std::array<std::size_t, 2>> ch;
    std::map<SectionGroup, std::array<std::array<std::size_t, 2>, kPragmaticLabelCount>> cls;
    for (const auto* b : bundles) {
        const auto& g = b->graph;
        for (const auto* n : g.nodes_of(b->paper)) {
            if (n->kind == NodeKind::article_title) ++out[SectionGroup::title].occurrences;
            else if (n->kind == NodeKind::abstract) ++out[SectionGroup::abstract].occurrences;
            else if (n->kind == NodeKind::section_title) {
                auto p = g.parent(n->id);
                if (p && ancestor_at(g, *p, NodeKind::section_title)) continue;  // subsection
                ++out[normalize_section_title(n->content, map)].occurrences;
            }
        }
        for (const auto& l : b->links) {
            if (g.node(l.target).doc != b->paper) continue;
            const auto grp = section_group_of(g, l.target, map);
            const auto c = static_cast<std::size_t>(l.channel);
            ++out[grp].raw_links;
            ++ch[grp][c];
            if (auto it = b->pragmatics.find(l.source); it != b->pragmatics.end()) ++cls[grp][index_of(it->second)][c];
        }
    }
    for (auto& [grp, s] : out) {
        if (s.occurrences == 0) continue;
        const double occ = static_cast<double>(s.occurrences);
        s.total = static_cast<double>(s.raw_links) / occ;
        for (std::size_t c = 0; c < 2; ++c) {
            s.by_channel[c] = static_cast<double>(ch[grp][c]) / occ;
            for (std::size_t k = 0; k < kPragmaticLabelCount; ++k)
                s.by_class[k][c] = static_cast<double>(cls[grp][k][c]) / occ;
        }
    }
    return out;
}

struct ChangeGivenLinks {
    double p_change_linked = 0.0;
    double p_change_unlinked = 0.0;
    std::size_t linked = 0;
    std::size_t unlinked = 0;
    std::size_t linked_changed = 0;
    std::size_t unlinked_changed = 0;
    std::array<double, kPragmaticLabelCount> trigger_classes{};  // over linked-and-changed sources
    std::size_t trigger_sentences = 0;
};

/// P(change | >= 1 incoming link) and P(change | no link) over old-version paragraphs.
/// A paragraph changed when it is modified or deleted; added paragraphs have no old state.
inline ChangeGivenLinks change_given_links(const std::vector<const JointBundle*>& bundles) {
    ChangeGivenLinks r;
    std::array<std::size_t, kPragmaticLabelCount> trig{};
    std::set<std::pair<std::string, NodeId>> trigger_seen;
    for (const auto* b : bundles) {
        if (!b->alignment) throw MissingLayerError("alignment");
        std::set<NodeId> changed(b->alignment->deleted.begin(), b->alignment->deleted.end());
        for (const auto& m : b->alignment->modified) changed.insert(m.old_node);
        std::map<NodeId, std::vector<NodeId>> incoming;
        for (const auto& l : b->links) incoming[l.target].push_back(l.source);
        for (const auto* p : b->graph.nodes_of(b->paper, NodeKind::paragraph)) {
            const bool ch = changed.contains(p->id);
            auto it = incoming.find(p->id);
            if (it != incoming.end()) {
                ++r.linked;
                if (ch) {
                    ++r.linked_changed;
                    for (const auto& s : it->second) {
                        if (!trigger_seen.emplace(b->id, s).second) continue;
                        if (auto lab = b->pragmatics.find(s); lab != b->pragmatics.end()) {
                            ++trig[index_of(lab->second)];
                            ++r.trigger_sentences;
                        }
                    }
                }
            } else {
                ++r.unlinked;
                if (ch) ++r.unlinked_changed;
            }
        }
    }
    if (bundles.empty()) throw MissingLayerError("alignment");
    if (r.linked) r.p_change_linked = static_cast<double>(r.linked_changed) / static_cast<double>(r.linked);
    if (r.unlinked) r.p_change_unlinked = static_cast<double>(r.unlinked_changed) / static_cast<double>(r.unlinked);
    if (r.trigger_sentences)
        for (std::size_t k = 0; k < kPragmaticLabelCount; ++k)
            r.trigger_classes[k] = static_cast<double>(trig[k]) / static_cast<double>(r.trigger_sentences);
    return r;
}

inline nlohmann::json class_map(const std::array<double, kPragmaticLabelCount>& v) {
    nlohmann::json j = nlohmann::json::object();
    for (auto l : kPragmaticLabels) j[std::string(to_string(l))] = v[index_of(l)];
    return j;
}

inline nlohmann::json to_json(const LinkingByPragmatics& r) {
    nlohmann::json j = nlohmann::json::object();
    for (auto l : kPragmaticLabels) {
        const auto& c = r.classes[index_of(l)];
        j[std::string(to_string(l))] = {{"sentences", c.sentences},
                                        {"explicit", c.explicit_rate},
                                        {"implicit", c.implicit_rate},
                                        {"unlinked", c.unlinked_rate}};
    }
    return {{"sentences", r.sentences}, {"classes", j}};
}

inline nlohmann::json to_json(const std::map<SectionGroup, SectionLinks>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [g, s] : m) {
        nlohmann::json by_class = nlohmann::json::object();
        for (auto l : kPragmaticLabels)
            by_class[std::string(to_string(l))] = {{"explicit", s.by_class[index_of(l)][0]},
                                                   {"implicit", s.by_class[index_of(l)][1]}};
        j[std::string(to_string(g))] = {{"occurrences", s.occurrences},
                                        {"links", s.raw_links},
                                        {"per_occurrence", s.total},
                                        {"explicit", s.by_channel[0]},
                                        {"implicit", s.by_channel[1]},
                                        {"by_class", by_class}};
    }
    return j;
}

inline nlohmann::json to_json(const ChangeGivenLinks& c) {
    return {{"p_change_linked", c.p_change_linked},
            {"p_change_unlinked", c.p_change_unlinked},
            {"linked", c.linked},
            {"unlinked", c.unlinked},
            {"linked_changed", c.linked_changed},
            {"unlinked_changed", c.unlinked_changed},
            {"trigger_sentences", c.trigger_sentences},
            {"trigger_classes", class_map(c.trigger_classes)}};
}

struct JointStats {
    LinkingByPragmatics linking;
    std::map<SectionGroup, SectionLinks> sections;
    ChangeGivenLinks change;
    std::size_t bundles = 0;
};

inline JointStats joint_stats(const std::vector<const JointBundle*>& bundles, const SectionMap& map = default_section_map()) {
    if (bundles.empty()) throw UsageError("statistics need at least one bundle");
    return JointStats{linking_rate_by_pragmatics(bundles), links_per_section(bundles, map), change_given_links(bundles),
                      bundles.size()};
}

inline nlohmann::json to_json(const JointStats& s) {
    return {{"bundles", s.bundles},
            {"linking_by_pragmatics", to_json(s.linking)},
            {"links_per_section", to_json(s.sections)},
            {"change_given_links", to_json(s.change)},
            {"meta",
             {{"implicit_links", "dual-annotator agreement, no dissent"},
              {"granularity", "sentence targets propagated to paragraphs"},
              {"channels", "counted independently"},
              {"changed", "modified or deleted; added paragraphs excluded"},
              {"section_normalization", "links per occurrence of the section group"}}}};
}

/// Plot-ready rows: table, group, class, channel, value.
inline std::string to_csv(const JointStats& s) {
    std::ostringstream out;
    // Shortest representation that reads back to the same double.
    auto num = [](double v) {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    };
    out << "table,group,class,channel,value\n";
    for (auto l : kPragmaticLabels) {
        const auto& c = s.linking.classes[index_of(l)];
        out << "linking_by_pragmatics,," << to_string(l) << ",explicit," << num(c.explicit_rate) << "\n";
        out << "linking_by_pragmatics,," << to_string(l) << ",implicit," << num(c.implicit_rate) << "\n";
        out << "linking_by_pragmatics,," << to_string(l) << ",unlinked," << num(c.unlinked_rate) << "\n";
    }
    for (const auto& [g, sec] : s.sections)
        for (auto l : kPragmaticLabels)
            for (std::size_t c = 0; c < 2; ++c)
                out << "links_per_section," << to_string(g) << "," << to_string(l) << ","
                    << to_string(static_cast<Channel>(c)) << "," << num(sec.by_class[index_of(l)][c]) << "\n";
    out << "change_given_links,,,linked," << num(s.change.p_change_linked) << "\n";
    out << "change_given_links,,,unlinked," << num(s.change.p_change_unlinked) << "\n";
    for (auto l : kPragmaticLabels)
        out << "change_trigger_classes,," << to_string(l) << ",any," << num(s.change.trigger_classes[index_of(l)]) << "\n";
    return out.str();
}

}  // namespace itgkit
