#pragma once

// Implicit-link labels (review sentence, paper sentence, verdict) and agreement helpers
// for both label layers.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "itgkit/error.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/io.hpp"
#include "itgkit/metrics.hpp"
#include "itgkit/pragmatics.hpp"

namespace itgkit {

enum class LinkVerdict { linked, not_linked };
enum class LinkSource { suggested, manual };

inline std::string_view to_string(LinkVerdict v) { return v == LinkVerdict::linked ? "linked" : "not-linked"; }
inline std::string_view to_string(LinkSource s) { return s == LinkSource::suggested ? "suggested" : "manual"; }

inline LinkVerdict parse_link_verdict(std::string_view s) {
    if (s == "linked") return LinkVerdict::linked;
    if (s == "not-linked") return LinkVerdict::not_linked;
    throw ParseError("unknown link verdict '" + std::string(s) + "' (linked|not-linked)");
}

inline LinkSource parse_link_source(std::string_view s) {
    if (s == "suggested") return LinkSource::suggested;
    if (s == "manual") return LinkSource::manual;
    throw ParseError("unknown link source '" + std::string(s) + "' (suggested|manual)");
}

struct LinkLabelRecord {
    NodeId review;
    NodeId paper;
    LinkVerdict verdict = LinkVerdict::linked;
    std::string annotator;
    io::Timestamp ts{};
    LinkSource source = LinkSource::suggested;

    friend bool operator==(const LinkLabelRecord&, const LinkLabelRecord&) = default;
};

inline nlohmann::json to_json(const LinkLabelRecord& r) {
    return {{"review", r.review.value},       {"paper", r.paper.value},
            {"verdict", to_string(r.verdict)}, {"annotator", r.annotator},
            {"ts", io::format_timestamp(r.ts)}, {"source", to_string(r.source)}};
}

inline LinkLabelRecord link_record_from_json(const nlohmann::json& j) {
    try {
        return LinkLabelRecord{NodeId(j.at("review").get<std::string>()),
                               NodeId(j.at("paper").get<std::string>()),
                               parse_link_verdict(j.at("verdict").get<std::string>()),
                               j.at("annotator").get<std::string>(),
                               io::parse_timestamp(j.at("ts").get<std::string>()),
                               parse_link_source(j.value("source", "suggested"))};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad link label record: ") + e.what());
    }
}

/// One live record per (review, paper, annotator); the latest write wins.
class LinkLabelStore {
  public:
    const LinkLabelRecord& put(LinkLabelRecord r) {
        Key key{r.review.value, r.paper.value, r.annotator};
        if (auto it = index_.find(key); it != index_.end()) live_[it->second].reset();
        index_[key] = live_.size();
        live_.push_back(std::move(r));
        return *live_.back();
    }

    [[nodiscard]] const LinkLabelRecord* find(const NodeId& review, const NodeId& paper,
                                              std::string_view annotator) const {
        auto it = index_.find(Key{review.value, paper.value, std::string(annotator)});
        return it == index_.end() ? nullptr : &*live_[it->second];
    }

    [[nodiscard]] std::vector<LinkLabelRecord> records() const {
        std::vector<LinkLabelRecord> out;
        for (const auto& r : live_)
            if (r) out.push_back(*r);
        return out;
    }

    [[nodiscard]] std::vector<std::string> annotators() const {
        std::set<std::string> names;
        for (const auto& [k, _] : index_) names.insert(std::get<2>(k));
        return {names.begin(), names.end()};
    }

    [[nodiscard]] std::size_t size() const { return index_.size(); }
    [[nodiscard]] bool empty() const { return index_.empty(); }

  private:
    using Key = std::tuple<std::string, std::string, std::string>;
    std::vector<std::optional<LinkLabelRecord>> live_;
    std::map<Key, std::size_t> index_;
};

inline LinkLabelStore load_link_store(std::string_view jsonl) {
    LinkLabelStore s;
    for (const auto& j : io::parse_jsonl(jsonl).records) s.put(link_record_from_json(j));
    return s;
}

inline std::string to_jsonl(const LinkLabelStore& store) {
    std::string out;
    for (const auto& r : store.records()) out += to_json(r).dump() + "\n";
    return out;
}

inline bool is_review_doc(const IntertextualGraph& g, const DocumentId& doc) {
    return g.node(g.document(doc).root).kind == NodeKind::review_report;
}

/// Validates and stores a link label: review side must be a review sentence, paper side a
/// sentence of a non-review document.
inline LinkLabelRecord attach_link_label(LinkLabelStore& store, const IntertextualGraph& g, LinkLabelRecord r) {
    const Node* a = g.find_node(r.review);
    const Node* b = g.find_node(r.paper);
    if (!a) throw NotFoundError("unknown node '" + r.review.value + "'");
    if (!b) throw NotFoundError("unknown node '" + r.paper.value + "'");
    if (a->kind != NodeKind::sentence || !is_review_doc(g, a->doc))
        throw InvariantError("'" + r.review.value + "' is not a review sentence");
    if (b->kind != NodeKind::sentence || is_review_doc(g, b->doc))
        throw InvariantError("'" + r.paper.value + "' is not a paper sentence");
    if (r.annotator.empty()) throw InvariantError("annotator id must not be empty");
    return store.put(std::move(r));
}

struct AgreedLink {
    NodeId review;
    NodeId paper;

    friend auto operator<=>(const AgreedLink&, const AgreedLink&) = default;
};

/// Pairs with at least `min_linked` "linked" verdicts and no "not-linked" verdict.
inline std::vector<AgreedLink> agreed_implicit_links(const LinkLabelStore& store, std::size_t min_linked = 2) {
    std::map<AgreedLink, std::pair<std::size_t, std::size_t>> tally;  // linked, not linked
    std::vector<AgreedLink> order;
    for (const auto& r : store.records()) {
        AgreedLink k{r.review, r.paper};
        auto [it, fresh] = tally.try_emplace(k, 0, 0);
        if (fresh) order.push_back(k);
        (r.verdict == LinkVerdict::linked ? it->second.first : it->second.second)++;
    }
    std::vector<AgreedLink> out;
    for (const auto& k : order) {
        const auto& [yes, no] = tally.at(k);
        if (yes >= min_linked && no == 0) out.push_back(k);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Reliability matrix of pragmatic labels: items are sentences labeled by anyone (sorted
/// id order), annotators sorted, the gold annotator excluded.
inline ReliabilityData<PragmaticLabel> pragmatics_reliability(const LabelStore& store,
                                                             const std::set<NodeId>* restrict_to = nullptr) {
    std::vector<std::string> annotators;
    for (auto& a : store.annotators())
        if (a != kGoldAnnotator) annotators.push_back(a);
    std::map<NodeId, std::vector<std::optional<PragmaticLabel>>> rows;
    for (const auto& r : store.records()) {
        if (r.annotator == kGoldAnnotator) continue;
        if (restrict_to && !restrict_to->contains(r.node)) continue;
        auto& row = rows[r.node];
        row.resize(annotators.size());
        const auto idx = std::lower_bound(annotators.begin(), annotators.end(), r.annotator) - annotators.begin();
        row[static_cast<std::size_t>(idx)] = r.label;
    }
    ReliabilityData<PragmaticLabel> d{annotators.size(), {}};
    for (auto& [_, row] : rows) d.values.push_back(std::move(row));
    return d;
}

/// Reliability matrix of link verdicts over labeled pairs only.
inline ReliabilityData<LinkVerdict> linking_reliability(const LinkLabelStore& store) {
    std::vector<std::string> annotators;
    for (auto& a : store.annotators())
        if (a != kGoldAnnotator) annotators.push_back(a);
    std::map<AgreedLink, std::vector<std::optional<LinkVerdict>>> rows;
    for (const auto& r : store.records()) {
        if (r.annotator == kGoldAnnotator) continue;
        auto& row = rows[AgreedLink{r.review, r.paper}];
        row.resize(annotators.size());
        const auto idx = std::lower_bound(annotators.begin(), annotators.end(), r.annotator) - annotators.begin();
        row[static_cast<std::size_t>(idx)] = r.verdict;
    }
    ReliabilityData<LinkVerdict> d{annotators.size(), {}};
    for (auto& [_, row] : rows) d.values.push_back(std::move(row));
    return d;
}

/// One label per sentence for analysis: gold if present, else the most frequent label,
/// ties going to the earliest class in table order.
inline std::map<NodeId, PragmaticLabel> resolved_pragmatics(const LabelStore& store) {
    std::map<NodeId, std::array<std::size_t, kPragmaticLabelCount>> counts;
    std::map<NodeId, PragmaticLabel> gold;
    for (const auto& r : store.records()) {
        if (r.annotator == kGoldAnnotator) gold[r.node] = r.label;
        else ++counts[r.node][index_of(r.label)];
    }
    std::map<NodeId, PragmaticLabel> out = gold;
    for (const auto& [node, c] : counts) {
        if (out.contains(node)) continue;
        std::size_t best = 0;
        for (std::size_t i = 1; i < kPragmaticLabelCount; ++i)
            if (c[i] > c[best]) best = i;
        out[node] = kPragmaticLabels[best];
    }
    return out;
}

}  // namespace itgkit
