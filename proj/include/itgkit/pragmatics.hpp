#pragma once

// Six-class pragmatic tagging of review sentences.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "itgkit/error.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/io.hpp"
#include "itgkit/text.hpp"

namespace itgkit {

enum class PragmaticLabel { recap, weakness, strength, todo, structure, other };

inline constexpr std::size_t kPragmaticLabelCount = 6;

inline constexpr std::array<PragmaticLabel, kPragmaticLabelCount> kPragmaticLabels = {
    PragmaticLabel::recap, PragmaticLabel::weakness,  PragmaticLabel::strength,
    PragmaticLabel::todo,  PragmaticLabel::structure, PragmaticLabel::other,
};

inline std::string_view to_string(PragmaticLabel l) {
    switch (l) {
        case PragmaticLabel::recap: return "Recap";
        case PragmaticLabel::weakness: return "Weakness";
        case PragmaticLabel::strength: return "Strength";
        case PragmaticLabel::todo: return "Todo";
        case PragmaticLabel::structure: return "Structure";
        case PragmaticLabel::other: return "Other";
    }
    return "Other";
}

inline PragmaticLabel parse_pragmatic_label(std::string_view s) {
    const auto lower = text::to_lower(s);
    for (auto l : kPragmaticLabels)
        if (text::to_lower(to_string(l)) == lower) return l;
    throw ParseError("unknown pragmatic label '" + std::string(s) + "'");
}

inline std::size_t index_of(PragmaticLabel l) { return static_cast<std::size_t>(l); }

/// Reserved annotator id for adjudicated labels.
inline constexpr std::string_view kGoldAnnotator = "gold";

struct PragmaticLabelRecord {
    NodeId node;
    PragmaticLabel label = PragmaticLabel::other;
    std::string annotator;
    io::Timestamp ts{};

    friend bool operator==(const PragmaticLabelRecord&, const PragmaticLabelRecord&) = default;
};

inline nlohmann::json to_json(const PragmaticLabelRecord& r) {
    return {{"node", r.node.value},
            {"label", to_string(r.label)},
            {"annotator", r.annotator},
            {"ts", io::format_timestamp(r.ts)}};
}

inline PragmaticLabelRecord pragmatic_record_from_json(const nlohmann::json& j) {
    try {
        return PragmaticLabelRecord{NodeId(j.at("node").get<std::string>()),
                                    parse_pragmatic_label(j.at("label").get<std::string>()),
                                    j.at("annotator").get<std::string>(),
                                    io::parse_timestamp(j.at("ts").get<std::string>())};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad pragmatic label record: ") + e.what());
    }
}

/// Append-superseding store: one live record per (node, annotator), the latest write wins.
class LabelStore {
  public:
    const PragmaticLabelRecord& put(PragmaticLabelRecord r) {
        Key key{r.node.value, r.annotator};
        auto it = index_.find(key);
        if (it != index_.end()) {
            live_[it->second].reset();
        }
        index_[key] = live_.size();
        live_.push_back(std::move(r));
        return *live_.back();
    }

    [[nodiscard]] const PragmaticLabelRecord* find(const NodeId& node, std::string_view annotator) const {
        auto it = index_.find(Key{node.value, std::string(annotator)});
        return it == index_.end() ? nullptr : &*live_[it->second];
    }

    /// Live records in order of their latest write.
    [[nodiscard]] std::vector<PragmaticLabelRecord> records() const {
        std::vector<PragmaticLabelRecord> out;
        for (const auto& r : live_)
            if (r) out.push_back(*r);
        return out;
    }

    [[nodiscard]] std::vector<PragmaticLabelRecord> records_by(std::string_view annotator) const {
        std::vector<PragmaticLabelRecord> out;
        for (const auto& r : live_)
            if (r && r->annotator == annotator) out.push_back(*r);
        return out;
    }

    [[nodiscard]] std::vector<std::string> annotators() const {
        std::set<std::string> names;
        for (const auto& [key, _] : index_) names.insert(key.second);
        return {names.begin(), names.end()};
    }

    [[nodiscard]] std::size_t size() const { return index_.size(); }
    [[nodiscard]] bool empty() const { return index_.empty(); }

  private:
    using Key = std::pair<std::string, std::string>;
    std::vector<std::optional<PragmaticLabelRecord>> live_;
    std::map<Key, std::size_t> index_;
};

inline PragmaticLabelRecord attach_label(LabelStore& store, const IntertextualGraph& g, const NodeId& node,
                                         PragmaticLabel label, std::string annotator, io::Timestamp ts = io::now()) {
    const Node* n = g.find_node(node);
    if (!n) throw NotFoundError("unknown node '" + node.value + "'");
    if (n->kind != NodeKind::sentence)
        throw InvariantError("pragmatic labels attach to sentences, '" + node.value + "' is a " +
                             std::string(to_string(n->kind)));
    if (annotator.empty()) throw InvariantError("annotator id must not be empty");
    return store.put(PragmaticLabelRecord{node, label, std::move(annotator), ts});
}

inline LabelStore load_label_store(std::string_view jsonl) {
    LabelStore store;
    for (const auto& j : io::parse_jsonl(jsonl).records) store.put(pragmatic_record_from_json(j));
    return store;
}

inline std::string to_jsonl(const LabelStore& store) {
    std::string out;
    for (const auto& r : store.records()) out += to_json(r).dump() + "\n";
    return out;
}

struct LabelDistribution {
    std::array<double, kPragmaticLabelCount> share{};
    std::size_t total = 0;

    [[nodiscard]] double operator[](PragmaticLabel l) const { return share[index_of(l)]; }
};

/// Share of each class among `records`, optionally restricted to one annotator.
inline LabelDistribution label_distribution(std::span<const PragmaticLabelRecord> records,
                                            std::optional<std::string_view> annotator = std::nullopt) {
    LabelDistribution d;
    std::array<std::size_t, kPragmaticLabelCount> counts{};
    for (const auto& r : records) {
        if (annotator && r.annotator != *annotator) continue;
        ++counts[index_of(r.label)];
        ++d.total;
    }
    if (d.total == 0) throw UsageError("label distribution of an empty record set");
    for (std::size_t i = 0; i < kPragmaticLabelCount; ++i)
        d.share[i] = static_cast<double>(counts[i]) / static_cast<double>(d.total);
    return d;
}

}  // namespace itgkit
