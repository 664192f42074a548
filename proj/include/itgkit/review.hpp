#pragma once

// Free-text peer review reports: questionnaire cleanup and conversion to graphs.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "itgkit/error.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/jats.hpp"
#include "itgkit/sentences.hpp"
#include "itgkit/text.hpp"

namespace itgkit {

/// One questionnaire block. Each line lists the accepted variants of that line, compared
/// after whitespace normalization; a single-variant line is an exact line.
struct QuestionnaireTemplate {
    std::string name;
    std::vector<std::vector<std::string>> lines;
};

inline std::vector<QuestionnaireTemplate> templates_from_json(const nlohmann::json& j) {
    std::vector<QuestionnaireTemplate> out;
    const auto& arr = j.contains("templates") ? j.at("templates") : j;
    if (!arr.is_array()) throw ParseError("questionnaire templates: expected array");
    for (const auto& t : arr) {
        QuestionnaireTemplate q;
        q.name = t.value("name", "");
        for (const auto& line : t.at("lines")) {
            std::vector<std::string> variants;
            if (line.is_string()) {
                variants.push_back(text::normalize_space(line.get<std::string>()));
            } else if (line.is_array()) {
                for (const auto& v : line) variants.push_back(text::normalize_space(v.get<std::string>()));
            } else {
                throw ParseError("questionnaire template '" + q.name + "': line must be string or array");
            }
            if (variants.empty()) throw ParseError("questionnaire template '" + q.name + "': empty line variants");
            q.lines.push_back(std::move(variants));
        }
        if (q.lines.empty()) throw ParseError("questionnaire template '" + q.name + "' has no lines");
        out.push_back(std::move(q));
    }
    return out;
}

/// Standard closing blocks of F1000Research referee reports.
inline const std::vector<QuestionnaireTemplate>& default_questionnaire_templates() {
    static const std::vector<QuestionnaireTemplate> templates = templates_from_json(nlohmann::json::parse(R"({
  "templates": [
    {"name": "competing-interests",
     "lines": [["Competing Interests: No competing interests were disclosed.",
                "Competing Interests: None.",
                "Competing Interests: No competing interests."]]},
    {"name": "expertise-confirmation",
     "lines": [["I confirm that I have read this submission and believe that I have an appropriate level of expertise to confirm that it is of an acceptable scientific standard.",
                "I confirm that I have read this submission and believe that I have an appropriate level of expertise to confirm that it is of an acceptable scientific standard, however I have significant reservations, as outlined above.",
                "I confirm that I have read this submission and believe that I have an appropriate level of expertise to state that I do not consider it to be of an acceptable scientific standard, for reasons outlined above."]]},
    {"name": "research-article-questions",
     "lines": ["Is the work clearly and accurately presented and does it cite the current literature?",
               ["Yes", "Partly", "No"],
               "Is the study design appropriate and is the work technically sound?",
               ["Yes", "Partly", "No"],
               "Are sufficient details of methods and analysis provided to allow replication by others?",
               ["Yes", "Partly", "No"],
               "If applicable, is the statistical analysis and its interpretation appropriate?",
               ["Yes", "Partly", "No", "Not applicable", "I cannot comment. A qualified statistician is required."],
               "Are all the source data underlying the results available to ensure full reproducibility?",
               ["Yes", "Partly", "No", "No source data required"],
               "Are the conclusions drawn adequately supported by the results?",
               ["Yes", "Partly", "No"]]}
  ]
})"));
    return templates;
}

/// Removes every occurrence of every template block. Blank lines inside a matched block go
/// with it; all other bytes are kept verbatim.
inline std::string clean_review(std::string_view review, const std::vector<QuestionnaireTemplate>& templates) {
    const auto lines = text::split_lines(review);
    std::vector<std::string> norm;
    norm.reserve(lines.size());
    for (auto l : lines) norm.push_back(text::normalize_space(l));

    std::vector<bool> removed(lines.size(), false);
    auto matches = [&](const std::vector<std::string>& variants, const std::string& line) {
        for (const auto& v : variants)
            if (v == line) return true;
        return false;
    };
    for (const auto& t : templates) {
        std::size_t i = 0;
        while (i < lines.size()) {
            if (removed[i] || norm[i].empty() || !matches(t.lines[0], norm[i])) {
                ++i;
                continue;
            }
            std::size_t j = i + 1;
            std::size_t k = 1;
            while (k < t.lines.size()) {
                while (j < lines.size() && norm[j].empty() && !removed[j]) ++j;
                if (j >= lines.size() || removed[j] || !matches(t.lines[k], norm[j])) break;
                ++k;
                ++j;
            }
            if (k == t.lines.size()) {
                for (std::size_t r = i; r < j; ++r) removed[r] = true;
                i = j;
            } else {
                ++i;
            }
        }
    }
    std::string out;
    out.reserve(review.size());
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (!removed[i]) out += lines[i];
    return out;
}

inline std::string clean_review(std::string_view review) {
    return clean_review(review, default_questionnaire_templates());
}

/// A free-text review as a review-report root with one paragraph per blank-line separated
/// block, each split into sentences.
inline IngestResult parse_review(std::string_view review, const DocumentId& doc, int version = 1,
                                 const SentenceSplitter& splitter = {}) {
    IntertextualGraph g;
    const std::string prefix = doc.value + ":v" + std::to_string(version) + ":";
    std::size_t nodes = 0;
    std::size_t edges = 0;
    auto node_id = [&] { return NodeId(prefix + "n" + std::to_string(nodes++)); };
    auto edge_id = [&] { return EdgeId(prefix + "e" + std::to_string(edges++)); };

    const NodeId root = g.add_node(NodeSpec{node_id(), doc, NodeKind::review_report, "", std::nullopt, {}, true, version});

    std::vector<std::string> paragraphs;
    std::string cur;
    for (auto line : text::split_lines(review)) {
        if (text::trim(line).empty()) {
            if (!cur.empty()) paragraphs.push_back(text::normalize_space(cur));
            cur.clear();
        } else {
            cur += line;
            cur += ' ';
        }
    }
    if (!text::trim(cur).empty()) paragraphs.push_back(text::normalize_space(cur));

    std::optional<NodeId> prev;
    for (const auto& para : paragraphs) {
        auto pid = g.add_node(NodeSpec{node_id(), doc, NodeKind::paragraph, para, std::nullopt, {}, false, version});
        g.add_edge(pid, root, EdgeKind::parent, std::nullopt, std::nullopt, edge_id());
        auto spans = splitter ? splitter(para) : split_sentences(para);
        for (const auto& s : spans) {
            auto sid = g.add_node(NodeSpec{node_id(), doc, NodeKind::sentence, s.text, std::nullopt, {}, false, version});
            g.add_edge(sid, pid, EdgeKind::parent, std::nullopt, std::nullopt, edge_id());
            if (prev) g.add_edge(*prev, sid, EdgeKind::next, std::nullopt, std::nullopt, edge_id());
            prev = sid;
        }
    }
    IngestResult result{std::move(g), {}};
    for (const auto& n : result.graph.nodes()) ++result.report.counts[std::string(to_string(n.kind))];
    if (paragraphs.empty()) result.report.warnings.push_back("review has no text");
    return result;
}

}  // namespace itgkit
