#pragma once

// JATS XML articles to Intertextual Graphs.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/detail/rapidxml.hpp>

#include "itgkit/error.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/sentences.hpp"
#include "itgkit/text.hpp"

namespace itgkit {

struct IngestOptions {
    std::optional<std::string> doc_id;
    int version = 1;
    bool split_sentences = true;
    SentenceSplitter splitter;  // empty: split_sentences()
};

struct IngestReport {
    std::map<std::string, std::size_t> counts;  // node kind -> count
    std::vector<std::string> warnings;

    friend bool operator==(const IngestReport&, const IngestReport&) = default;
};

struct IngestResult {
    IntertextualGraph graph;
    IngestReport report;
};

namespace detail {

namespace rx = boost::property_tree::detail::rapidxml;
using XmlNode = rx::xml_node<char>;

inline std::string_view xml_name(const XmlNode* n) { return {n->name(), n->name_size()}; }

inline std::string_view xml_attr(const XmlNode* n, const char* name) {
    if (auto* a = n->first_attribute(name)) return {a->value(), a->value_size()};
    return {};
}

inline const XmlNode* xml_child(const XmlNode* n, std::string_view name) {
    for (auto* c = n->first_node(); c; c = c->next_sibling())
        if (c->type() == rx::node_element && xml_name(c) == name) return c;
    return nullptr;
}

/// Accumulates whitespace-normalized text while tracking offsets.
class TextAccumulator {
  public:
    void append(std::string_view s) {
        for (char c : s) {
            if (text::is_space(c)) {
                pending_ = !out_.empty();
                continue;
            }
            if (pending_) out_.push_back(' ');
            pending_ = false;
            out_.push_back(c);
        }
    }

    /// Offset the next visible character will land on.
    [[nodiscard]] std::size_t mark() const { return out_.size() + (pending_ ? 1 : 0); }
    [[nodiscard]] std::size_t size() const { return out_.size(); }
    [[nodiscard]] const std::string& str() const { return out_; }

  private:
    std::string out_;
    bool pending_ = false;
};

struct InlineRef {
    std::string type;
    std::string rid;
    std::size_t start = 0;
    std::size_t end = 0;
};

inline bool is_block_element(std::string_view name) {
    static const std::set<std::string_view> blocks = {
        "fig",  "fig-group", "table-wrap", "table-wrap-group", "boxed-text", "disp-formula",
        "list", "def-list",  "disp-quote", "p",                "sec",        "supplementary-material",
    };
    return blocks.contains(name);
}

inline bool is_text_block(std::string_view name) {
    return name == "p" || name == "title" || name == "label" || name == "caption" || name == "td" || name == "th" ||
           name == "list-item";
}

/// Finds the end of the element whose '<' sits at `start` in the original text.
inline std::size_t raw_element_end(std::string_view xml, std::size_t start) {
    std::size_t name_end = start + 1;
    while (name_end < xml.size() && !text::is_space(xml[name_end]) && xml[name_end] != '>' && xml[name_end] != '/')
        ++name_end;
    const std::string name(xml.substr(start + 1, name_end - start - 1));
    int depth = 0;
    std::size_t i = start;
    while (i < xml.size()) {
        const std::size_t lt = xml.find('<', i);
        if (lt == std::string_view::npos) break;
        if (xml.compare(lt, 4, "<!--") == 0) {
            auto e = xml.find("-->", lt);
            i = e == std::string_view::npos ? xml.size() : e + 3;
            continue;
        }
        if (xml.compare(lt, 9, "<![CDATA[") == 0) {
            auto e = xml.find("]]>", lt);
            i = e == std::string_view::npos ? xml.size() : e + 3;
            continue;
        }
        const std::size_t gt = xml.find('>', lt);
        if (gt == std::string_view::npos) break;
        const bool closing = xml[lt + 1] == '/';
        std::size_t nb = lt + (closing ? 2 : 1);
        std::size_t ne = nb;
        while (ne < gt && !text::is_space(xml[ne]) && xml[ne] != '/' && xml[ne] != '>') ++ne;
        if (xml.substr(nb, ne - nb) == name) {
            if (closing) {
                --depth;
            } else if (xml[gt - 1] != '/') {
                ++depth;
            }
            if (depth == 0) return gt + 1;
        }
        i = gt + 1;
    }
    return xml.size();
}

class JatsBuilder {
  public:
    JatsBuilder(std::string_view original, const char* buffer, const IngestOptions& opt)
        : original_(original), buffer_(buffer), opt_(opt) {}

    IngestResult build(const XmlNode* article) {
        const XmlNode* front = xml_child(article, "front");
        const XmlNode* meta = front ? xml_child(front, "article-meta") : nullptr;

        std::string doc = opt_.doc_id.value_or("");
        std::string doi;
        if (meta) {
            for (auto* c = meta->first_node(); c; c = c->next_sibling())
                if (c->type() == rx::node_element && xml_name(c) == "article-id" && xml_attr(c, "pub-id-type") == "doi")
                    doi = text::normalize_space(flatten(c));
        }
        if (doc.empty()) doc = doi.empty() ? "article" : doi;
        doc_ = DocumentId(doc);
        prefix_ = doc + ":v" + std::to_string(opt_.version) + ":";

        Meta root_meta;
        if (!doi.empty()) root_meta["doi"] = doi;
        root_ = add(NodeKind::document, std::nullopt, "", std::nullopt, std::move(root_meta), true);

        if (meta) {
            if (const auto* tg = xml_child(meta, "title-group"))
                if (const auto* t = xml_child(tg, "article-title"))
                    add(NodeKind::article_title, root_, text::normalize_space(flatten(t)));
            for (auto* c = meta->first_node(); c; c = c->next_sibling())
                if (c->type() == rx::node_element && xml_name(c) == "abstract") {
                    auto abs = add(NodeKind::abstract, root_, "");
                    container(c, abs);
                }
        }

        const XmlNode* body = xml_child(article, "body");
        const std::size_t before = graph_.nodes().size();
        if (body) {
            in_body_ = true;
            container(body, root_);
            in_body_ = false;
        }
        if (!body || graph_.nodes().size() == before) throw ParseError("empty body");

        if (const XmlNode* back = xml_child(article, "back")) container(back, root_);

        chain_leaves();
        IngestResult result{std::move(graph_), {}};
        for (const auto& n : result.graph.nodes()) ++result.report.counts[std::string(to_string(n.kind))];
        for (const auto& [name, count] : unknown_)
            result.report.warnings.push_back("unrecognized element <" + name + "> x" + std::to_string(count) +
                                             " (children kept)");
        for (const auto& [name, count] : dropped_)
            result.report.warnings.push_back("dropped element <" + name + "> x" + std::to_string(count));
        return result;
    }

  private:
    NodeId add(NodeKind kind, std::optional<NodeId> parent, std::string content,
               std::optional<std::string> payload = std::nullopt, Meta meta = {}, bool root = false) {
        NodeSpec spec{NodeId(prefix_ + "n" + std::to_string(counter_++)),
                      doc_,
                      kind,
                      std::move(content),
                      std::move(payload),
                      std::move(meta),
                      root,
                      opt_.version};
        auto id = graph_.add_node(std::move(spec));
        if (parent) graph_.add_edge(id, *parent, EdgeKind::parent, std::nullopt, std::nullopt, fresh_edge());
        return id;
    }

    EdgeId fresh_edge() { return EdgeId(prefix_ + "e" + std::to_string(edge_counter_++)); }

    void chain_leaves() {
        std::optional<NodeId> prev;
        for (const auto* n : graph_.nodes_of(doc_)) {
            if (!graph_.is_leaf(n->id)) continue;
            if (prev) graph_.add_edge(*prev, n->id, EdgeKind::next, std::nullopt, std::nullopt, fresh_edge());
            prev = n->id;
        }
    }

    std::string raw(const XmlNode* n) const {
        const std::size_t start = static_cast<std::size_t>(n->name() - buffer_) - 1;
        return std::string(original_.substr(start, raw_element_end(original_, start) - start));
    }

    // Plain text of an element, inline markup flattened.
    static std::string flatten(const XmlNode* n) {
        TextAccumulator acc;
        flatten_into(n, acc, nullptr);
        return acc.str();
    }

    static void flatten_into(const XmlNode* n, TextAccumulator& acc, std::vector<InlineRef>* refs) {
        for (auto* c = n->first_node(); c; c = c->next_sibling()) {
            if (c->type() == rx::node_data || c->type() == rx::node_cdata) {
                acc.append({c->value(), c->value_size()});
            } else if (c->type() == rx::node_element) {
                const auto name = xml_name(c);
                if (name == "xref" && refs) {
                    InlineRef r{std::string(xml_attr(c, "ref-type")), std::string(xml_attr(c, "rid")), acc.mark(), 0};
                    flatten_into(c, acc, refs);
                    r.end = acc.size();
                    if (r.start > r.end) r.start = r.end;
                    refs->push_back(std::move(r));
                } else if (is_text_block(name)) {
                    // Caption title and caption paragraphs are separate runs of text.
                    acc.append(" ");
                    flatten_into(c, acc, refs);
                    acc.append(" ");
                } else {
                    flatten_into(c, acc, refs);
                }
            }
        }
    }

    void container(const XmlNode* elem, const NodeId& parent) {
        for (auto* c = elem->first_node(); c; c = c->next_sibling()) {
            if (c->type() != rx::node_element) continue;
            element(c, parent);
        }
    }

    void element(const XmlNode* c, const NodeId& parent) {
        const auto name = xml_name(c);
        if (name == "sec" || name == "ack" || name == "app" || name == "ref-list") {
            section(c, parent);
        } else if (name == "title" || name == "label" || name == "sec-meta") {
            // consumed by the enclosing section
        } else if (name == "p") {
            paragraph(c, parent);
        } else if (name == "ref") {
            reference(c, parent);
        } else if (name == "fig" || name == "table-wrap" || name == "boxed-text" || name == "disp-formula" ||
                   name == "supplementary-material") {
            payload_node(c, parent);
        } else if (name == "fig-group" || name == "table-wrap-group" || name == "app-group" ||
                   name == "disp-quote") {
            container(c, parent);
        } else if (name == "list" || name == "def-list") {
            list(c, parent);
        } else if (name == "preformat" || name == "code" || name == "statement") {
            paragraph(c, parent);
        } else if (name == "fn-group" || name == "glossary" || name == "notes" || name == "table-wrap-foot" ||
                   name == "graphic" || name == "media") {
            ++dropped_[std::string(name)];
        } else {
            ++unknown_[std::string(name)];
            container(c, parent);
        }
    }

    void section(const XmlNode* sec, const NodeId& parent) {
        const auto name = xml_name(sec);
        std::string title;
        if (const auto* t = xml_child(sec, "title")) title = text::normalize_space(flatten(t));
        if (title.empty()) {
            if (name == "ack") title = "Acknowledgements";
            else if (name == "ref-list") title = "References";
        }
        Meta meta;
        if (const auto* l = xml_child(sec, "label")) meta["label"] = text::normalize_space(flatten(l));
        if (auto id = xml_attr(sec, "id"); !id.empty()) meta["id"] = std::string(id);
        if (auto t = xml_attr(sec, "sec-type"); !t.empty()) meta["sec-type"] = std::string(t);
        // Positional number ("2.2") for body sections, used when the XML has no labels.
        const bool numbered = in_body_ && name == "sec";
        if (numbered) {
            ++sec_counter_.back();
            std::string pos;
            for (int k : sec_counter_) pos += (pos.empty() ? "" : ".") + std::to_string(k);
            meta["position"] = pos;
            sec_counter_.push_back(0);
        }
        auto node = add(NodeKind::section_title, parent, std::move(title), std::nullopt, std::move(meta));
        container(sec, node);
        if (numbered) sec_counter_.pop_back();
    }

    void paragraph(const XmlNode* p, const NodeId& parent) {
        TextAccumulator acc;
        std::vector<InlineRef> refs;
        std::vector<const XmlNode*> blocks;
        for (auto* c = p->first_node(); c; c = c->next_sibling()) {
            if (c->type() == rx::node_data || c->type() == rx::node_cdata) {
                acc.append({c->value(), c->value_size()});
            } else if (c->type() == rx::node_element) {
                const auto name = xml_name(c);
                if (is_block_element(name)) {
                    blocks.push_back(c);
                } else if (name == "xref") {
                    InlineRef r{std::string(xml_attr(c, "ref-type")), std::string(xml_attr(c, "rid")), acc.mark(), 0};
                    flatten_into(c, acc, &refs);
                    r.end = acc.size();
                    if (r.start > r.end) r.start = r.end;
                    refs.push_back(std::move(r));
                } else {
                    flatten_into(c, acc, &refs);
                }
            }
        }
        const std::string& content = acc.str();
        if (!content.empty()) {
            if (!opt_.split_sentences) {
                add(NodeKind::paragraph, parent, content, std::nullopt, refs_meta(refs, 0, content.size()));
            } else {
                auto para = add(NodeKind::paragraph, parent, content);
                auto spans = opt_.splitter ? opt_.splitter(content) : split_sentences(content);
                for (auto& s : spans)
                    add(NodeKind::sentence, para, s.text, std::nullopt, refs_meta(refs, s.start, s.end));
            }
        }
        for (const auto* b : blocks) element(b, parent);
    }

    static Meta refs_meta(const std::vector<InlineRef>& refs, std::size_t begin, std::size_t end) {
        std::string joined;
        for (const auto& r : refs) {
            if (r.start < begin || r.start >= end) continue;
            if (!joined.empty()) joined += ';';
            joined += r.type + ":" + r.rid + "@" + std::to_string(r.start - begin) + "-" +
                      std::to_string(std::min(r.end, end) - begin);
        }
        Meta m;
        if (!joined.empty()) m["xref"] = std::move(joined);
        return m;
    }

    void payload_node(const XmlNode* c, const NodeId& parent) {
        const auto name = xml_name(c);
        NodeKind kind = NodeKind::figure;
        Meta meta;
        if (name == "table-wrap") {
            kind = NodeKind::table;
        } else if (name == "boxed-text") {
            kind = NodeKind::table;
            meta["type"] = "box";
        } else if (name == "disp-formula") {
            kind = NodeKind::equation;
        } else if (name == "supplementary-material") {
            meta["type"] = "supplementary";
        }
        if (const auto* l = xml_child(c, "label")) meta["label"] = text::normalize_space(flatten(l));
        if (auto id = xml_attr(c, "id"); !id.empty()) meta["id"] = std::string(id);
        std::string content;
        if (kind == NodeKind::equation) {
            content = text::normalize_space(flatten(c));
        } else if (const auto* cap = xml_child(c, "caption")) {
            content = text::normalize_space(flatten(cap));
        } else if (const auto* t = xml_child(c, "title")) {
            content = text::normalize_space(flatten(t));
        }
        add(kind, parent, std::move(content), raw(c), std::move(meta));
    }

    void list(const XmlNode* l, const NodeId& parent) {
        auto node = add(NodeKind::list, parent, "");
        for (auto* c = l->first_node(); c; c = c->next_sibling()) {
            if (c->type() != rx::node_element) continue;
            const auto name = xml_name(c);
            if (name == "list-item" || name == "def-item") {
                auto content = text::normalize_space(flatten(c));
                if (!content.empty()) add(NodeKind::list_item, node, std::move(content));
            } else if (name != "title" && name != "label") {
                ++unknown_[std::string(name)];
            }
        }
    }

    void reference(const XmlNode* r, const NodeId& parent) {
        Meta meta;
        if (const auto* l = xml_child(r, "label")) meta["label"] = text::normalize_space(flatten(l));
        if (auto id = xml_attr(r, "id"); !id.empty()) meta["id"] = std::string(id);
        TextAccumulator acc;
        for (auto* c = r->first_node(); c; c = c->next_sibling()) {
            if (c->type() == rx::node_element && xml_name(c) == "label") continue;
            if (c->type() == rx::node_element) {
                flatten_into(c, acc, nullptr);
                acc.append(" ");
            } else if (c->type() == rx::node_data) {
                acc.append({c->value(), c->value_size()});
            }
        }
        add(NodeKind::reference, parent, acc.str(), std::nullopt, std::move(meta));
    }

    std::string_view original_;
    const char* buffer_;
    const IngestOptions& opt_;
    IntertextualGraph graph_;
    DocumentId doc_;
    NodeId root_;
    std::string prefix_;
    std::size_t counter_ = 0;
    std::size_t edge_counter_ = 0;
    std::map<std::string, std::size_t> unknown_;
    std::vector<int> sec_counter_{0};
    bool in_body_ = false;
    std::map<std::string, std::size_t> dropped_;
};

}  // namespace detail

/// Parses a JATS article: section hierarchy into the parent tree, paragraphs (optionally
/// sentence-split) under their sections, figures/tables/equations as payload nodes, and one
/// `next` chain over the leaves.
inline IngestResult parse_jats(std::string_view xml, const IngestOptions& options = {}) {
    namespace rx = detail::rx;
    std::vector<char> buffer(xml.begin(), xml.end());
    buffer.push_back('\0');
    rx::xml_document<char> doc;
    try {
        doc.parse<rx::parse_default>(buffer.data());
    } catch (const rx::parse_error& e) {
        throw ParseError(std::string("malformed XML: ") + e.what(),
                         static_cast<std::size_t>(e.where<char>() - buffer.data()));
    }
    const detail::XmlNode* root = nullptr;
    for (auto* c = doc.first_node(); c; c = c->next_sibling())
        if (c->type() == rx::node_element) {
            root = c;
            break;
        }
    if (!root) throw ParseError("no root element");
    detail::JatsBuilder builder(xml, buffer.data(), options);
    return builder.build(root);
}

}  // namespace itgkit
