#pragma once

// Intertextual Graph: documents as nodes joined by `next` (reading order), `parent`
// (logical hierarchy) and `link` (intertextual) edges.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "itgkit/error.hpp"
#include "itgkit/text.hpp"

namespace itgkit {

template <class Tag>
struct StrongId {
    std::string value;

    StrongId() = default;
    explicit StrongId(std::string v) : value(std::move(v)) {}

    friend auto operator<=>(const StrongId&, const StrongId&) = default;
    friend bool operator==(const StrongId&, const StrongId&) = default;
};

using NodeId = StrongId<struct NodeIdTag>;
using EdgeId = StrongId<struct EdgeIdTag>;
using DocumentId = StrongId<struct DocumentIdTag>;

}  // namespace itgkit

template <class Tag>
struct std::hash<itgkit::StrongId<Tag>> {
    std::size_t operator()(const itgkit::StrongId<Tag>& id) const noexcept {
        return std::hash<std::string>{}(id.value);
    }
};

namespace itgkit {

enum class NodeKind {
    document,
    article_title,
    abstract,
    section_title,
    paragraph,
    sentence,
    figure,
    table,
    equation,
    list,
    list_item,
    reference,
    review_report,
};

inline constexpr std::pair<NodeKind, std::string_view> kNodeKindNames[] = {
    {NodeKind::document, "document"},
    {NodeKind::article_title, "article-title"},
    {NodeKind::abstract, "abstract"},
    {NodeKind::section_title, "section-title"},
    {NodeKind::paragraph, "paragraph"},
    {NodeKind::sentence, "sentence"},
    {NodeKind::figure, "figure"},
    {NodeKind::table, "table"},
    {NodeKind::equation, "equation"},
    {NodeKind::list, "list"},
    {NodeKind::list_item, "list-item"},
    {NodeKind::reference, "reference"},
    {NodeKind::review_report, "review-report"},
};

inline std::string_view to_string(NodeKind k) {
    for (const auto& [kind, name] : kNodeKindNames)
        if (kind == k) return name;
    return "unknown";
}

inline NodeKind parse_node_kind(std::string_view s) {
    for (const auto& [kind, name] : kNodeKindNames)
        if (name == s) return kind;
    throw UsageError("unknown node kind '" + std::string(s) + "'");
}

enum class EdgeKind { next, parent, link };

inline std::string_view to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::next: return "next";
        case EdgeKind::parent: return "parent";
        case EdgeKind::link: return "link";
    }
    return "unknown";
}

inline EdgeKind parse_edge_kind(std::string_view s) {
    if (s == "next") return EdgeKind::next;
    if (s == "parent") return EdgeKind::parent;
    if (s == "link") return EdgeKind::link;
    throw UsageError("unknown edge kind '" + std::string(s) + "'");
}

enum class LinkSubtype { explicit_link, implicit_link, version_alignment, derived };

inline std::string_view to_string(LinkSubtype k) {
    switch (k) {
        case LinkSubtype::explicit_link: return "explicit";
        case LinkSubtype::implicit_link: return "implicit";
        case LinkSubtype::version_alignment: return "version-alignment";
        case LinkSubtype::derived: return "derived";
    }
    return "unknown";
}

inline LinkSubtype parse_link_subtype(std::string_view s) {
    if (s == "explicit") return LinkSubtype::explicit_link;
    if (s == "implicit") return LinkSubtype::implicit_link;
    if (s == "version-alignment") return LinkSubtype::version_alignment;
    if (s == "derived") return LinkSubtype::derived;
    throw UsageError("unknown link subtype '" + std::string(s) + "'");
}

using Meta = std::map<std::string, std::string>;

struct Node {
    NodeId id;
    DocumentId doc;
    NodeKind kind = NodeKind::paragraph;
    std::string content;
    std::optional<std::string> payload;
    Meta meta;

    friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
    EdgeId id;
    NodeId src;
    NodeId dst;
    EdgeKind kind = EdgeKind::link;
    std::optional<LinkSubtype> subtype;
    std::optional<std::string> provenance;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct Document {
    DocumentId id;
    int version = 1;
    NodeId root;

    friend bool operator==(const Document&, const Document&) = default;
};

/// Input to IntertextualGraph::add_node. Set `root` to declare a new document whose
/// root this node becomes; otherwise `doc` must already exist.
struct NodeSpec {
    std::optional<NodeId> id;
    DocumentId doc;
    NodeKind kind = NodeKind::paragraph;
    std::string content;
    std::optional<std::string> payload;
    Meta meta;
    bool root = false;
    int version = 1;
};

class IntertextualGraph {
  public:
    IntertextualGraph() = default;
    explicit IntertextualGraph(std::string id_prefix) : id_prefix_(std::move(id_prefix)) {}

    NodeId add_node(NodeSpec spec) {
        if (spec.kind == NodeKind::sentence && text::trim(spec.content).empty())
            throw InvariantError("sentence node requires non-empty content");

        NodeId id = spec.id ? std::move(*spec.id) : fresh_node_id();
        if (node_index_.contains(id.value)) throw InvariantError("duplicate node id '" + id.value + "'");

        const bool known = doc_index_.contains(spec.doc.value);
        if (spec.root) {
            if (known)
                throw InvariantError("document '" + spec.doc.value + "' already has a root");
            doc_index_.emplace(spec.doc.value, documents_.size());
            documents_.push_back(Document{spec.doc, spec.version, id});
        } else if (!known) {
            throw NotFoundError("unknown document '" + spec.doc.value + "'");
        }

        node_index_.emplace(id.value, nodes_.size());
        nodes_.push_back(Node{id, std::move(spec.doc), spec.kind, std::move(spec.content),
                              std::move(spec.payload), std::move(spec.meta)});
        adj_.emplace_back();
        return id;
    }

    /// Adds an edge if the per-document tree and reading-order list stay intact.
    EdgeId add_edge(const NodeId& src, const NodeId& dst, EdgeKind kind,
                    std::optional<LinkSubtype> subtype = std::nullopt,
                    std::optional<std::string> provenance = std::nullopt,
                    std::optional<EdgeId> id = std::nullopt) {
        const std::size_t s = index_of(src);
        const std::size_t d = index_of(dst);
        if (s == d) throw InvariantError("self-loop on '" + src.value + "'");
        if (kind != EdgeKind::link && subtype)
            throw InvariantError("only link edges carry a subtype");
        if (kind != EdgeKind::link && nodes_[s].doc != nodes_[d].doc)
            throw InvariantError(std::string(to_string(kind)) + " edge crosses document boundary");

        if (kind == EdgeKind::parent) {
            if (adj_[s].parent_edge) throw InvariantError("multiple parents for '" + src.value + "'");
            if (documents_[doc_index_.at(nodes_[s].doc.value)].root == src)
                throw InvariantError("document root '" + src.value + "' cannot have a parent");
            for (std::optional<std::size_t> up = d; up; up = parent_index(*up))
                if (*up == s) throw InvariantError("parent cycle through '" + src.value + "'");
        } else if (kind == EdgeKind::next) {
            if (adj_[s].next_out) throw InvariantError("reading-order branch at '" + src.value + "'");
            if (adj_[d].next_in) throw InvariantError("reading-order merge at '" + dst.value + "'");
            for (std::optional<std::size_t> fw = d; fw; fw = next_index(*fw))
                if (*fw == s) throw InvariantError("reading-order cycle through '" + src.value + "'");
        }

        EdgeId eid = id ? std::move(*id) : fresh_edge_id();
        if (edge_index_.contains(eid.value)) throw InvariantError("duplicate edge id '" + eid.value + "'");

        const std::size_t e = edges_.size();
        edge_index_.emplace(eid.value, e);
        edges_.push_back(Edge{eid, src, dst, kind, subtype, std::move(provenance)});
        switch (kind) {
            case EdgeKind::parent:
                adj_[s].parent_edge = e;
                adj_[d].child_edges.push_back(e);
                break;
            case EdgeKind::next:
                adj_[s].next_out = e;
                adj_[d].next_in = e;
                break;
            case EdgeKind::link:
                adj_[s].link_out.push_back(e);
                adj_[d].link_in.push_back(e);
                break;
        }
        return eid;
    }

    [[nodiscard]] bool contains(const NodeId& id) const { return node_index_.contains(id.value); }

    [[nodiscard]] const Node* find_node(const NodeId& id) const {
        auto it = node_index_.find(id.value);
        return it == node_index_.end() ? nullptr : &nodes_[it->second];
    }

    [[nodiscard]] const Node& node(const NodeId& id) const { return nodes_[index_of(id)]; }

    [[nodiscard]] const Edge* find_edge(const EdgeId& id) const {
        auto it = edge_index_.find(id.value);
        return it == edge_index_.end() ? nullptr : &edges_[it->second];
    }

    [[nodiscard]] std::span<const Node> nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::span<const Edge> edges() const noexcept { return edges_; }
    [[nodiscard]] std::span<const Document> documents() const noexcept { return documents_; }

    [[nodiscard]] const Document* find_document(const DocumentId& id) const {
        auto it = doc_index_.find(id.value);
        return it == doc_index_.end() ? nullptr : &documents_[it->second];
    }

    [[nodiscard]] const Document& document(const DocumentId& id) const {
        if (const auto* d = find_document(id)) return *d;
        throw NotFoundError("unknown document '" + id.value + "'");
    }

    [[nodiscard]] std::optional<NodeId> parent(const NodeId& id) const {
        const auto& a = adj_[index_of(id)];
        if (!a.parent_edge) return std::nullopt;
        return edges_[*a.parent_edge].dst;
    }

    [[nodiscard]] std::vector<NodeId> children(const NodeId& id) const {
        std::vector<NodeId> out;
        for (auto e : adj_[index_of(id)].child_edges) out.push_back(edges_[e].src);
        return out;
    }

    [[nodiscard]] bool is_leaf(const NodeId& id) const { return adj_[index_of(id)].child_edges.empty(); }

    [[nodiscard]] std::optional<NodeId> next(const NodeId& id) const {
        const auto& a = adj_[index_of(id)];
        if (!a.next_out) return std::nullopt;
        return edges_[*a.next_out].dst;
    }

    [[nodiscard]] std::optional<NodeId> previous(const NodeId& id) const {
        const auto& a = adj_[index_of(id)];
        if (!a.next_in) return std::nullopt;
        return edges_[*a.next_in].src;
    }

    [[nodiscard]] std::vector<const Edge*> outgoing_links(const NodeId& id) const {
        std::vector<const Edge*> out;
        for (auto e : adj_[index_of(id)].link_out) out.push_back(&edges_[e]);
        return out;
    }

    [[nodiscard]] std::vector<const Edge*> incoming_links(const NodeId& id) const {
        std::vector<const Edge*> out;
        for (auto e : adj_[index_of(id)].link_in) out.push_back(&edges_[e]);
        return out;
    }

    /// Nodes of one document in insertion (document) order.
    [[nodiscard]] std::vector<const Node*> nodes_of(const DocumentId& doc) const {
        std::vector<const Node*> out;
        for (const auto& n : nodes_)
            if (n.doc == doc) out.push_back(&n);
        return out;
    }

    [[nodiscard]] std::vector<const Node*> nodes_of(const DocumentId& doc, NodeKind kind) const {
        std::vector<const Node*> out;
        for (const auto& n : nodes_)
            if (n.doc == doc && n.kind == kind) out.push_back(&n);
        return out;
    }

    /// Same documents, nodes and edges, in the same order and with the same ids.
    friend bool operator==(const IntertextualGraph& a, const IntertextualGraph& b) {
        return a.documents_ == b.documents_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
    }

    /// Checks the full per-document structure: one root, every other node reachable from
    /// it through parent edges, and one `next` path covering exactly the leaves.
    void validate() const {
        for (const auto& doc : documents_) {
            std::size_t leaves = 0;
            std::size_t heads = 0;
            std::optional<std::size_t> head;
            for (std::size_t i = 0; i < nodes_.size(); ++i) {
                if (nodes_[i].doc != doc.id) continue;
                const auto& a = adj_[i];
                if (nodes_[i].id != doc.root && !a.parent_edge)
                    throw InvariantError("node '" + nodes_[i].id.value + "' of '" + doc.id.value +
                                         "' is detached from the document tree");
                const bool leaf = a.child_edges.empty();
                if (!leaf && (a.next_in || a.next_out))
                    throw InvariantError("inner node '" + nodes_[i].id.value + "' is in the reading order");
                if (leaf) {
                    ++leaves;
                    if (!a.next_in) {
                        ++heads;
                        head = i;
                    }
                }
            }
            if (leaves == 0) continue;
            if (heads != 1)
                throw InvariantError("reading order of '" + doc.id.value + "' is broken into " +
                                     std::to_string(heads) + " pieces");
            std::size_t walked = 0;
            for (std::optional<std::size_t> cur = head; cur; cur = next_index(*cur)) ++walked;
            if (walked != leaves)
                throw InvariantError("reading order of '" + doc.id.value + "' does not cover all leaves");
        }
    }

  private:
    struct Adjacency {
        std::optional<std::size_t> parent_edge;
        std::vector<std::size_t> child_edges;
        std::optional<std::size_t> next_out;
        std::optional<std::size_t> next_in;
        std::vector<std::size_t> link_out;
        std::vector<std::size_t> link_in;
    };

    std::size_t index_of(const NodeId& id) const {
        auto it = node_index_.find(id.value);
        if (it == node_index_.end()) throw NotFoundError("unknown node '" + id.value + "'");
        return it->second;
    }

    std::optional<std::size_t> parent_index(std::size_t i) const {
        if (!adj_[i].parent_edge) return std::nullopt;
        return node_index_.at(edges_[*adj_[i].parent_edge].dst.value);
    }

    std::optional<std::size_t> next_index(std::size_t i) const {
        if (!adj_[i].next_out) return std::nullopt;
        return node_index_.at(edges_[*adj_[i].next_out].dst.value);
    }

    NodeId fresh_node_id() {
        for (;;) {
            std::string candidate = id_prefix_ + "n" + std::to_string(node_counter_++);
            if (!node_index_.contains(candidate)) return NodeId(std::move(candidate));
        }
    }

    EdgeId fresh_edge_id() {
        for (;;) {
            std::string candidate = id_prefix_ + "e" + std::to_string(edge_counter_++);
            if (!edge_index_.contains(candidate)) return EdgeId(std::move(candidate));
        }
    }

    std::string id_prefix_;
    std::size_t node_counter_ = 0;
    std::size_t edge_counter_ = 0;
    std::vector<Node> nodes_;
    std::vector<Adjacency> adj_;
    std::unordered_map<std::string, std::size_t> node_index_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, std::size_t> edge_index_;
    std::vector<Document> documents_;
    std::unordered_map<std::string, std::size_t> doc_index_;
};

/// The document's leaves in reading order. Throws when the `next` chain is broken.
inline std::vector<NodeId> reading_order(const IntertextualGraph& g, const DocumentId& doc) {
    const auto& d = g.document(doc);
    std::vector<NodeId> leaves;
    std::optional<NodeId> head;
    std::size_t heads = 0;
    for (const auto* n : g.nodes_of(d.id)) {
        if (!g.is_leaf(n->id)) continue;
        leaves.push_back(n->id);
        if (!g.previous(n->id)) {
            ++heads;
            head = n->id;
        }
    }
    if (leaves.empty()) return {};
    if (heads != 1)
        throw InvariantError("broken reading order in '" + doc.value + "': " + std::to_string(heads) +
                             " chain heads");
    std::vector<NodeId> order;
    order.reserve(leaves.size());
    for (auto cur = head; cur; cur = g.next(*cur)) order.push_back(*cur);
    if (order.size() != leaves.size())
        throw InvariantError("broken reading order in '" + doc.value + "': chain covers " +
                             std::to_string(order.size()) + " of " + std::to_string(leaves.size()) +
                             " leaves");
    return order;
}

/// Nearest node of `kind` on the parent path, starting with the node itself.
inline std::optional<NodeId> ancestor_at(const IntertextualGraph& g, const NodeId& node, NodeKind kind) {
    for (std::optional<NodeId> cur = node; cur; cur = g.parent(*cur))
        if (g.node(*cur).kind == kind) return cur;
    return std::nullopt;
}

struct LinkPair {
    NodeId src;
    NodeId dst;

    friend auto operator<=>(const LinkPair&, const LinkPair&) = default;
    friend bool operator==(const LinkPair&, const LinkPair&) = default;
};

/// Derived links lifting every non-derived, non-alignment link target to its `target_kind`
/// ancestor. Duplicates collapse; order follows the source edges.
inline std::vector<LinkPair> propagate_links(const IntertextualGraph& g, NodeKind target_kind) {
    std::vector<LinkPair> out;
    std::set<LinkPair> seen;
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::link) continue;
        if (e.subtype == LinkSubtype::derived || e.subtype == LinkSubtype::version_alignment) continue;
        auto up = ancestor_at(g, e.dst, target_kind);
        if (!up) continue;
        LinkPair p{e.src, *up};
        if (seen.insert(p).second) out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<LinkPair> propagate_links(const IntertextualGraph& g, std::string_view target_kind) {
    return propagate_links(g, parse_node_kind(target_kind));
}

/// Inserts the derived links of propagate_links that are not yet present. Returns how many
/// edges were added.
inline std::size_t apply_propagation(IntertextualGraph& g, NodeKind target_kind) {
    std::set<LinkPair> present;
    for (const auto& e : g.edges())
        if (e.kind == EdgeKind::link && e.subtype == LinkSubtype::derived) present.insert({e.src, e.dst});
    std::size_t added = 0;
    for (auto& p : propagate_links(g, target_kind)) {
        if (present.contains(p)) continue;
        g.add_edge(p.src, p.dst, EdgeKind::link, LinkSubtype::derived, "propagate");
        ++added;
    }
    return added;
}

/// Copies every document of `from` into `into`. Node ids and document ids must not collide;
/// colliding edge ids are replaced with fresh ones.
inline void merge_into(IntertextualGraph& into, const IntertextualGraph& from) {
    for (const auto& d : from.documents())
        if (into.find_document(d.id)) throw InvariantError("document '" + d.id.value + "' already present");
    for (const auto& n : from.nodes()) {
        const auto& doc = from.document(n.doc);
        into.add_node(NodeSpec{n.id, n.doc, n.kind, n.content, n.payload, n.meta, doc.root == n.id,
                               doc.version});
    }
    for (const auto& e : from.edges()) {
        std::optional<EdgeId> id;
        if (!into.find_edge(e.id)) id = e.id;
        into.add_edge(e.src, e.dst, e.kind, e.subtype, e.provenance, id);
    }
}

}  // namespace itgkit
