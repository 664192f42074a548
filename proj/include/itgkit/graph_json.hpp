#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "itgkit/error.hpp"
#include "itgkit/graph.hpp"

namespace itgkit {

using json = nlohmann::json;

inline json to_json(const IntertextualGraph& g) {
    json docs = json::array();
    for (const auto& d : g.documents()) docs.push_back({{"id", d.id.value}, {"version", d.version}});

    json nodes = json::array();
    for (const auto& n : g.nodes()) {
        json j = {{"id", n.id.value},
                  {"doc", n.doc.value},
                  {"kind", to_string(n.kind)},
                  {"content", n.content},
                  {"meta", n.meta}};
        if (n.payload) j["payload"] = *n.payload;
        nodes.push_back(std::move(j));
    }

    json edges = json::array();
    for (const auto& e : g.edges()) {
        json j = {{"id", e.id.value}, {"src", e.src.value}, {"dst", e.dst.value}, {"kind", to_string(e.kind)}};
        if (e.subtype) j["subtype"] = to_string(*e.subtype);
        if (e.provenance) j["provenance"] = *e.provenance;
        edges.push_back(std::move(j));
    }
    return {{"documents", std::move(docs)}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

namespace detail {

inline const json& member(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing '" + key + "'");
    return *it;
}

inline std::string string_member(const json& obj, const char* key, const std::string& where) {
    const auto& v = member(obj, key, where);
    if (!v.is_string()) throw ParseError(where + "/" + key + ": expected string");
    return v.get<std::string>();
}

inline std::optional<std::string> optional_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(where + "/" + key + ": expected string");
    return it->get<std::string>();
}

inline const json& array_member(const json& obj, const char* key) {
    const auto& v = member(obj, key, "");
    if (!v.is_array()) throw ParseError(std::string("/") + key + ": expected array");
    return v;
}

}  // namespace detail

/// Rebuilds a graph, re-checking every structural invariant. The first node listed for
/// a document is taken as its root. Schema errors name the offending JSON pointer.
inline IntertextualGraph from_json(const json& j) {
    IntertextualGraph g;
    std::map<std::string, int> versions;
    for (std::size_t i = 0; const auto& d : detail::array_member(j, "documents")) {
        const std::string where = "/documents/" + std::to_string(i++);
        const auto& v = detail::member(d, "version", where);
        if (!v.is_number_integer()) throw ParseError(where + "/version: expected integer");
        versions[detail::string_member(d, "id", where)] = v.get<int>();
    }

    std::set<std::string> rooted;
    for (std::size_t i = 0; const auto& n : detail::array_member(j, "nodes")) {
        const std::string where = "/nodes/" + std::to_string(i++);
        NodeSpec spec;
        spec.id = NodeId(detail::string_member(n, "id", where));
        spec.doc = DocumentId(detail::string_member(n, "doc", where));
        try {
            spec.kind = parse_node_kind(detail::string_member(n, "kind", where));
        } catch (const UsageError& e) {
            throw ParseError(where + "/kind: " + e.what());
        }
        spec.content = detail::string_member(n, "content", where);
        spec.payload = detail::optional_string(n, "payload", where);
        if (auto it = n.find("meta"); it != n.end()) {
            if (!it->is_object()) throw ParseError(where + "/meta: expected object");
            for (const auto& [k, v] : it->items()) {
                if (!v.is_string()) throw ParseError(where + "/meta/" + k + ": expected string");
                spec.meta.emplace(k, v.get<std::string>());
            }
        }
        auto ver = versions.find(spec.doc.value);
        if (ver == versions.end()) throw ParseError(where + "/doc: undeclared document '" + spec.doc.value + "'");
        spec.root = rooted.insert(spec.doc.value).second;
        spec.version = ver->second;
        try {
            g.add_node(std::move(spec));
        } catch (const Error& e) {
            throw ParseError(where + ": " + e.what());
        }
    }
    for (const auto& [doc, _] : versions)
        if (!rooted.contains(doc)) throw ParseError("/documents: document '" + doc + "' has no nodes");

    for (std::size_t i = 0; const auto& e : detail::array_member(j, "edges")) {
        const std::string where = "/edges/" + std::to_string(i++);
        try {
            auto kind = parse_edge_kind(detail::string_member(e, "kind", where));
            std::optional<LinkSubtype> subtype;
            if (auto s = detail::optional_string(e, "subtype", where)) subtype = parse_link_subtype(*s);
            g.add_edge(NodeId(detail::string_member(e, "src", where)), NodeId(detail::string_member(e, "dst", where)),
                       kind, subtype, detail::optional_string(e, "provenance", where),
                       EdgeId(detail::string_member(e, "id", where)));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& ex) {
            throw ParseError(where + ": " + ex.what());
        }
    }
    return g;
}

inline std::string serialize(const IntertextualGraph& g) { return to_json(g).dump(1) + "\n"; }

inline IntertextualGraph deserialize(std::string_view bytes) {
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed graph JSON: ") + e.what(), e.byte);
    }
    return from_json(j);
}

}  // namespace itgkit
