#pragma once

// Implicit-link suggestions: rank paper sentences for a review sentence with several
// methods and merge the rankings round-robin into a size-m set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "itgkit/error.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/text.hpp"

namespace itgkit {

struct RankedItem {
    NodeId node;
    double score = 0.0;

    friend bool operator==(const RankedItem&, const RankedItem&) = default;
};

struct Ranking {
    std::string method;
    std::vector<RankedItem> items;  // score descending, ties in reading order
};

namespace detail {

// Candidates arrive in reading order; a stable sort keeps that order among equal scores.
inline void order_ranking(std::vector<RankedItem>& items) {
    std::stable_sort(items.begin(), items.end(),
                     [](const RankedItem& a, const RankedItem& b) { return a.score > b.score; });
}

}  // namespace detail

/// Okapi BM25 over a fixed collection (one paper's sentences).
class Bm25Index {
  public:
    struct Doc {
        NodeId id;
        std::string text;
    };

    explicit Bm25Index(const std::vector<Doc>& docs, double k1 = 1.2, double b = 0.75) : k1_(k1), b_(b) {
        double total = 0.0;
        for (const auto& d : docs) {
            Entry e{d.id, {}, 0};
            for (auto& t : text::word_tokens(d.text)) {
                ++e.tf[t];
                ++e.length;
            }
            for (const auto& [t, _] : e.tf) ++df_[t];
            total += static_cast<double>(e.length);
            docs_.push_back(std::move(e));
        }
        avgdl_ = docs_.empty() ? 0.0 : total / static_cast<double>(docs_.size());
    }

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
    [[nodiscard]] double idf(const std::string& term) const {
        auto it = df_.find(term);
        const double n = it == df_.end() ? 0.0 : static_cast<double>(it->second);
        const double N = static_cast<double>(docs_.size());
        return std::log(1.0 + (N - n + 0.5) / (n + 0.5));
    }

    /// Every document ranked; empty when the query has no tokens.
    [[nodiscard]] Ranking rank(std::string_view query) const {
        Ranking r{"bm25", {}};
        const auto q = text::word_tokens(query);
        if (q.empty()) return r;
        std::vector<double> idf_q;
        idf_q.reserve(q.size());
        for (const auto& t : q) idf_q.push_back(idf(t));
        for (const auto& d : docs_) {
            double s = 0.0;
            const double norm = avgdl_ > 0 ? static_cast<double>(d.length) / avgdl_ : 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                auto it = d.tf.find(q[i]);
                if (it == d.tf.end()) continue;
                const double f = static_cast<double>(it->second);
                s += idf_q[i] * f * (k1_ + 1.0) / (f + k1_ * (1.0 - b_ + b_ * norm));
            }
            r.items.push_back(RankedItem{d.id, s});
        }
        detail::order_ranking(r.items);
        return r;
    }

    [[nodiscard]] std::size_t size() const { return docs_.size(); }
    [[nodiscard]] double average_length() const { return avgdl_; }

  private:
    struct Entry {
        NodeId id;
        std::map<std::string, std::size_t> tf;
        std::size_t length = 0;
    };
    double k1_;
    double b_;
    double avgdl_ = 0.0;
    std::vector<Entry> docs_;
    std::map<std::string, std::size_t> df_;
};

using Vector = std::vector<double>;

/// Precomputed sentence vectors keyed by node id.
struct EmbeddingTable {
    std::size_t dim = 0;
    std::unordered_map<std::string, Vector> vectors;

    [[nodiscard]] const Vector* find(const NodeId& id) const {
        auto it = vectors.find(id.value);
        return it == vectors.end() ? nullptr : &it->second;
    }
};

inline EmbeddingTable embedding_table_from_json(const nlohmann::json& j) {
    EmbeddingTable t;
    try {
        t.dim = j.at("dim").get<std::size_t>();
        for (const auto& [id, v] : j.at("vectors").items()) {
            auto vec = v.get<Vector>();
            if (vec.size() != t.dim)
                throw ParseError("embedding '" + id + "' has dimension " + std::to_string(vec.size()) + ", expected " +
                                 std::to_string(t.dim));
            for (double x : vec)
                if (!std::isfinite(x)) throw ParseError("embedding '" + id + "' has a non-finite value");
            t.vectors.emplace(id, std::move(vec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad embedding table: ") + e.what());
    }
    return t;
}

inline nlohmann::json to_json(const EmbeddingTable& t) {
    nlohmann::json vectors = nlohmann::json::object();
    for (const auto& [id, v] : t.vectors) vectors[id] = v;
    return {{"dim", t.dim}, {"vectors", std::move(vectors)}};
}

/// Cosine similarity; 0 when either side is the zero vector.
inline double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw UsageError("vector dimension mismatch");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Ranks `candidates` (reading order) by cosine to `query`; candidates without a vector
/// in the table are left out.
inline Ranking cosine_rank(const Vector& query, const EmbeddingTable& table, const std::vector<NodeId>& candidates,
                           std::string method = "cosine") {
    if (query.size() != table.dim)
        throw UsageError("query dimension " + std::to_string(query.size()) + " does not match table dimension " +
                         std::to_string(table.dim));
    Ranking r{std::move(method), {}};
    for (const auto& c : candidates)
        if (const auto* v = table.find(c)) r.items.push_back(RankedItem{c, cosine(query, *v)});
    detail::order_ranking(r.items);
    return r;
}

/// Bag-of-words term counts hashed into a fixed number of buckets (FNV-1a).
class HashingVectorizer {
  public:
    explicit HashingVectorizer(std::size_t dim = 256) : dim_(dim) {
        if (dim == 0) throw UsageError("hashing dimension must be positive");
    }

    [[nodiscard]] Vector operator()(std::string_view s) const {
        Vector v(dim_, 0.0);
        for (const auto& t : text::word_tokens(s))
            if (!text::is_stopword(t)) v[fnv1a(t) % dim_] += 1.0;
        return v;
    }

    [[nodiscard]] std::size_t dim() const { return dim_; }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }

  private:
    std::size_t dim_;
};

struct SuggestionCandidate {
    NodeId node;
    std::string picked_by;                // method whose turn selected it
    std::map<std::string, std::size_t> rank;  // 1-based rank per method that ranked it
    std::map<std::string, double> score;
};

struct SuggestionSet {
    NodeId review_sentence;
    std::size_t m = 5;
    std::vector<std::string> methods;
    std::vector<SuggestionCandidate> candidates;

    [[nodiscard]] std::vector<NodeId> ids() const {
        std::vector<NodeId> out;
        for (const auto& c : candidates) out.push_back(c.node);
        return out;
    }
};

/// Round-robin merge in the given method order: each turn, a method contributes its best
/// candidate not chosen yet. Stops at m candidates or when all rankings are used up.
inline SuggestionSet aggregate_rankings(const std::vector<Ranking>& rankings, std::size_t m,
                                        NodeId review_sentence = {}) {
    if (m < 1) throw UsageError("suggestion set size m must be at least 1");
    if (rankings.empty()) throw UsageError("aggregation needs at least one ranking");
    SuggestionSet s{std::move(review_sentence), m, {}, {}};
    for (const auto& r : rankings) s.methods.push_back(r.method);

    std::map<std::string, std::size_t> chosen;  // node -> index in candidates
    std::vector<std::size_t> cursor(rankings.size(), 0);
    bool progress = true;
    while (s.candidates.size() < m && progress) {
        progress = false;
        for (std::size_t k = 0; k < rankings.size() && s.candidates.size() < m; ++k) {
            const auto& items = rankings[k].items;
            auto& c = cursor[k];
            while (c < items.size() && chosen.contains(items[c].node.value)) ++c;
            if (c == items.size()) continue;
            chosen.emplace(items[c].node.value, s.candidates.size());
            s.candidates.push_back(SuggestionCandidate{items[c].node, rankings[k].method, {}, {}});
            ++c;
            progress = true;
        }
    }
    for (const auto& r : rankings)
        for (std::size_t i = 0; i < r.items.size(); ++i) {
            auto it = chosen.find(r.items[i].node.value);
            if (it == chosen.end()) continue;
            auto& cand = s.candidates[it->second];
            if (cand.rank.contains(r.method)) continue;
            cand.rank[r.method] = i + 1;
            cand.score[r.method] = r.items[i].score;
        }
    return s;
}

struct SuggestConfig {
    std::vector<std::string> methods = {"bm25", "hashing-bow"};
    std::size_t m = 5;
    std::map<std::string, EmbeddingTable> embeddings;  // "embedding:<name>" -> table
    std::size_t hashing_dim = 256;
};

inline void validate(const SuggestConfig& c) {
    if (c.m < 1) throw UsageError("suggestion set size m must be at least 1");
    if (c.methods.empty()) throw UsageError("at least one suggestion method is required");
    for (const auto& m : c.methods) {
        if (m == "bm25" || m == "hashing-bow") continue;
        if (m.starts_with("embedding:")) {
            if (!c.embeddings.contains(m.substr(10)))
                throw UsageError("method '" + m + "' needs an embedding table named '" + m.substr(10) + "'");
            continue;
        }
        throw UsageError("unknown suggestion method '" + m + "' (bm25|hashing-bow|embedding:<name>)");
    }
}

/// Suggestion engine bound to one paper document. Index construction happens once; queries
/// are const and may run concurrently.
class Suggester {
  public:
    Suggester(const IntertextualGraph& g, const DocumentId& paper_doc, SuggestConfig config)
        : graph_(&g), paper_(paper_doc), config_(std::move(config)), hashing_(config_.hashing_dim),
          bm25_(collect(g, paper_doc)) {
        validate(config_);
        for (const auto& d : collect(g, paper_doc)) {
            sentences_.push_back(d.id);
            hashed_.vectors.emplace(d.id.value, hashing_(d.text));
        }
        hashed_.dim = hashing_.dim();
    }

    [[nodiscard]] std::vector<Ranking> rankings(const NodeId& review_sentence) const {
        const Node& q = check_review_sentence(review_sentence);
        std::vector<Ranking> out;
        for (const auto& m : config_.methods) {
            if (m == "bm25") {
                out.push_back(bm25_.rank(q.content));
            } else if (m == "hashing-bow") {
                out.push_back(cosine_rank(hashing_(q.content), hashed_, sentences_, m));
            } else {
                const auto& table = config_.embeddings.at(m.substr(10));
                const auto* v = table.find(q.id);
                if (!v) throw UsageError("embedding table '" + m.substr(10) + "' has no vector for '" + q.id.value + "'");
                out.push_back(cosine_rank(*v, table, sentences_, m));
            }
        }
        return out;
    }

    [[nodiscard]] SuggestionSet suggest(const NodeId& review_sentence) const {
        return aggregate_rankings(rankings(review_sentence), config_.m, review_sentence);
    }

    [[nodiscard]] const SuggestConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<NodeId>& paper_sentences() const { return sentences_; }

  private:
    const IntertextualGraph* graph_;
    DocumentId paper_;
    SuggestConfig config_;
    HashingVectorizer hashing_;
    Bm25Index bm25_;
    std::vector<NodeId> sentences_;
    EmbeddingTable hashed_;

    static std::vector<Bm25Index::Doc> collect(const IntertextualGraph& g, const DocumentId& doc) {
        std::vector<Bm25Index::Doc> out;
        for (const auto& id : reading_order(g, doc)) {
            const auto& n = g.node(id);
            if (n.kind == NodeKind::sentence) out.push_back({n.id, n.content});
        }
        return out;
    }

    const Node& check_review_sentence(const NodeId& id) const {
        const Node* n = graph_->find_node(id);
        if (!n) throw NotFoundError("unknown node '" + id.value + "'");
        if (n->kind != NodeKind::sentence) throw UsageError("'" + id.value + "' is not a sentence");
        const auto& root = graph_->node(graph_->document(n->doc).root);
        if (root.kind != NodeKind::review_report)
            throw UsageError("'" + id.value + "' is not a review sentence");
        return *n;
    }
};

inline SuggestionSet suggest(const IntertextualGraph& g, const NodeId& review_sentence, const DocumentId& paper_doc,
                             const SuggestConfig& config) {
    return Suggester(g, paper_doc, config).suggest(review_sentence);
}

inline nlohmann::json to_json(const SuggestionSet& s) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : s.candidates) {
        nlohmann::json rank = nlohmann::json::object();
        nlohmann::json score = nlohmann::json::object();
        for (const auto& [m, r] : c.rank) rank[m] = r;
        for (const auto& [m, v] : c.score) score[m] = v;
        cands.push_back({{"node", c.node.value}, {"picked_by", c.picked_by}, {"rank", rank}, {"score", score}});
    }
    return {{"review_sentence", s.review_sentence.value},
            {"m", s.m},
            {"methods", s.methods},
            {"candidates", std::move(cands)},
            {"meta", {{"aggregation", "round-robin"}, {"method_order", "configured"}, {"ties", "reading-order"}}}};
}

}  // namespace itgkit
