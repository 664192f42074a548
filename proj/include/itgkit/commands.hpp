#pragma once

// Command implementations shared by the CLI and the HTTP service. Everything that ends up
// in a file or a response body is produced here, so both front ends emit the same bytes.

#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "itgkit/align.hpp"
#include "itgkit/analysis.hpp"
#include "itgkit/error.hpp"
#include "itgkit/explicit_links.hpp"
#include "itgkit/graph.hpp"
#include "itgkit/graph_json.hpp"
#include "itgkit/io.hpp"
#include "itgkit/jats.hpp"
#include "itgkit/links.hpp"
#include "itgkit/metrics.hpp"
#include "itgkit/pragmatics.hpp"
#include "itgkit/review.hpp"
#include "itgkit/suggest.hpp"

namespace itgkit::cmd {

namespace fs = std::filesystem;

struct Settings {
    SimilarityMetric metric = SimilarityMetric::levenshtein_ratio;
    double threshold = kDefaultAlignThreshold;
    std::size_t m = 5;
    std::vector<std::string> methods = {"bm25", "hashing-bow"};
    std::optional<fs::path> patterns;
    std::optional<fs::path> section_map;
    std::size_t jobs = 1;
    std::map<std::string, fs::path> embeddings;
};

inline fs::path resolve_path(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

/// Reads settings keys from `j` on top of `s`. Relative paths are taken relative to `base`.
inline Settings settings_from_json(const nlohmann::json& j, const fs::path& base, Settings s = {}) {
    try {
        if (j.contains("metric")) s.metric = parse_similarity_metric(j.at("metric").get<std::string>());
        if (j.contains("threshold")) s.threshold = j.at("threshold").get<double>();
        if (j.contains("m")) {
            const auto m = j.at("m").get<long>();
            if (m < 1) throw UsageError("m must be at least 1");
            s.m = static_cast<std::size_t>(m);
        }
        if (j.contains("methods")) s.methods = j.at("methods").get<std::vector<std::string>>();
        if (j.contains("patterns")) s.patterns = resolve_path(base, j.at("patterns").get<std::string>());
        if (j.contains("section_map")) s.section_map = resolve_path(base, j.at("section_map").get<std::string>());
        if (j.contains("jobs")) s.jobs = j.at("jobs").get<std::size_t>();
        if (j.contains("embeddings"))
            for (const auto& [name, p] : j.at("embeddings").items())
                s.embeddings[name] = resolve_path(base, p.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad config: ") + e.what());
    }
    return s;
}

/// Defaults, then the file named by ITGKIT_CONFIG when set.
inline Settings default_settings() {
    Settings s;
    if (const char* env = std::getenv("ITGKIT_CONFIG"); env && *env) {
        const fs::path p(env);
        if (!fs::exists(p)) throw UsageError("ITGKIT_CONFIG points to a missing file: " + p.string());
        s = settings_from_json(nlohmann::json::parse(io::read_file(p)), p.parent_path(), s);
    }
    return s;
}

inline void validate(const Settings& s) {
    if (s.threshold < 0.0 || s.threshold > 1.0) throw UsageError("threshold must lie in [0, 1]");
    if (s.m < 1) throw UsageError("m must be at least 1");
    if (s.jobs < 1) throw UsageError("jobs must be at least 1");
    if (s.methods.empty()) throw UsageError("at least one suggestion method is required");
    for (const auto* p : {&s.patterns, &s.section_map})
        if (*p && !fs::exists(**p)) throw UsageError("missing file: " + (*p)->string());
    for (const auto& [name, p] : s.embeddings)
        if (!fs::exists(p)) throw UsageError("missing embedding table '" + name + "': " + p.string());
    for (const auto& m : s.methods) {
        if (m == "bm25" || m == "hashing-bow") continue;
        if (m.starts_with("embedding:") && s.embeddings.contains(m.substr(10))) continue;
        if (m.starts_with("embedding:"))
            throw UsageError("method '" + m + "' needs an embedding table (--embedding " + m.substr(10) + "=PATH)");
        throw UsageError("unknown suggestion method '" + m + "' (bm25|hashing-bow|embedding:<name>)");
    }
}

inline std::vector<AnchorPattern> load_patterns(const Settings& s) {
    if (!s.patterns) return default_anchor_patterns();
    return anchor_patterns_from_json(nlohmann::json::parse(io::read_file(*s.patterns)));
}

inline SectionMap load_section_map(const Settings& s) {
    if (!s.section_map) return default_section_map();
    return section_map_from_json(nlohmann::json::parse(io::read_file(*s.section_map)));
}

inline SuggestConfig suggest_config(const Settings& s) {
    SuggestConfig c;
    c.methods = s.methods;
    c.m = s.m;
    for (const auto& m : s.methods) {
        if (!m.starts_with("embedding:")) continue;
        const auto name = m.substr(10);
        auto it = s.embeddings.find(name);
        if (it == s.embeddings.end()) throw UsageError("method '" + m + "' needs an embedding table");
        c.embeddings[name] = embedding_table_from_json(nlohmann::json::parse(io::read_file(it->second)));
    }
    return c;
}

inline IntertextualGraph load_graph(const fs::path& p) {
    try {
        return deserialize(io::read_file(p));
    } catch (const ParseError& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

inline std::string json_text(const nlohmann::json& j) { return j.dump(1) + "\n"; }

// ---- ingest

struct IngestOutputs {
    std::string graph;
    std::string report;
};

inline nlohmann::json to_json(const IngestReport& r, const std::string& input, const IntertextualGraph& g) {
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& d : g.documents()) docs.push_back({{"id", d.id.value}, {"version", d.version}});
    return {{"input", input}, {"documents", docs}, {"counts", r.counts}, {"warnings", r.warnings}};
}

inline IngestOutputs ingest_jats_output(std::string_view xml, const IngestOptions& opt, const std::string& input) {
    auto res = parse_jats(xml, opt);
    return {serialize(res.graph), json_text(to_json(res.report, input, res.graph))};
}

inline IngestOutputs ingest_review_output(std::string_view review, const DocumentId& doc, int version, bool clean,
                                          const std::vector<QuestionnaireTemplate>& templates, const std::string& input) {
    const std::string body = clean ? clean_review(review, templates) : std::string(review);
    auto res = parse_review(body, doc, version);
    return {serialize(res.graph), json_text(to_json(res.report, input, res.graph))};
}

// ---- align

struct AlignOutputs {
    AlignmentResult result;
    std::string alignment;  // alignment JSON
    std::string diff;       // human-readable diff
    std::string report;     // diff report JSON
};

inline AlignOutputs align_outputs(const IntertextualGraph& old_graph, const IntertextualGraph& new_graph,
                                  SimilarityMetric metric, double threshold) {
    const auto problem = make_alignment_problem(old_graph, new_graph, metric, threshold);
    AlignOutputs o;
    o.result = align_versions(problem);
    o.alignment = json_text(to_json(o.result));
    o.diff = diff_text(o.result, problem);
    o.report = json_text(to_json(diff_report(o.result, old_graph, new_graph)));
    return o;
}

// ---- suggest

inline IntertextualGraph join(const IntertextualGraph& paper, const std::vector<const IntertextualGraph*>& reviews) {
    IntertextualGraph g;
    merge_into(g, paper);
    for (const auto* r : reviews) merge_into(g, *r);
    return g;
}

inline std::vector<DocumentId> review_documents(const IntertextualGraph& g) {
    std::vector<DocumentId> out;
    for (const auto& d : g.documents())
        if (is_review_doc(g, d.id)) out.push_back(d.id);
    return out;
}

inline nlohmann::json suggestions_json(const Suggester& s, const IntertextualGraph& g, const DocumentId& paper) {
    nlohmann::json reviews = nlohmann::json::array();
    for (const auto& r : review_documents(g)) {
        nlohmann::json sets = nlohmann::json::array();
        for (const auto* n : g.nodes_of(r, NodeKind::sentence)) sets.push_back(to_json(s.suggest(n->id)));
        reviews.push_back({{"doc", r.value}, {"suggestions", std::move(sets)}});
    }
    return {{"paper", paper.value}, {"m", s.config().m}, {"methods", s.config().methods}, {"reviews", std::move(reviews)}};
}

inline std::string suggestions_output(const IntertextualGraph& joint, const DocumentId& paper, const SuggestConfig& c) {
    const Suggester s(joint, paper, c);
    return json_text(suggestions_json(s, joint, paper));
}

inline std::string suggestion_set_output(const SuggestionSet& s) { return json_text(to_json(s)); }

// ---- extract

struct ExtractOutputs {
    IntertextualGraph joint;
    std::vector<ExplicitLink> links;
    std::string tsv;
    std::string links_json;
    std::string graph_json;
};

inline ExtractOutputs extract_outputs(const IntertextualGraph& paper, const std::vector<const IntertextualGraph*>& reviews,
                                      const std::vector<AnchorPattern>& patterns) {
    ExtractOutputs o;
    o.joint = join(paper, reviews);
    const auto paper_doc = paper.documents().front().id;
    for (const auto& r : review_documents(o.joint)) {
        auto x = extract_explicit_links(o.joint, r, paper_doc, patterns);
        o.links.insert(o.links.end(), x.links.begin(), x.links.end());
    }
    o.tsv = explicit_links_tsv(o.links);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : o.links) arr.push_back(to_json(l));
    std::size_t resolved = 0;
    for (const auto& l : o.links) resolved += l.resolved() ? 1 : 0;
    o.links_json = json_text({{"paper", paper_doc.value},
                              {"anchors", o.links.size()},
                              {"resolved", resolved},
                              {"kind_violations", kind_violations(o.joint, o.links)},
                              {"links", std::move(arr)}});
    o.graph_json = serialize(o.joint);
    return o;
}

// ---- agreement

enum class Layer { pragmatics, links };

inline Layer parse_layer(std::string_view s) {
    if (s == "pragmatics") return Layer::pragmatics;
    if (s == "links") return Layer::links;
    throw UsageError("unknown layer '" + std::string(s) + "' (pragmatics|links)");
}

struct AgreementOutput {
    AlphaResult alpha;
    std::string json;
};

inline AgreementOutput agreement_output(Layer layer, const std::string& jsonl) {
    AgreementOutput o;
    nlohmann::json j;
    if (layer == Layer::pragmatics) {
        const auto store = load_label_store(jsonl);
        if (store.empty()) throw MissingLayerError("pragmatics");
        const auto data = pragmatics_reliability(store);
        o.alpha = krippendorff_alpha(data);
        std::vector<std::string> ann;
        for (auto& a : store.annotators())
            if (a != kGoldAnnotator) ann.push_back(a);
        const auto recs = store.records();
        std::vector<PragmaticLabelRecord> non_gold;
        for (const auto& r : recs)
            if (r.annotator != kGoldAnnotator) non_gold.push_back(r);
        const auto dist = label_distribution(non_gold);
        j = {{"layer", "pragmatics"}, {"annotators", ann}, {"items", data.values.size()},
             {"label_distribution", class_map(dist.share)}};
    } else {
        const auto store = load_link_store(jsonl);
        if (store.empty()) throw MissingLayerError("links");
        const auto data = linking_reliability(store);
        o.alpha = krippendorff_alpha(data);
        std::vector<std::string> ann;
        for (auto& a : store.annotators())
            if (a != kGoldAnnotator) ann.push_back(a);
        j = {{"layer", "links"}, {"annotators", ann}, {"items", data.values.size()}, {"scope", "labeled pairs only"}};
    }
    j["alpha"] = o.alpha.alpha;
    j["no_expected_disagreement"] = o.alpha.no_expected_disagreement;
    j["items_used"] = o.alpha.items_used;
    j["pairable_values"] = o.alpha.pairable_values;
    j["metric"] = "nominal";
    o.json = json_text(j);
    return o;
}

// ---- stats

struct LoadedBundle {
    IntertextualGraph paper;
    std::vector<IntertextualGraph> reviews;
    LabelStore pragmatics;
    std::optional<LinkLabelStore> links;
    IntertextualGraph revision;
    AlignmentResult alignment;
    std::string id;
    std::string domain;
};

inline JointBundle make_bundle(const LoadedBundle& lb, const std::vector<AnchorPattern>& patterns) {
    BundleInputs in;
    in.id = lb.id;
    in.domain = lb.domain;
    in.paper = &lb.paper;
    for (const auto& r : lb.reviews) in.reviews.push_back(&r);
    in.pragmatics = &lb.pragmatics;
    in.link_labels = lb.links ? &*lb.links : nullptr;
    in.revision = &lb.revision;
    in.alignment = lb.alignment;
    in.patterns = patterns;
    return build_bundle(in);
}

/// Manifest: {"bundles": [{id, domain?, paper, reviews[], pragmatics, links?, revision,
/// alignment}]} with paths relative to the manifest file.
inline std::vector<LoadedBundle> load_manifest(const fs::path& manifest) {
    const auto j = nlohmann::json::parse(io::read_file(manifest));
    const auto base = manifest.parent_path();
    std::vector<LoadedBundle> out;
    try {
        for (const auto& b : j.at("bundles")) {
            LoadedBundle lb;
            lb.id = b.value("id", "bundle" + std::to_string(out.size() + 1));
            lb.domain = b.value("domain", "");
            auto need = [&](const char* key, const char* layer) {
                if (!b.contains(key)) throw MissingLayerError(layer);
                const auto p = resolve_path(base, b.at(key).get<std::string>());
                if (!fs::exists(p)) throw MissingLayerError(layer);
                return p;
            };
            lb.paper = load_graph(need("paper", "paper"));
            for (const auto& r : b.value("reviews", nlohmann::json::array()))
                lb.reviews.push_back(load_graph(resolve_path(base, r.get<std::string>())));
            auto prag = need("pragmatics", "pragmatics");
            lb.pragmatics = load_label_store(io::read_file(prag));
            if (lb.pragmatics.empty()) throw MissingLayerError("pragmatics");
            if (b.contains("links")) lb.links = load_link_store(io::read_file(resolve_path(base, b.at("links").get<std::string>())));
            lb.revision = load_graph(need("revision", "revision"));
            lb.alignment = alignment_from_json(nlohmann::json::parse(io::read_file(need("alignment", "alignment"))));
            out.push_back(std::move(lb));
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad manifest: ") + e.what());
    }
    return out;
}

struct StatsOutputs {
    JointStats stats;
    std::string json;
    std::string csv;
};

inline StatsOutputs stats_outputs(const std::vector<LoadedBundle>& loaded, const Settings& s) {
    const auto patterns = load_patterns(s);
    std::vector<JointBundle> bundles;
    for (const auto& lb : loaded) bundles.push_back(make_bundle(lb, patterns));
    std::vector<const JointBundle*> ptrs;
    for (const auto& b : bundles) ptrs.push_back(&b);
    StatsOutputs o;
    o.stats = joint_stats(ptrs, load_section_map(s));
    o.json = json_text(to_json(o.stats));
    o.csv = to_csv(o.stats);
    return o;
}

}  // namespace itgkit::cmd
