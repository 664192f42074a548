// itgkit command-line front end.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "itgkit/commands.hpp"
#include "itgkit/project.hpp"
#include "itgkit/service.hpp"

namespace fs = std::filesystem;
using namespace itgkit;

namespace {

struct Common {
    std::optional<std::string> config;
    std::optional<std::string> metric;
    std::optional<double> threshold;
    std::optional<long> m;
    std::optional<std::string> methods;
    std::optional<std::string> patterns;
    std::optional<std::string> section_map;
    std::optional<long> jobs;
    std::vector<std::string> embeddings;  // name=path
    std::string out;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!text::trim(item).empty()) out.emplace_back(text::trim(item));
    return out;
}

// Defaults < ITGKIT_CONFIG < --config < flags.
cmd::Settings resolve(const Common& c) {
    cmd::Settings s = cmd::default_settings();
    if (c.config) {
        const fs::path p(*c.config);
        s = cmd::settings_from_json(nlohmann::json::parse(io::read_file(p)), p.parent_path(), s);
    }
    if (c.metric) s.metric = parse_similarity_metric(*c.metric);
    if (c.threshold) s.threshold = *c.threshold;
    if (c.m) {
        if (*c.m < 1) throw UsageError("--m must be at least 1");
        s.m = static_cast<std::size_t>(*c.m);
    }
    if (c.methods) s.methods = split_list(*c.methods);
    if (c.patterns) s.patterns = fs::path(*c.patterns);
    if (c.section_map) s.section_map = fs::path(*c.section_map);
    if (c.jobs) {
        if (*c.jobs < 1) throw UsageError("--jobs must be at least 1");
        s.jobs = static_cast<std::size_t>(*c.jobs);
    }
    for (const auto& e : c.embeddings) {
        const auto eq = e.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--embedding expects NAME=PATH, got '" + e + "'");
        s.embeddings[e.substr(0, eq)] = fs::path(e.substr(eq + 1));
    }
    cmd::validate(s);
    return s;
}

void add_common(CLI::App* sub, Common& c, bool with_out = true) {
    sub->add_option("--config", c.config, "Config file (JSON); overrides ITGKIT_CONFIG");
    sub->add_option("--metric", c.metric, "Alignment similarity: levenshtein|overlap|combined");
    sub->add_option("--threshold", c.threshold, "Alignment score threshold in [0,1]");
    sub->add_option("--m", c.m, "Suggestion set size");
    sub->add_option("--methods", c.methods, "Comma-separated suggestion methods");
    sub->add_option("--patterns", c.patterns, "Anchor pattern file");
    sub->add_option("--section-map", c.section_map, "Section-group keyword file");
    sub->add_option("--jobs", c.jobs, "Parallel documents");
    sub->add_option("--embedding", c.embeddings, "Embedding table NAME=PATH (repeatable)");
    if (with_out) sub->add_option("--out", c.out, "Output directory or file")->required();
}

std::vector<const IntertextualGraph*> ptrs(const std::vector<IntertextualGraph>& v) {
    std::vector<const IntertextualGraph*> out;
    for (const auto& g : v) out.push_back(&g);
    return out;
}

std::vector<IntertextualGraph> load_all(const std::vector<std::string>& paths) {
    std::vector<IntertextualGraph> out;
    for (const auto& p : paths) out.push_back(cmd::load_graph(p));
    return out;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; returns how many calls failed.
template <class F>
std::size_t parallel_for(std::size_t n, std::size_t jobs, F fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failed{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++)
            if (!fn(i)) ++failed;
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"itgkit: intertextual graphs for papers, reviews and revisions"};
    app.require_subcommand(1);

    Common c;
    int exit_code = 0;
    std::mutex err_mu;
    auto report_error = [&](const std::string& where, const std::exception& e) {
        std::lock_guard lk(err_mu);
        std::cerr << "itgkit: " << where << (where.empty() ? "" : ": ") << e.what() << "\n";
    };

    // ingest
    std::vector<std::string> ingest_files;
    std::optional<std::string> ingest_doc;
    int ingest_version = 1;
    bool no_sentences = false;
    auto* ingest = app.add_subcommand("ingest", "JATS XML -> graph JSON + ingest report");
    ingest->add_option("files", ingest_files, "JATS XML files")->required();
    ingest->add_option("--doc-id", ingest_doc, "Document id (single input only; default: DOI)");
    ingest->add_option("--version", ingest_version, "Document version");
    ingest->add_flag("--no-sentences", no_sentences, "Keep paragraphs unsplit");
    add_common(ingest, c);

    // ingest-review
    std::string review_file;
    std::string review_doc;
    int review_version = 1;
    bool no_clean = false;
    std::optional<std::string> templates_file;
    auto* ingest_review = app.add_subcommand("ingest-review", "Review text -> graph JSON");
    ingest_review->add_option("file", review_file, "Plain-text review")->required();
    ingest_review->add_option("--doc", review_doc, "Review document id")->required();
    ingest_review->add_option("--version", review_version, "Review version");
    ingest_review->add_flag("--no-clean", no_clean, "Keep questionnaire blocks");
    ingest_review->add_option("--templates", templates_file, "Questionnaire template file");
    add_common(ingest_review, c);

    // extract
    std::string paper_file;
    std::vector<std::string> review_files;
    auto* extract = app.add_subcommand("extract", "Explicit review->paper links");
    extract->add_option("--paper", paper_file, "Paper graph")->required();
    extract->add_option("--review", review_files, "Review graph (repeatable)")->required();
    add_common(extract, c);

    // suggest
    auto* suggest_cmd = app.add_subcommand("suggest", "Implicit-link suggestion sets");
    suggest_cmd->add_option("--paper", paper_file, "Paper graph")->required();
    suggest_cmd->add_option("--review", review_files, "Review graph (repeatable)")->required();
    add_common(suggest_cmd, c);

    // align
    std::string old_file;
    std::string new_file;
    auto* align = app.add_subcommand("align", "Align two versions of a paper");
    align->add_option("old", old_file, "Earlier version graph")->required();
    align->add_option("new", new_file, "Later version graph")->required();
    add_common(align, c);

    // agreement
    std::string labels_file;
    std::string layer = "pragmatics";
    auto* agreement = app.add_subcommand("agreement", "Krippendorff's alpha of a label layer");
    agreement->add_option("--labels", labels_file, "Label JSONL")->required();
    agreement->add_option("--layer", layer, "pragmatics|links");
    add_common(agreement, c);

    // stats
    std::optional<std::string> manifest;
    std::optional<std::string> project_dir;
    auto* stats = app.add_subcommand("stats", "Joint statistics over bundles");
    auto* mopt = stats->add_option("--manifest", manifest, "Bundle manifest JSON");
    auto* popt = stats->add_option("--project", project_dir, "Annotation project directory");
    mopt->excludes(popt);
    add_common(stats, c);

    // serve
    std::string data_dir;
    std::string token;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string cors = "*";
    auto* serve = app.add_subcommand("serve", "Annotation HTTP service");
    serve->add_option("--data-dir", data_dir, "Directory of projects")->required();
    serve->add_option("--token", token, "Bearer token for writes")->required();
    serve->add_option("--port", port, "Port");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--cors-origin", cors, "Allowed UI origin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version exit 0; every other parse failure is a usage error.
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*ingest) {
            const auto s = resolve(c);
            if (ingest_doc && ingest_files.size() > 1) throw UsageError("--doc-id needs exactly one input");
            const fs::path out(c.out);
            fs::create_directories(out);
            const auto failed = parallel_for(ingest_files.size(), s.jobs, [&](std::size_t i) {
                const fs::path in(ingest_files[i]);
                try {
                    IngestOptions opt;
                    opt.doc_id = ingest_doc;
                    opt.version = ingest_version;
                    opt.split_sentences = !no_sentences;
                    auto o = cmd::ingest_jats_output(io::read_file(in), opt, in.filename().string());
                    io::write_file_atomic(out / (in.stem().string() + ".graph.json"), o.graph);
                    io::write_file_atomic(out / (in.stem().string() + ".report.json"), o.report);
                    return true;
                } catch (const std::exception& e) {
                    report_error(in.string(), e);
                    return false;
                }
            });
            if (failed) exit_code = 1;
        } else if (*ingest_review) {
            resolve(c);
            auto templates = templates_file
                                 ? templates_from_json(nlohmann::json::parse(io::read_file(*templates_file)))
                                 : default_questionnaire_templates();
            auto o = cmd::ingest_review_output(io::read_file(review_file), DocumentId(review_doc), review_version,
                                               !no_clean, templates, fs::path(review_file).filename().string());
            const fs::path out(c.out);
            io::write_file_atomic(out, o.graph);
            auto report = out;
            report.replace_extension(".report.json");
            io::write_file_atomic(report, o.report);
        } else if (*extract) {
            const auto s = resolve(c);
            const auto paper = cmd::load_graph(paper_file);
            const auto reviews = load_all(review_files);
            auto o = cmd::extract_outputs(paper, ptrs(reviews), cmd::load_patterns(s));
            const fs::path out(c.out);
            io::write_file_atomic(out / "explicit_links.tsv", o.tsv);
            io::write_file_atomic(out / "explicit_links.json", o.links_json);
            io::write_file_atomic(out / "joint.graph.json", o.graph_json);
            std::size_t resolved = 0;
            for (const auto& l : o.links) resolved += l.resolved() ? 1 : 0;
            std::cout << o.links.size() << " anchors, " << resolved << " resolved\n";
        } else if (*suggest_cmd) {
            const auto s = resolve(c);
            const auto paper = cmd::load_graph(paper_file);
            const auto reviews = load_all(review_files);
            const auto joint = cmd::join(paper, ptrs(reviews));
            io::write_file_atomic(c.out, cmd::suggestions_output(joint, paper.documents().front().id, cmd::suggest_config(s)));
        } else if (*align) {
            const auto s = resolve(c);
            const auto o = cmd::align_outputs(cmd::load_graph(old_file), cmd::load_graph(new_file), s.metric, s.threshold);
            const fs::path out(c.out);
            io::write_file_atomic(out / "alignment.json", o.alignment);
            io::write_file_atomic(out / "diff.txt", o.diff);
            io::write_file_atomic(out / "diff_report.json", o.report);
            std::cout << "aligned " << o.result.edges.size() << " (unchanged " << o.result.unchanged.size()
                      << ", modified " << o.result.modified.size() << "), added " << o.result.added.size()
                      << ", deleted " << o.result.deleted.size() << "\n";
        } else if (*agreement) {
            resolve(c);
            const auto o = cmd::agreement_output(cmd::parse_layer(layer), io::read_file(labels_file));
            io::write_file_atomic(c.out, o.json);
            std::printf("alpha=%.6f%s\n", o.alpha.alpha, o.alpha.no_expected_disagreement ? " (no expected disagreement)" : "");
        } else if (*stats) {
            const auto s = resolve(c);
            cmd::StatsOutputs o;
            if (manifest) o = cmd::stats_outputs(cmd::load_manifest(*manifest), s);
            else if (project_dir) o = project_stats(load_project(*project_dir));
            else throw UsageError("stats needs --manifest or --project");
            const fs::path out(c.out);
            io::write_file_atomic(out / "stats.json", o.json);
            io::write_file_atomic(out / "stats.csv", o.csv);
        } else if (*serve) {
            AnnotationService svc(ServiceOptions{data_dir, token, cors});
            httplib::Server srv;
            svc.mount(srv);
            std::cerr << "itgkit: serving " << data_dir << " on " << host << ":" << port << "\n";
            if (!srv.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
        }
    } catch (const MissingLayerError& e) {
        report_error("", e);
        return 3;
    } catch (const UsageError& e) {
        report_error("", e);
        return 2;
    } catch (const std::exception& e) {
        report_error("", e);
        return 1;
    }
    return exit_code;
}
