#pragma once

// HTTP/JSON annotation service over a directory of projects. Reads work on immutable
// snapshots; label writes are serialized per project and fsynced before the 201.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "itgkit/commands.hpp"
#include "itgkit/error.hpp"
#include "itgkit/graph_json.hpp"
#include "itgkit/io.hpp"
#include "itgkit/links.hpp"
#include "itgkit/pragmatics.hpp"
#include "itgkit/project.hpp"
#include "itgkit/suggest.hpp"

namespace itgkit {

struct ServiceOptions {
    fs::path data_dir;
    std::string token;  // required on POST as "Authorization: Bearer <token>"
    std::string cors_origin = "*";
};

/// HTTP error with a status code; the body is {"error": ..., extra fields}.
struct HttpError : Error {
    int status;
    nlohmann::json extra;
    HttpError(int s, const std::string& what, nlohmann::json x = nlohmann::json::object())
        : Error(what), status(s), extra(std::move(x)) {}
};

class AnnotationService {
  public:
    explicit AnnotationService(ServiceOptions opt) : opt_(std::move(opt)) {
        if (!fs::is_directory(opt_.data_dir)) throw UsageError("data dir does not exist: " + opt_.data_dir.string());
        if (opt_.token.empty()) throw UsageError("a bearer token is required");
    }

    void mount(httplib::Server& srv) {
        srv.set_default_headers({{"Access-Control-Allow-Origin", opt_.cors_origin},
                                 {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        srv.Get("/projects", wrap([this](const httplib::Request&, httplib::Response& res) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& [id, dir] : discover()) {
                auto snap = snapshot(id);
                nlohmann::json versions = nlohmann::json::array();
                for (const auto& [v, _] : snap->paper) versions.push_back(v);
                nlohmann::json docs = nlohmann::json::array();
                for (const auto& d : snap->joint.documents()) docs.push_back(d.id.value);
                arr.push_back({{"id", id}, {"paper", snap->paper_doc.value}, {"versions", versions}, {"documents", docs},
                               {"annotators", snap->annotators}});
            }
            send_json(res, 200, cmd::json_text({{"projects", arr}}));
        }));

        srv.Get("/projects/:id/documents/:doc", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto snap = snapshot(req.path_params.at("id"));
            const DocumentId doc(req.path_params.at("doc"));
            if (doc == snap->paper_doc) {
                int v = snap->paper.begin()->first;
                if (req.has_param("version")) v = parse_or_400(req.get_param_value("version"));
                const auto* g = snap->paper_version(v);
                if (!g) throw HttpError(404, "no paper version " + std::to_string(v));
                send_json(res, 200, serialize(*g));
                return;
            }
            for (const auto& r : snap->reviews)
                if (r.find_document(doc)) {
                    send_json(res, 200, serialize(r));
                    return;
                }
            throw HttpError(404, "unknown document '" + doc.value + "'");
        }));

        srv.Get("/projects/:id/suggestions", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto snap_entry = entry(req.path_params.at("id"));
            auto snap = snap_entry->get();
            if (!req.has_param("sentence")) throw HttpError(400, "missing 'sentence' parameter");
            const NodeId sid(req.get_param_value("sentence"));
            const Node* n = snap->joint.find_node(sid);
            if (!n || n->kind != NodeKind::sentence || !is_review_doc(snap->joint, n->doc))
                throw HttpError(400, "'" + sid.value + "' is not a review sentence");
            send_json(res, 200, snap_entry->suggestion(snap, sid));
        }));

        srv.Post("/projects/:id/labels", wrap([this](const httplib::Request& req, httplib::Response& res) {
            authorize(req);
            auto e = entry(req.path_params.at("id"));
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::parse_error& ex) {
                throw HttpError(400, std::string("bad JSON body: ") + ex.what());
            }
            send_json(res, 201, e->post_label(body));
        }));

        srv.Get("/projects/:id/labels", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto snap = snapshot(req.path_params.at("id"));
            const std::string kind = req.has_param("kind") ? req.get_param_value("kind") : "pragmatic";
            std::optional<std::string> who;
            if (req.has_param("annotator")) who = req.get_param_value("annotator");
            nlohmann::json arr = nlohmann::json::array();
            if (kind == "pragmatic") {
                for (const auto& r : snap->pragmatics.records())
                    if (!who || r.annotator == *who)
                        arr.push_back({{"rev", snap->pragmatic_rev.at({r.node.value, r.annotator})}, {"record", to_json(r)}});
            } else if (kind == "link") {
                for (const auto& r : snap->links.records())
                    if (!who || r.annotator == *who)
                        arr.push_back({{"rev", snap->link_rev.at({r.review.value, r.paper.value, r.annotator})},
                                       {"record", to_json(r)}});
            } else {
                throw HttpError(400, "kind must be 'pragmatic' or 'link'");
            }
            send_json(res, 200, cmd::json_text({{"kind", kind}, {"records", arr}}));
        }));

        srv.Get("/projects/:id/alignment", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto e = entry(req.path_params.at("id"));
            auto snap = e->get();
            const int from = req.has_param("from") ? parse_or_400(req.get_param_value("from")) : snap->paper.begin()->first;
            const int to = req.has_param("to") ? parse_or_400(req.get_param_value("to")) : from + 1;
            if (!snap->paper_version(from)) throw HttpError(404, "no paper version " + std::to_string(from));
            if (!snap->paper_version(to)) throw HttpError(404, "no paper version " + std::to_string(to));
            send_json(res, 200, e->alignment(snap, from, to));
        }));

        srv.Get("/projects/:id/stats", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto e = entry(req.path_params.at("id"));
            send_json(res, 200, e->stats(e->get()));
        }));
    }

  private:
    using Snap = std::shared_ptr<const ProjectSnapshot>;

    // Per-project state. `snap_mu_` guards the snapshot pointer and caches, `write_mu_` is
    // held across validate-append-fsync.
    class Entry {
      public:
        explicit Entry(fs::path dir) : dir_(std::move(dir)) {}

        Snap get() {
            std::lock_guard lk(snap_mu_);
            auto fp = fingerprint(dir_);
            if (!snap_ || fp != fp_) {
                snap_ = std::make_shared<const ProjectSnapshot>(load_project(dir_));
                fp_ = std::move(fp);
                suggester_.reset();
                suggestions_.clear();
                alignments_.clear();
                stats_.reset();
            }
            return snap_;
        }

        std::string suggestion(const Snap& s, const NodeId& sentence) {
            std::lock_guard lk(snap_mu_);
            if (s != snap_) return cmd::suggestion_set_output(Suggester(s->joint, s->paper_doc, cmd::suggest_config(s->settings)).suggest(sentence));
            if (auto it = suggestions_.find(sentence.value); it != suggestions_.end()) return it->second;
            if (!suggester_)
                suggester_ = std::make_unique<Suggester>(s->joint, s->paper_doc, cmd::suggest_config(s->settings));
            auto body = cmd::suggestion_set_output(suggester_->suggest(sentence));
            suggestions_.emplace(sentence.value, body);
            return body;
        }

        std::string alignment(const Snap& s, int from, int to) {
            std::lock_guard lk(snap_mu_);
            const auto key = std::make_pair(from, to);
            if (s == snap_)
                if (auto it = alignments_.find(key); it != alignments_.end()) return it->second;
            auto body = project_alignment(*s, from, to).alignment;
            if (s == snap_) alignments_.emplace(key, body);
            return body;
        }

        std::string stats(const Snap& s) {
            std::lock_guard lk(snap_mu_);
            if (s == snap_ && stats_) return *stats_;
            std::string body;
            try {
                body = project_stats(*s).json;
            } catch (const MissingLayerError& e) {
                throw HttpError(409, e.what(), {{"missing_layer", e.layer()}});
            }
            if (s == snap_) stats_ = body;
            return body;
        }

        std::string post_label(const nlohmann::json& body) {
            std::lock_guard wl(write_mu_);
            auto snap = get();
            if (!body.is_object()) throw HttpError(400, "body must be a JSON object");
            const std::string kind = body.value("kind", "");
            std::optional<std::uint64_t> supersedes;
            bool expects_fresh = false;
            if (body.contains("supersedes")) {
                if (body.at("supersedes").is_null()) expects_fresh = true;
                else if (body.at("supersedes").is_number_unsigned()) supersedes = body.at("supersedes").get<std::uint64_t>();
                else throw HttpError(400, "'supersedes' must be a revision number or null");
            }
            auto check_token = [&](std::optional<std::uint64_t> current) {
                if (!body.contains("supersedes")) return;
                if (expects_fresh ? current.has_value() : current != supersedes)
                    throw HttpError(409, "stale supersession token",
                                    {{"current", current ? nlohmann::json(*current) : nlohmann::json(nullptr)}});
            };
            nlohmann::json rec = body.contains("record") ? body.at("record") : body;
            if (!rec.contains("ts")) rec["ts"] = io::format_timestamp(io::now());
            std::string line;
            std::uint64_t rev = 0;
            fs::path file;
            try {
                if (kind == "pragmatic") {
                    auto r = pragmatic_record_from_json(rec);
                    LabelStore scratch;
                    attach_label(scratch, snap->joint, r.node, r.label, r.annotator, r.ts);
                    const Node& n = snap->joint.node(r.node);
                    if (!is_review_doc(snap->joint, n.doc))
                        throw InvariantError("'" + r.node.value + "' is not a review sentence");
                    check_annotator(*snap, r.annotator);
                    auto it = snap->pragmatic_rev.find({r.node.value, r.annotator});
                    check_token(it == snap->pragmatic_rev.end() ? std::nullopt : std::optional(it->second));
                    line = to_json(r).dump();
                    rev = snap->pragmatics_lines + 1;
                    file = dir_ / kPragmaticsFile;
                    rec = to_json(r);
                } else if (kind == "link") {
                    auto r = link_record_from_json(rec);
                    LinkLabelStore scratch;
                    attach_link_label(scratch, snap->joint, r);
                    check_annotator(*snap, r.annotator);
                    auto it = snap->link_rev.find({r.review.value, r.paper.value, r.annotator});
                    check_token(it == snap->link_rev.end() ? std::nullopt : std::optional(it->second));
                    line = to_json(r).dump();
                    rev = snap->links_lines + 1;
                    file = dir_ / kLinksFile;
                    rec = to_json(r);
                } else {
                    throw HttpError(400, "kind must be 'pragmatic' or 'link'");
                }
            } catch (const HttpError&) {
                throw;
            } catch (const Error& e) {
                throw HttpError(400, e.what());
            }
            io::drop_partial_tail(file);
            io::append_line_durable(file, line);
            get();  // refresh so read-back sees the new record
            return cmd::json_text({{"kind", kind}, {"rev", rev}, {"record", rec}});
        }

      private:
        static void check_annotator(const ProjectSnapshot& s, const std::string& who) {
            if (!s.annotators.empty() && std::find(s.annotators.begin(), s.annotators.end(), who) == s.annotators.end() &&
                who != kGoldAnnotator)
                throw InvariantError("annotator '" + who + "' is not on the project roster");
        }

        fs::path dir_;
        std::mutex snap_mu_;
        std::mutex write_mu_;
        Snap snap_;
        Fingerprint fp_;
        std::unique_ptr<Suggester> suggester_;
        std::map<std::string, std::string> suggestions_;
        std::map<std::pair<int, int>, std::string> alignments_;
        std::optional<std::string> stats_;
    };

    std::map<std::string, fs::path> discover() {
        std::map<std::string, fs::path> out;
        for (const auto& d : fs::directory_iterator(opt_.data_dir)) {
            if (!d.is_directory() || !fs::exists(d.path() / kProjectFile)) continue;
            std::string id = d.path().filename().string();
            try {
                auto j = nlohmann::json::parse(io::read_file(d.path() / kProjectFile));
                id = j.value("id", id);
            } catch (const std::exception&) {
            }
            out.emplace(id, d.path());
        }
        return out;
    }

    std::shared_ptr<Entry> entry(const std::string& id) {
        std::lock_guard lk(mu_);
        if (auto it = entries_.find(id); it != entries_.end()) return it->second;
        auto all = discover();
        auto it = all.find(id);
        if (it == all.end()) throw HttpError(404, "unknown project '" + id + "'");
        auto e = std::make_shared<Entry>(it->second);
        entries_.emplace(id, e);
        return e;
    }

    Snap snapshot(const std::string& id) { return entry(id)->get(); }

    void authorize(const httplib::Request& req) const {
        const auto h = req.get_header_value("Authorization");
        if (h != "Bearer " + opt_.token) throw HttpError(401, "missing or wrong bearer token");
    }

    static int parse_or_400(const std::string& s) {
        try {
            return parse_version(s);
        } catch (const UsageError& e) {
            throw HttpError(400, e.what());
        }
    }

    static void send_json(httplib::Response& res, int status, const std::string& body) {
        res.status = status;
        res.set_content(body, "application/json; charset=utf-8");
    }

    template <class F>
    static httplib::Server::Handler wrap(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const HttpError& e) {
                auto j = e.extra;
                j["error"] = e.what();
                send_json(res, e.status, cmd::json_text(j));
            } catch (const MissingLayerError& e) {
                send_json(res, 409, cmd::json_text({{"error", e.what()}, {"missing_layer", e.layer()}}));
            } catch (const NotFoundError& e) {
                send_json(res, 404, cmd::json_text({{"error", e.what()}}));
            } catch (const UsageError& e) {
                send_json(res, 400, cmd::json_text({{"error", e.what()}}));
            } catch (const std::exception& e) {
                send_json(res, 500, cmd::json_text({{"error", e.what()}}));
            }
        };
    }

    ServiceOptions opt_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;
};

}  // namespace itgkit
