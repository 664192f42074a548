#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "itgkit/service.hpp"
#include "support.hpp"

using namespace itgkit;
using testing_support::TempDir;

namespace {

constexpr const char* kToken = "s3cret";

class ServiceTest : public ::testing::Test {
  protected:
    void SetUp() override {
        testing_support::make_project(data / "cellcount");
        start();
    }

    void start() {
        svc = std::make_unique<AnnotationService>(ServiceOptions{data.path, kToken, "*"});
        srv = std::make_unique<httplib::Server>();
        svc->mount(*srv);
        port = srv->bind_to_any_port("127.0.0.1");
        ASSERT_GT(port, 0);
        worker = std::thread([this] { srv->listen_after_bind(); });
        srv->wait_until_ready();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
    }

    void TearDown() override {
        srv->stop();
        if (worker.joinable()) worker.join();
    }

    httplib::Result get(const std::string& path) { return client->Get(path); }

    httplib::Result post(const std::string& path, const nlohmann::json& body, const std::string& token = kToken) {
        httplib::Headers h;
        if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
        return client->Post(path, h, body.dump(), "application/json");
    }

    static nlohmann::json body(const httplib::Result& r) { return nlohmann::json::parse(r->body); }

    TempDir data;
    std::unique_ptr<AnnotationService> svc;
    std::unique_ptr<httplib::Server> srv;
    std::unique_ptr<httplib::Client> client;
    std::thread worker;
    int port = 0;
};

nlohmann::json pragmatic(const char* node, const char* label, const char* who) {
    return {{"kind", "pragmatic"}, {"node", node}, {"label", label}, {"annotator", who}, {"ts", "2024-05-01T00:00:00Z"}};
}

}  // namespace

TEST_F(ServiceTest, ListsProjects) {
    auto r = get("/projects");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
    const auto j = body(r);
    ASSERT_EQ(j.at("projects").size(), 1u);
    const auto& p = j.at("projects")[0];
    EXPECT_EQ(p.at("id"), "cellcount");
    EXPECT_EQ(p.at("paper"), "paper");
    EXPECT_EQ(p.at("versions"), nlohmann::json::array({1, 2}));
    EXPECT_EQ(p.at("annotators"), nlohmann::json::array({"ann1", "ann2"}));
}

TEST_F(ServiceTest, Documents) {
    auto r = get("/projects/cellcount/documents/paper?version=2");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->body, io::read_file(data / "cellcount/article_v2.graph.json"));
    EXPECT_EQ(get("/projects/cellcount/documents/rev1")->body, io::read_file(data / "cellcount/rev1.graph.json"));
    EXPECT_EQ(get("/projects/cellcount/documents/nope")->status, 404);
    EXPECT_EQ(get("/projects/cellcount/documents/paper?version=9")->status, 404);
    EXPECT_EQ(get("/projects/cellcount/documents/paper?version=x")->status, 400);
    EXPECT_EQ(get("/projects/other/documents/paper")->status, 404);
}

TEST_F(ServiceTest, Suggestions) {
    auto r = get("/projects/cellcount/suggestions?sentence=rev1:v1:n9");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200);
    const auto j = body(r);
    EXPECT_EQ(j.at("review_sentence"), "rev1:v1:n9");
    EXPECT_EQ(j.at("candidates").size(), 5u);
    EXPECT_EQ(get("/projects/cellcount/suggestions?sentence=rev1:v1:n9")->body, r->body);
    EXPECT_EQ(get("/projects/cellcount/suggestions")->status, 400);
    EXPECT_EQ(get("/projects/cellcount/suggestions?sentence=paper:v1:n20")->status, 400);
}

TEST_F(ServiceTest, PostRequiresToken) {
    EXPECT_EQ(post("/projects/cellcount/labels", pragmatic("rev1:v1:n3", "Strength", "ann1"), "")->status, 401);
    EXPECT_EQ(post("/projects/cellcount/labels", pragmatic("rev1:v1:n3", "Strength", "ann1"), "wrong")->status, 401);
}

TEST_F(ServiceTest, PostValidation) {
    auto bad = [&](const nlohmann::json& b) { return post("/projects/cellcount/labels", b)->status; };
    EXPECT_EQ(bad(pragmatic("paper:v1:n20", "Recap", "ann1")), 400);  // paper sentence
    EXPECT_EQ(bad(pragmatic("rev1:v1:n4", "Recap", "ann1")), 400);    // paragraph
    EXPECT_EQ(bad(pragmatic("rev1:v1:n3", "Nonsense", "ann1")), 400);
    EXPECT_EQ(bad(pragmatic("rev1:v1:n3", "Recap", "intruder")), 400);
    EXPECT_EQ(bad({{"kind", "other"}}), 400);
    auto r = client->Post("/projects/cellcount/labels", {{"Authorization", std::string("Bearer ") + kToken}}, "{not json",
                          "application/json");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(post("/projects/missing/labels", pragmatic("rev1:v1:n3", "Recap", "ann1"))->status, 404);
    // Nothing was written.
    EXPECT_EQ(io::read_file(data / "cellcount/pragmatics.jsonl"), io::read_file(testing_support::fixture("pragmatics.jsonl")));
}

TEST_F(ServiceTest, SupersessionAndReadBack) {
    auto labels = [&] { return body(get("/projects/cellcount/labels?annotator=ann1")).at("records"); };
    std::optional<std::uint64_t> rev;
    for (const auto& r : labels())
        if (r.at("record").at("node") == "rev1:v1:n3") rev = r.at("rev").get<std::uint64_t>();
    ASSERT_TRUE(rev);

    auto b = pragmatic("rev1:v1:n3", "Strength", "ann1");
    b["supersedes"] = *rev + 100;
    auto stale = post("/projects/cellcount/labels", b);
    EXPECT_EQ(stale->status, 409);
    EXPECT_EQ(body(stale).at("current"), *rev);
    b["supersedes"] = nullptr;  // claims there is no earlier label
    EXPECT_EQ(post("/projects/cellcount/labels", b)->status, 409);

    b["supersedes"] = *rev;
    auto ok = post("/projects/cellcount/labels", b);
    ASSERT_EQ(ok->status, 201);
    const auto new_rev = body(ok).at("rev").get<std::uint64_t>();
    EXPECT_EQ(new_rev, 33u);  // 32 fixture lines + 1

    std::string label;
    for (const auto& r : labels())
        if (r.at("record").at("node") == "rev1:v1:n3") {
            label = r.at("record").at("label");
            EXPECT_EQ(r.at("rev"), new_rev);
        }
    EXPECT_EQ(label, "Strength");
    EXPECT_EQ(labels().size(), 16u);  // still one current label per sentence

    // A fresh label with an explicit null token; gold is always allowed.
    auto f = pragmatic("rev2:v1:n2", "Recap", "gold");
    f["supersedes"] = nullptr;
    EXPECT_EQ(post("/projects/cellcount/labels", f)->status, 201);
}

TEST_F(ServiceTest, LinkLabels) {
    nlohmann::json b = {{"kind", "link"},       {"review", "rev1:v1:n11"}, {"paper", "paper:v1:n5"},
                        {"verdict", "linked"},  {"annotator", "ann2"},     {"source", "manual"}};
    auto r = post("/projects/cellcount/labels", b);
    ASSERT_EQ(r->status, 201);
    EXPECT_TRUE(body(r).at("record").contains("ts"));  // server fills the timestamp
    const auto list = body(get("/projects/cellcount/labels?kind=link&annotator=ann2")).at("records");
    EXPECT_TRUE(std::any_of(list.begin(), list.end(), [](const nlohmann::json& x) {
        return x.at("record").at("review") == "rev1:v1:n11";
    }));
    b["paper"] = "rev1:v1:n3";  // review to review
    EXPECT_EQ(post("/projects/cellcount/labels", b)->status, 400);
    EXPECT_EQ(get("/projects/cellcount/labels?kind=bogus")->status, 400);
}

TEST_F(ServiceTest, TruncatedTailIsDroppedBeforeAppend) {
    {
        std::ofstream out(data / "cellcount/pragmatics.jsonl", std::ios::app | std::ios::binary);
        out << R"({"node":"rev1:v1:n5","label":"Re)";
    }
    EXPECT_EQ(body(get("/projects/cellcount/labels")).at("records").size(), 32u);
    ASSERT_EQ(post("/projects/cellcount/labels", pragmatic("rev1:v1:n5", "Todo", "ann1"))->status, 201);
    const auto lines = io::read_jsonl(data / "cellcount/pragmatics.jsonl");
    EXPECT_EQ(lines.records.size(), 33u);
    EXPECT_FALSE(lines.truncated_tail);
    EXPECT_EQ(lines.records.back().at("label"), "Todo");
}

TEST_F(ServiceTest, StatsMatchCliByteForByte) {
    auto r = get("/projects/cellcount/stats");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200);
    TempDir out;
    const auto cli = testing_support::run_cli("stats --project " + testing_support::quote((data / "cellcount").string()) +
                                              " --out " + testing_support::quote(out.path.string()));
    ASSERT_EQ(cli.code, 0) << cli.output;
    EXPECT_EQ(r->body, io::read_file(out / "stats.json"));
}

TEST_F(ServiceTest, AlignmentMatchesCliByteForByte) {
    auto r = get("/projects/cellcount/alignment?from=1&to=2");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200);
    TempDir out;
    const auto cli = testing_support::run_cli(
        "align " + testing_support::quote((data / "cellcount/article_v1.graph.json").string()) + " " +
        testing_support::quote((data / "cellcount/article_v2.graph.json").string()) + " --out " +
        testing_support::quote(out.path.string()));
    ASSERT_EQ(cli.code, 0) << cli.output;
    EXPECT_EQ(r->body, io::read_file(out / "alignment.json"));
    EXPECT_EQ(get("/projects/cellcount/alignment")->body, r->body);  // defaults to 1 -> 2
    EXPECT_EQ(get("/projects/cellcount/alignment?from=1&to=3")->status, 404);
}

TEST_F(ServiceTest, StatsWithoutRevisionIs409) {
    TearDown();
    testing_support::make_project(data / "single", true, false);
    nlohmann::json pj = nlohmann::json::parse(io::read_file(data / "single/project.json"));
    pj["id"] = "single";
    io::write_file_atomic(data / "single/project.json", pj.dump());
    start();
    auto r = get("/projects/single/stats");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 409);
    EXPECT_EQ(body(r).at("missing_layer"), "revision");
}

TEST_F(ServiceTest, ConcurrentWritesAllLand) {
    std::vector<std::thread> ts;
    std::atomic<int> created{0};
    const std::vector<std::string> nodes{"rev2:v1:n2", "rev2:v1:n3", "rev2:v1:n5", "rev2:v1:n6",
                                         "rev2:v1:n7", "rev2:v1:n9", "rev2:v1:n10", "rev2:v1:n11"};
    for (const auto& n : nodes)
        ts.emplace_back([&, n] {
            httplib::Client c("127.0.0.1", port);
            auto r = c.Post("/projects/cellcount/labels", {{"Authorization", std::string("Bearer ") + kToken}},
                            pragmatic(n.c_str(), "Other", "ann2").dump(), "application/json");
            if (r && r->status == 201) ++created;
        });
    for (auto& t : ts) t.join();
    EXPECT_EQ(created.load(), 8);
    const auto lines = io::read_jsonl(data / "cellcount/pragmatics.jsonl");
    EXPECT_EQ(lines.records.size(), 40u);
    EXPECT_FALSE(lines.truncated_tail);
}

TEST(ServiceOptions, Validation) {
    EXPECT_THROW(AnnotationService(ServiceOptions{"/nonexistent/dir", kToken, "*"}), UsageError);
    TempDir d;
    EXPECT_THROW(AnnotationService(ServiceOptions{d.path, "", "*"}), UsageError);
}
