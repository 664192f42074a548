#include <gtest/gtest.h>

#include <cstdlib>

#include "support.hpp"

using testing_support::fixture;
using testing_support::quote;
using testing_support::run_cli;
using testing_support::TempDir;

namespace {

std::string q(const std::filesystem::path& p) { return quote(p.string()); }

std::string read(const std::filesystem::path& p) { return itgkit::io::read_file(p); }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run_cli("--help").code, 0);
    EXPECT_EQ(run_cli("align --help").code, 0);
    EXPECT_EQ(run_cli("").code, 2);  // no subcommand
    EXPECT_EQ(run_cli("frobnicate").code, 2);
    EXPECT_EQ(run_cli("align only-one-file --out x").code, 2);
    EXPECT_EQ(run_cli("stats --manifest a --project b --out x").code, 2);
}

TEST(Cli, IngestReproducesCommittedGraph) {
    TempDir out;
    const auto r = run_cli("ingest " + q(fixture("article_v1.xml")) + " --doc-id paper --version 1 --out " + q(out.path));
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(read(out / "article_v1.graph.json"), read(fixture("generated/article_v1.graph.json")));
    const auto report = nlohmann::json::parse(read(out / "article_v1.report.json"));
    EXPECT_EQ(report.at("input"), "article_v1.xml");
}

TEST(Cli, IngestFailureIsPerFileAndNonZero) {
    TempDir out;
    itgkit::io::write_file_atomic(out / "bad.xml", "<article><body><p>x</body>");
    const auto r = run_cli("ingest " + q(out / "bad.xml") + " " + q(fixture("article_v1.xml")) + " --out " + q(out / "g"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("bad.xml"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(out / "g/article_v1.graph.json"));  // the good file still went through
    EXPECT_EQ(run_cli("ingest " + q(out / "bad.xml") + " " + q(fixture("article_v1.xml")) + " --doc-id x --out " +
                      q(out / "g"))
                  .code,
              2);
}

TEST(Cli, IngestReview) {
    TempDir out;
    const auto r = run_cli("ingest-review " + q(fixture("review1.txt")) + " --doc rev1 --out " + q(out / "rev1.graph.json"));
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(read(out / "rev1.graph.json"), read(fixture("generated/rev1.graph.json")));
    EXPECT_TRUE(std::filesystem::exists(out / "rev1.graph.report.json"));
}

TEST(Cli, ExtractWritesThreeFiles) {
    TempDir out;
    const auto r = run_cli("extract --paper " + q(fixture("generated/article_v1.graph.json")) + " --review " +
                           q(fixture("generated/rev1.graph.json")) + " --out " + q(out.path));
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(r.output, "4 anchors, 4 resolved\n");
    const auto tsv = read(out / "explicit_links.tsv");
    EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 5);
    EXPECT_NO_THROW(itgkit::deserialize(read(out / "joint.graph.json")).validate());
}

TEST(Cli, AgreementLayers) {
    TempDir out;
    const auto p = run_cli("agreement --labels " + q(fixture("pragmatics.jsonl")) + " --out " + q(out / "a.json"));
    ASSERT_EQ(p.code, 0) << p.output;
    EXPECT_TRUE(p.output.starts_with("alpha="));
    const auto l = run_cli("agreement --layer links --labels " + q(fixture("links.jsonl")) + " --out " + q(out / "b.json"));
    ASSERT_EQ(l.code, 0) << l.output;
    EXPECT_EQ(l.output, "alpha=0.592593\n");
    EXPECT_EQ(run_cli("agreement --layer bogus --labels " + q(fixture("links.jsonl")) + " --out " + q(out / "c.json")).code,
              2);
}

TEST(Cli, StatsMissingLayerExitsThree) {
    TempDir out;
    const auto r = run_cli("stats --manifest " + q(fixture("manifest_no_alignment.json")) + " --out " + q(out.path));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.output.find("missing layer: alignment"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(out / "stats.json"));

    TempDir proj;
    testing_support::make_project(proj.path, false, true);  // no label files
    EXPECT_EQ(run_cli("stats --project " + q(proj.path) + " --out " + q(out.path)).code, 3);
}

TEST(Cli, StatsFromManifest) {
    TempDir out;
    const auto r = run_cli("stats --manifest " + q(fixture("manifest.json")) + " --out " + q(out.path));
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(read(out / "stats.csv").starts_with("table,group,class,channel,value\n"));
    EXPECT_EQ(nlohmann::json::parse(read(out / "stats.json")).at("bundles"), 1);
}

TEST(Cli, BadSettingsAreUsageErrors) {
    TempDir out;
    const auto a = q(fixture("generated/article_v1.graph.json"));
    const auto b = q(fixture("generated/article_v2.graph.json"));
    EXPECT_EQ(run_cli("align " + a + " " + b + " --threshold 1.5 --out " + q(out.path)).code, 2);
    EXPECT_EQ(run_cli("align " + a + " " + b + " --metric cosine --out " + q(out.path)).code, 2);
    EXPECT_EQ(run_cli("align " + a + " " + q(fixture("generated/rev1.graph.json")) + " --out " + q(out.path)).code, 2);
    EXPECT_EQ(run_cli("suggest --paper " + a + " --review " + q(fixture("generated/rev1.graph.json")) +
                      " --m 0 --out " + q(out / "s.json"))
                  .code,
              2);
    EXPECT_EQ(run_cli("align /nonexistent.json " + b + " --out " + q(out.path)).code, 1);
}

TEST(Cli, ConfigFileAndEnvironment) {
    TempDir out;
    itgkit::io::write_file_atomic(out / "cfg.json", R"({"metric": "overlap", "threshold": 0.5})");
    const auto a = q(fixture("generated/article_v1.graph.json"));
    const auto b = q(fixture("generated/article_v2.graph.json"));
    ASSERT_EQ(run_cli("align " + a + " " + b + " --config " + q(out / "cfg.json") + " --out " + q(out / "x")).code, 0);
    const auto j = nlohmann::json::parse(read(out / "x/alignment.json"));
    EXPECT_EQ(j.at("meta").at("metric"), "overlap");
    EXPECT_EQ(j.at("meta").at("threshold"), 0.5);
    // A flag wins over the config file.
    ASSERT_EQ(run_cli("align " + a + " " + b + " --config " + q(out / "cfg.json") + " --threshold 0.3 --out " +
                      q(out / "y"))
                  .code,
              0);
    EXPECT_EQ(nlohmann::json::parse(read(out / "y/alignment.json")).at("meta").at("threshold"), 0.3);

    // The environment file sits below --config.
    itgkit::io::write_file_atomic(out / "env.json", R"({"threshold": 0.6})");
    ::setenv("ITGKIT_CONFIG", (out / "env.json").c_str(), 1);
    const auto env = run_cli("align " + a + " " + b + " --out " + q(out / "z"));
    const auto both = run_cli("align " + a + " " + b + " --config " + q(out / "cfg.json") + " --out " + q(out / "w"));
    ::setenv("ITGKIT_CONFIG", (out / "missing.json").c_str(), 1);
    const auto missing = run_cli("align " + a + " " + b + " --out " + q(out / "v"));
    ::unsetenv("ITGKIT_CONFIG");
    ASSERT_EQ(env.code, 0) << env.output;
    EXPECT_EQ(nlohmann::json::parse(read(out / "z/alignment.json")).at("meta").at("threshold"), 0.6);
    ASSERT_EQ(both.code, 0) << both.output;
    EXPECT_EQ(nlohmann::json::parse(read(out / "w/alignment.json")).at("meta").at("threshold"), 0.5);
    EXPECT_EQ(missing.code, 2);
}

TEST(Cli, AlignMatchesCommittedOutputs) {
    TempDir out;
    const auto r = run_cli("align " + q(fixture("generated/article_v1.graph.json")) + " " +
                           q(fixture("generated/article_v2.graph.json")) + " --out " + q(out.path));
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(r.output, "aligned 23 (unchanged 21, modified 2), added 3, deleted 1\n");
    for (const char* f : {"alignment.json", "diff.txt", "diff_report.json"})
        EXPECT_EQ(read(out / f), read(fixture(std::string("generated/align/") + f))) << f;
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
    const auto paper = q(fixture("generated/article_v1.graph.json"));
    const auto reviews = " --review " + q(fixture("generated/rev1.graph.json")) + " --review " +
                         q(fixture("generated/rev2.graph.json"));
    std::vector<std::string> outs;
    for (int i = 0; i < 3; ++i) {
        TempDir out;
        ASSERT_EQ(run_cli("suggest --paper " + paper + reviews + " --jobs 4 --out " + q(out / "s.json")).code, 0);
        ASSERT_EQ(run_cli("extract --paper " + paper + reviews + " --out " + q(out / "e")).code, 0);
        outs.push_back(read(out / "s.json") + read(out / "e/explicit_links.json"));
    }
    EXPECT_EQ(outs[0], outs[1]);
    EXPECT_EQ(outs[1], outs[2]);
}
