#include <gtest/gtest.h>

#include <random>

#include "itgkit/align.hpp"
#include "itgkit/assignment.hpp"
#include "itgkit/graph_json.hpp"
#include "itgkit/jats.hpp"
#include "itgkit/similarity.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace itgkit;
using testing_support::fixture;
using testing_support::load;

namespace {

AlignNode para(const std::string& id, const std::string& text) { return {NodeId(id), NodeKind::paragraph, text}; }

// A paper version: each section title followed by its paragraphs.
IntertextualGraph paper(int version, const std::vector<std::pair<std::string, std::vector<std::string>>>& secs) {
    IntertextualGraph g;
    const DocumentId d("doc");
    const std::string pre = "doc:v" + std::to_string(version) + ":";
    int k = 0;
    auto root = g.add_node({NodeId(pre + "n" + std::to_string(k++)), d, NodeKind::document, "", {}, {}, true, version});
    std::optional<NodeId> prev;
    for (const auto& [title, ps] : secs) {
        auto s = g.add_node({NodeId(pre + "n" + std::to_string(k++)), d, NodeKind::section_title, title, {}, {}, false, version});
        g.add_edge(s, root, EdgeKind::parent);
        if (ps.empty()) {
            if (prev) g.add_edge(*prev, s, EdgeKind::next);
            prev = s;
        }
        for (const auto& p : ps) {
            auto n = g.add_node({NodeId(pre + "n" + std::to_string(k++)), d, NodeKind::paragraph, p, {}, {}, false, version});
            g.add_edge(n, s, EdgeKind::parent);
            if (prev) g.add_edge(*prev, n, EdgeKind::next);
            prev = n;
        }
    }
    g.validate();
    return g;
}

std::u32string random_text(std::mt19937& rng, std::size_t len, int alphabet) {
    std::u32string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(static_cast<char32_t>('a' + rng() % alphabet));
    return s;
}

std::string to_utf8(const std::u32string& s) {
    std::string out;
    for (char32_t c : s) {
        if (c < 0x80) {
            out += static_cast<char>(c);
        } else {
            out += static_cast<char>(0xC0 | (c >> 6));
            out += static_cast<char>(0x80 | (c & 0x3F));
        }
    }
    return out;
}

}  // namespace

TEST(Similarity, Examples) {
    EXPECT_NEAR(levenshtein_ratio("abc", "abd"), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(word_overlap("a b c", "b c d"), 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(levenshtein_ratio("same", "same"), 1.0);
    EXPECT_DOUBLE_EQ(levenshtein_ratio("", ""), 1.0);
    EXPECT_DOUBLE_EQ(word_overlap("", ""), 1.0);
    EXPECT_DOUBLE_EQ(word_overlap("A b", "a B"), 1.0);
    EXPECT_DOUBLE_EQ(levenshtein_ratio("", "abc"), 0.0);
    EXPECT_NEAR(levenshtein_ratio("größe", "grösse"), 1.0 - 2.0 / 6.0, 1e-12);  // code points, not bytes
    EXPECT_NEAR(similarity("a b c", "b c d", SimilarityMetric::combined),
                (levenshtein_ratio("a b c", "b c d") + 0.5) / 2.0, 1e-12);
}

TEST(Similarity, MetricNames) {
    EXPECT_EQ(parse_similarity_metric("levenshtein"), SimilarityMetric::levenshtein_ratio);
    EXPECT_EQ(parse_similarity_metric("levenshtein-ratio"), SimilarityMetric::levenshtein_ratio);
    EXPECT_EQ(parse_similarity_metric("word-overlap"), SimilarityMetric::word_overlap);
    EXPECT_EQ(parse_similarity_metric("overlap"), SimilarityMetric::word_overlap);
    EXPECT_THROW(parse_similarity_metric("cosine"), UsageError);
}

// Bit-parallel distance against the full DP table, including texts longer than one
// 64-bit block and non-ASCII code points.
TEST(SimilarityProperty, EditDistanceMatchesDynamicProgramming) {
    std::mt19937 rng(99);
    for (int i = 0; i < 600; ++i) {
        const std::size_t la = rng() % (i < 300 ? 20 : 200);
        const std::size_t lb = rng() % (i < 300 ? 20 : 200);
        const int alpha = 2 + static_cast<int>(rng() % 6);
        auto a = random_text(rng, la, alpha);
        auto b = random_text(rng, lb, alpha);
        if (i % 7 == 0 && !a.empty()) a[0] = U'é';
        const auto sa = to_utf8(a);
        const auto sb = to_utf8(b);
        ASSERT_EQ(edit_distance(sa, sb), oracle::levenshtein(sa, sb)) << sa << " / " << sb;
        ASSERT_NEAR(levenshtein_ratio(sa, sb), levenshtein_ratio(sb, sa), 1e-15);
        ASSERT_NEAR(levenshtein_ratio(sa, sb), oracle::levenshtein_ratio(sa, sb), 1e-12);
    }
}

TEST(SimilarityProperty, SubstringDistanceMatchesSellers) {
    std::mt19937 rng(3);
    for (int i = 0; i < 400; ++i) {
        const auto n = to_utf8(random_text(rng, 1 + rng() % 90, 4));
        const auto h = to_utf8(random_text(rng, rng() % 160, 4));
        const double want = 1.0 - static_cast<double>(oracle::substring_distance(n, h)) /
                                      static_cast<double>(oracle::decode(n).size());
        ASSERT_NEAR(substring_similarity(n, h), want, 1e-12) << n << " in " << h;
    }
    EXPECT_DOUBLE_EQ(substring_similarity("set once", "Thresholds were set once per plate."), 1.0);
}

TEST(SimilarityProperty, WordOverlapMatchesJaccard) {
    std::mt19937 rng(5);
    const std::vector<std::string> words{"The", "the", "cell", "cells", "a", "of", "Image", "image"};
    for (int i = 0; i < 300; ++i) {
        std::string a, b;
        for (std::size_t k = rng() % 8; k > 0; --k) a += words[rng() % words.size()] + " ";
        for (std::size_t k = rng() % 8; k > 0; --k) b += words[rng() % words.size()] + "  ";
        ASSERT_NEAR(word_overlap(a, b), oracle::jaccard(a, b), 1e-12);
        ASSERT_DOUBLE_EQ(word_overlap(a, b), word_overlap(b, a));
    }
}

TEST(Score, KindGateAndThreshold) {
    const AlignNode p{NodeId("a"), NodeKind::paragraph, "Methods"};
    const AlignNode t{NodeId("b"), NodeKind::section_title, "Methods"};
    EXPECT_DOUBLE_EQ(score(p, t, SimilarityMetric::levenshtein_ratio, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(score(p, p, SimilarityMetric::levenshtein_ratio, 1.0), 1.0);
    // word overlap 1/5 = 0.2 is gated at 0.3
    const AlignNode x = para("x", "one two three");
    const AlignNode y = para("y", "three four five");
    EXPECT_NEAR(similarity(x.content, y.content, SimilarityMetric::word_overlap), 0.2, 1e-12);
    EXPECT_DOUBLE_EQ(score(x, y, SimilarityMetric::word_overlap, 0.3), 0.0);
    EXPECT_NEAR(score(x, y, SimilarityMetric::word_overlap, 0.2), 0.2, 1e-12);
}

TEST(Matching, SmallCasesByHand) {
    WeightMatrix w(2, 2);
    w(0, 0) = 0.9;
    w(0, 1) = 0.8;
    w(1, 0) = 0.8;
    w(1, 1) = 0.0;
    const auto m = max_weight_matching(w);
    EXPECT_NEAR(m.objective, 1.6, 1e-12);  // the anti-diagonal beats 0.9 alone
    EXPECT_EQ(m.row_to_col[0], std::optional<std::size_t>(1));
    EXPECT_EQ(m.row_to_col[1], std::optional<std::size_t>(0));

    WeightMatrix z(2, 3);  // all zero: nothing emitted
    const auto mz = max_weight_matching(z);
    EXPECT_FALSE(mz.row_to_col[0]);
    EXPECT_FALSE(mz.row_to_col[1]);
    EXPECT_DOUBLE_EQ(mz.objective, 0.0);

    EXPECT_TRUE(max_weight_matching(WeightMatrix(0, 4)).row_to_col.empty());
}

TEST(Matching, TieBreakPrefersDiagonal) {
    WeightMatrix w(3, 3, 0.5);
    const auto m = max_weight_matching(w, [](std::optional<std::size_t> r, std::optional<std::size_t> c) {
        if (!r || !c) return 3.0;
        return static_cast<double>(*r > *c ? *r - *c : *c - *r);
    });
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(m.row_to_col[i], std::optional<std::size_t>(i));
}

// Objective and tie-break cost against exhaustive enumeration.
TEST(MatchingProperty, AgreesWithBruteForce) {
    std::mt19937 rng(1234);
    for (int round = 0; round < 300; ++round) {
        const std::size_t rows = rng() % 7;
        const std::size_t cols = rng() % 7;
        WeightMatrix w(rows, cols);
        std::vector<std::vector<double>> dense(rows, std::vector<double>(cols));
        const bool coarse = round % 2 == 0;  // coarse weights produce many ties
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                double x = coarse ? static_cast<double>(rng() % 5) / 4.0 : std::uniform_real_distribution<>(0, 1)(rng);
                if (rng() % 3 == 0) x = 0.0;
                w(i, j) = dense[i][j] = x;
            }
        const double unmatched = static_cast<double>(std::max(rows, cols));
        const auto m = max_weight_matching(w, [&](std::optional<std::size_t> r, std::optional<std::size_t> c) {
            if (!r || !c) return unmatched;
            return static_cast<double>(*r > *c ? *r - *c : *c - *r);
        });
        const auto brute = oracle::brute_force_matching(dense, unmatched);
        ASSERT_NEAR(m.objective, std::max(brute.objective, 0.0), 1e-9) << "round " << round;
        double tie = 0;
        std::size_t matched = 0;
        std::set<std::size_t> used;
        for (std::size_t i = 0; i < rows; ++i)
            if (m.row_to_col[i]) {
                ASSERT_GT(w(i, *m.row_to_col[i]), 0.0);
                ASSERT_TRUE(used.insert(*m.row_to_col[i]).second);
                tie += static_cast<double>(i > *m.row_to_col[i] ? i - *m.row_to_col[i] : *m.row_to_col[i] - i);
                ++matched;
            }
        tie += unmatched * static_cast<double>(std::max(rows, cols) - matched);
        if (rows && cols) {
            ASSERT_NEAR(tie, brute.tie, 1e-9) << "round " << round;
        }
    }
}

TEST(Align, ThreeVersusTwoExample) {
    AlignmentProblem p;
    p.doc = DocumentId("d");
    p.old_nodes = {para("o1", "The cells were imaged every hour."), para("o2", "We counted nuclei with a fixed threshold.")};
    p.new_nodes = {para("n1", "The cells were imaged every hour."), para("n2", "We counted nuclei with an adaptive threshold."),
                   para("n3", "Statistical tests used a two-sided Wilcoxon procedure.")};
    const auto r = align_versions(p);
    ASSERT_EQ(r.edges.size(), 2u);
    EXPECT_EQ(r.edges[0].new_node.value, "n1");
    EXPECT_EQ(r.edges[0].old_node.value, "o1");
    EXPECT_EQ(r.edges[1].new_node.value, "n2");
    EXPECT_EQ(r.edges[1].old_node.value, "o2");
    EXPECT_EQ(r.unchanged.size(), 1u);
    EXPECT_EQ(r.modified.size(), 1u);
    EXPECT_EQ(r.added, std::vector<NodeId>{NodeId("n3")});
    EXPECT_TRUE(r.deleted.empty());

    // Brute force over the 3x2 score matrix agrees on the objective.
    const auto w = score_matrix(p);
    std::vector<std::vector<double>> dense(w.rows, std::vector<double>(w.cols));
    for (std::size_t i = 0; i < w.rows; ++i)
        for (std::size_t j = 0; j < w.cols; ++j) dense[i][j] = w(i, j);
    EXPECT_NEAR(r.objective, oracle::brute_force_matching(dense, 3).objective, 1e-12);
}

TEST(Align, ThreeVersusTwoDiffReport) {
    const auto old_g = paper(1, {{"Methods", {"The cells were imaged every hour.", "We counted nuclei with a fixed threshold."}}});
    const auto new_g = paper(2, {{"Methods",
                                  {"The cells were imaged every hour.", "We counted nuclei with an adaptive threshold.",
                                   "Statistical tests used a two-sided Wilcoxon procedure."}}});
    const auto p = make_alignment_problem(old_g, new_g);
    const auto r = align_versions(p);
    const auto d = diff_report(r, old_g, new_g);
    EXPECT_EQ(d.node_delta, 1);
    EXPECT_EQ(d.added, 1u);
    EXPECT_EQ(d.modified, 1u);
    EXPECT_EQ(d.unchanged, 2u);  // the section title is unchanged as well
}

TEST(Align, OneNewTwoSimilarOld) {
    AlignmentProblem p;
    p.doc = DocumentId("d");
    p.old_nodes = {para("o1", "Samples were frozen at minus eighty degrees."),
                   para("o2", "Samples were frozen at minus twenty degrees.")};
    p.new_nodes = {para("n1", "Samples were frozen at minus eighty degrees Celsius.")};
    const auto r = align_versions(p);
    ASSERT_EQ(r.edges.size(), 1u);
    EXPECT_EQ(r.edges[0].old_node.value, "o1");
    EXPECT_EQ(r.deleted, std::vector<NodeId>{NodeId("o2")});
}

TEST(Align, IdentityObjectiveIsNodeCount) {
    const auto g = load("generated/article_v1.graph.json");
    const auto r = align_versions(make_alignment_problem(g, g));
    const auto n = alignable_nodes(g, g.documents().front().id).size();
    EXPECT_EQ(r.edges.size(), n);
    EXPECT_DOUBLE_EQ(r.objective, static_cast<double>(n));
    EXPECT_TRUE(r.added.empty());
    EXPECT_TRUE(r.deleted.empty());
    for (const auto& e : r.edges) EXPECT_EQ(e.new_node, e.old_node);
    const auto d = diff_report(r, g, g);
    EXPECT_EQ(d.node_delta, 0);
    EXPECT_EQ(d.unchanged, n);
}

TEST(Align, EdgeInvariantsOnFixtureRevision) {
    const auto a = load("generated/article_v1.graph.json");
    const auto b = load("generated/article_v2.graph.json");
    for (auto metric : {SimilarityMetric::levenshtein_ratio, SimilarityMetric::word_overlap}) {
        const auto p = make_alignment_problem(a, b, metric, 0.3);
        const auto r = align_versions(p);
        std::set<NodeId> news, olds;
        for (const auto& e : r.edges) {
            EXPECT_TRUE(news.insert(e.new_node).second);
            EXPECT_TRUE(olds.insert(e.old_node).second);
            EXPECT_EQ(a.node(e.old_node).kind, b.node(e.new_node).kind);
            EXPECT_GE(e.score, 0.3);
            EXPECT_GT(e.score, 0.0);
        }
        EXPECT_EQ(r.edges.size() + r.added.size(), p.new_nodes.size());
        EXPECT_EQ(r.edges.size() + r.deleted.size(), p.old_nodes.size());
        EXPECT_EQ(r.modified.size() + r.unchanged.size(), r.edges.size());
    }
}

TEST(Align, SwappingVersionsTransposesEdges) {
    const auto a = load("generated/article_v1.graph.json");
    const auto b = load("generated/article_v2.graph.json");
    const auto fwd = align_versions(make_alignment_problem(a, b));
    const auto back = align_versions(make_alignment_problem(b, a));
    EXPECT_NEAR(fwd.objective, back.objective, 1e-9);
    std::set<std::pair<std::string, std::string>> f, t;
    for (const auto& e : fwd.edges) f.insert({e.new_node.value, e.old_node.value});
    for (const auto& e : back.edges) t.insert({e.old_node.value, e.new_node.value});
    EXPECT_EQ(f, t);
    EXPECT_EQ(fwd.added, back.deleted);
}

TEST(Align, DuplicateParagraphsStayInOrder) {
    AlignmentProblem p;
    p.doc = DocumentId("d");
    p.old_nodes = {para("o1", "Same text."), para("o2", "Same text."), para("o3", "Same text.")};
    p.new_nodes = {para("n1", "Same text."), para("n2", "Same text."), para("n3", "Same text.")};
    const auto r = align_versions(p);
    ASSERT_EQ(r.edges.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.edges[i].old_node.value, "o" + std::to_string(i + 1));
}

TEST(Align, EmptyVersions) {
    AlignmentProblem p;
    p.doc = DocumentId("d");
    p.old_nodes = {para("o1", "Gone.")};
    const auto r = align_versions(p);
    EXPECT_TRUE(r.edges.empty());
    EXPECT_EQ(r.deleted.size(), 1u);
}

TEST(Align, ProblemConstructionErrors) {
    const auto a = load("generated/article_v1.graph.json");
    const auto g1 = load("golden/../generated/rev1.graph.json");
    EXPECT_THROW(make_alignment_problem(a, g1), UsageError);
    EXPECT_THROW(make_alignment_problem(a, a, SimilarityMetric::levenshtein_ratio, 1.5), UsageError);
    EXPECT_THROW(make_alignment_problem(a, IntertextualGraph{}), UsageError);
}

TEST(DiffReport, DeletedSectionIsListed) {
    const auto old_g = paper(1, {{"Introduction", {"Why we did it."}}, {"Limitations", {"Small sample of ten plots only."}}});
    const auto new_g = paper(2, {{"Introduction", {"Why we did it."}}});
    const auto r = align_versions(make_alignment_problem(old_g, new_g));
    const auto d = diff_report(r, old_g, new_g);
    EXPECT_EQ(d.node_delta, -2);
    const auto it = std::find_if(d.sections.begin(), d.sections.end(),
                                 [](const SectionChange& s) { return s.title == "Limitations"; });
    ASSERT_NE(it, d.sections.end());
    EXPECT_EQ(it->status, "deleted");
    EXPECT_EQ(it->deleted, 2u);  // title and paragraph
    EXPECT_FALSE(it->new_section);
}

TEST(DiffReport, MismatchedGraphsAreRejected) {
    const auto a = load("generated/article_v1.graph.json");
    const auto b = load("generated/article_v2.graph.json");
    const auto r = align_versions(make_alignment_problem(a, b));
    EXPECT_THROW(diff_report(r, b, a), UsageError);
}

TEST(DiffReport, TextFormat) {
    const auto a = load("generated/article_v1.graph.json");
    const auto b = load("generated/article_v2.graph.json");
    const auto p = make_alignment_problem(a, b);
    const auto text = diff_text(align_versions(p), p);
    EXPECT_NE(text.find("+ [section-title] Limitations\n"), std::string::npos);
    EXPECT_NE(text.find("- [paragraph] Future versions will include a graphical front end."), std::string::npos);
    EXPECT_NE(text.find("~ [paragraph] (0.937)\n"), std::string::npos);
}

TEST(AlignmentJson, RoundTrip) {
    const auto a = load("generated/article_v1.graph.json");
    const auto b = load("generated/article_v2.graph.json");
    const auto r = align_versions(make_alignment_problem(a, b, SimilarityMetric::word_overlap, 0.4));
    const auto j = to_json(r);
    EXPECT_EQ(j.at("meta").at("zero_score_edges"), "forbidden");
    const auto back = alignment_from_json(j);
    EXPECT_EQ(back.edges, r.edges);
    EXPECT_EQ(back.added, r.added);
    EXPECT_EQ(back.deleted, r.deleted);
    EXPECT_EQ(back.metric, r.metric);
    EXPECT_DOUBLE_EQ(back.threshold, 0.4);
    EXPECT_EQ(to_json(back), j);
}

TEST(Golden, SyntheticRevisionPairs) {
    for (int n = 1; n <= 5; ++n) {
        const std::string doc = "golden" + std::to_string(n);
        IngestOptions o1, o2;
        o1.doc_id = o2.doc_id = doc;
        o2.version = 2;
        const auto old_g = parse_jats(io::read_file(fixture("golden/pair" + std::to_string(n) + "_old.xml")), o1).graph;
        const auto new_g = parse_jats(io::read_file(fixture("golden/pair" + std::to_string(n) + "_new.xml")), o2).graph;
        const auto got = to_json(align_versions(make_alignment_problem(old_g, new_g)));
        const auto want =
            nlohmann::json::parse(io::read_file(fixture("golden/pair" + std::to_string(n) + ".expected.json")));
        EXPECT_EQ(got, want) << "pair " << n;
    }
}
