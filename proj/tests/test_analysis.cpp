#include <gtest/gtest.h>

#include "itgkit/analysis.hpp"
#include "itgkit/commands.hpp"
#include "support.hpp"

using namespace itgkit;
using testing_support::fixture;

namespace {

// Paper: title, abstract, Introduction{p1}, Methods{p2{s2a}}, Results{p3}.
// Review r: sentences r1 (weakness), r2 (todo), r3 (unlabeled).
// Links: r1->p1 explicit, r1->p2 implicit, r2->s2a implicit (lifted to p2).
// Alignment: p2 deleted, p3 modified.
JointBundle hand_bundle() {
    JointBundle b;
    auto& g = b.graph;
    const DocumentId pd("p"), rd("r");
    auto node = [&](const char* id, const DocumentId& d, NodeKind k, const char* text, bool root = false) {
        return g.add_node({NodeId(id), d, k, text, {}, {}, root, 1});
    };
    auto root = node("p:v1:n0", pd, NodeKind::document, "", true);
    auto title = node("p:v1:n1", pd, NodeKind::article_title, "A tool");
    auto abs = node("p:v1:n2", pd, NodeKind::abstract, "We made a tool.");
    auto intro = node("p:v1:n3", pd, NodeKind::section_title, "Introduction");
    auto p1 = node("p:v1:n4", pd, NodeKind::paragraph, "Why.");
    auto meth = node("p:v1:n5", pd, NodeKind::section_title, "Materials and methods");
    auto p2 = node("p:v1:n6", pd, NodeKind::paragraph, "How.");
    auto s2a = node("p:v1:n7", pd, NodeKind::sentence, "How.");
    auto res = node("p:v1:n8", pd, NodeKind::section_title, "Results");
    auto p3 = node("p:v1:n9", pd, NodeKind::paragraph, "What.");
    for (auto c : {title, abs, intro, meth, res}) g.add_edge(c, root, EdgeKind::parent);
    g.add_edge(p1, intro, EdgeKind::parent);
    g.add_edge(p2, meth, EdgeKind::parent);
    g.add_edge(s2a, p2, EdgeKind::parent);
    g.add_edge(p3, res, EdgeKind::parent);
    NodeId prev = title;
    for (auto n : {abs, p1, s2a, p3}) {
        g.add_edge(prev, n, EdgeKind::next);
        prev = n;
    }

    auto rroot = node("r:v1:n0", rd, NodeKind::review_report, "", true);
    auto rp = node("r:v1:n1", rd, NodeKind::paragraph, "");
    g.add_edge(rp, rroot, EdgeKind::parent);
    std::optional<NodeId> rprev;
    for (const char* id : {"r:v1:n2", "r:v1:n3", "r:v1:n4"}) {
        auto s = node(id, rd, NodeKind::sentence, "x");
        g.add_edge(s, rp, EdgeKind::parent);
        if (rprev) g.add_edge(*rprev, s, EdgeKind::next);
        rprev = s;
    }
    g.add_edge(NodeId("r:v1:n2"), p1, EdgeKind::link, LinkSubtype::explicit_link, "test");
    g.add_edge(NodeId("r:v1:n2"), p2, EdgeKind::link, LinkSubtype::implicit_link, "test");
    g.add_edge(NodeId("r:v1:n3"), s2a, EdgeKind::link, LinkSubtype::implicit_link, "test");
    g.validate();

    b.id = "hand";
    b.paper = pd;
    b.reviews = {rd};
    b.pragmatics = {{NodeId("r:v1:n2"), PragmaticLabel::weakness}, {NodeId("r:v1:n3"), PragmaticLabel::todo}};
    AlignmentResult a;
    a.doc = pd;
    a.deleted = {p2};
    a.modified = {{NodeId("p:v2:n9"), p3, 0.7}};
    b.alignment = a;
    b.links = effective_links(g);
    return b;
}

std::vector<cmd::LoadedBundle> fixture_bundles() { return cmd::load_manifest(fixture("manifest.json")); }

}  // namespace

TEST(SectionGroups, Normalization) {
    EXPECT_EQ(normalize_section_title("Materials and Methods"), SectionGroup::methods);
    EXPECT_EQ(normalize_section_title("2. Results and discussion"), SectionGroup::results);  // first group wins
    EXPECT_EQ(normalize_section_title("Concluding remarks"), SectionGroup::conclusions);
    EXPECT_EQ(normalize_section_title("Limitations"), SectionGroup::discussion);
    EXPECT_EQ(normalize_section_title("Acknowledgements"), SectionGroup::other);
    EXPECT_EQ(normalize_section_title("Methodical"), SectionGroup::other);  // whole tokens only
    EXPECT_EQ(parse_section_group("methods"), SectionGroup::methods);
    EXPECT_THROW(parse_section_group("nope"), ParseError);
}

TEST(SectionGroups, NodeLookupUsesTopLevelSection) {
    const auto g = testing_support::load("generated/article_v1.graph.json");
    EXPECT_EQ(section_group_of(g, NodeId("paper:v1:n18")), SectionGroup::methods);  // "Image analysis" subsection
    EXPECT_EQ(section_group_of(g, NodeId("paper:v1:n40")), SectionGroup::discussion);
}

TEST(EffectiveLinks, SentenceTargetsAreLiftedToParagraphs) {
    const auto b = hand_bundle();
    ASSERT_EQ(b.links.size(), 3u);
    std::set<std::tuple<std::string, std::string, Channel>> got;
    for (const auto& l : b.links) got.emplace(l.source.value, l.target.value, l.channel);
    const std::set<std::tuple<std::string, std::string, Channel>> want{
        {"r:v1:n2", "p:v1:n4", Channel::explicit_link},
        {"r:v1:n2", "p:v1:n6", Channel::implicit_link},
        {"r:v1:n3", "p:v1:n6", Channel::implicit_link}};
    EXPECT_EQ(got, want);
}

TEST(LinkingRates, HandBundle) {
    const auto b = hand_bundle();
    const auto r = linking_rate_by_pragmatics(b);
    EXPECT_EQ(r.sentences, 2u);  // the unlabeled sentence is not counted
    const auto& w = r.classes[index_of(PragmaticLabel::weakness)];
    EXPECT_EQ(w.sentences, 1u);
    EXPECT_DOUBLE_EQ(w.explicit_rate, 1.0);
    EXPECT_DOUBLE_EQ(w.implicit_rate, 1.0);
    EXPECT_DOUBLE_EQ(w.unlinked_rate, 0.0);
    const auto& t = r.classes[index_of(PragmaticLabel::todo)];
    EXPECT_DOUBLE_EQ(t.explicit_rate, 0.0);
    EXPECT_DOUBLE_EQ(t.implicit_rate, 1.0);
    EXPECT_EQ(r.classes[index_of(PragmaticLabel::recap)].sentences, 0u);
    EXPECT_DOUBLE_EQ(r.classes[index_of(PragmaticLabel::recap)].unlinked_rate, 0.0);
}

TEST(LinksPerSection, HandBundle) {
    const auto b = hand_bundle();
    const auto s = links_per_section({&b});
    EXPECT_EQ(s.at(SectionGroup::title).occurrences, 1u);
    EXPECT_EQ(s.at(SectionGroup::abstract).occurrences, 1u);
    EXPECT_EQ(s.at(SectionGroup::discussion).occurrences, 0u);
    const auto& intro = s.at(SectionGroup::introduction);
    EXPECT_EQ(intro.raw_links, 1u);
    EXPECT_DOUBLE_EQ(intro.by_channel[0], 1.0);
    EXPECT_DOUBLE_EQ(intro.by_class[index_of(PragmaticLabel::weakness)][0], 1.0);
    const auto& m = s.at(SectionGroup::methods);
    EXPECT_EQ(m.raw_links, 2u);
    EXPECT_DOUBLE_EQ(m.total, 2.0);
    EXPECT_DOUBLE_EQ(m.by_channel[1], 2.0);
    EXPECT_DOUBLE_EQ(m.by_class[index_of(PragmaticLabel::todo)][1], 1.0);
    EXPECT_EQ(s.at(SectionGroup::results).raw_links, 0u);

    // Two copies of the bundle: counts double, per-occurrence values stay.
    const auto two = links_per_section({&b, &b});
    EXPECT_EQ(two.at(SectionGroup::methods).occurrences, 2u);
    EXPECT_DOUBLE_EQ(two.at(SectionGroup::methods).total, 2.0);
}

TEST(ChangeGivenLinks, HandBundle) {
    const auto b = hand_bundle();
    const auto c = change_given_links({&b});
    EXPECT_EQ(c.linked, 2u);  // p1, p2
    EXPECT_EQ(c.linked_changed, 1u);
    EXPECT_EQ(c.unlinked, 1u);  // p3
    EXPECT_EQ(c.unlinked_changed, 1u);
    EXPECT_DOUBLE_EQ(c.p_change_linked, 0.5);
    EXPECT_DOUBLE_EQ(c.p_change_unlinked, 1.0);
    EXPECT_EQ(c.trigger_sentences, 2u);
    EXPECT_DOUBLE_EQ(c.trigger_classes[index_of(PragmaticLabel::weakness)], 0.5);
    EXPECT_DOUBLE_EQ(c.trigger_classes[index_of(PragmaticLabel::todo)], 0.5);
}

TEST(ChangeGivenLinks, MissingAlignmentIsALayerError) {
    auto b = hand_bundle();
    b.alignment.reset();
    EXPECT_THROW(change_given_links({&b}), MissingLayerError);
    EXPECT_THROW(change_given_links({}), MissingLayerError);
    b.pragmatics.clear();
    EXPECT_THROW(linking_rate_by_pragmatics(b), MissingLayerError);
}

TEST(FixtureBundle, LayersJoin) {
    const auto loaded = fixture_bundles();
    ASSERT_EQ(loaded.size(), 1u);
    const auto b = cmd::make_bundle(loaded[0], default_anchor_patterns());
    EXPECT_EQ(b.reviews.size(), 2u);
    EXPECT_EQ(b.pragmatics.size(), 16u);
    std::size_t ex = 0, im = 0;
    for (const auto& l : b.links) (l.channel == Channel::explicit_link ? ex : im)++;
    EXPECT_EQ(im, 4u);  // the four pairs both annotators marked linked
    EXPECT_GE(ex, 8u);
    for (const auto& l : b.links) {
        EXPECT_NE(b.graph.node(l.target).kind, NodeKind::sentence);
        EXPECT_EQ(b.graph.node(l.target).doc, b.paper);
    }
}

// Linking rates recomputed from the raw label store and graph edges, without the bundle's
// lifted link list.
TEST(FixtureBundle, LinkingRatesMatchDirectCount) {
    const auto loaded = fixture_bundles();
    const auto b = cmd::make_bundle(loaded[0], default_anchor_patterns());
    const auto r = linking_rate_by_pragmatics(b);
    std::map<std::string, std::array<int, 4>> by_class;  // n, explicit, implicit, none
    const auto labels = resolved_pragmatics(loaded[0].pragmatics);
    for (const auto& [node, label] : labels) {
        bool e = false, i = false;
        for (const auto& edge : b.graph.edges()) {
            if (edge.kind != EdgeKind::link || edge.src != node) continue;
            e |= edge.subtype == LinkSubtype::explicit_link;
            i |= edge.subtype == LinkSubtype::implicit_link;
        }
        auto& c = by_class[std::string(to_string(label))];
        ++c[0];
        c[1] += e;
        c[2] += i;
        c[3] += !e && !i;
    }
    for (auto l : kPragmaticLabels) {
        const auto& got = r.classes[index_of(l)];
        const auto it = by_class.find(std::string(to_string(l)));
        if (it == by_class.end()) {
            EXPECT_EQ(got.sentences, 0u);
            continue;
        }
        const double n = it->second[0];
        EXPECT_EQ(got.sentences, static_cast<std::size_t>(n));
        EXPECT_NEAR(got.explicit_rate, it->second[1] / n, 1e-12);
        EXPECT_NEAR(got.implicit_rate, it->second[2] / n, 1e-12);
        EXPECT_NEAR(got.unlinked_rate, it->second[3] / n, 1e-12);
    }
}

TEST(FixtureBundle, StatsOutputs) {
    const auto o = cmd::stats_outputs(fixture_bundles(), cmd::default_settings());
    const auto j = nlohmann::json::parse(o.json);
    EXPECT_EQ(j.at("bundles"), 1);
    EXPECT_EQ(j.at("linking_by_pragmatics").at("sentences"), 16);
    const auto& c = j.at("change_given_links");
    EXPECT_EQ(c.at("linked").get<int>() + c.at("unlinked").get<int>(), 13);  // paragraphs of v1
    for (const auto& [name, cls] : j.at("linking_by_pragmatics").at("classes").items()) {
        EXPECT_GE(cls.at("unlinked").get<double>(), 0.0) << name;
        EXPECT_LE(cls.at("unlinked").get<double>(), 1.0) << name;
    }
    // header + 18 linking rows + 8 groups x 6 classes x 2 channels + 2 change rows + 6 trigger rows
    EXPECT_EQ(std::count(o.csv.begin(), o.csv.end(), '\n'), 1 + 18 + 96 + 2 + 6);
    EXPECT_TRUE(o.csv.starts_with("table,group,class,channel,value\n"));
    EXPECT_NE(o.csv.find("change_given_links,,,unlinked,0.375\n"), std::string::npos);
}

TEST(FixtureBundle, MissingAlignmentLayer) {
    EXPECT_THROW(cmd::load_manifest(fixture("manifest_no_alignment.json")), MissingLayerError);
    EXPECT_THROW(joint_stats({}), UsageError);
}
