#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "isoscape/detail/rng.hpp"
#include "isoscape/impact.hpp"
#include "support/oracles.hpp"

using namespace isoscape;

namespace {

CitationGraph graph_of(std::vector<std::pair<std::string, std::string>> edges) {
    CitationGraph g;
    g.edges = std::move(edges);
    return g;
}

// A citing corpus: F references R (both year 2000, focal from 2000 on).
Corpus focal_with_reference(std::optional<CitationGraph> graph) {
    return oracle::make_corpus({{"F", 2005, {0.0}, "sf", 10, std::vector<std::string>{"R"}},
                                {"R", 2000, {1.0}, "sf", 5, std::nullopt}},
                               DistanceMetric::euclidean, 1999, std::nullopt, std::move(graph));
}

}

TEST_CASE("disruption index from the citer split") {
    // Three citers reach F fresh, one also cites the reference.
    auto c = focal_with_reference(graph_of(
        {{"a", "F"}, {"b", "F"}, {"c", "F"}, {"d", "F"}, {"d", "R"}}));
    auto r = disruption_index(*c.graph, c, "F");
    CHECK(r.n_f == 3);
    CHECK(r.n_b == 1);
    CHECK(r.n_r == 0);
    CHECK(r.di.value() == 0.5);
}

TEST_CASE("consolidating citations drive the index to minus one") {
    auto c = focal_with_reference(graph_of(
        {{"a", "F"}, {"a", "R"}, {"b", "F"}, {"b", "R"}, {"c", "F"}, {"c", "R"}, {"d", "F"}, {"d", "R"}}));
    auto r = disruption_index(*c.graph, c, "F");
    CHECK(r.n_f == 0);
    CHECK(r.n_b == 4);
    CHECK(r.di.value() == -1.0);
}

TEST_CASE("a balanced seven-node graph nets to zero") {
    Corpus c = oracle::make_corpus(
        {{"F", 2005, {0.0}, "sf", std::nullopt, std::vector<std::string>{"A", "B"}},
         {"A", 2000, {1.0}}, {"B", 2000, {2.0}}},
        DistanceMetric::euclidean, 1999, std::nullopt,
        graph_of({{"X", "F"}, {"Y", "F"}, {"Y", "A"}, {"Z", "B"}}));
    auto r = disruption_index(*c.graph, c, "F");
    CHECK(r.n_f == 1);
    CHECK(r.n_b == 1);
    CHECK(r.n_r == 1);
    CHECK(r.di.value() == 0.0);
}

TEST_CASE("the extremes need an empty opposing camp") {
    auto top = focal_with_reference(graph_of({{"a", "F"}, {"b", "F"}}));
    CHECK(disruption_index(*top.graph, top, "F").di.value() == 1.0);

    auto bottom = focal_with_reference(graph_of({{"a", "F"}, {"a", "R"}}));
    CHECK(disruption_index(*bottom.graph, bottom, "F").di.value() == -1.0);
}

TEST_CASE("citers of unrelated work leave the index alone") {
    auto base = focal_with_reference(graph_of(
        {{"a", "F"}, {"b", "F"}, {"c", "F"}, {"d", "F"}, {"d", "R"}}));
    auto noisy = focal_with_reference(graph_of(
        {{"a", "F"}, {"b", "F"}, {"c", "F"}, {"d", "F"}, {"d", "R"}, {"q", "Z1"}, {"w", "Z2"}}));
    CHECK(disruption_index(*base.graph, base, "F").di.value() ==
          disruption_index(*noisy.graph, noisy, "F").di.value());
}

TEST_CASE("missing references and empty denominators are typed gaps") {
    Corpus no_refs = oracle::make_corpus({{"F", 2005, {0.0}}, {"R", 2000, {1.0}}},
                                         DistanceMetric::euclidean, 1999, std::nullopt,
                                         graph_of({{"a", "F"}}));
    auto r1 = disruption_index(*no_refs.graph, no_refs, "F");
    CHECK(r1.di.why() == Missing::no_references);
    CHECK_FALSE(r1.has_references);

    auto silent = focal_with_reference(graph_of({{"a", "Z"}}));
    auto r2 = disruption_index(*silent.graph, silent, "F");
    CHECK(r2.di.why() == Missing::zero_denominator);
    CHECK(r2.has_references);
}

TEST_CASE("a self-listing among the references is ignored") {
    Corpus c = oracle::make_corpus(
        {{"F", 2005, {0.0}, "sf", std::nullopt, std::vector<std::string>{"F", "R"}},
         {"R", 2000, {1.0}}},
        DistanceMetric::euclidean, 1999, std::nullopt,
        graph_of({{"a", "F"}, {"b", "F"}, {"b", "R"}}));
    auto r = disruption_index(*c.graph, c, "F");
    // Citing F must not double as citing a reference of F.
    CHECK(r.n_f == 1);
    CHECK(r.n_b == 1);
    CHECK(r.n_r == 0);
}

TEST_CASE("the focal paper is never its own citer") {
    // F cites its own reference; that edge must not add F to any camp.
    auto c = focal_with_reference(graph_of(
        {{"a", "F"}, {"b", "F"}, {"c", "F"}, {"d", "F"}, {"d", "R"}, {"F", "R"}}));
    auto r = disruption_index(*c.graph, c, "F");
    CHECK(r.n_f == 3);
    CHECK(r.n_b == 1);
    CHECK(r.n_r == 0);
    CHECK(r.di.value() == 0.5);
}

TEST_CASE("a citer window keeps only corpus papers published in time") {
    Corpus c = oracle::make_corpus(
        {{"F", 2005, {0.0}, "sf", std::nullopt, std::vector<std::string>{"R"}},
         {"R", 2000, {1.0}},
         {"early", 2006, {2.0}},
         {"late", 2015, {3.0}}},
        DistanceMetric::euclidean, 1999, std::nullopt,
        graph_of({{"early", "F"}, {"late", "F"}, {"x", "F"}}));

    auto open = disruption_index(*c.graph, c, "F");
    CHECK(open.n_f == 3); // everyone counts without a window

    DisruptionOptions opt;
    opt.citer_window_years = 3;
    auto windowed = disruption_index(*c.graph, c, "F", opt);
    // "late" published past 2008 and "x" has no known year; only "early" stays.
    CHECK(windowed.n_f == 1);
    CHECK(windowed.di.value() == 1.0);
}

TEST_CASE("random graphs agree with the exhaustive citer classification") {
    detail::SplitMix64 rng(31337u);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::string> refs;
        for (int r = 0; r < 3; ++r) {
            if (rng.bounded(2)) refs.push_back("ref" + std::to_string(r));
        }
        Corpus c = oracle::make_corpus(
            {{"F", 2005, {0.0}, "sf", std::nullopt,
              refs.empty() ? std::optional<std::vector<std::string>>{} : refs},
             {"ref0", 2000, {1.0}}, {"ref1", 2000, {2.0}}, {"ref2", 2000, {3.0}}},
            DistanceMetric::euclidean, 1999, std::nullopt, std::nullopt);

        std::set<std::pair<std::string, std::string>> edges;
        for (int e = 0; e < 12; ++e) {
            std::string citer = "citer" + std::to_string(rng.bounded(6));
            std::string cited;
            switch (rng.bounded(4)) {
                case 0: cited = "F"; break;
                case 1: cited = "ref0"; break;
                case 2: cited = "ref1"; break;
                default: cited = "other"; break;
            }
            edges.emplace(citer, cited);
        }
        CitationGraph g;
        g.edges.assign(edges.begin(), edges.end());

        auto got = disruption_index(g, c, "F");
        if (!refs.empty()) {
            auto want = oracle::classify_citers(g.edges, "F", refs);
            CHECK(got.n_f == want.n_f);
            CHECK(got.n_b == want.n_b);
            CHECK(got.n_r == want.n_r);
            if (got.di.present()) {
                CHECK(got.di.value() >= -1.0);
                CHECK(got.di.value() <= 1.0);
                CHECK(got.di.value() ==
                      (static_cast<double>(want.n_f) - static_cast<double>(want.n_b)) /
                          static_cast<double>(want.n_f + want.n_b + want.n_r));
            }
        } else {
            CHECK(got.di.why() == Missing::no_references);
        }
    }
}

TEST_CASE("high-cite labels split each cohort at its own quantile") {
    Corpus c = oracle::make_corpus({{"a", 2005, {0.0}, "sf", 10},
                                    {"b", 2005, {1.0}, "sf", 20},
                                    {"c", 2005, {2.0}, "sf", 30},
                                    {"d", 2005, {3.0}, "sf", 40}});
    auto labels = label_high_cite(c, 0.75);
    // Nearest-rank threshold is 30; only the 40 clears it strictly.
    CHECK(*labels.labels[0] == false);
    CHECK(*labels.labels[1] == false);
    CHECK(*labels.labels[2] == false);
    CHECK(*labels.labels[3] == true);
    CHECK(labels.excluded_missing_count == 0);
}

TEST_CASE("an all-tied cohort labels nobody high") {
    Corpus c = oracle::make_corpus({{"a", 2005, {0.0}, "sf", 7},
                                    {"b", 2005, {1.0}, "sf", 7},
                                    {"c", 2005, {2.0}, "sf", 7},
                                    {"d", 2005, {3.0}, "sf", 7}});
    auto labels = label_high_cite(c, 0.75);
    for (std::size_t i = 0; i < 4; ++i) {
        REQUIRE(labels.labels[i].has_value());
        CHECK(*labels.labels[i] == false);
    }
}

TEST_CASE("cohorts are keyed by year and subfield") {
    // Same counts, different cohorts: each pair is thresholded alone.
    Corpus c = oracle::make_corpus({{"a", 2005, {0.0}, "bio", 10},
                                    {"b", 2005, {1.0}, "bio", 40},
                                    {"c", 2005, {2.0}, "cs", 10},
                                    {"d", 2005, {3.0}, "cs", 40},
                                    {"e", 2006, {4.0}, "bio", 10},
                                    {"f", 2006, {5.0}, "bio", 40}});
    auto labels = label_high_cite(c, 0.5);
    CHECK(*labels.labels[0] == false);
    CHECK(*labels.labels[1] == true);
    CHECK(*labels.labels[2] == false);
    CHECK(*labels.labels[3] == true);
    CHECK(*labels.labels[4] == false);
    CHECK(*labels.labels[5] == true);
}

TEST_CASE("papers without counts are excluded and tallied") {
    Corpus c = oracle::make_corpus({{"a", 2005, {0.0}, "sf", 10},
                                    {"b", 2005, {1.0}, "sf", std::nullopt},
                                    {"c", 2005, {2.0}, "sf", 30}});
    auto labels = label_high_cite(c, 0.5);
    CHECK_FALSE(labels.labels[1].has_value());
    CHECK(labels.excluded_missing_count == 1);
    // The cohort that remains is {10, 30}: threshold 10, so c is high.
    CHECK(*labels.labels[0] == false);
    CHECK(*labels.labels[2] == true);
}

TEST_CASE("knowledge-base papers are not labeled") {
    Corpus c = oracle::make_corpus({{"old", 1995, {0.0}, "sf", 100},
                                    {"a", 2005, {1.0}, "sf", 10},
                                    {"b", 2005, {2.0}, "sf", 20}},
                                   DistanceMetric::euclidean, 2000);
    auto labels = label_high_cite(c, 0.5);
    CHECK_FALSE(labels.labels[0].has_value());
    CHECK(labels.labels[1].has_value());
}

TEST_CASE("labels depend on the cohort, not the file order") {
    std::vector<oracle::TestPaper> papers;
    detail::SplitMix64 rng(2468u);
    for (int i = 0; i < 40; ++i) {
        papers.push_back({"p" + std::to_string(i), 2005 + static_cast<int>(rng.bounded(2)),
                          {static_cast<float>(i)}, (rng.bounded(2) ? "x" : "y"),
                          static_cast<std::int64_t>(rng.bounded(100))});
    }
    Corpus a = oracle::make_corpus(papers);
    std::reverse(papers.begin(), papers.end());
    Corpus b = oracle::make_corpus(papers);

    auto la = label_high_cite(a, 0.75);
    auto lb = label_high_cite(b, 0.75);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string& id = a.papers[i].id;
        CHECK(la.labels[i] == lb.labels[b.index_of(id)]);
    }
}

TEST_CASE("all-distinct cohorts label close to the nominal tail") {
    for (std::size_t n : {20, 50, 101}) {
        std::vector<oracle::TestPaper> papers;
        for (std::size_t i = 0; i < n; ++i) {
            papers.push_back({"p" + std::to_string(i), 2005, {static_cast<float>(i)}, "sf",
                              static_cast<std::int64_t>(i * 3)});
        }
        auto labels = label_high_cite(oracle::make_corpus(papers), 0.75);
        std::size_t high = 0;
        for (const auto& l : labels.labels) {
            if (l && *l) ++high;
        }
        double nominal = 0.25 * static_cast<double>(n);
        CHECK(std::abs(static_cast<double>(high) - nominal) <= 1.0);
    }
}

TEST_CASE("quantile domain is the open interval") {
    Corpus c = oracle::make_corpus({{"a", 2005, {0.0}, "sf", 1}});
    CHECK_THROWS_AS(label_high_cite(c, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(label_high_cite(c, 1.0), std::invalid_argument);
}

TEST_CASE("the impact table collects focal rows with every outcome") {
    Corpus c = oracle::make_corpus(
        {{"kb", 1995, {0.0}, "sf", 50, std::nullopt},
         {"F", 2005, {1.0}, "sf", 10, std::vector<std::string>{"kb"}},
         {"G", 2005, {2.0}, "sf", 40, std::nullopt},
         {"H", 2005, {3.0}, "sf", std::nullopt, std::vector<std::string>{"kb"}}},
        DistanceMetric::euclidean, 2000, std::nullopt,
        graph_of({{"x", "F"}, {"y", "F"}, {"y", "kb"}, {"z", "kb"}}));

    ImpactTable table = build_impact(c, {0.5, 0.9});
    REQUIRE(table.rows.size() == 3); // kb is not focal
    CHECK(table.quantiles == std::vector<double>{0.5, 0.9});
    CHECK(table.citation_excluded == 1); // H

    const ImpactRow& f = table.rows[0];
    CHECK(f.id == "F");
    REQUIRE(f.high_cite.size() == 2);
    CHECK(*f.high_cite[0] == false);
    CHECK(*f.n_f == 1);
    CHECK(*f.n_b == 1);
    CHECK(*f.n_r == 1);
    CHECK(f.di.value() == 0.0);
    CHECK(*f.disruptive == false);

    const ImpactRow& g = table.rows[1];
    CHECK(g.di.why() == Missing::no_references);
    CHECK_FALSE(g.n_f.has_value());
    CHECK_FALSE(g.disruptive.has_value());
}

TEST_CASE("without a graph the whole disruption side is missing") {
    Corpus c = oracle::make_corpus({{"F", 2005, {0.0}, "sf", 10, std::vector<std::string>{"R"}},
                                    {"R", 2004, {1.0}, "sf", 5}});
    ImpactTable table = build_impact(c, {0.5});
    for (const auto& row : table.rows) {
        CHECK(row.di.why() == Missing::upstream);
        CHECK_FALSE(row.disruptive.has_value());
    }
}

TEST_CASE("positive index means disruptive, zero does not") {
    auto pos = focal_with_reference(graph_of({{"a", "F"}, {"b", "F"}, {"b", "R"}}));
    ImpactTable t1 = build_impact(pos, {0.5});
    CHECK(t1.rows[0].di.value() == 0.0);
    CHECK(*t1.rows[0].disruptive == false);

    auto strictly = focal_with_reference(graph_of({{"a", "F"}, {"b", "F"}, {"c", "F"}, {"c", "R"}}));
    ImpactTable t2 = build_impact(strictly, {0.5});
    CHECK(t2.rows[0].di.value() > 0.0);
    CHECK(*t2.rows[0].disruptive == true);
}

TEST_CASE("impact csv round-trips every field shape") {
    Corpus c = oracle::make_corpus(
        {{"F", 2005, {1.0}, "sf", 10, std::vector<std::string>{"R"}},
         {"G", 2005, {2.0}, "sf", 40, std::nullopt},
         {"H", 2005, {3.0}, "sf", std::nullopt, std::vector<std::string>{"zz"}},
         {"R", 2000, {0.0}, "sf", 5, std::nullopt}},
        DistanceMetric::euclidean, 1999, std::nullopt,
        graph_of({{"x", "F"}, {"x", "R"}}));
    ImpactTable table = build_impact(c, {0.75, 0.9});

    oracle::TempDir dir;
    std::string path = dir.str("impact.csv");
    write_impact_csv(table, path);
    ImpactTable back = read_impact_csv(path);

    CHECK(back.quantiles == table.quantiles);
    REQUIRE(back.rows.size() == table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const ImpactRow& a = table.rows[i];
        const ImpactRow& b = back.rows[i];
        CHECK(a.id == b.id);
        CHECK(a.citation_count == b.citation_count);
        CHECK(a.high_cite == b.high_cite);
        CHECK(a.n_f == b.n_f);
        CHECK(a.n_b == b.n_b);
        CHECK(a.n_r == b.n_r);
        CHECK(a.di.present() == b.di.present());
        if (a.di.present()) CHECK(a.di.value() == b.di.value());
        CHECK(a.disruptive == b.disruptive);
    }
}
