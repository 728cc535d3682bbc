#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "isoscape/detail/rng.hpp"
#include "isoscape/isolation.hpp"
#include "support/oracles.hpp"

using namespace isoscape;

namespace {

DistanceMultiset multiset(std::vector<double> d) {
    DistanceMultiset out;
    out.focal_id = "f";
    out.channel = "ch";
    out.distances = std::move(d);
    return out;
}

}

TEST_CASE("neighborhood count adapts its radius to the multiset mean") {
    auto D = multiset({1, 2, 3, 6});
    CHECK(neighborhood_count(D, 1.0).value() == 3.0);  // radius 3
    CHECK(neighborhood_count(D, 0.5).value() == 1.0);  // radius 1.5
    CHECK(neighborhood_count(D, 2.0).value() == 4.0);

    auto single = multiset({4});
    CHECK(neighborhood_count(single, 1.0).value() == 1.0); // its own mean

    auto empty = multiset({});
    CHECK(neighborhood_count(empty, 1.0).why() == Missing::empty_comparison_set);
    CHECK_THROWS_AS(neighborhood_count(D, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(neighborhood_count(D, -1.0), std::invalid_argument);
}

TEST_CASE("knn distance picks the k-th smallest") {
    auto D = multiset({0.5, 1.0, 2.0});
    CHECK(knn_distance(D, 1).value() == 0.5);
    CHECK(knn_distance(D, 2).value() == 1.0);
    CHECK(knn_distance(D, 3).value() == 2.0);
    CHECK(knn_distance(D, 4).why() == Missing::insufficient_neighbors);
    CHECK(knn_distance(multiset({}), 1).why() == Missing::empty_comparison_set);
    CHECK_THROWS_AS(knn_distance(D, 0), std::invalid_argument);
}

TEST_CASE("average knn distance means the k smallest") {
    auto D = multiset({0.5, 1.0, 2.0});
    CHECK(avg_knn_distance(D, 2).value() == 0.75);
    CHECK_THAT(avg_knn_distance(D, 3).value(), Catch::Matchers::WithinAbs(3.5 / 3.0, 1e-9));
    CHECK(avg_knn_distance(D, 4).why() == Missing::insufficient_neighbors);
    CHECK(avg_knn_distance(multiset({}), 2).why() == Missing::empty_comparison_set);
}

TEST_CASE("kernel density with adaptive bandwidth") {
    CHECK_THAT(kernel_density(multiset({1.0}), 1).value(),
               Catch::Matchers::WithinAbs(std::exp(-0.5), 1e-12));
    CHECK_THAT(kernel_density(multiset({1.0, 1.0}), 1).value(),
               Catch::Matchers::WithinAbs(2.0 * std::exp(-0.5), 1e-12));
    // sigma = 2, terms exp(-1/8) + exp(-1/2)
    CHECK_THAT(kernel_density(multiset({1.0, 2.0}), 2).value(),
               Catch::Matchers::WithinAbs(1.4890275622972289, 1e-12));

    CHECK(kernel_density(multiset({0.0, 1.0}), 1).why() == Missing::degenerate_bandwidth);
    CHECK(kernel_density(multiset({1.0, 2.0}), 3).why() == Missing::insufficient_neighbors);
    CHECK(kernel_density(multiset({}), 1).why() == Missing::empty_comparison_set);
}

TEST_CASE("kernel density stays between k*exp(-1/2) and the set size") {
    detail::SplitMix64 rng(5150u);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng.bounded(40);
        std::vector<double> d;
        for (std::size_t r = 0; r < n; ++r) d.push_back(std::abs(rng.normal()) * 3.0);
        std::sort(d.begin(), d.end());
        auto D = multiset(d);
        for (std::size_t k = 1; k <= n; ++k) {
            auto v = kernel_density(D, k);
            if (!v.present()) continue; // zero bandwidth draw
            CHECK(v.value() >= static_cast<double>(k) * std::exp(-0.5) - 1e-12);
            CHECK(v.value() <= static_cast<double>(n) + 1e-12);
        }
    }
}

TEST_CASE("metrics agree with plain-arithmetic oracles on random multisets") {
    detail::SplitMix64 rng(99u);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + rng.bounded(60);
        std::vector<double> d;
        for (std::size_t r = 0; r < n; ++r) d.push_back(rng.uniform01() * 10.0);
        std::sort(d.begin(), d.end());
        auto D = multiset(d);

        for (double gamma : {0.5, 1.0, 1.5}) {
            CHECK(neighborhood_count(D, gamma).value() ==
                  static_cast<double>(oracle::metric1(d, gamma)));
        }
        for (std::size_t k : {std::size_t{1}, std::size_t{2}, n}) {
            CHECK(knn_distance(D, k).value() == oracle::metric2(d, k));
            CHECK_THAT(avg_knn_distance(D, k).value(),
                       Catch::Matchers::WithinRel(oracle::metric3(d, k), 1e-12));
            CHECK_THAT(kernel_density(D, k).value(),
                       Catch::Matchers::WithinRel(oracle::metric4(d, k), 1e-12));
        }
    }
}

TEST_CASE("paper mean distance") {
    CHECK(paper_mean_distance(multiset({1, 2, 3})).value() == 2.0);
    CHECK(paper_mean_distance(multiset({5})).value() == 5.0);
    CHECK(paper_mean_distance(multiset({})).why() == Missing::empty_comparison_set);
}

TEST_CASE("exact annual mean over a tiny line corpus") {
    // Positions 0, 1, 3 in one year: pairwise distances {1, 2, 3}.
    Corpus c = oracle::make_corpus({{"a", 2000, {0.0}}, {"b", 2000, {1.0}}, {"c", 2000, {3.0}}});
    auto series = corpus_annual_mean_series(c, "ch");
    REQUIRE(series.years == std::vector<int>{2000});
    CHECK(series.mean[0].value() == 2.0);
    CHECK(series.change[0].why() == Missing::upstream); // no prior year
}

TEST_CASE("annual mean tracks the growing prefix year by year") {
    Corpus c = oracle::make_corpus(
        {{"a", 2000, {0.0}}, {"b", 2001, {2.0}}, {"c", 2003, {6.0}}});
    auto series = corpus_annual_mean_series(c, "ch");
    REQUIRE(series.years == std::vector<int>{2000, 2001, 2002, 2003});

    CHECK(series.mean[0].why() == Missing::insufficient_neighbors); // one paper
    CHECK(series.mean[1].value() == 2.0);                          // {2}
    CHECK(series.mean[2].value() == 2.0);                          // unchanged set
    CHECK_THAT(series.mean[3].value(), Catch::Matchers::WithinRel(4.0, 1e-15)); // {2,6,4}

    CHECK(series.change[0].why() == Missing::upstream);
    CHECK(series.change[1].why() == Missing::upstream); // previous missing
    CHECK(series.change[2].value() == 0.0);
    CHECK_THAT(series.change[3].value(), Catch::Matchers::WithinRel(2.0, 1e-15));
}

TEST_CASE("annual mean outside the observed range") {
    Corpus c = oracle::make_corpus({{"a", 2000, {0.0}}, {"b", 2001, {2.0}}});
    auto after = corpus_annual_mean(c, "ch", 2050);
    CHECK(after.mean.value() == 2.0);
    CHECK(after.change.value() == 0.0);

    auto before = corpus_annual_mean(c, "ch", 1990);
    CHECK(before.mean.why() == Missing::insufficient_neighbors);
    CHECK(before.change.why() == Missing::upstream);
}

TEST_CASE("exact annual mean matches an all-pairs oracle on random data") {
    detail::SplitMix64 rng(404u);
    std::vector<oracle::TestPaper> papers;
    for (int i = 0; i < 70; ++i) {
        oracle::TestPaper p;
        p.id = "p" + std::to_string(i);
        p.year = 2000 + static_cast<int>(rng.bounded(6));
        for (int d = 0; d < 3; ++d) p.vec.push_back(rng.normal());
        papers.push_back(std::move(p));
    }
    Corpus c = oracle::make_corpus(papers);
    auto series = corpus_annual_mean_series(c, "ch");

    for (std::size_t r = 0; r < series.years.size(); ++r) {
        int y = series.years[r];
        double sum = 0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c.papers[i].year > y) continue;
            for (std::size_t j = i + 1; j < c.size(); ++j) {
                if (c.papers[j].year > y) continue;
                sum += pairwise_distance(c.channel("ch").row(i), c.channel("ch").row(j), 3,
                                         DistanceMetric::euclidean);
                ++count;
            }
        }
        REQUIRE(series.mean[r].present());
        CHECK_THAT(series.mean[r].value(),
                   Catch::Matchers::WithinRel(sum / static_cast<double>(count), 1e-10));
    }
}

TEST_CASE("sampled annual mean lands near the exact value") {
    detail::SplitMix64 rng(777u);
    std::vector<oracle::TestPaper> papers;
    for (int i = 0; i < 300; ++i) {
        oracle::TestPaper p;
        p.id = "p" + std::to_string(i);
        p.year = 2000;
        for (int d = 0; d < 4; ++d) p.vec.push_back(rng.normal());
        papers.push_back(std::move(p));
    }
    Corpus c = oracle::make_corpus(papers);
    const auto& ch = c.channel("ch");

    // Population mean and sd of the pairwise distance distribution.
    double sum = 0, sum_sq = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            double d = pairwise_distance(ch.row(i), ch.row(j), 4, DistanceMetric::euclidean);
            sum += d;
            sum_sq += d * d;
            ++count;
        }
    }
    double exact = sum / static_cast<double>(count);
    double var = sum_sq / static_cast<double>(count) - exact * exact;

    AnnualSampling sampling;
    sampling.seed = 7;
    sampling.pairs = 10000;
    auto est = corpus_annual_mean(c, "ch", 2000, AnnualMeanMode::sampled, sampling);
    REQUIRE(est.mean.present());
    double se = std::sqrt(var / static_cast<double>(sampling.pairs));
    CHECK(std::abs(est.mean.value() - exact) <= 3.0 * se);

    // Same seed, same estimate; the sampler is deterministic.
    auto again = corpus_annual_mean(c, "ch", 2000, AnnualMeanMode::sampled, sampling);
    CHECK(est.mean.value() == again.mean.value());

    sampling.seed = 8;
    auto other = corpus_annual_mean(c, "ch", 2000, AnnualMeanMode::sampled, sampling);
    CHECK(est.mean.value() != other.mean.value());
}

TEST_CASE("sampled mode refuses zero pairs") {
    Corpus c = oracle::make_corpus({{"a", 2000, {0.0}}, {"b", 2000, {1.0}}});
    AnnualSampling sampling;
    sampling.pairs = 0;
    CHECK_THROWS_AS(corpus_annual_mean_series(c, "ch", AnnualMeanMode::sampled, sampling),
                    std::invalid_argument);
}
