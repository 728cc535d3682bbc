#ifndef ISOSCAPE_ISOLATION_HPP
#define ISOSCAPE_ISOLATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoscape/corpus.hpp"
#include "isoscape/detail/kahan.hpp"
#include "isoscape/detail/rng.hpp"
#include "isoscape/metricspace.hpp"
#include "isoscape/value.hpp"

/**
 * @file isolation.hpp
 *
 * @brief Point-in-time isolation metrics over a comparison set, plus the
 * corpus-level baseline indicators.
 *
 * Four metrics describe how alone a paper sits among the work available at
 * a given offset:
 *
 * 1. neighborhood count: how many comparison distances fall within
 *    gamma * mean(D), the radius adapting to the same multiset;
 * 2. k-NN distance: the k-th smallest comparison distance;
 * 3. average k-NN distance: mean of the k smallest;
 * 4. kernel density: sum of Gaussian kernels over all of D with adaptive
 *    bandwidth sigma = k-NN distance.
 *
 * Every metric returns a MetricValue: a failed precondition (empty set, too
 * few neighbors, zero bandwidth) is data, not an error.
 */

namespace isoscape {

inline MetricValue neighborhood_count(const DistanceMultiset& D, double gamma) {
    if (!(gamma > 0)) {
        throw std::invalid_argument("gamma must be positive");
    }
    if (D.distances.empty()) {
        return MetricValue::missing(Missing::empty_comparison_set);
    }
    double radius = gamma * (detail::kahan_total(D.distances.begin(), D.distances.end()) /
                             static_cast<double>(D.distances.size()));
    auto past = std::upper_bound(D.distances.begin(), D.distances.end(), radius);
    return MetricValue(static_cast<double>(past - D.distances.begin()));
}

inline MetricValue knn_distance(const DistanceMultiset& D, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("k must be positive");
    }
    if (D.distances.empty()) {
        return MetricValue::missing(Missing::empty_comparison_set);
    }
    if (D.distances.size() < k) {
        return MetricValue::missing(Missing::insufficient_neighbors);
    }
    return MetricValue(D.distances[k - 1]);
}

inline MetricValue avg_knn_distance(const DistanceMultiset& D, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("k must be positive");
    }
    if (D.distances.empty()) {
        return MetricValue::missing(Missing::empty_comparison_set);
    }
    if (D.distances.size() < k) {
        return MetricValue::missing(Missing::insufficient_neighbors);
    }
    return MetricValue(detail::kahan_total(D.distances.begin(), D.distances.begin() + k) /
                       static_cast<double>(k));
}

inline MetricValue kernel_density(const DistanceMultiset& D, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("k must be positive");
    }
    if (D.distances.empty()) {
        return MetricValue::missing(Missing::empty_comparison_set);
    }
    if (D.distances.size() < k) {
        return MetricValue::missing(Missing::insufficient_neighbors);
    }
    double sigma = D.distances[k - 1];
    if (sigma == 0) {
        return MetricValue::missing(Missing::degenerate_bandwidth);
    }
    double inv = 1.0 / (2.0 * sigma * sigma);
    detail::KahanSum s;
    for (double d : D.distances) {
        s.add(std::exp(-d * d * inv));
    }
    return MetricValue(s.total());
}

inline MetricValue paper_mean_distance(const DistanceMultiset& D) {
    if (D.distances.empty()) {
        return MetricValue::missing(Missing::empty_comparison_set);
    }
    return MetricValue(detail::kahan_total(D.distances.begin(), D.distances.end()) /
                       static_cast<double>(D.distances.size()));
}

// ---------------------------------------------------------------------------
// Corpus-level baseline

struct AnnualMean {
    MetricValue mean;
    MetricValue change; // mean(year) - mean(year - 1)
};

struct AnnualMeanSeries {
    std::vector<int> years; // consecutive, ascending
    std::vector<MetricValue> mean;
    std::vector<MetricValue> change;
};

enum class AnnualMeanMode : std::uint8_t { exact = 0, sampled = 1 };

struct AnnualSampling {
    std::uint64_t seed = 0;
    std::uint64_t pairs = 10000;
};

namespace detail {

// Pairs are drawn with replacement, uniformly over the C(n,2) unordered
// pairs. Each year samples from its own child stream so the estimate for a
// year does not depend on which other years were requested.
inline double sampled_pair_mean(const Corpus& corpus, const EmbeddingChannel& ch,
                                std::size_t prefix, const AnnualSampling& sampling, int year) {
    SplitMix64 rng(derive_seed(sampling.seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(year))));
    const auto& order = corpus.year_order();
    KahanSum s;
    for (std::uint64_t t = 0; t < sampling.pairs; ++t) {
        std::uint64_t a = rng.bounded(prefix);
        std::uint64_t b = rng.bounded(prefix - 1);
        if (b >= a) ++b;
        s.add(pairwise_distance(ch.row(order[static_cast<std::size_t>(a)]),
                                ch.row(order[static_cast<std::size_t>(b)]), ch.dim, ch.default_metric));
    }
    return s.total() / static_cast<double>(sampling.pairs);
}

}

/**
 * Mean pairwise distance over all papers published in or before each year
 * of the corpus, with its year-over-year change. Exact mode touches each
 * pair once across the whole sweep; sampled mode draws a seeded sample per
 * year.
 */
inline AnnualMeanSeries corpus_annual_mean_series(const Corpus& corpus, const std::string& channel_name,
                                                 AnnualMeanMode mode = AnnualMeanMode::exact,
                                                 const AnnualSampling& sampling = {}) {
    const EmbeddingChannel& ch = corpus.channel(channel_name);
    AnnualMeanSeries out;
    if (corpus.size() < 2) {
        return out;
    }
    const auto& order = corpus.year_order();
    const auto& years = corpus.years_in_order();
    int first = years.front(), last = years.back();

    detail::KahanSum pair_sum;
    std::uint64_t pair_count = 0;
    std::size_t consumed = 0;

    MetricValue previous = MetricValue::missing(Missing::upstream);
    for (int y = first; y <= last; ++y) {
        std::size_t prefix = corpus.count_up_to_year(y);
        MetricValue mean = MetricValue::missing(Missing::insufficient_neighbors);
        if (prefix >= 2) {
            if (mode == AnnualMeanMode::exact) {
                for (; consumed < prefix; ++consumed) {
                    const float* row = ch.row(order[consumed]);
                    for (std::size_t j = 0; j < consumed; ++j) {
                        pair_sum.add(pairwise_distance(row, ch.row(order[j]), ch.dim, ch.default_metric));
                    }
                    pair_count += consumed;
                }
                mean = MetricValue(pair_sum.total() / static_cast<double>(pair_count));
            } else {
                if (sampling.pairs == 0) {
                    throw std::invalid_argument("sampled annual mean needs pairs > 0");
                }
                mean = MetricValue(detail::sampled_pair_mean(corpus, ch, prefix, sampling, y));
            }
        }
        MetricValue change = MetricValue::missing(Missing::upstream);
        if (mean.present() && previous.present()) {
            change = MetricValue(mean.value() - previous.value());
        }
        out.years.push_back(y);
        out.mean.push_back(mean);
        out.change.push_back(change);
        previous = mean;
    }
    return out;
}

inline AnnualMean corpus_annual_mean(const Corpus& corpus, const std::string& channel_name, int year,
                                     AnnualMeanMode mode = AnnualMeanMode::exact,
                                     const AnnualSampling& sampling = {}) {
    AnnualMeanSeries series = corpus_annual_mean_series(corpus, channel_name, mode, sampling);
    for (std::size_t r = 0; r < series.years.size(); ++r) {
        if (series.years[r] == year) {
            return {series.mean[r], series.change[r]};
        }
    }
    // Outside the observed year range: before the first paper there are no
    // pairs; after the last, the set no longer changes.
    if (!series.years.empty() && year > series.years.back()) {
        return {series.mean.back(), MetricValue(0.0)};
    }
    return {MetricValue::missing(Missing::insufficient_neighbors), MetricValue::missing(Missing::upstream)};
}

}

#endif
