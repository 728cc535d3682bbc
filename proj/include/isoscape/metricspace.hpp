#ifndef ISOSCAPE_METRICSPACE_HPP
#define ISOSCAPE_METRICSPACE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isoscape/corpus.hpp"
#include "isoscape/detail/io.hpp"
#include "isoscape/detail/kahan.hpp"

/**
 * @file metricspace.hpp
 *
 * @brief Pairwise distances and temporally filtered comparison sets.
 *
 * The comparison set of a focal paper i at offset c collects the distances
 * from i to every paper j != i published in or before year t_i + c, sorted
 * ascending. `comparison_set` materializes one such multiset; `FocalSweep`
 * walks a whole ascending offset ladder for one focal paper while computing
 * each pairwise distance only once.
 */

namespace isoscape {

template <typename T>
double pairwise_distance(const T* a, const T* b, std::size_t dim, DistanceMetric metric) {
    if (metric == DistanceMetric::euclidean) {
        double acc = 0;
        for (std::size_t d = 0; d < dim; ++d) {
            double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
            acc += diff * diff;
        }
        return std::sqrt(acc);
    }
    double dot = 0, na = 0, nb = 0;
    for (std::size_t d = 0; d < dim; ++d) {
        double x = static_cast<double>(a[d]);
        double y = static_cast<double>(b[d]);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0 || nb == 0) {
        throw std::domain_error("cosine distance undefined for a zero vector");
    }
    double dist = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    return std::min(2.0, std::max(0.0, dist));
}

template <typename T>
double pairwise_distance(const std::vector<T>& a, const std::vector<T>& b, DistanceMetric metric) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("distance between vectors of dim " + std::to_string(a.size()) +
                                    " and " + std::to_string(b.size()));
    }
    return pairwise_distance(a.data(), b.data(), a.size(), metric);
}

/** Sorted distances from one focal paper to its temporal comparison set. */
struct DistanceMultiset {
    std::string focal_id;
    std::string channel;
    int offset_c = 0;
    std::vector<double> distances; // nondecreasing, self excluded

    std::size_t comparison_size() const { return distances.size(); }
};

/**
 * Materialize D_{i,c} by brute force. Ties in distance are broken by paper
 * id so the ordering is reproducible bit for bit.
 */
inline DistanceMultiset comparison_set(const Corpus& corpus, const std::string& channel_name,
                                       const std::string& focal_id, int offset_c) {
    const EmbeddingChannel& ch = corpus.channel(channel_name);
    std::size_t i = corpus.index_of(focal_id);
    int cutoff = corpus.papers[i].year + offset_c;

    std::vector<std::pair<double, const std::string*>> hits;
    for (std::size_t j = 0; j < corpus.size(); ++j) {
        if (j == i || corpus.papers[j].year > cutoff) continue;
        hits.emplace_back(pairwise_distance(ch.row(i), ch.row(j), ch.dim, ch.default_metric),
                          &corpus.papers[j].id);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return *a.second < *b.second;
    });

    DistanceMultiset out;
    out.focal_id = focal_id;
    out.channel = channel_name;
    out.offset_c = offset_c;
    out.distances.reserve(hits.size());
    for (const auto& h : hits) out.distances.push_back(h.first);
    return out;
}

/**
 * @brief Incremental comparison-set state for one focal paper.
 *
 * Construction computes the distance from the focal paper to every other
 * paper once, laid out in corpus year order. `advance_to_year` then extends
 * the active prefix; because offsets are visited in ascending order each
 * distance is merged into the sorted active set exactly once, so a full
 * offset ladder costs O(N * offsets) merge work on top of the single O(N *
 * dim) distance pass.
 */
class FocalSweep {
public:
    FocalSweep(const Corpus& corpus, const EmbeddingChannel& channel, std::size_t focal_index) {
        const float* focal_row = channel.row(focal_index);
        const auto& order = corpus.year_order();
        dist_by_year_.reserve(order.size() - 1);
        year_.reserve(order.size() - 1);
        for (std::uint32_t j : order) {
            if (j == focal_index) continue;
            dist_by_year_.push_back(pairwise_distance(focal_row, channel.row(j), channel.dim, channel.default_metric));
            year_.push_back(corpus.papers[j].year);
        }
        sorted_.reserve(dist_by_year_.size());
        cutoff_year_ = std::numeric_limits<int>::min();
    }

    /** Extend the active set to papers with year <= cutoff. Forward only. */
    void advance_to_year(int cutoff) {
        if (cutoff < cutoff_year_) {
            throw std::logic_error("FocalSweep cutoffs must be nondecreasing");
        }
        cutoff_year_ = cutoff;
        std::size_t new_end = static_cast<std::size_t>(
            std::upper_bound(year_.begin(), year_.end(), cutoff) - year_.begin());
        if (new_end == consumed_) return;

        std::size_t mid = sorted_.size();
        sorted_.insert(sorted_.end(), dist_by_year_.begin() + consumed_, dist_by_year_.begin() + new_end);
        std::sort(sorted_.begin() + mid, sorted_.end());
        std::inplace_merge(sorted_.begin(), sorted_.begin() + mid, sorted_.end());
        for (std::size_t r = consumed_; r < new_end; ++r) {
            total_.add(dist_by_year_[r]);
        }
        consumed_ = new_end;
    }

    std::size_t size() const { return sorted_.size(); }

    /** Active distances, sorted ascending. */
    const std::vector<double>& distances() const { return sorted_; }

    double mean() const { return total_.total() / static_cast<double>(sorted_.size()); }

    double kth(std::size_t k) const { return sorted_[k - 1]; }

    double sum_smallest(std::size_t k) const {
        detail::KahanSum s;
        for (std::size_t r = 0; r < k; ++r) s.add(sorted_[r]);
        return s.total();
    }

    std::size_t count_within(double radius) const {
        return static_cast<std::size_t>(
            std::upper_bound(sorted_.begin(), sorted_.end(), radius) - sorted_.begin());
    }

    double kernel_sum(double sigma) const {
        // Terms beyond d = 10*sigma are each below exp(-50); even 2^20 of
        // them total under 1e-15, far inside the 1e-9 reproduction
        // tolerance, so the sorted walk stops there.
        double inv = 1.0 / (2.0 * sigma * sigma);
        double limit = 100.0 * sigma * sigma;
        detail::KahanSum s;
        for (double d : sorted_) {
            double d2 = d * d;
            if (d2 > limit) break;
            s.add(std::exp(-d2 * inv));
        }
        return s.total();
    }

private:
    std::vector<double> dist_by_year_; // all non-self distances, year order
    std::vector<int> year_;            // matching years, nondecreasing
    std::vector<double> sorted_;       // active prefix, sorted ascending
    detail::KahanSum total_;
    std::size_t consumed_ = 0;
    int cutoff_year_;
};

// ---------------------------------------------------------------------------
// On-disk distance cache
//
// One file per (channel, offset): for every focal paper, its sorted
// comparison-set distances. The header pins the corpus content hash so a
// stale cache is detected instead of silently reused.

inline void write_distance_cache(const std::string& path, std::uint64_t corpus_hash,
                                 const std::string& channel, int offset_c,
                                 const std::vector<std::vector<double>>& rows) {
    auto os = detail::open_out(path, true);
    os.write("DCA1", 4);
    detail::write_u64(os, corpus_hash);
    detail::write_string(os, channel);
    detail::write_i32(os, offset_c);
    detail::write_u64(os, rows.size());
    for (const auto& row : rows) {
        detail::write_u64(os, row.size());
        for (double d : row) detail::write_f64(os, d);
    }
    if (!os) {
        throw std::runtime_error("write failed: " + path);
    }
}

/** Returns nothing when the cache belongs to a different corpus, channel or offset. */
inline std::optional<std::vector<std::vector<double>>> read_distance_cache(
    const std::string& path, std::uint64_t corpus_hash, const std::string& channel, int offset_c) {
    auto is = detail::open_in(path, true);
    detail::expect_magic(is, "DCA1", path);
    std::uint64_t stored_hash = detail::read_u64(is, path + " corpus hash");
    std::string stored_channel = detail::read_string(is, path + " channel");
    std::int32_t stored_offset = detail::read_i32(is, path + " offset");
    std::uint64_t row_count = detail::read_u64(is, path + " row count");
    if (stored_hash != corpus_hash || stored_channel != channel || stored_offset != offset_c) {
        return std::nullopt;
    }
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(row_count));
    for (auto& row : rows) {
        std::uint64_t n = detail::read_u64(is, path + " row length");
        row.resize(static_cast<std::size_t>(n));
        for (auto& d : row) d = detail::read_f64(is, path + " distance");
    }
    return rows;
}

}

#endif
