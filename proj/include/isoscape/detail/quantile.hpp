#ifndef ISOSCAPE_DETAIL_QUANTILE_HPP
#define ISOSCAPE_DETAIL_QUANTILE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace isoscape {
namespace detail {

// Nearest-rank quantile: the smallest x(r) with r = ceil(q*n), r clamped to
// [1, n]. One convention shared by the typology split, cohort citation
// thresholds, and bootstrap percentile intervals.
inline double nearest_rank_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) {
        throw std::invalid_argument("nearest_rank: empty sample");
    }
    const std::size_t n = sorted.size();
    double raw = std::ceil(q * static_cast<double>(n));
    std::size_t rank = raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

inline double nearest_rank(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    return nearest_rank_sorted(values, q);
}

}
}

#endif
