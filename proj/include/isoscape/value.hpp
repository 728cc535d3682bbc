#ifndef ISOSCAPE_VALUE_HPP
#define ISOSCAPE_VALUE_HPP

#include <cstdint>
#include <limits>
#include <string>

/**
 * @file value.hpp
 *
 * @brief Real-or-missing values carried through metric computations.
 *
 * Metrics whose preconditions fail (empty comparison set, fewer than k
 * neighbors, a zero kernel bandwidth) do not throw; they produce a typed
 * missing value whose reason code survives into the feature table's mask.
 */

namespace isoscape {

/** Reason a metric value is absent. `none` means the value is present. */
enum class Missing : std::uint8_t {
    none = 0,
    empty_comparison_set = 1,
    insufficient_neighbors = 2,
    degenerate_bandwidth = 3,
    upstream = 4, // an input to a derived quantity was itself missing
    no_references = 5,
    zero_denominator = 6,
};

inline const char* to_string(Missing m) {
    switch (m) {
        case Missing::none: return "none";
        case Missing::empty_comparison_set: return "empty_comparison_set";
        case Missing::insufficient_neighbors: return "insufficient_neighbors";
        case Missing::degenerate_bandwidth: return "degenerate_bandwidth";
        case Missing::upstream: return "upstream";
        case Missing::no_references: return "no_references";
        case Missing::zero_denominator: return "zero_denominator";
    }
    return "unknown";
}

/**
 * @brief A real value that may instead be a typed missing marker.
 *
 * Present values always hold a finite double. Missing values remember why
 * they are missing; arithmetic on them propagates `Missing::upstream`.
 */
class MetricValue {
public:
    MetricValue() : value_(std::numeric_limits<double>::quiet_NaN()), why_(Missing::upstream) {}

    MetricValue(double v) : value_(v), why_(Missing::none) {}

    static MetricValue missing(Missing why) {
        MetricValue out;
        out.why_ = why;
        return out;
    }

    bool present() const { return why_ == Missing::none; }

    /** The held value; only meaningful when `present()`. */
    double value() const { return value_; }

    Missing why() const { return why_; }

    /** Value if present, NaN otherwise (the feature table's storage form). */
    double value_or_nan() const {
        return present() ? value_ : std::numeric_limits<double>::quiet_NaN();
    }

private:
    double value_;
    Missing why_;
};

}

#endif
