#ifndef ISOSCAPE_DYNAMICS_HPP
#define ISOSCAPE_DYNAMICS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include "isoscape/value.hpp"

/**
 * @file dynamics.hpp
 *
 * @brief Dynamic isolation metrics: differences of a point-in-time metric
 * across two temporal offsets.
 *
 * Delta(i, c1, c2) = M(i, c1) - M(i, c2) with c1 < c2. A window ending at
 * or before publication (c2 <= 0) is retrospective and describes how the
 * neighborhood densified before the paper appeared; a window starting at
 * or after publication (c1 >= 0) is prospective. Only retrospective deltas
 * feed the temporal novelty score; prospective ones are an opt-in
 * validation extra.
 */

namespace isoscape {

enum class DeltaWindow : std::uint8_t { retrospective = 0, prospective = 1, mixed = 2 };

inline const char* to_string(DeltaWindow w) {
    switch (w) {
        case DeltaWindow::retrospective: return "retrospective";
        case DeltaWindow::prospective: return "prospective";
        case DeltaWindow::mixed: return "mixed";
    }
    return "unknown";
}

struct DeltaSpec {
    std::string metric_id; // "m1".."m4"
    int c1 = 0;
    int c2 = 0;

    DeltaWindow window() const {
        if (c2 <= 0) return DeltaWindow::retrospective;
        if (c1 >= 0) return DeltaWindow::prospective;
        return DeltaWindow::mixed;
    }

    void check() const {
        if (c1 >= c2) {
            throw std::invalid_argument("delta window needs c1 < c2 (got " + std::to_string(c1) + ", " +
                                        std::to_string(c2) + ")");
        }
    }
};

/** M(c1) - M(c2); missing whenever either side is missing. */
inline MetricValue dynamic_delta(const MetricValue& m_at_c1, const MetricValue& m_at_c2) {
    if (!m_at_c1.present() || !m_at_c2.present()) {
        return MetricValue::missing(Missing::upstream);
    }
    return MetricValue(m_at_c1.value() - m_at_c2.value());
}

}

#endif
