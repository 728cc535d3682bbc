#ifndef ISOSCAPE_NOVELTY_HPP
#define ISOSCAPE_NOVELTY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "isoscape/detail/io.hpp"
#include "isoscape/detail/kahan.hpp"
#include "isoscape/detail/quantile.hpp"
#include "isoscape/detail/rng.hpp"
#include "isoscape/features.hpp"
#include "isoscape/value.hpp"

/**
 * @file novelty.hpp
 *
 * @brief Composite novelty scores and the four-quadrant typology.
 *
 * Two scores summarize the feature table per focal paper:
 *
 * - spatial novelty: first principal component of the standardized
 *   publication-time columns (offset-0 metrics plus the paper mean
 *   distance), i.e. how isolated the paper is, full stop;
 * - temporal novelty: first principal component of the standardized
 *   retrospective delta columns, i.e. how fast its neighborhood was
 *   densifying on the way to publication.
 *
 * Principal components carry an inherent sign ambiguity; both scores are
 * oriented so that the distance-metric loadings (the m2/m3 families) sum
 * to a nonnegative value, making "higher = more isolated / faster
 * densification" hold by construction.
 *
 * Quantile splits of the two scores then label each paper Consolidating
 * (low/low), Outlying (high/low), Trendy (low/high) or Trailblazing
 * (high/high).
 */

namespace isoscape {

using ColumnSelector = std::function<bool(const ColumnSpec&)>;

struct DroppedColumn {
    std::string name;
    std::string reason; // "zero_variance" or "missing_fraction"
};

struct StandardizedTable {
    std::vector<std::string> column_names;   // retained, feature-table order
    std::vector<ColumnSpec> column_specs;
    std::vector<double> mean;                // per retained column
    std::vector<double> stddev;              // population, per retained column
    std::vector<DroppedColumn> dropped_columns;
    std::vector<std::string> row_ids;        // retained rows, universe order
    std::vector<std::size_t> row_sources;    // row index into the feature table
    std::vector<std::string> excluded_rows;  // universe rows with missing cells
    std::vector<double> z;                   // row-major, retained rows x cols

    std::size_t n_rows() const { return row_ids.size(); }
    std::size_t n_cols() const { return column_names.size(); }

    double at(std::size_t r, std::size_t c) const { return z[r * n_cols() + c]; }
};

/**
 * Z-score the selected columns over the given rows using the population
 * standard deviation. Columns that are more than `max_missing_fraction`
 * missing (over the row universe) or have zero variance are dropped and
 * recorded; rows still carrying a missing cell afterwards are excluded and
 * recorded. Dropping a column can complete previously incomplete rows and
 * newly retained rows can reveal a zero-variance column, so the row/column
 * reduction loops to a fixed point.
 */
inline StandardizedTable standardize(const FeatureTable& table, const ColumnSelector& selector,
                                     double max_missing_fraction,
                                     const std::vector<std::size_t>& row_universe) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
        if (selector(table.columns[c])) cols.push_back(c);
    }
    StandardizedTable out;
    if (cols.size() < 2) {
        throw std::invalid_argument("standardize needs at least 2 selected columns, got " +
                                    std::to_string(cols.size()));
    }
    if (row_universe.empty()) {
        throw std::invalid_argument("standardize needs a nonempty row universe");
    }

    std::vector<std::size_t> retained;
    for (std::size_t c : cols) {
        std::size_t gaps = 0;
        for (std::size_t r : row_universe) {
            if (!table.at(r, c).present()) ++gaps;
        }
        double fraction = static_cast<double>(gaps) / static_cast<double>(row_universe.size());
        if (fraction > max_missing_fraction) {
            out.dropped_columns.push_back({table.column_names[c], "missing_fraction"});
        } else {
            retained.push_back(c);
        }
    }

    std::vector<std::size_t> rows;
    while (true) {
        if (retained.empty()) {
            throw std::runtime_error("standardize dropped every selected column");
        }
        rows.clear();
        for (std::size_t r : row_universe) {
            bool complete = true;
            for (std::size_t c : retained) {
                if (!table.at(r, c).present()) {
                    complete = false;
                    break;
                }
            }
            if (complete) rows.push_back(r);
        }
        if (rows.empty()) {
            break; // caller sees an empty table and reports it
        }
        std::vector<std::size_t> still;
        for (std::size_t c : retained) {
            detail::KahanSum sum;
            for (std::size_t r : rows) sum.add(table.at(r, c).value());
            double mu = sum.total() / static_cast<double>(rows.size());
            detail::KahanSum sq;
            for (std::size_t r : rows) {
                double d = table.at(r, c).value() - mu;
                sq.add(d * d);
            }
            if (sq.total() == 0) {
                out.dropped_columns.push_back({table.column_names[c], "zero_variance"});
            } else {
                still.push_back(c);
            }
        }
        if (still.size() == retained.size()) {
            break;
        }
        retained = std::move(still);
    }

    for (std::size_t c : retained) {
        out.column_names.push_back(table.column_names[c]);
        out.column_specs.push_back(table.columns[c]);
    }
    {
        std::vector<bool> kept(table.n_rows(), false);
        for (std::size_t r : rows) kept[r] = true;
        for (std::size_t r : row_universe) {
            if (!kept[r]) out.excluded_rows.push_back(table.ids[r]);
        }
    }
    out.row_sources = rows;
    for (std::size_t r : rows) out.row_ids.push_back(table.ids[r]);

    out.mean.resize(retained.size());
    out.stddev.resize(retained.size());
    out.z.resize(rows.size() * retained.size());
    for (std::size_t j = 0; j < retained.size(); ++j) {
        detail::KahanSum sum;
        for (std::size_t r : rows) sum.add(table.at(r, retained[j]).value());
        double mu = sum.total() / static_cast<double>(rows.size());
        detail::KahanSum sq;
        for (std::size_t r : rows) {
            double d = table.at(r, retained[j]).value() - mu;
            sq.add(d * d);
        }
        double sigma = std::sqrt(sq.total() / static_cast<double>(rows.size()));
        out.mean[j] = mu;
        out.stddev[j] = sigma;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.z[i * retained.size() + j] = (table.at(rows[i], retained[j]).value() - mu) / sigma;
        }
    }
    return out;
}

inline StandardizedTable standardize(const FeatureTable& table, const ColumnSelector& selector,
                                     double max_missing_fraction = 0.5) {
    std::vector<std::size_t> all(table.n_rows());
    for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
    return standardize(table, selector, max_missing_fraction, all);
}

// ---------------------------------------------------------------------------
// First principal component

struct PrincipalComponent {
    std::vector<std::string> column_names;
    std::vector<double> loadings;     // unit L2 norm
    std::vector<double> scores;       // row projections, standardized-table row order
    double explained_variance = 0;    // top eigenvalue of the covariance
    double total_variance = 0;        // trace = retained column count
    double anchor_sum = 0;            // after orientation, >= 0
    std::size_t iterations = 0;
    double achieved_tol = 0;
};

/**
 * Power iteration on the (implicit) covariance X'X/n of a standardized
 * table. The starting vector is drawn from a fixed internal seed so reruns
 * take the identical trajectory. Stops when the L2 change of the loading
 * vector drops below 1e-10; gives up past 10,000 iterations, reporting the
 * tolerance it did reach. The result is sign-flipped, if needed, so the
 * loadings over `anchor` columns sum to a nonnegative value.
 */
inline PrincipalComponent first_principal_component(const StandardizedTable& table,
                                                    const ColumnSelector& anchor) {
    std::size_t n = table.n_rows(), p = table.n_cols();
    if (n < 2 || p < 2) {
        throw std::invalid_argument("principal component needs >= 2 rows and >= 2 columns (got " +
                                    std::to_string(n) + " x " + std::to_string(p) + ")");
    }
    constexpr double tol = 1e-10;
    constexpr std::size_t cap = 10000;

    std::vector<double> v(p);
    {
        detail::SplitMix64 rng(0x150a5ca9e5u);
        double norm2 = 0;
        for (auto& x : v) {
            x = rng.normal();
            norm2 += x * x;
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) x *= inv;
    }

    std::vector<double> w(n), u(p);
    double delta = 0;
    std::size_t it = 0;
    for (; it < cap; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0;
            const double* row = table.z.data() + i * p;
            for (std::size_t j = 0; j < p; ++j) acc += row[j] * v[j];
            w[i] = acc;
        }
        std::fill(u.begin(), u.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = table.z.data() + i * p;
            double wi = w[i];
            for (std::size_t j = 0; j < p; ++j) u[j] += row[j] * wi;
        }
        double norm2 = 0;
        for (std::size_t j = 0; j < p; ++j) norm2 += u[j] * u[j];
        if (norm2 == 0) {
            throw std::runtime_error("principal component undefined: covariance annihilated the iterate");
        }
        double inv = 1.0 / std::sqrt(norm2);
        double dot = 0;
        for (std::size_t j = 0; j < p; ++j) dot += u[j] * v[j];
        if (dot < 0) inv = -inv; // keep successive iterates in one half-space
        delta = 0;
        for (std::size_t j = 0; j < p; ++j) {
            double next = u[j] * inv;
            double diff = next - v[j];
            delta += diff * diff;
            v[j] = next;
        }
        delta = std::sqrt(delta);
        if (delta < tol) {
            ++it;
            break;
        }
    }
    if (delta >= tol) {
        throw std::runtime_error("power iteration did not converge within " + std::to_string(cap) +
                                 " iterations; loading change reached " + detail::format_double(delta));
    }

    PrincipalComponent pc;
    pc.column_names = table.column_names;
    pc.iterations = it;
    pc.achieved_tol = delta;
    pc.total_variance = static_cast<double>(p);

    double anchor_sum = 0;
    for (std::size_t j = 0; j < p; ++j) {
        if (anchor(table.column_specs[j])) anchor_sum += v[j];
    }
    double sign = anchor_sum < 0 ? -1.0 : 1.0;
    pc.loadings.resize(p);
    for (std::size_t j = 0; j < p; ++j) pc.loadings[j] = sign * v[j];
    pc.anchor_sum = sign * anchor_sum;

    pc.scores.resize(n);
    double lambda = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0;
        const double* row = table.z.data() + i * p;
        for (std::size_t j = 0; j < p; ++j) acc += row[j] * pc.loadings[j];
        pc.scores[i] = acc;
        lambda += acc * acc;
    }
    pc.explained_variance = lambda / static_cast<double>(n);
    return pc;
}

// ---------------------------------------------------------------------------
// Scores

struct ScoreRow {
    std::string id;
    MetricValue spatial;
    MetricValue temporal;
};

struct NoveltyScores {
    std::vector<ScoreRow> rows; // one per focal paper, corpus order
    PrincipalComponent spatial_pc;
    PrincipalComponent temporal_pc;
    std::vector<DroppedColumn> spatial_dropped, temporal_dropped;
    std::vector<std::string> spatial_excluded, temporal_excluded;
};

struct ScoreOptions {
    double max_missing_fraction = 0.5;
    bool include_prospective = false;
};

/**
 * Both composite scores for every focal row of the feature table. A paper
 * excluded from a score's standardization (some input missing) carries a
 * missing value for that score; it may still hold the other one.
 */
inline NoveltyScores compute_scores(const FeatureTable& table, const ScoreOptions& options = {}) {
    std::vector<std::size_t> focal_rows;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        if (table.focal[r]) focal_rows.push_back(r);
    }
    if (focal_rows.empty()) {
        throw std::invalid_argument("no focal papers to score");
    }

    ColumnSelector spatial_cols = [](const ColumnSpec& s) {
        return (s.is_point_in_time() && s.c == 0) || s.kind == FeatureKind::mean;
    };
    bool prospective = options.include_prospective;
    ColumnSelector temporal_cols = [prospective](const ColumnSpec& s) {
        if (!s.is_delta()) return false;
        DeltaWindow w = s.window();
        return w == DeltaWindow::retrospective || (prospective && w == DeltaWindow::prospective);
    };
    ColumnSelector distance_anchor = [](const ColumnSpec& s) {
        return s.kind == FeatureKind::m2 || s.kind == FeatureKind::m3;
    };
    ColumnSelector delta_anchor = [](const ColumnSpec& s) {
        return s.kind == FeatureKind::dm2 || s.kind == FeatureKind::dm3;
    };

    StandardizedTable spatial_std = standardize(table, spatial_cols, options.max_missing_fraction, focal_rows);
    StandardizedTable temporal_std = standardize(table, temporal_cols, options.max_missing_fraction, focal_rows);
    if (spatial_std.n_rows() < 2) {
        throw std::runtime_error("spatial score undefined: fewer than 2 complete focal rows");
    }
    if (temporal_std.n_rows() < 2) {
        throw std::runtime_error("temporal score undefined: fewer than 2 complete focal rows");
    }

    NoveltyScores out;
    out.spatial_pc = first_principal_component(spatial_std, distance_anchor);
    out.temporal_pc = first_principal_component(temporal_std, delta_anchor);
    out.spatial_dropped = spatial_std.dropped_columns;
    out.temporal_dropped = temporal_std.dropped_columns;
    out.spatial_excluded = spatial_std.excluded_rows;
    out.temporal_excluded = temporal_std.excluded_rows;

    out.rows.resize(focal_rows.size());
    std::unordered_map<std::size_t, std::size_t> focal_slot;
    for (std::size_t i = 0; i < focal_rows.size(); ++i) {
        out.rows[i].id = table.ids[focal_rows[i]];
        focal_slot[focal_rows[i]] = i;
    }
    for (std::size_t i = 0; i < spatial_std.n_rows(); ++i) {
        out.rows[focal_slot.at(spatial_std.row_sources[i])].spatial = MetricValue(out.spatial_pc.scores[i]);
    }
    for (std::size_t i = 0; i < temporal_std.n_rows(); ++i) {
        out.rows[focal_slot.at(temporal_std.row_sources[i])].temporal = MetricValue(out.temporal_pc.scores[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Archetypes

enum class Archetype : std::uint8_t { Consolidating = 0, Outlying = 1, Trendy = 2, Trailblazing = 3 };

inline const char* to_string(Archetype a) {
    switch (a) {
        case Archetype::Consolidating: return "Consolidating";
        case Archetype::Outlying: return "Outlying";
        case Archetype::Trendy: return "Trendy";
        case Archetype::Trailblazing: return "Trailblazing";
    }
    return "unknown";
}

inline Archetype archetype_from_string(const std::string& s) {
    if (s == "Consolidating") return Archetype::Consolidating;
    if (s == "Outlying") return Archetype::Outlying;
    if (s == "Trendy") return Archetype::Trendy;
    if (s == "Trailblazing") return Archetype::Trailblazing;
    throw std::runtime_error("unknown archetype \"" + s + "\"");
}

enum class Scope : std::uint8_t { global = 0, subfield = 1 };

inline const char* to_string(Scope s) { return s == Scope::global ? "global" : "subfield"; }

struct ArchetypeThresholds {
    double spatial = 0;
    double temporal = 0;
};

struct ArchetypeAssignment {
    // Aligned to the score rows; papers missing either score stay unlabeled.
    std::vector<std::optional<Archetype>> labels;
    std::map<std::string, ArchetypeThresholds> thresholds; // key "global" or subfield
    double q = 0.5;
    Scope scope = Scope::global;
    std::size_t unscored = 0;
};

/**
 * Quantile-split quadrants. Thresholds are the nearest-rank q-quantiles of
 * each score over the scored papers in scope (the whole sample, or each
 * subfield separately); a paper is High on a dimension only when strictly
 * above the threshold, so threshold ties land Low.
 */
inline ArchetypeAssignment classify_archetype(const std::vector<ScoreRow>& rows, double q, Scope scope,
                                              const std::vector<std::string>& subfields = {}) {
    if (!(q > 0) || !(q < 1)) {
        throw std::invalid_argument("quantile must lie in (0, 1)");
    }
    if (scope == Scope::subfield && subfields.size() != rows.size()) {
        throw std::invalid_argument("subfield scope needs one subfield per scored row");
    }
    ArchetypeAssignment out;
    out.q = q;
    out.scope = scope;
    out.labels.assign(rows.size(), std::nullopt);

    auto group_of = [&](std::size_t i) -> std::string {
        return scope == Scope::global ? std::string("global") : subfields[i];
    };

    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pools;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const ScoreRow& row = rows[i];
        if (!row.spatial.present() || !row.temporal.present()) {
            ++out.unscored;
            continue;
        }
        auto& pool = pools[group_of(i)];
        pool.first.push_back(row.spatial.value());
        pool.second.push_back(row.temporal.value());
    }
    for (auto& [group, pool] : pools) {
        out.thresholds[group] = {detail::nearest_rank(pool.first, q), detail::nearest_rank(pool.second, q)};
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const ScoreRow& row = rows[i];
        if (!row.spatial.present() || !row.temporal.present()) continue;
        const ArchetypeThresholds& thr = out.thresholds.at(group_of(i));
        bool spatial_high = row.spatial.value() > thr.spatial;
        bool temporal_high = row.temporal.value() > thr.temporal;
        Archetype label = spatial_high ? (temporal_high ? Archetype::Trailblazing : Archetype::Outlying)
                                       : (temporal_high ? Archetype::Trendy : Archetype::Consolidating);
        out.labels[i] = label;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export / import

inline void write_scores_csv(const NoveltyScores& scores, const std::string& path) {
    auto os = detail::open_out(path);
    os << "id,spatial,temporal\n";
    for (const auto& row : scores.rows) {
        os << row.id << ',';
        if (row.spatial.present()) os << detail::format_double(row.spatial.value());
        else os << "NA";
        os << ',';
        if (row.temporal.present()) os << detail::format_double(row.temporal.value());
        else os << "NA";
        os << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::vector<ScoreRow> read_scores_csv(const std::string& path) {
    auto is = detail::open_in(path);
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error(path + ": empty scores file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,spatial,temporal") {
        throw std::runtime_error(path + ": expected header \"id,spatial,temporal\"");
    }
    std::vector<ScoreRow> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto parts = detail::split(line, ',');
        if (parts.size() != 3) {
            throw std::runtime_error(path + " line " + std::to_string(line_no) + ": expected 3 fields");
        }
        ScoreRow row;
        row.id = parts[0];
        if (parts[1] != "NA") row.spatial = MetricValue(detail::parse_real(parts[1], path));
        if (parts[2] != "NA") row.temporal = MetricValue(detail::parse_real(parts[2], path));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_loadings_csv(const NoveltyScores& scores, const std::string& path) {
    auto os = detail::open_out(path);
    os << "score,column,loading\n";
    for (std::size_t j = 0; j < scores.spatial_pc.column_names.size(); ++j) {
        os << "spatial," << scores.spatial_pc.column_names[j] << ','
           << detail::format_double(scores.spatial_pc.loadings[j]) << '\n';
    }
    for (std::size_t j = 0; j < scores.temporal_pc.column_names.size(); ++j) {
        os << "temporal," << scores.temporal_pc.column_names[j] << ','
           << detail::format_double(scores.temporal_pc.loadings[j]) << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline void write_archetypes_csv(const std::vector<ScoreRow>& rows, const ArchetypeAssignment& assignment,
                                 const std::vector<std::string>& subfields, const std::string& path) {
    auto os = detail::open_out(path);
    os << "id,spatial,temporal,archetype,spatial_threshold,temporal_threshold,q,scope\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const ScoreRow& row = rows[i];
        os << row.id << ',';
        if (row.spatial.present()) os << detail::format_double(row.spatial.value());
        else os << "NA";
        os << ',';
        if (row.temporal.present()) os << detail::format_double(row.temporal.value());
        else os << "NA";
        os << ',';
        std::string group = assignment.scope == Scope::global ? std::string("global") : subfields[i];
        auto thr = assignment.thresholds.find(group);
        if (assignment.labels[i]) os << to_string(*assignment.labels[i]);
        else os << "NA";
        os << ',';
        if (thr != assignment.thresholds.end()) {
            os << detail::format_double(thr->second.spatial) << ',' << detail::format_double(thr->second.temporal);
        } else {
            os << "NA,NA";
        }
        os << ',' << detail::format_double(assignment.q) << ',' << to_string(assignment.scope) << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

struct ArchetypeRow {
    std::string id;
    MetricValue spatial, temporal;
    std::optional<Archetype> archetype;
};

inline std::vector<ArchetypeRow> read_archetypes_csv(const std::string& path) {
    auto is = detail::open_in(path);
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error(path + ": empty archetypes file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("id,spatial,temporal,archetype,", 0) != 0) {
        throw std::runtime_error(path + ": unexpected archetypes header \"" + line + "\"");
    }
    std::vector<ArchetypeRow> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto parts = detail::split(line, ',');
        if (parts.size() != 8) {
            throw std::runtime_error(path + " line " + std::to_string(line_no) + ": expected 8 fields");
        }
        ArchetypeRow row;
        row.id = parts[0];
        if (parts[1] != "NA") row.spatial = MetricValue(detail::parse_real(parts[1], path));
        if (parts[2] != "NA") row.temporal = MetricValue(detail::parse_real(parts[2], path));
        if (parts[3] != "NA") row.archetype = archetype_from_string(parts[3]);
        rows.push_back(std::move(row));
    }
    return rows;
}

}

#endif
