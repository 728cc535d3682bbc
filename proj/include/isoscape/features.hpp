#ifndef ISOSCAPE_FEATURES_HPP
#define ISOSCAPE_FEATURES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "isoscape/corpus.hpp"
#include "isoscape/detail/hash.hpp"
#include "isoscape/detail/io.hpp"
#include "isoscape/detail/parallel.hpp"
#include "isoscape/dynamics.hpp"
#include "isoscape/isolation.hpp"
#include "isoscape/metricspace.hpp"
#include "isoscape/value.hpp"

/**
 * @file features.hpp
 *
 * @brief The parameter-grid sweep that turns a corpus into a per-paper
 * feature table.
 *
 * Feature columns are named so that every cell is attributable:
 *
 *     channel/m1/g<gamma>/c<offset>      neighborhood count
 *     channel/m2/k<k>/c<offset>          k-NN distance
 *     channel/m3/k<k>/c<offset>          average k-NN distance
 *     channel/m4/k<k>/c<offset>          kernel density
 *     channel/mean/c0                    paper mean distance at publication
 *     channel/dm<K>/<param>/d<c1>..<c2>  delta of metric K between offsets
 *
 * Names parse back into their specs (`parse_column`), which is how score
 * construction later selects its column families without re-deriving the
 * grid.
 */

namespace isoscape {

struct ParamGrid {
    std::vector<double> gammas{0.5, 1.0, 1.5};
    std::vector<std::size_t> ks{3, 5, 10, 20, 30, 50};
    std::vector<int> offsets{-5, -3, 0};
    std::vector<std::pair<int, int>> delta_pairs{{-5, -3}, {-5, 0}, {-3, 0}};
    std::vector<std::string> channels; // empty = every corpus channel

    void normalize() {
        std::sort(gammas.begin(), gammas.end());
        std::sort(ks.begin(), ks.end());
        std::sort(offsets.begin(), offsets.end());
        std::sort(delta_pairs.begin(), delta_pairs.end());
        gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
        offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
        delta_pairs.erase(std::unique(delta_pairs.begin(), delta_pairs.end()), delta_pairs.end());
    }

    void check() const {
        if (gammas.empty() || ks.empty() || offsets.empty() || delta_pairs.empty() || channels.empty()) {
            throw std::invalid_argument("parameter grid has an empty axis");
        }
        for (double g : gammas) {
            if (!(g > 0)) throw std::invalid_argument("gamma must be positive");
        }
        for (std::size_t k : ks) {
            if (k == 0) throw std::invalid_argument("k must be positive");
        }
        for (const auto& [c1, c2] : delta_pairs) {
            if (c1 >= c2) {
                throw std::invalid_argument("delta pair needs c1 < c2 (got " + std::to_string(c1) + ", " +
                                            std::to_string(c2) + ")");
            }
            if (!std::binary_search(offsets.begin(), offsets.end(), c1) ||
                !std::binary_search(offsets.begin(), offsets.end(), c2)) {
                throw std::invalid_argument("delta pair (" + std::to_string(c1) + ", " + std::to_string(c2) +
                                            ") uses an offset outside the grid");
            }
        }
    }

    std::uint64_t hash() const {
        detail::Fnv1a h;
        h.u64(gammas.size());
        for (double g : gammas) h.f64(g);
        h.u64(ks.size());
        for (std::size_t k : ks) h.u64(k);
        h.u64(offsets.size());
        for (int c : offsets) h.i64(c);
        h.u64(delta_pairs.size());
        for (const auto& [c1, c2] : delta_pairs) {
            h.i64(c1);
            h.i64(c2);
        }
        h.u64(channels.size());
        for (const auto& c : channels) h.str(c);
        return h.digest();
    }
};

/** The default sweep, optionally extended with post-publication windows. */
inline ParamGrid default_grid(bool prospective = false) {
    ParamGrid g;
    if (prospective) {
        g.offsets.insert(g.offsets.end(), {3, 5});
        g.delta_pairs.insert(g.delta_pairs.end(), {{0, 3}, {0, 5}, {3, 5}});
        g.normalize();
    }
    return g;
}

// ---------------------------------------------------------------------------
// Column specs and names

enum class FeatureKind : std::uint8_t {
    m1 = 0,
    m2 = 1,
    m3 = 2,
    m4 = 3,
    mean = 4,
    dm1 = 5,
    dm2 = 6,
    dm3 = 7,
    dm4 = 8,
};

struct ColumnSpec {
    std::string channel;
    FeatureKind kind = FeatureKind::m1;
    double gamma = 0;      // m1 / dm1
    std::size_t k = 0;     // m2..m4 / dm2..dm4
    int c = 0;             // point-in-time offset
    int c1 = 0, c2 = 0;    // delta window

    bool is_delta() const { return kind >= FeatureKind::dm1; }

    bool is_point_in_time() const { return kind <= FeatureKind::m4; }

    DeltaWindow window() const { return DeltaSpec{"", c1, c2}.window(); }

    std::string name() const {
        switch (kind) {
            case FeatureKind::m1:
                return channel + "/m1/g" + detail::format_double_short(gamma) + "/c" + std::to_string(c);
            case FeatureKind::m2:
            case FeatureKind::m3:
            case FeatureKind::m4:
                return channel + "/m" + std::to_string(static_cast<int>(kind) + 1) + "/k" + std::to_string(k) +
                       "/c" + std::to_string(c);
            case FeatureKind::mean:
                return channel + "/mean/c0";
            case FeatureKind::dm1:
                return channel + "/dm1/g" + detail::format_double_short(gamma) + "/d" + std::to_string(c1) + ".." +
                       std::to_string(c2);
            case FeatureKind::dm2:
            case FeatureKind::dm3:
            case FeatureKind::dm4:
                return channel + "/dm" + std::to_string(static_cast<int>(kind) - 4) + "/k" + std::to_string(k) +
                       "/d" + std::to_string(c1) + ".." + std::to_string(c2);
        }
        throw std::logic_error("unreachable");
    }
};

/** Inverse of ColumnSpec::name; throws on anything it did not emit. */
inline ColumnSpec parse_column(const std::string& name) {
    auto fail = [&name]() -> std::runtime_error {
        return std::runtime_error("unparseable feature column \"" + name + "\"");
    };
    auto parts = detail::split(name, '/');
    ColumnSpec spec;
    if (parts.size() == 3 && parts[1] == "mean") {
        if (parts[2] != "c0") throw fail();
        spec.channel = parts[0];
        spec.kind = FeatureKind::mean;
        spec.c = 0;
        return spec;
    }
    if (parts.size() != 4) throw fail();
    spec.channel = parts[0];
    const std::string& metric = parts[1];
    const std::string& param = parts[2];
    const std::string& where = parts[3];
    bool delta = metric.size() == 3 && metric[0] == 'd';
    const std::string base = delta ? metric.substr(1) : metric;
    if (base.size() != 2 || base[0] != 'm' || base[1] < '1' || base[1] > '4') throw fail();
    int metric_no = base[1] - '0';
    spec.kind = static_cast<FeatureKind>((delta ? 4 : -1) + metric_no);
    if (metric_no == 1) {
        if (param.empty() || param[0] != 'g') throw fail();
        spec.gamma = detail::parse_real(param.substr(1), name);
    } else {
        if (param.empty() || param[0] != 'k') throw fail();
        int k = detail::parse_int(param.substr(1), name);
        if (k <= 0) throw fail();
        spec.k = static_cast<std::size_t>(k);
    }
    if (delta) {
        if (where.empty() || where[0] != 'd') throw fail();
        auto dots = where.find("..");
        if (dots == std::string::npos) throw fail();
        spec.c1 = detail::parse_int(where.substr(1, dots - 1), name);
        spec.c2 = detail::parse_int(where.substr(dots + 2), name);
        if (spec.c1 >= spec.c2) throw fail();
    } else {
        if (where.empty() || where[0] != 'c') throw fail();
        spec.c = detail::parse_int(where.substr(1), name);
    }
    return spec;
}

/**
 * The deterministic column order: per channel, m1 (gamma major, offset
 * minor), m2 to m4 (k major, offset minor), the publication mean, then
 * the delta families in the same parameter order with windows sorted by
 * (c1, c2).
 */
inline std::vector<ColumnSpec> enumerate_columns(const ParamGrid& grid) {
    std::vector<ColumnSpec> cols;
    for (const auto& ch : grid.channels) {
        for (double g : grid.gammas) {
            for (int c : grid.offsets) {
                cols.push_back({ch, FeatureKind::m1, g, 0, c, 0, 0});
            }
        }
        for (int metric = 2; metric <= 4; ++metric) {
            for (std::size_t k : grid.ks) {
                for (int c : grid.offsets) {
                    cols.push_back({ch, static_cast<FeatureKind>(metric - 1), 0, k, c, 0, 0});
                }
            }
        }
        cols.push_back({ch, FeatureKind::mean, 0, 0, 0, 0, 0});
        for (double g : grid.gammas) {
            for (const auto& [c1, c2] : grid.delta_pairs) {
                cols.push_back({ch, FeatureKind::dm1, g, 0, 0, c1, c2});
            }
        }
        for (int metric = 2; metric <= 4; ++metric) {
            for (std::size_t k : grid.ks) {
                for (const auto& [c1, c2] : grid.delta_pairs) {
                    cols.push_back({ch, static_cast<FeatureKind>(metric + 4), 0, k, 0, c1, c2});
                }
            }
        }
    }
    return cols;
}

// ---------------------------------------------------------------------------
// Feature table

class FeatureTable {
public:
    std::vector<std::string> ids;
    std::vector<std::uint8_t> focal;
    std::vector<ColumnSpec> columns;
    std::vector<std::string> column_names;
    std::vector<double> values;         // row-major, NaN where missing
    std::vector<std::uint8_t> reasons;  // Missing code per cell
    std::uint64_t corpus_hash = 0;
    std::uint64_t grid_hash = 0;

    std::size_t n_rows() const { return ids.size(); }

    std::size_t n_cols() const { return columns.size(); }

    MetricValue at(std::size_t row, std::size_t col) const {
        std::size_t cell = row * n_cols() + col;
        Missing why = static_cast<Missing>(reasons[cell]);
        return why == Missing::none ? MetricValue(values[cell]) : MetricValue::missing(why);
    }

    void set(std::size_t row, std::size_t col, const MetricValue& v) {
        std::size_t cell = row * n_cols() + col;
        values[cell] = v.value_or_nan();
        reasons[cell] = static_cast<std::uint8_t>(v.why());
    }

    std::optional<std::size_t> column_index(const std::string& name) const {
        auto it = column_lookup_.find(name);
        if (it == column_lookup_.end()) return std::nullopt;
        return it->second;
    }

    void rebuild_lookup() {
        column_names.clear();
        column_names.reserve(columns.size());
        column_lookup_.clear();
        for (std::size_t c = 0; c < columns.size(); ++c) {
            column_names.push_back(columns[c].name());
            if (!column_lookup_.emplace(column_names.back(), c).second) {
                throw std::logic_error("duplicate feature column " + column_names.back());
            }
        }
    }

private:
    std::unordered_map<std::string, std::size_t> column_lookup_;
};

namespace detail {

// Point-in-time values for one (paper, channel) at one offset, in grid
// parameter order.
struct OffsetValues {
    std::vector<MetricValue> m1;      // by gamma
    std::vector<MetricValue> m2, m3, m4; // by k
    MetricValue mean;
};

inline OffsetValues evaluate_offset(const FocalSweep& sweep, const ParamGrid& grid) {
    OffsetValues out;
    std::size_t n = sweep.size();
    if (n == 0) {
        MetricValue empty = MetricValue::missing(Missing::empty_comparison_set);
        out.m1.assign(grid.gammas.size(), empty);
        out.m2.assign(grid.ks.size(), empty);
        out.m3.assign(grid.ks.size(), empty);
        out.m4.assign(grid.ks.size(), empty);
        out.mean = empty;
        return out;
    }
    double mean = sweep.mean();
    out.mean = MetricValue(mean);
    out.m1.reserve(grid.gammas.size());
    for (double g : grid.gammas) {
        out.m1.push_back(MetricValue(static_cast<double>(sweep.count_within(g * mean))));
    }
    out.m2.reserve(grid.ks.size());
    out.m3.reserve(grid.ks.size());
    out.m4.reserve(grid.ks.size());
    for (std::size_t k : grid.ks) {
        if (n < k) {
            MetricValue short_set = MetricValue::missing(Missing::insufficient_neighbors);
            out.m2.push_back(short_set);
            out.m3.push_back(short_set);
            out.m4.push_back(short_set);
            continue;
        }
        double kth = sweep.kth(k);
        out.m2.push_back(MetricValue(kth));
        out.m3.push_back(MetricValue(sweep.sum_smallest(k) / static_cast<double>(k)));
        if (kth == 0) {
            out.m4.push_back(MetricValue::missing(Missing::degenerate_bandwidth));
        } else {
            out.m4.push_back(MetricValue(sweep.kernel_sum(kth)));
        }
    }
    return out;
}

}

/**
 * Sweep the grid over every paper. Rows keep corpus order; cells for
 * different papers never interact, so papers are evaluated in parallel.
 * Each (paper, channel) pair costs one distance pass regardless of how
 * many offsets and parameters the grid asks for.
 */
inline FeatureTable build_feature_table(const Corpus& corpus, ParamGrid grid, int threads = 1) {
    if (grid.channels.empty()) {
        for (const auto& ch : corpus.channels) grid.channels.push_back(ch.name);
    }
    grid.normalize();
    grid.check();
    for (const auto& name : grid.channels) {
        corpus.channel(name); // throws on unknown
    }

    // Offsets to evaluate: the grid's own plus every delta endpoint. Delta
    // endpoints are constrained to the offset axis, so this is the offset
    // axis plus the unconditional offset-0 mean.
    std::vector<int> eval_offsets = grid.offsets;
    if (!std::binary_search(eval_offsets.begin(), eval_offsets.end(), 0)) {
        eval_offsets.push_back(0);
        std::sort(eval_offsets.begin(), eval_offsets.end());
    }
    std::unordered_map<int, std::size_t> offset_slot;
    for (std::size_t i = 0; i < eval_offsets.size(); ++i) offset_slot[eval_offsets[i]] = i;
    std::size_t zero_slot = offset_slot.at(0);

    FeatureTable table;
    table.corpus_hash = corpus.content_hash();
    table.grid_hash = grid.hash();
    table.columns = enumerate_columns(grid);
    table.rebuild_lookup();
    table.ids.reserve(corpus.size());
    table.focal.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        table.ids.push_back(corpus.papers[i].id);
        table.focal.push_back(corpus.is_focal(i) ? 1 : 0);
    }
    table.values.assign(corpus.size() * table.n_cols(), std::numeric_limits<double>::quiet_NaN());
    table.reasons.assign(corpus.size() * table.n_cols(), static_cast<std::uint8_t>(Missing::upstream));

    std::vector<const EmbeddingChannel*> channel_ptrs;
    for (const auto& name : grid.channels) channel_ptrs.push_back(&corpus.channel(name));

    std::size_t gindex = 0;
    std::unordered_map<double, std::size_t> gamma_slot;
    for (double g : grid.gammas) gamma_slot[g] = gindex++;
    std::size_t kindex = 0;
    std::unordered_map<std::size_t, std::size_t> k_slot;
    for (std::size_t k : grid.ks) k_slot[k] = kindex++;

    detail::parallel_for(corpus.size(), threads, [&](std::size_t i) {
        int year = corpus.papers[i].year;
        std::size_t col = 0;
        for (std::size_t c = 0; c < channel_ptrs.size(); ++c) {
            FocalSweep sweep(corpus, *channel_ptrs[c], i);
            std::vector<detail::OffsetValues> by_offset;
            by_offset.reserve(eval_offsets.size());
            for (int off : eval_offsets) {
                sweep.advance_to_year(year + off);
                by_offset.push_back(detail::evaluate_offset(sweep, grid));
            }
            auto point_value = [&](FeatureKind kind, double gamma, std::size_t k, int off) {
                const detail::OffsetValues& v = by_offset[offset_slot.at(off)];
                switch (kind) {
                    case FeatureKind::m1: return v.m1[gamma_slot.at(gamma)];
                    case FeatureKind::m2: return v.m2[k_slot.at(k)];
                    case FeatureKind::m3: return v.m3[k_slot.at(k)];
                    case FeatureKind::m4: return v.m4[k_slot.at(k)];
                    default: return v.mean;
                }
            };
            std::size_t channel_cols = table.n_cols() / channel_ptrs.size();
            for (std::size_t local = 0; local < channel_cols; ++local, ++col) {
                const ColumnSpec& spec = table.columns[col];
                MetricValue value;
                if (spec.kind == FeatureKind::mean) {
                    value = by_offset[zero_slot].mean;
                } else if (spec.is_point_in_time()) {
                    value = point_value(spec.kind, spec.gamma, spec.k, spec.c);
                } else {
                    FeatureKind base = static_cast<FeatureKind>(static_cast<int>(spec.kind) - 5);
                    value = dynamic_delta(point_value(base, spec.gamma, spec.k, spec.c1),
                                          point_value(base, spec.gamma, spec.k, spec.c2));
                }
                table.set(i, col, value);
            }
        }
    });
    return table;
}

// ---------------------------------------------------------------------------
// Export / import

inline void write_feature_csv(const FeatureTable& table, const std::string& path) {
    auto os = detail::open_out(path);
    os << "id";
    for (const auto& name : table.column_names) os << ',' << name;
    os << '\n';
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        os << table.ids[r];
        for (std::size_t c = 0; c < table.n_cols(); ++c) {
            MetricValue v = table.at(r, c);
            os << ',';
            if (v.present()) {
                os << detail::format_double(v.value());
            } else {
                os << "NA";
            }
        }
        os << '\n';
    }
    if (!os) {
        throw std::runtime_error("write failed: " + path);
    }
}

inline void write_feature_table(const FeatureTable& table, const std::string& path) {
    auto os = detail::open_out(path, true);
    os.write("FTB1", 4);
    detail::write_u64(os, table.corpus_hash);
    detail::write_u64(os, table.grid_hash);
    detail::write_u64(os, table.n_rows());
    detail::write_u64(os, table.n_cols());
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        detail::write_string(os, table.ids[r]);
        os.put(static_cast<char>(table.focal[r]));
    }
    for (const auto& name : table.column_names) {
        detail::write_string(os, name);
    }
    for (double v : table.values) detail::write_f64(os, v);
    os.write(reinterpret_cast<const char*>(table.reasons.data()),
             static_cast<std::streamsize>(table.reasons.size()));
    if (!os) {
        throw std::runtime_error("write failed: " + path);
    }
}

inline FeatureTable read_feature_table(const std::string& path) {
    auto is = detail::open_in(path, true);
    detail::expect_magic(is, "FTB1", path);
    FeatureTable table;
    table.corpus_hash = detail::read_u64(is, path + " corpus hash");
    table.grid_hash = detail::read_u64(is, path + " grid hash");
    std::uint64_t rows = detail::read_u64(is, path + " row count");
    std::uint64_t cols = detail::read_u64(is, path + " column count");
    table.ids.reserve(rows);
    table.focal.reserve(rows);
    for (std::uint64_t r = 0; r < rows; ++r) {
        table.ids.push_back(detail::read_string(is, path + " row id"));
        int f = is.get();
        if (f < 0) throw std::runtime_error("truncated file while reading " + path + " focal flag");
        table.focal.push_back(static_cast<std::uint8_t>(f));
    }
    table.columns.reserve(cols);
    for (std::uint64_t c = 0; c < cols; ++c) {
        table.columns.push_back(parse_column(detail::read_string(is, path + " column name")));
    }
    table.rebuild_lookup();
    table.values.resize(rows * cols);
    for (auto& v : table.values) v = detail::read_f64(is, path + " cell");
    table.reasons.resize(rows * cols);
    is.read(reinterpret_cast<char*>(table.reasons.data()), static_cast<std::streamsize>(table.reasons.size()));
    if (static_cast<std::size_t>(is.gcount()) != table.reasons.size()) {
        throw std::runtime_error("truncated file while reading " + path + " missing mask");
    }
    return table;
}

}

#endif
