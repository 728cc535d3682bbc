#ifndef ISOSCAPE_ANALYSIS_HPP
#define ISOSCAPE_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "isoscape/detail/io.hpp"
#include "isoscape/detail/kahan.hpp"
#include "isoscape/detail/parallel.hpp"
#include "isoscape/detail/quantile.hpp"
#include "isoscape/detail/rng.hpp"
#include "isoscape/isolation.hpp"
#include "isoscape/novelty.hpp"
#include "isoscape/value.hpp"

/**
 * @file analysis.hpp
 *
 * @brief Archetype-conditional outcome rates with bootstrap uncertainty,
 * plus the score correlation.
 *
 * The question these answer: given a paper's archetype, how likely is it
 * to be highly cited, disruptive, or both? Rates are reported per
 * archetype and overall, with a paper-level bootstrap (archetype labels
 * held fixed, thresholds not refit) supplying standard errors and both
 * normal and percentile 95% intervals. Every iteration draws from its own
 * deterministically derived seed, so a report is bit-identical across
 * runs and worker counts.
 */

namespace isoscape {

/** Sample Pearson r; missing for constant input or fewer than 3 pairs. */
inline MetricValue pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("correlation inputs differ in length");
    }
    std::size_t n = x.size();
    if (n < 3) {
        return MetricValue::missing(Missing::insufficient_neighbors);
    }
    detail::KahanSum sx, sy;
    for (std::size_t i = 0; i < n; ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
    }
    double mx = sx.total() / static_cast<double>(n);
    double my = sy.total() / static_cast<double>(n);
    detail::KahanSum sxy, sxx, syy;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    if (sxx.total() == 0 || syy.total() == 0) {
        return MetricValue::missing(Missing::degenerate_bandwidth);
    }
    double r = sxy.total() / std::sqrt(sxx.total() * syy.total());
    return MetricValue(std::min(1.0, std::max(-1.0, r)));
}

// ---------------------------------------------------------------------------
// Rates

inline constexpr std::size_t rate_group_count = 5; // four archetypes + "all"

inline const char* rate_group_name(std::size_t g) {
    if (g < 4) return to_string(static_cast<Archetype>(g));
    return "all";
}

struct GroupRate {
    std::optional<double> rate;
    std::size_t n = 0;
    std::size_t positives = 0;
};

using PointRates = std::array<GroupRate, rate_group_count>;

/**
 * Outcome rate per archetype and overall, over the papers holding both an
 * archetype and an outcome.
 */
inline PointRates archetype_rates(const std::vector<std::optional<Archetype>>& archetypes,
                                  const std::vector<std::optional<bool>>& outcome) {
    if (archetypes.size() != outcome.size()) {
        throw std::invalid_argument("archetype and outcome vectors differ in length");
    }
    PointRates rates;
    for (std::size_t i = 0; i < archetypes.size(); ++i) {
        if (!archetypes[i] || !outcome[i]) continue;
        std::size_t g = static_cast<std::size_t>(*archetypes[i]);
        for (std::size_t slot : {g, rate_group_count - 1}) {
            ++rates[slot].n;
            if (*outcome[i]) ++rates[slot].positives;
        }
    }
    for (auto& r : rates) {
        if (r.n > 0) {
            r.rate = static_cast<double>(r.positives) / static_cast<double>(r.n);
        }
    }
    return rates;
}

struct BootstrapGroup {
    std::string group;
    std::optional<double> point;                              // full-sample rate
    std::optional<double> rate;                               // mean over iterations
    std::optional<double> se;                                 // bootstrap std of iteration rates
    std::optional<std::pair<double, double>> ci95;            // normal: rate +- 1.96 se
    std::optional<std::pair<double, double>> ci95_percentile; // nearest-rank order statistics
    std::size_t n = 0;
    std::size_t positives = 0;
    std::size_t missing_iterations = 0; // resamples where the group came up empty
};

struct RateReport {
    std::vector<BootstrapGroup> groups; // four archetypes then "all"
    std::size_t universe = 0;           // papers with archetype and outcome
    std::size_t iterations = 0;
    std::uint64_t seed = 0;
};

/**
 * Paper-level bootstrap of archetype-conditional rates. Each iteration
 * resamples the universe with replacement (fixed labels), recomputes the
 * per-group rates, and contributes to each group's mean/std/intervals; a
 * group absent from a resample skips that iteration and the skip count is
 * reported. Iteration i draws from a child seed derived from (seed, i),
 * making the report independent of the worker count.
 */
inline RateReport bootstrap_rates(const std::vector<std::optional<Archetype>>& archetypes,
                                  const std::vector<std::optional<bool>>& outcome,
                                  std::size_t iterations = 100, std::uint64_t seed = 0,
                                  int threads = 1) {
    if (archetypes.size() != outcome.size()) {
        throw std::invalid_argument("archetype and outcome vectors differ in length");
    }
    if (iterations == 0) {
        throw std::invalid_argument("bootstrap needs at least 1 iteration");
    }
    struct Member {
        std::uint8_t group;
        bool positive;
    };
    std::vector<Member> universe;
    for (std::size_t i = 0; i < archetypes.size(); ++i) {
        if (!archetypes[i] || !outcome[i]) continue;
        universe.push_back({static_cast<std::uint8_t>(*archetypes[i]), *outcome[i]});
    }

    RateReport report;
    report.universe = universe.size();
    report.iterations = iterations;
    report.seed = seed;
    PointRates point = archetype_rates(archetypes, outcome);

    std::vector<std::array<std::optional<double>, rate_group_count>> per_iteration(iterations);
    if (!universe.empty()) {
        std::size_t n = universe.size();
        detail::parallel_for(iterations, threads, [&](std::size_t it) {
            detail::SplitMix64 rng(detail::derive_seed(seed, it));
            std::array<std::size_t, rate_group_count> size{}, hits{};
            for (std::size_t draw = 0; draw < n; ++draw) {
                const Member& m = universe[static_cast<std::size_t>(rng.bounded(n))];
                ++size[m.group];
                ++size[rate_group_count - 1];
                if (m.positive) {
                    ++hits[m.group];
                    ++hits[rate_group_count - 1];
                }
            }
            for (std::size_t g = 0; g < rate_group_count; ++g) {
                if (size[g] > 0) {
                    per_iteration[it][g] = static_cast<double>(hits[g]) / static_cast<double>(size[g]);
                }
            }
        });
    }

    report.groups.resize(rate_group_count);
    for (std::size_t g = 0; g < rate_group_count; ++g) {
        BootstrapGroup& out = report.groups[g];
        out.group = rate_group_name(g);
        out.point = point[g].rate;
        out.n = point[g].n;
        out.positives = point[g].positives;

        std::vector<double> rates;
        rates.reserve(iterations);
        for (std::size_t it = 0; it < iterations; ++it) {
            if (per_iteration[it][g]) rates.push_back(*per_iteration[it][g]);
            else ++out.missing_iterations;
        }
        if (rates.empty()) continue;

        detail::KahanSum sum;
        for (double r : rates) sum.add(r);
        double mean = sum.total() / static_cast<double>(rates.size());
        double sd = 0;
        if (rates.size() > 1) {
            detail::KahanSum sq;
            for (double r : rates) {
                double d = r - mean;
                sq.add(d * d);
            }
            sd = std::sqrt(sq.total() / static_cast<double>(rates.size() - 1));
        }
        out.rate = mean;
        out.se = sd;
        out.ci95 = std::make_pair(mean - 1.96 * sd, mean + 1.96 * sd);
        std::sort(rates.begin(), rates.end());
        out.ci95_percentile = std::make_pair(detail::nearest_rank_sorted(rates, 0.025),
                                             detail::nearest_rank_sorted(rates, 0.975));
    }
    return report;
}

/** Rates for being highly cited AND disruptive at once. */
inline RateReport dual_impact_rates(const std::vector<std::optional<Archetype>>& archetypes,
                                    const std::vector<std::optional<bool>>& high_cite,
                                    const std::vector<std::optional<bool>>& disruptive,
                                    std::size_t iterations = 100, std::uint64_t seed = 0,
                                    int threads = 1) {
    if (high_cite.size() != disruptive.size()) {
        throw std::invalid_argument("outcome vectors differ in length");
    }
    std::vector<std::optional<bool>> both(high_cite.size());
    for (std::size_t i = 0; i < both.size(); ++i) {
        if (high_cite[i] && disruptive[i]) {
            both[i] = *high_cite[i] && *disruptive[i];
        }
    }
    return bootstrap_rates(archetypes, both, iterations, seed, threads);
}

// ---------------------------------------------------------------------------
// Full report assembly

struct OutcomeReport {
    std::string outcome; // e.g. "high_cite_0.75", "disruptive", "dual_0.75"
    RateReport rates;
};

struct ChannelAnnualMeans {
    std::string channel;
    AnnualMeanSeries series;
};

struct AnalysisReport {
    MetricValue correlation; // spatial vs temporal, jointly scored papers
    std::size_t correlation_n = 0;
    std::vector<OutcomeReport> outcomes;
    std::vector<ChannelAnnualMeans> annual_means;
    std::size_t scored = 0;   // papers carrying an archetype
    std::size_t unscored = 0; // focal papers without one
};

namespace detail {

inline nlohmann::json group_json(const BootstrapGroup& g) {
    nlohmann::json j;
    j["group"] = g.group;
    j["n"] = g.n;
    j["positives"] = g.positives;
    j["point_rate"] = g.point ? nlohmann::json(*g.point) : nlohmann::json();
    j["bootstrap_rate"] = g.rate ? nlohmann::json(*g.rate) : nlohmann::json();
    j["bootstrap_std"] = g.se ? nlohmann::json(*g.se) : nlohmann::json();
    if (g.ci95) {
        j["ci95"] = {g.ci95->first, g.ci95->second};
    } else {
        j["ci95"] = nullptr;
    }
    if (g.ci95_percentile) {
        j["ci95_percentile"] = {g.ci95_percentile->first, g.ci95_percentile->second};
    } else {
        j["ci95_percentile"] = nullptr;
    }
    j["missing_iterations"] = g.missing_iterations;
    return j;
}

}

inline nlohmann::json report_json(const AnalysisReport& report) {
    nlohmann::json j;
    j["correlation"] = report.correlation.present() ? nlohmann::json(report.correlation.value())
                                                    : nlohmann::json();
    j["correlation_n"] = report.correlation_n;
    j["scored"] = report.scored;
    j["unscored"] = report.unscored;
    j["outcomes"] = nlohmann::json::array();
    for (const auto& outcome : report.outcomes) {
        nlohmann::json o;
        o["outcome"] = outcome.outcome;
        o["universe"] = outcome.rates.universe;
        o["iterations"] = outcome.rates.iterations;
        o["seed"] = outcome.rates.seed;
        o["groups"] = nlohmann::json::array();
        for (const auto& g : outcome.rates.groups) {
            o["groups"].push_back(detail::group_json(g));
        }
        j["outcomes"].push_back(std::move(o));
    }
    j["annual_means"] = nlohmann::json::array();
    for (const auto& ch : report.annual_means) {
        nlohmann::json c;
        c["channel"] = ch.channel;
        c["years"] = ch.series.years;
        c["mean"] = nlohmann::json::array();
        c["change"] = nlohmann::json::array();
        for (const auto& m : ch.series.mean) {
            c["mean"].push_back(m.present() ? nlohmann::json(m.value()) : nlohmann::json());
        }
        for (const auto& m : ch.series.change) {
            c["change"].push_back(m.present() ? nlohmann::json(m.value()) : nlohmann::json());
        }
        j["annual_means"].push_back(std::move(c));
    }
    return j;
}

inline void write_report_json(const AnalysisReport& report, const std::string& path) {
    auto os = detail::open_out(path);
    os << report_json(report).dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline void write_rates_csv(const AnalysisReport& report, const std::string& path) {
    auto os = detail::open_out(path);
    os << "outcome,group,n,positives,point_rate,bootstrap_rate,bootstrap_std,"
          "ci95_lo,ci95_hi,pct95_lo,pct95_hi,missing_iterations\n";
    auto put = [&os](const std::optional<double>& v) {
        if (v) os << detail::format_double(*v);
        else os << "NA";
    };
    for (const auto& outcome : report.outcomes) {
        for (const auto& g : outcome.rates.groups) {
            os << outcome.outcome << ',' << g.group << ',' << g.n << ',' << g.positives << ',';
            put(g.point);
            os << ',';
            put(g.rate);
            os << ',';
            put(g.se);
            os << ',';
            put(g.ci95 ? std::optional<double>(g.ci95->first) : std::nullopt);
            os << ',';
            put(g.ci95 ? std::optional<double>(g.ci95->second) : std::nullopt);
            os << ',';
            put(g.ci95_percentile ? std::optional<double>(g.ci95_percentile->first) : std::nullopt);
            os << ',';
            put(g.ci95_percentile ? std::optional<double>(g.ci95_percentile->second) : std::nullopt);
            os << ',' << g.missing_iterations << '\n';
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

/** The plot-ready long format: one row per (archetype, outcome). */
inline void write_rates_long_csv(const AnalysisReport& report, const std::string& path) {
    auto os = detail::open_out(path);
    os << "archetype,outcome,rate,ci_lo,ci_hi\n";
    for (const auto& outcome : report.outcomes) {
        for (const auto& g : outcome.rates.groups) {
            os << g.group << ',' << outcome.outcome << ',';
            if (g.rate) os << detail::format_double(*g.rate);
            else os << "NA";
            os << ',';
            if (g.ci95) {
                os << detail::format_double(g.ci95->first) << ',' << detail::format_double(g.ci95->second);
            } else {
                os << "NA,NA";
            }
            os << '\n';
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline void write_report_markdown(const AnalysisReport& report, const std::string& path) {
    auto os = detail::open_out(path);
    os << "# Archetype-conditional impact rates\n\n";
    if (report.correlation.present()) {
        os << "Spatial/temporal score correlation: " << detail::format_double(report.correlation.value(), 6)
           << " (n = " << report.correlation_n << ")\n\n";
    } else {
        os << "Spatial/temporal score correlation: not defined\n\n";
    }
    os << "Scored papers: " << report.scored << "; unscored: " << report.unscored << "\n\n";
    for (const auto& outcome : report.outcomes) {
        os << "## " << outcome.outcome << "\n\n";
        os << "| Group | n | Rate | SE (bootstrap std) | 95% CI | 95% CI (percentile) |\n";
        os << "|---|---|---|---|---|---|\n";
        for (const auto& g : outcome.rates.groups) {
            os << "| " << g.group << " | " << g.n << " | ";
            if (g.rate) os << detail::format_double(*g.rate, 6);
            else os << "NA";
            os << " | ";
            if (g.se) os << detail::format_double(*g.se, 6);
            else os << "NA";
            os << " | ";
            if (g.ci95) {
                os << "[" << detail::format_double(g.ci95->first, 6) << ", "
                   << detail::format_double(g.ci95->second, 6) << "]";
            } else {
                os << "NA";
            }
            os << " | ";
            if (g.ci95_percentile) {
                os << "[" << detail::format_double(g.ci95_percentile->first, 6) << ", "
                   << detail::format_double(g.ci95_percentile->second, 6) << "]";
            } else {
                os << "NA";
            }
            os << " |\n";
        }
        os << "\n(" << outcome.rates.iterations << " bootstrap iterations, seed " << outcome.rates.seed
           << ", universe " << outcome.rates.universe << ")\n\n";
    }
    if (!report.annual_means.empty()) {
        os << "## Corpus-level annual mean distance\n\n";
        for (const auto& ch : report.annual_means) {
            os << "### channel " << ch.channel << "\n\n";
            os << "| Year | Mean pairwise distance | Change |\n|---|---|---|\n";
            for (std::size_t i = 0; i < ch.series.years.size(); ++i) {
                os << "| " << ch.series.years[i] << " | ";
                if (ch.series.mean[i].present()) os << detail::format_double(ch.series.mean[i].value(), 6);
                else os << "NA";
                os << " | ";
                if (ch.series.change[i].present()) os << detail::format_double(ch.series.change[i].value(), 6);
                else os << "NA";
                os << " |\n";
            }
            os << '\n';
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

}

#endif
