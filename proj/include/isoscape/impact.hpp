#ifndef ISOSCAPE_IMPACT_HPP
#define ISOSCAPE_IMPACT_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "isoscape/corpus.hpp"
#include "isoscape/detail/io.hpp"
#include "isoscape/detail/quantile.hpp"
#include "isoscape/value.hpp"

/**
 * @file impact.hpp
 *
 * @brief Outcome labels for focal papers: cohort-relative high-citation
 * flags and the citation-graph disruption index.
 *
 * High-citation is relative to the (publication year, subfield) cohort: a
 * paper is flagged at quantile q when its citation count is strictly above
 * the cohort's nearest-rank q-quantile.
 *
 * The disruption index classifies every paper that cites the focal work or
 * its references: N_F cite the focal paper only (they bypass its
 * intellectual ancestors), N_B cite both, N_R cite only the references.
 * DI = (N_F - N_B) / (N_F + N_B + N_R), so +1 means citers consistently
 * skip the ancestry (disruptive) and -1 means the paper is cited strictly
 * alongside it (consolidating).
 */

namespace isoscape {

// ---------------------------------------------------------------------------
// High-citation labels

struct HighCiteLabels {
    double q = 0.75;
    // Aligned to corpus paper order; labels exist only for focal papers
    // whose cohort could be thresholded.
    std::vector<std::optional<bool>> labels;
    std::size_t excluded_missing_count = 0; // focal papers without a citation count
};

/**
 * Flag focal papers whose citation count is strictly above their cohort's
 * nearest-rank q-quantile. Papers without a count are excluded from their
 * cohort (and counted); a cohort empty after exclusions labels nobody.
 */
inline HighCiteLabels label_high_cite(const Corpus& corpus, double q) {
    if (!(q > 0) || !(q < 1)) {
        throw std::invalid_argument("quantile must lie in (0, 1)");
    }
    HighCiteLabels out;
    out.q = q;
    out.labels.assign(corpus.size(), std::nullopt);

    std::map<std::pair<int, std::string>, std::vector<std::size_t>> cohorts;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!corpus.is_focal(i)) continue;
        if (!corpus.papers[i].citation_count) {
            ++out.excluded_missing_count;
            continue;
        }
        cohorts[{corpus.papers[i].year, corpus.papers[i].subfield}].push_back(i);
    }
    for (const auto& [key, members] : cohorts) {
        std::vector<double> counts;
        counts.reserve(members.size());
        for (std::size_t i : members) {
            counts.push_back(static_cast<double>(*corpus.papers[i].citation_count));
        }
        double threshold = detail::nearest_rank(counts, q);
        for (std::size_t i : members) {
            out.labels[i] = static_cast<double>(*corpus.papers[i].citation_count) > threshold;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Disruption index

struct DisruptionResult {
    MetricValue di;
    std::uint64_t n_f = 0; // cite focal, none of its references
    std::uint64_t n_b = 0; // cite focal and at least one reference
    std::uint64_t n_r = 0; // cite at least one reference, not focal
    bool has_references = false;
};

struct DisruptionOptions {
    // When set, only citers that are corpus papers published within
    // focal year + window count; external citers have no known year and
    // drop out. Off by default: every paper in the graph may be a citer.
    std::optional<int> citer_window_years;
};

/**
 * @brief Citation index shared by all per-focal disruption queries.
 *
 * Maps every cited id in the graph to the sorted set of ids citing it.
 * Building it once makes a full corpus pass linear in the edge count.
 */
class CiterIndex {
public:
    explicit CiterIndex(const CitationGraph& graph) {
        for (const auto& [citing, cited] : graph.edges) {
            citers_[cited].push_back(citing);
        }
        for (auto& [cited, citers] : citers_) {
            std::sort(citers.begin(), citers.end());
        }
    }

    static const std::vector<std::string>& none() {
        static const std::vector<std::string> empty;
        return empty;
    }

    /** Sorted ids citing `id`; empty when nothing in the graph cites it. */
    const std::vector<std::string>& citers_of(const std::string& id) const {
        auto it = citers_.find(id);
        return it == citers_.end() ? none() : it->second;
    }

private:
    std::unordered_map<std::string, std::vector<std::string>> citers_;
};

inline DisruptionResult disruption_index(const CiterIndex& index, const Corpus& corpus,
                                         const std::string& focal_id,
                                         const DisruptionOptions& options = {}) {
    const Paper& focal = corpus.papers[corpus.index_of(focal_id)];
    DisruptionResult out;
    if (!focal.reference_ids) {
        out.di = MetricValue::missing(Missing::no_references);
        return out;
    }
    out.has_references = true;

    auto admitted = [&](const std::string& citer) {
        if (citer == focal_id) return false; // a paper cannot disrupt itself
        if (!options.citer_window_years) return true;
        if (!corpus.has_paper(citer)) return false;
        return corpus.papers[corpus.index_of(citer)].year <= focal.year + *options.citer_window_years;
    };

    const std::vector<std::string>& focal_citers = index.citers_of(focal_id);
    std::unordered_set<std::string> cites_focal(focal_citers.begin(), focal_citers.end());

    std::unordered_set<std::string> cites_reference;
    for (const std::string& ref : *focal.reference_ids) {
        if (ref == focal_id) continue; // ignore a self-listing in the references
        for (const std::string& citer : index.citers_of(ref)) {
            cites_reference.insert(citer);
        }
    }

    for (const std::string& citer : focal_citers) {
        if (!admitted(citer)) continue;
        if (cites_reference.count(citer)) ++out.n_b;
        else ++out.n_f;
    }
    for (const std::string& citer : cites_reference) {
        if (!admitted(citer) || cites_focal.count(citer)) continue;
        ++out.n_r;
    }

    std::uint64_t denom = out.n_f + out.n_b + out.n_r;
    if (denom == 0) {
        out.di = MetricValue::missing(Missing::zero_denominator);
        return out;
    }
    out.di = MetricValue((static_cast<double>(out.n_f) - static_cast<double>(out.n_b)) /
                         static_cast<double>(denom));
    return out;
}

inline DisruptionResult disruption_index(const CitationGraph& graph, const Corpus& corpus,
                                         const std::string& focal_id,
                                         const DisruptionOptions& options = {}) {
    return disruption_index(CiterIndex(graph), corpus, focal_id, options);
}

// ---------------------------------------------------------------------------
// Combined impact table

struct ImpactRow {
    std::string id;
    std::optional<std::int64_t> citation_count;
    std::vector<std::optional<bool>> high_cite; // aligned to ImpactTable::quantiles
    std::optional<std::uint64_t> n_f, n_b, n_r;
    MetricValue di;
    std::optional<bool> disruptive;
};

struct ImpactTable {
    std::vector<double> quantiles;
    std::vector<ImpactRow> rows; // focal papers, corpus order
    std::size_t citation_excluded = 0;
};

inline ImpactTable build_impact(const Corpus& corpus, const std::vector<double>& quantiles,
                                const DisruptionOptions& options = {}) {
    ImpactTable out;
    out.quantiles = quantiles;

    std::vector<HighCiteLabels> by_q;
    by_q.reserve(quantiles.size());
    for (double q : quantiles) {
        by_q.push_back(label_high_cite(corpus, q));
    }
    if (!by_q.empty()) {
        out.citation_excluded = by_q.front().excluded_missing_count;
    }

    std::optional<CiterIndex> index;
    if (corpus.graph) {
        index.emplace(*corpus.graph);
    }

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!corpus.is_focal(i)) continue;
        ImpactRow row;
        row.id = corpus.papers[i].id;
        row.citation_count = corpus.papers[i].citation_count;
        for (const auto& labels : by_q) {
            row.high_cite.push_back(labels.labels[i]);
        }
        if (index) {
            DisruptionResult di = disruption_index(*index, corpus, row.id, options);
            row.di = di.di;
            if (di.has_references) {
                row.n_f = di.n_f;
                row.n_b = di.n_b;
                row.n_r = di.n_r;
            }
            if (di.di.present()) {
                row.disruptive = di.di.value() > 0;
            }
        } else {
            row.di = MetricValue::missing(Missing::upstream);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export / import

inline std::string high_cite_column(double q) {
    return "high_cite_" + detail::format_double_short(q);
}

inline void write_impact_csv(const ImpactTable& table, const std::string& path) {
    auto os = detail::open_out(path);
    os << "id,citation_count";
    for (double q : table.quantiles) os << ',' << high_cite_column(q);
    os << ",n_f,n_b,n_r,di,disruptive\n";
    auto put_flag = [&os](const std::optional<bool>& b) {
        if (b) os << (*b ? "true" : "false");
        else os << "NA";
    };
    for (const auto& row : table.rows) {
        os << row.id << ',';
        if (row.citation_count) os << *row.citation_count;
        else os << "NA";
        for (const auto& flag : row.high_cite) {
            os << ',';
            put_flag(flag);
        }
        os << ',';
        if (row.n_f) os << *row.n_f << ',' << *row.n_b << ',' << *row.n_r;
        else os << "NA,NA,NA";
        os << ',';
        if (row.di.present()) os << detail::format_double(row.di.value());
        else os << "NA";
        os << ',';
        put_flag(row.disruptive);
        os << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline ImpactTable read_impact_csv(const std::string& path) {
    auto is = detail::open_in(path);
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error(path + ": empty impact file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split(line, ',');
    if (header.size() < 7 || header[0] != "id" || header[1] != "citation_count") {
        throw std::runtime_error(path + ": unexpected impact header \"" + line + "\"");
    }
    ImpactTable table;
    for (std::size_t f = 2; f + 5 < header.size(); ++f) {
        const std::string prefix = "high_cite_";
        if (header[f].rfind(prefix, 0) != 0) {
            throw std::runtime_error(path + ": unexpected impact column \"" + header[f] + "\"");
        }
        table.quantiles.push_back(detail::parse_real(header[f].substr(prefix.size()), path));
    }
    auto parse_flag = [&path](const std::string& s) -> std::optional<bool> {
        if (s == "NA") return std::nullopt;
        if (s == "true") return true;
        if (s == "false") return false;
        throw std::runtime_error(path + ": bad boolean \"" + s + "\"");
    };
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto parts = detail::split(line, ',');
        if (parts.size() != header.size()) {
            throw std::runtime_error(path + " line " + std::to_string(line_no) + ": field count mismatch");
        }
        ImpactRow row;
        row.id = parts[0];
        if (parts[1] != "NA") row.citation_count = detail::parse_i64(parts[1], path);
        std::size_t f = 2;
        for (std::size_t k = 0; k < table.quantiles.size(); ++k, ++f) {
            row.high_cite.push_back(parse_flag(parts[f]));
        }
        if (parts[f] != "NA") {
            row.n_f = static_cast<std::uint64_t>(detail::parse_i64(parts[f], path));
            row.n_b = static_cast<std::uint64_t>(detail::parse_i64(parts[f + 1], path));
            row.n_r = static_cast<std::uint64_t>(detail::parse_i64(parts[f + 2], path));
        }
        f += 3;
        if (parts[f] != "NA") row.di = MetricValue(detail::parse_real(parts[f], path));
        ++f;
        row.disruptive = parse_flag(parts[f]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

}

#endif
