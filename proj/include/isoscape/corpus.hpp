#ifndef ISOSCAPE_CORPUS_HPP
#define ISOSCAPE_CORPUS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "isoscape/detail/hash.hpp"
#include "isoscape/detail/io.hpp"

/**
 * @file corpus.hpp
 *
 * @brief Immutable in-memory corpus: paper metadata, embedding channels and
 * the citation graph.
 *
 * A corpus is loaded once from three kinds of files and never mutated:
 *
 * - metadata: JSONL, one paper per line with
 *   `{"id": str, "year": int, "subfield": str, "citation_count": int?, "references": [str]?}`;
 * - channel manifest: JSON
 *   `{"channels": [{"name": str, "path": str, "dim": int, "metric": "euclidean"|"cosine"}]}`
 *   pointing at binary embedding files (magic `EMB1`, u32 dim, u64 rows,
 *   row-major float32, all little-endian, rows in metadata order);
 * - citation edges: CSV with header `citing_id,cited_id`.
 *
 * Loading is strict about structural errors (duplicate ids, dimension
 * mismatches, malformed lines with their line number). Semantic oddities
 * (years out of range, zero vectors under cosine, unknown cited ids) are the
 * business of `validate_corpus`, which never throws and reports per-check
 * severities instead.
 */

namespace isoscape {

enum class DistanceMetric : std::uint8_t { euclidean = 0, cosine = 1 };

inline const char* to_string(DistanceMetric m) {
    return m == DistanceMetric::euclidean ? "euclidean" : "cosine";
}

inline DistanceMetric metric_from_string(const std::string& s) {
    if (s == "euclidean") return DistanceMetric::euclidean;
    if (s == "cosine") return DistanceMetric::cosine;
    throw std::runtime_error("unknown distance metric \"" + s + "\" (expected euclidean or cosine)");
}

struct Paper {
    std::string id;
    int year = 0;
    std::string subfield;
    std::optional<std::int64_t> citation_count;
    std::optional<std::vector<std::string>> reference_ids;
};

/** One named matrix of per-paper vectors, row-aligned to the paper order. */
struct EmbeddingChannel {
    std::string name;
    std::uint32_t dim = 0;
    DistanceMetric default_metric = DistanceMetric::euclidean;
    std::vector<float> vectors; // row-major, rows() == corpus paper count

    std::size_t rows() const { return dim == 0 ? 0 : vectors.size() / dim; }

    const float* row(std::size_t i) const { return vectors.data() + i * dim; }
};

/**
 * @brief Deduplicated citation edges (citing -> cited) over string ids.
 *
 * Ids need not resolve to corpus papers; unresolved ones are kept and marked
 * external, since outside works may cite into the corpus and references may
 * point outside it.
 */
struct CitationGraph {
    std::vector<std::pair<std::string, std::string>> edges;
    std::size_t dropped_self_edges = 0;
    std::size_t dropped_duplicate_edges = 0;
};

struct CorpusOptions {
    int min_year = 1000;
    int max_year = 3000;
    // Papers at or before the cutoff are history only; papers inside
    // focal_range receive scores and impact labels. Defaults make every
    // loaded paper focal.
    std::optional<int> knowledge_base_cutoff;
    std::optional<std::pair<int, int>> focal_range;
};

class Corpus {
public:
    std::vector<Paper> papers;
    std::vector<EmbeddingChannel> channels;
    std::optional<CitationGraph> graph;
    int knowledge_base_cutoff = std::numeric_limits<int>::min();
    std::pair<int, int> focal_range{std::numeric_limits<int>::min(), std::numeric_limits<int>::max()};
    CorpusOptions options;

    std::size_t size() const { return papers.size(); }

    bool has_paper(const std::string& id) const { return index_by_id_.count(id) != 0; }

    std::size_t index_of(const std::string& id) const {
        auto it = index_by_id_.find(id);
        if (it == index_by_id_.end()) {
            throw std::invalid_argument("unknown paper id \"" + id + "\"");
        }
        return it->second;
    }

    const EmbeddingChannel& channel(const std::string& name) const {
        for (const auto& c : channels) {
            if (c.name == name) return c;
        }
        throw std::invalid_argument("unknown channel \"" + name + "\"");
    }

    bool has_channel(const std::string& name) const {
        for (const auto& c : channels) {
            if (c.name == name) return true;
        }
        return false;
    }

    bool is_focal(std::size_t index) const {
        int y = papers[index].year;
        return y >= focal_range.first && y <= focal_range.second;
    }

    /** Paper indices sorted by (year, metadata position). */
    const std::vector<std::uint32_t>& year_order() const { return year_order_; }

    /** years[r] of the paper at year_order()[r]; nondecreasing. */
    const std::vector<int>& years_in_order() const { return years_in_order_; }

    /** Number of papers with year <= y (a prefix of year_order). */
    std::size_t count_up_to_year(int y) const {
        return static_cast<std::size_t>(
            std::upper_bound(years_in_order_.begin(), years_in_order_.end(), y) - years_in_order_.begin());
    }

    /** Content hash over metadata, channel bytes and graph edges. */
    std::uint64_t content_hash() const { return content_hash_; }

    // Called once by the loader (and by synthetic-corpus builders) after the
    // public fields are filled in.
    void finalize() {
        index_by_id_.clear();
        index_by_id_.reserve(papers.size());
        for (std::size_t i = 0; i < papers.size(); ++i) {
            auto inserted = index_by_id_.emplace(papers[i].id, i);
            if (!inserted.second) {
                throw std::runtime_error("duplicate id " + papers[i].id);
            }
        }
        year_order_.resize(papers.size());
        for (std::size_t i = 0; i < papers.size(); ++i) {
            year_order_[i] = static_cast<std::uint32_t>(i);
        }
        std::stable_sort(year_order_.begin(), year_order_.end(),
                         [this](std::uint32_t a, std::uint32_t b) { return papers[a].year < papers[b].year; });
        years_in_order_.resize(papers.size());
        for (std::size_t r = 0; r < year_order_.size(); ++r) {
            years_in_order_[r] = papers[year_order_[r]].year;
        }
        content_hash_ = compute_hash();
    }

private:
    std::uint64_t compute_hash() const {
        detail::Fnv1a h;
        h.u64(papers.size());
        for (const auto& p : papers) {
            h.str(p.id);
            h.i64(p.year);
            h.str(p.subfield);
            h.u8(p.citation_count ? 1 : 0);
            if (p.citation_count) h.i64(*p.citation_count);
            h.u8(p.reference_ids ? 1 : 0);
            if (p.reference_ids) {
                h.u64(p.reference_ids->size());
                for (const auto& r : *p.reference_ids) h.str(r);
            }
        }
        h.u64(channels.size());
        for (const auto& c : channels) {
            h.str(c.name);
            h.u32(c.dim);
            h.u8(static_cast<std::uint8_t>(c.default_metric));
            h.u64(c.vectors.size());
            for (float v : c.vectors) h.f32(v);
        }
        h.u8(graph ? 1 : 0);
        if (graph) {
            h.u64(graph->edges.size());
            for (const auto& e : graph->edges) {
                h.str(e.first);
                h.str(e.second);
            }
        }
        h.i64(knowledge_base_cutoff);
        h.i64(focal_range.first);
        h.i64(focal_range.second);
        return h.digest();
    }

    std::unordered_map<std::string, std::size_t> index_by_id_;
    std::vector<std::uint32_t> year_order_;
    std::vector<int> years_in_order_;
    std::uint64_t content_hash_ = 0;
};

// ---------------------------------------------------------------------------
// Embedding binary files

inline void write_embedding_file(const std::string& path, std::uint32_t dim,
                                 const std::vector<float>& row_major) {
    if (dim == 0 || row_major.size() % dim != 0) {
        throw std::invalid_argument("embedding matrix shape inconsistent with dim");
    }
    auto os = detail::open_out(path, true);
    os.write("EMB1", 4);
    detail::write_u32(os, dim);
    detail::write_u64(os, row_major.size() / dim);
    for (float v : row_major) {
        detail::write_f32(os, v);
    }
    if (!os) {
        throw std::runtime_error("write failed: " + path);
    }
}

inline std::pair<std::uint32_t, std::vector<float>> read_embedding_file(const std::string& path) {
    auto is = detail::open_in(path, true);
    detail::expect_magic(is, "EMB1", path);
    std::uint32_t dim = detail::read_u32(is, path + " dim");
    std::uint64_t rows = detail::read_u64(is, path + " row count");
    std::vector<float> data;
    data.resize(static_cast<std::size_t>(rows) * dim);
    for (auto& v : data) {
        v = detail::read_f32(is, path + " vector data");
    }
    return {dim, std::move(data)};
}

// ---------------------------------------------------------------------------
// Loading

namespace detail {

inline Paper parse_paper_line(const std::string& line, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
        throw std::runtime_error("metadata line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    auto fail = [line_no](const std::string& msg) -> std::runtime_error {
        return std::runtime_error("metadata line " + std::to_string(line_no) + ": " + msg);
    };
    if (!j.is_object()) throw fail("expected a JSON object");
    if (!j.contains("id") || !j["id"].is_string()) throw fail("missing or non-string \"id\"");
    if (!j.contains("year") || !j["year"].is_number_integer()) throw fail("missing or non-integer \"year\"");
    if (!j.contains("subfield") || !j["subfield"].is_string()) throw fail("missing or non-string \"subfield\"");

    Paper p;
    p.id = j["id"].get<std::string>();
    if (p.id.empty()) throw fail("empty \"id\"");
    p.year = j["year"].get<int>();
    p.subfield = j["subfield"].get<std::string>();
    if (j.contains("citation_count") && !j["citation_count"].is_null()) {
        if (!j["citation_count"].is_number_integer()) throw fail("non-integer \"citation_count\"");
        std::int64_t c = j["citation_count"].get<std::int64_t>();
        if (c < 0) throw fail("negative \"citation_count\"");
        p.citation_count = c;
    }
    if (j.contains("references") && !j["references"].is_null()) {
        if (!j["references"].is_array()) throw fail("\"references\" is not an array");
        std::vector<std::string> refs;
        refs.reserve(j["references"].size());
        for (const auto& r : j["references"]) {
            if (!r.is_string()) throw fail("non-string entry in \"references\"");
            refs.push_back(r.get<std::string>());
        }
        p.reference_ids = std::move(refs);
    }
    return p;
}

}

inline std::vector<Paper> load_metadata(const std::string& metadata_path) {
    auto is = detail::open_in(metadata_path);
    std::vector<Paper> papers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        papers.push_back(detail::parse_paper_line(line, line_no));
    }
    return papers;
}

inline CitationGraph load_citations(const std::string& csv_path) {
    auto is = detail::open_in(csv_path);
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error(csv_path + ": empty citations file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "citing_id,cited_id") {
        throw std::runtime_error(csv_path + ": expected header \"citing_id,cited_id\", got \"" + line + "\"");
    }
    CitationGraph g;
    std::set<std::pair<std::string, std::string>> seen;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 >= line.size()) {
            throw std::runtime_error(csv_path + " line " + std::to_string(line_no) + ": expected \"citing_id,cited_id\"");
        }
        std::string citing = line.substr(0, comma);
        std::string cited = line.substr(comma + 1);
        if (citing == cited) {
            ++g.dropped_self_edges;
            continue;
        }
        if (!seen.emplace(citing, cited).second) {
            ++g.dropped_duplicate_edges;
            continue;
        }
        g.edges.emplace_back(std::move(citing), std::move(cited));
    }
    return g;
}

/**
 * Load and index a corpus. Paper order is metadata file order; every channel
 * is checked to be row-aligned to it. Structural problems throw
 * `std::runtime_error` with the offending file (and line where applicable).
 */
inline Corpus load_corpus(const std::string& metadata_path, const std::string& manifest_path,
                          const std::optional<std::string>& citations_path = std::nullopt,
                          const CorpusOptions& options = {}) {
    Corpus corpus;
    corpus.options = options;
    corpus.papers = load_metadata(metadata_path);

    {
        std::unordered_set<std::string> ids;
        for (const auto& p : corpus.papers) {
            if (!ids.insert(p.id).second) {
                throw std::runtime_error(metadata_path + ": duplicate id " + p.id);
            }
        }
    }

    auto manifest_stream = detail::open_in(manifest_path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_stream);
    } catch (const std::exception& e) {
        throw std::runtime_error(manifest_path + ": malformed JSON: " + e.what());
    }
    if (!manifest.is_object() || !manifest.contains("channels") || !manifest["channels"].is_array()) {
        throw std::runtime_error(manifest_path + ": expected {\"channels\": [...]}");
    }

    // Channel paths are resolved relative to the manifest's directory.
    std::string base_dir;
    {
        auto slash = manifest_path.find_last_of('/');
        if (slash != std::string::npos) {
            base_dir = manifest_path.substr(0, slash + 1);
        }
    }

    std::unordered_set<std::string> channel_names;
    for (const auto& entry : manifest["channels"]) {
        if (!entry.contains("name") || !entry.contains("path") || !entry.contains("dim") || !entry.contains("metric")) {
            throw std::runtime_error(manifest_path + ": channel entry needs name, path, dim, metric");
        }
        EmbeddingChannel ch;
        ch.name = entry["name"].get<std::string>();
        // Channel names become feature-column prefixes and CSV fields, so
        // the separators are off limits.
        if (ch.name.empty() || ch.name.find('/') != std::string::npos || ch.name.find(',') != std::string::npos) {
            throw std::runtime_error(manifest_path + ": channel name \"" + ch.name +
                                     "\" must be nonempty and contain no '/' or ','");
        }
        if (!channel_names.insert(ch.name).second) {
            throw std::runtime_error(manifest_path + ": duplicate channel name \"" + ch.name + "\"");
        }
        ch.default_metric = metric_from_string(entry["metric"].get<std::string>());
        std::uint32_t manifest_dim = entry["dim"].get<std::uint32_t>();
        std::string path = entry["path"].get<std::string>();
        if (!path.empty() && path.front() != '/') {
            path = base_dir + path;
        }
        auto [file_dim, data] = read_embedding_file(path);
        if (file_dim != manifest_dim) {
            throw std::runtime_error(path + ": dim mismatch (manifest says " + std::to_string(manifest_dim) +
                                     ", file header says " + std::to_string(file_dim) + ")");
        }
        ch.dim = file_dim;
        ch.vectors = std::move(data);
        if (ch.rows() != corpus.papers.size()) {
            throw std::runtime_error(path + ": channel row count " + std::to_string(ch.rows()) +
                                     " != paper count " + std::to_string(corpus.papers.size()));
        }
        corpus.channels.push_back(std::move(ch));
    }

    if (citations_path) {
        corpus.graph = load_citations(*citations_path);
    }

    int observed_min = std::numeric_limits<int>::max();
    for (const auto& p : corpus.papers) {
        observed_min = std::min(observed_min, p.year);
    }
    if (options.knowledge_base_cutoff) {
        corpus.knowledge_base_cutoff = *options.knowledge_base_cutoff;
    } else {
        corpus.knowledge_base_cutoff = corpus.papers.empty() ? 0 : observed_min - 1;
    }
    if (options.focal_range) {
        corpus.focal_range = *options.focal_range;
    } else {
        corpus.focal_range = {corpus.knowledge_base_cutoff + 1, std::numeric_limits<int>::max() / 2};
    }
    if (corpus.focal_range.first <= corpus.knowledge_base_cutoff) {
        throw std::runtime_error("focal range must start after the knowledge-base cutoff (focal starts " +
                                 std::to_string(corpus.focal_range.first) + ", cutoff " +
                                 std::to_string(corpus.knowledge_base_cutoff) + ")");
    }

    corpus.finalize();
    return corpus;
}

// ---------------------------------------------------------------------------
// Validation

enum class CheckSeverity : std::uint8_t { ok = 0, warning = 1, fatal_flag = 2 };

inline const char* to_string(CheckSeverity s) {
    switch (s) {
        case CheckSeverity::ok: return "ok";
        case CheckSeverity::warning: return "warning";
        case CheckSeverity::fatal_flag: return "fatal-flag";
    }
    return "unknown";
}

struct ValidationCheck {
    std::string name;
    CheckSeverity severity = CheckSeverity::ok;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool has_fatal() const {
        for (const auto& c : checks) {
            if (c.severity == CheckSeverity::fatal_flag) return true;
        }
        return false;
    }

    bool all_ok() const {
        for (const auto& c : checks) {
            if (c.severity != CheckSeverity::ok) return false;
        }
        return true;
    }
};

/**
 * Run every corpus sanity check. Validation never throws and never aborts:
 * each check reports ok / warning / fatal-flag, and callers decide whether a
 * fatal flag stops the pipeline.
 */
inline ValidationReport validate_corpus(const Corpus& corpus) {
    ValidationReport report;

    {
        // Load already rejects duplicates; re-derive so hand-built corpora
        // get the same verdict.
        std::unordered_set<std::string> ids;
        std::size_t dupes = 0;
        for (const auto& p : corpus.papers) {
            if (!ids.insert(p.id).second) ++dupes;
        }
        ValidationCheck c{"id_uniqueness", CheckSeverity::ok, "all ids unique"};
        if (dupes > 0) {
            c.severity = CheckSeverity::fatal_flag;
            c.detail = std::to_string(dupes) + " duplicate id(s)";
        }
        report.checks.push_back(std::move(c));
    }

    {
        std::size_t out_of_range = 0;
        for (const auto& p : corpus.papers) {
            if (p.year < corpus.options.min_year || p.year > corpus.options.max_year) ++out_of_range;
        }
        ValidationCheck c{"year_range", CheckSeverity::ok,
                          "all years within [" + std::to_string(corpus.options.min_year) + ", " +
                              std::to_string(corpus.options.max_year) + "]"};
        if (out_of_range > 0) {
            c.severity = CheckSeverity::fatal_flag;
            c.detail = std::to_string(out_of_range) + " paper(s) outside configured year range";
        }
        report.checks.push_back(std::move(c));
    }

    for (const auto& ch : corpus.channels) {
        if (ch.default_metric != DistanceMetric::cosine) continue;
        std::size_t zero_rows = 0;
        for (std::size_t i = 0; i < ch.rows(); ++i) {
            const float* v = ch.row(i);
            bool all_zero = true;
            for (std::uint32_t d = 0; d < ch.dim; ++d) {
                if (v[d] != 0.0f) {
                    all_zero = false;
                    break;
                }
            }
            if (all_zero) ++zero_rows;
        }
        ValidationCheck c{"cosine_zero_rows/" + ch.name, CheckSeverity::ok, "no zero vectors"};
        if (zero_rows > 0) {
            c.severity = CheckSeverity::fatal_flag;
            c.detail = std::to_string(zero_rows) + " zero vector(s) in cosine channel";
        }
        report.checks.push_back(std::move(c));
    }

    {
        std::size_t nonfinite = 0;
        for (const auto& ch : corpus.channels) {
            for (float v : ch.vectors) {
                if (!std::isfinite(v)) ++nonfinite;
            }
        }
        ValidationCheck c{"finite_vectors", CheckSeverity::ok, "all vector entries finite"};
        if (nonfinite > 0) {
            c.severity = CheckSeverity::fatal_flag;
            c.detail = std::to_string(nonfinite) + " non-finite vector entries";
        }
        report.checks.push_back(std::move(c));
    }

    if (corpus.graph) {
        std::unordered_set<std::string> external;
        for (const auto& e : corpus.graph->edges) {
            if (!corpus.has_paper(e.first)) external.insert(e.first);
            if (!corpus.has_paper(e.second)) external.insert(e.second);
        }
        ValidationCheck c{"citation_external_ids", CheckSeverity::ok, "all edge ids resolve to corpus papers"};
        if (!external.empty()) {
            c.severity = CheckSeverity::warning;
            c.detail = std::to_string(external.size()) + " external cited id" + (external.size() == 1 ? "" : "s");
        }
        report.checks.push_back(std::move(c));
    }

    {
        std::size_t with_count = 0;
        for (const auto& p : corpus.papers) {
            if (p.citation_count) ++with_count;
        }
        double fraction = corpus.papers.empty() ? 1.0
                                                : static_cast<double>(with_count) / static_cast<double>(corpus.papers.size());
        ValidationCheck c{"citation_count_coverage", CheckSeverity::ok,
                          detail::format_double(fraction, 6) + " of papers carry a citation count"};
        if (with_count < corpus.papers.size()) {
            // Papers without counts are excluded from impact labeling.
            c.severity = CheckSeverity::warning;
            c.detail = std::to_string(corpus.papers.size() - with_count) + " paper(s) without citation_count; " + c.detail;
        }
        report.checks.push_back(std::move(c));
    }

    return report;
}

}

#endif
