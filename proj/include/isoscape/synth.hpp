#ifndef ISOSCAPE_SYNTH_HPP
#define ISOSCAPE_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "isoscape/corpus.hpp"
#include "isoscape/detail/rng.hpp"
#include "isoscape/novelty.hpp"

/**
 * @file synth.hpp
 *
 * @brief Seeded synthetic corpora: featureless random ones for fuzzing and
 * a planted-structure one whose papers have known intended archetypes.
 *
 * Everything here is a pure function of its seed, so fixtures regenerate
 * bit-identically anywhere.
 */

namespace isoscape {
namespace synth {

struct ChannelSpec {
    std::string name;
    DistanceMetric metric = DistanceMetric::euclidean;
};

struct RandomCorpusSpec {
    std::size_t n = 300;
    std::uint32_t dim = 8;
    int first_year = 2000;
    int year_span = 12; // years drawn uniformly from [first_year, first_year + span)
    std::vector<ChannelSpec> channels = {{"chan_a", DistanceMetric::euclidean}};
    std::uint64_t seed = 0;
    std::size_t subfields = 3;
    bool with_citations = true;
    double missing_citation_fraction = 0.05;
    double missing_reference_fraction = 0.10;
    std::optional<int> knowledge_base_cutoff;
    std::optional<std::pair<int, int>> focal_range;
};

namespace detail_ {

inline std::string paper_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%05zu", i);
    return std::string(buf);
}

}

/** Unstructured corpus: Gaussian embeddings, uniform years, random citations. */
inline Corpus random_corpus(const RandomCorpusSpec& spec) {
    isoscape::detail::SplitMix64 rng(spec.seed);
    Corpus corpus;
    corpus.papers.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        Paper p;
        p.id = detail_::paper_id(i);
        p.year = spec.first_year + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.year_span)));
        p.subfield = "sf" + std::to_string(rng.bounded(spec.subfields));
        corpus.papers.push_back(std::move(p));
    }
    for (const auto& ch_spec : spec.channels) {
        EmbeddingChannel ch;
        ch.name = ch_spec.name;
        ch.dim = spec.dim;
        ch.default_metric = ch_spec.metric;
        ch.vectors.resize(spec.n * spec.dim);
        for (auto& v : ch.vectors) {
            v = static_cast<float>(rng.normal());
        }
        corpus.channels.push_back(std::move(ch));
    }
    if (spec.with_citations) {
        // References point at earlier-published papers; the graph holds the
        // matching edges plus external citers that exist only as graph ids.
        std::vector<std::size_t> order(spec.n);
        for (std::size_t i = 0; i < spec.n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&corpus](std::size_t a, std::size_t b) {
            return corpus.papers[a].year < corpus.papers[b].year;
        });
        std::vector<std::size_t> rank(spec.n);
        for (std::size_t r = 0; r < spec.n; ++r) rank[order[r]] = r;

        CitationGraph graph;
        for (std::size_t i = 0; i < spec.n; ++i) {
            Paper& p = corpus.papers[i];
            if (rng.uniform01() >= spec.missing_citation_fraction) {
                p.citation_count = static_cast<std::int64_t>(rng.bounded(200));
            }
            bool skip_refs = rng.uniform01() < spec.missing_reference_fraction;
            std::size_t earlier = rank[i];
            std::uint64_t want = rng.bounded(7);
            if (skip_refs || earlier == 0) {
                if (!skip_refs) p.reference_ids = std::vector<std::string>{};
                continue;
            }
            std::vector<std::string> refs;
            for (std::uint64_t t = 0; t < want; ++t) {
                const std::string& ref = corpus.papers[order[rng.bounded(earlier)]].id;
                if (std::find(refs.begin(), refs.end(), ref) == refs.end()) {
                    refs.push_back(ref);
                }
            }
            for (const auto& ref : refs) {
                graph.edges.emplace_back(p.id, ref);
            }
            p.reference_ids = std::move(refs);
        }
        std::uint64_t external = spec.n / 2;
        for (std::uint64_t x = 0; x < external; ++x) {
            std::string citer = "X" + std::to_string(x);
            std::uint64_t fanout = 1 + rng.bounded(4);
            for (std::uint64_t t = 0; t < fanout; ++t) {
                graph.edges.emplace_back(citer, corpus.papers[rng.bounded(spec.n)].id);
            }
        }
        corpus.graph = std::move(graph);
    }
    if (spec.knowledge_base_cutoff) {
        corpus.knowledge_base_cutoff = *spec.knowledge_base_cutoff;
    } else {
        corpus.knowledge_base_cutoff = spec.first_year - 1;
    }
    if (spec.focal_range) {
        corpus.focal_range = *spec.focal_range;
    } else {
        corpus.focal_range = {corpus.knowledge_base_cutoff + 1, spec.first_year + spec.year_span};
    }
    corpus.options.min_year = spec.first_year - 10;
    corpus.options.max_year = spec.first_year + spec.year_span + 10;
    corpus.finalize();
    return corpus;
}

// ---------------------------------------------------------------------------
// Planted-archetype corpus

struct PlantedPaper {
    std::string id;
    Archetype intended;
};

struct PlantedCorpus {
    Corpus corpus;
    std::vector<PlantedPaper> planted; // the 400 focal papers
};

/**
 * @brief A 2,000-paper corpus whose focal year contains four planted
 * groups, one per archetype.
 *
 * Geometry (32 dimensions, one euclidean channel):
 *
 * - a background "sea" of 550 papers, N(0, 3^2 I), years 1990-2004;
 * - an old dense cluster of 200 papers at distance 20 from the origin
 *   (sigma 0.5), years 1990-2004;
 * - a recent burst cluster of 250 papers at distance 20 in an orthogonal
 *   direction (sigma 0.5), years 2008-2009;
 * - 100 focal papers inside the old cluster -> dense neighborhood that was
 *   always there: Consolidating;
 * - 100 focal papers inside the recent burst -> dense neighborhood that
 *   appeared just before publication: Trendy;
 * - 100 focal papers at isolated positions (radius 40, random directions,
 *   mutually ~56 apart) -> far from everything at every offset: Outlying;
 * - 100 focal papers at isolated positions, each accompanied by its own
 *   6-paper burst (years 2008-2009) at distance ~8 -> isolated overall yet
 *   rapidly densifying: Trailblazing.
 *
 * Focal year is 2010 with the knowledge base cut at 2009, so scores are
 * computed exactly for the 400 planted papers.
 */
inline PlantedCorpus planted_corpus(std::uint64_t seed = 42, std::uint32_t dim = 32) {
    if (dim < 4) {
        throw std::invalid_argument("planted corpus needs dim >= 4");
    }
    isoscape::detail::SplitMix64 rng(seed);
    PlantedCorpus out;
    Corpus& corpus = out.corpus;

    EmbeddingChannel ch;
    ch.name = "sem";
    ch.dim = dim;
    ch.default_metric = DistanceMetric::euclidean;

    std::size_t next_id = 0;
    auto add_paper = [&](int year, const std::vector<double>& center, double sigma) {
        Paper p;
        p.id = detail_::paper_id(next_id++);
        p.year = year;
        p.subfield = "sf" + std::to_string(rng.bounded(2));
        p.citation_count = static_cast<std::int64_t>(rng.bounded(150));
        corpus.papers.push_back(std::move(p));
        for (std::uint32_t d = 0; d < dim; ++d) {
            ch.vectors.push_back(static_cast<float>(center[d] + sigma * rng.normal()));
        }
        return corpus.papers.back().id;
    };
    auto random_unit = [&]() {
        std::vector<double> v(dim);
        double norm2 = 0;
        for (auto& x : v) {
            x = rng.normal();
            norm2 += x * x;
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) x *= inv;
        return v;
    };
    auto scaled = [&](const std::vector<double>& u, double r) {
        std::vector<double> v(dim);
        for (std::uint32_t d = 0; d < dim; ++d) v[d] = r * u[d];
        return v;
    };

    std::vector<double> origin(dim, 0.0);
    std::vector<double> old_center(dim, 0.0);
    old_center[0] = 20.0;
    std::vector<double> burst_center(dim, 0.0);
    burst_center[1] = 20.0;

    for (std::size_t i = 0; i < 550; ++i) {
        add_paper(1990 + static_cast<int>(rng.bounded(15)), origin, 3.0);
    }
    for (std::size_t i = 0; i < 200; ++i) {
        add_paper(1990 + static_cast<int>(rng.bounded(15)), old_center, 0.5);
    }
    for (std::size_t i = 0; i < 250; ++i) {
        add_paper(2008 + static_cast<int>(rng.bounded(2)), burst_center, 0.5);
    }
    for (std::size_t i = 0; i < 100; ++i) {
        out.planted.push_back({add_paper(2010, old_center, 0.5), Archetype::Consolidating});
    }
    for (std::size_t i = 0; i < 100; ++i) {
        out.planted.push_back({add_paper(2010, burst_center, 0.5), Archetype::Trendy});
    }
    for (std::size_t i = 0; i < 100; ++i) {
        out.planted.push_back({add_paper(2010, scaled(random_unit(), 40.0), 0.5), Archetype::Outlying});
    }
    for (std::size_t i = 0; i < 100; ++i) {
        std::vector<double> site = scaled(random_unit(), 40.0);
        std::vector<double> nearby = site;
        std::vector<double> dir = random_unit();
        for (std::uint32_t d = 0; d < dim; ++d) nearby[d] += 8.0 * dir[d];
        for (std::size_t b = 0; b < 6; ++b) {
            add_paper(2008 + static_cast<int>(rng.bounded(2)), nearby, 1.0);
        }
        out.planted.push_back({add_paper(2010, site, 0.5), Archetype::Trailblazing});
    }

    corpus.channels.push_back(std::move(ch));
    corpus.knowledge_base_cutoff = 2009;
    corpus.focal_range = {2010, 2010};
    corpus.options.min_year = 1980;
    corpus.options.max_year = 2020;
    corpus.finalize();
    return out;
}

// ---------------------------------------------------------------------------
// Fixture writing

/**
 * Write a corpus as the loadable file set: metadata.jsonl, manifest.json,
 * one .emb file per channel and citations.csv when a graph exists. The
 * directory must already exist.
 */
inline void write_corpus_files(const Corpus& corpus, const std::string& dir) {
    {
        auto os = isoscape::detail::open_out(dir + "/metadata.jsonl");
        for (const auto& p : corpus.papers) {
            nlohmann::json j;
            j["id"] = p.id;
            j["year"] = p.year;
            j["subfield"] = p.subfield;
            if (p.citation_count) j["citation_count"] = *p.citation_count;
            if (p.reference_ids) j["references"] = *p.reference_ids;
            os << j.dump() << '\n';
        }
    }
    {
        nlohmann::json manifest;
        manifest["channels"] = nlohmann::json::array();
        for (const auto& ch : corpus.channels) {
            nlohmann::json c;
            c["name"] = ch.name;
            c["path"] = ch.name + ".emb";
            c["dim"] = ch.dim;
            c["metric"] = to_string(ch.default_metric);
            manifest["channels"].push_back(std::move(c));
            write_embedding_file(dir + "/" + ch.name + ".emb", ch.dim, ch.vectors);
        }
        auto os = isoscape::detail::open_out(dir + "/manifest.json");
        os << manifest.dump(2) << '\n';
    }
    if (corpus.graph) {
        auto os = isoscape::detail::open_out(dir + "/citations.csv");
        os << "citing_id,cited_id\n";
        for (const auto& [citing, cited] : corpus.graph->edges) {
            os << citing << ',' << cited << '\n';
        }
    }
}

}
}

#endif
