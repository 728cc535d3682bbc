#ifndef ISOSCAPE_PIPELINE_HPP
#define ISOSCAPE_PIPELINE_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "isoscape/analysis.hpp"
#include "isoscape/config.hpp"
#include "isoscape/corpus.hpp"
#include "isoscape/detail/hash.hpp"
#include "isoscape/detail/rng.hpp"
#include "isoscape/features.hpp"
#include "isoscape/impact.hpp"
#include "isoscape/isolation.hpp"
#include "isoscape/novelty.hpp"
#include "isoscape/version.hpp"

/**
 * @file pipeline.hpp
 *
 * @brief Stage drivers behind the CLI subcommands.
 *
 * Each stage reads its inputs from files (the corpus named by the config,
 * or the outputs of earlier stages in the output directory) and writes its
 * outputs back, so running `pipeline` is exactly the composition of the six
 * stages and the staged and one-shot paths produce byte-identical files.
 *
 * Every stage also rewrites `run_manifest.json` in the output directory:
 * the resolved config, corpus and grid hashes, the derived seeds and the
 * stages run so far. Deliberately no wall-clock timestamp, so reruns of the
 * same inputs leave identical bytes.
 */

namespace isoscape {

// Stable stream ids for deriving per-consumer seeds from the master seed.
// Bootstrap outcome number i (in report order) uses stream
// bootstrap_stream_base + i.
inline constexpr std::uint64_t annual_mean_stream = 1;
inline constexpr std::uint64_t bootstrap_stream_base = 16;

namespace stage_file {
inline constexpr const char* validation = "validation.json";
inline constexpr const char* features_bin = "features.bin";
inline constexpr const char* features_csv = "features.csv";
inline constexpr const char* scores = "scores.csv";
inline constexpr const char* loadings = "loadings.csv";
inline constexpr const char* archetypes = "archetypes.csv";
inline constexpr const char* impact = "impact.csv";
inline constexpr const char* analysis_json = "analysis.json";
inline constexpr const char* rates = "rates.csv";
inline constexpr const char* rates_long = "rates_long.csv";
inline constexpr const char* report_md = "report.md";
inline constexpr const char* run_manifest = "run_manifest.json";
}

namespace detail {

inline std::string out_path(const RunConfig& cfg, const char* name) {
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

inline void ensure_output_dir(const RunConfig& cfg) {
    if (cfg.output_dir.empty()) {
        throw std::runtime_error("no output directory configured (set \"output\" or pass --output)");
    }
    std::filesystem::create_directories(cfg.output_dir);
}

}

/** Names of the bootstrapped outcomes, in report order. */
inline std::vector<std::string> outcome_names(const RunConfig& cfg) {
    std::vector<std::string> names;
    for (double q : cfg.high_cite_quantiles) {
        names.push_back(high_cite_column(q));
    }
    names.push_back("disruptive");
    for (double q : cfg.high_cite_quantiles) {
        names.push_back("dual_" + detail::format_double_short(q));
    }
    return names;
}

/**
 * Rewrite the run manifest, carrying forward fields an earlier stage knew
 * but this one does not (a stage that never loads the corpus keeps the
 * recorded corpus hash). The manifest carries its own content hash over
 * everything else in it.
 */
inline void record_stage(const RunConfig& cfg, const std::string& stage,
                         std::optional<std::uint64_t> corpus_hash) {
    const std::string path = detail::out_path(cfg, stage_file::run_manifest);
    nlohmann::json prev;
    {
        std::ifstream is(path, std::ios::binary);
        if (is) {
            try {
                prev = nlohmann::json::parse(is);
            } catch (const std::exception&) {
                prev = nlohmann::json();
            }
        }
    }

    nlohmann::json m;
    m["artifact_version"] = artifact_version;
    m["config"] = config_to_json(cfg);
    if (corpus_hash) {
        m["corpus_hash"] = detail::hex64(*corpus_hash);
    } else if (prev.is_object() && prev.contains("corpus_hash")) {
        m["corpus_hash"] = prev["corpus_hash"];
    } else {
        m["corpus_hash"] = nullptr;
    }
    m["grid_hash"] = detail::hex64(cfg.effective_grid().hash());
    m["seed"] = cfg.seed;
    nlohmann::json seeds;
    seeds["annual_mean"] = detail::derive_seed(cfg.seed, annual_mean_stream);
    nlohmann::json boot;
    std::vector<std::string> outcomes = outcome_names(cfg);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        boot[outcomes[i]] = detail::derive_seed(cfg.seed, bootstrap_stream_base + i);
    }
    seeds["bootstrap"] = std::move(boot);
    m["derived_seeds"] = std::move(seeds);

    std::vector<std::string> stages;
    if (prev.is_object() && prev.contains("stages_run") && prev["stages_run"].is_array()) {
        for (const auto& s : prev["stages_run"]) {
            if (s.is_string()) stages.push_back(s.get<std::string>());
        }
    }
    if (std::find(stages.begin(), stages.end(), stage) == stages.end()) {
        stages.push_back(stage);
    }
    m["stages_run"] = stages;

    detail::Fnv1a h;
    h.str(m.dump());
    m["content_hash"] = detail::hex64(h.digest());

    auto os = detail::open_out(path);
    os << m.dump(2) << '\n';
}

inline Corpus load_from_config(const RunConfig& cfg) {
    return load_corpus(cfg.metadata_path, cfg.manifest_path, cfg.citations_path, cfg.corpus);
}

/** Throw (refusing the stage) when the corpus carries fatal validation flags. */
inline void require_healthy(const Corpus& corpus) {
    ValidationReport report = validate_corpus(corpus);
    if (!report.has_fatal()) return;
    std::string msg = "corpus failed validation, run ingest for the full report:";
    for (const auto& c : report.checks) {
        if (c.severity == CheckSeverity::fatal_flag) {
            msg += "\n  " + c.name + ": " + c.detail;
        }
    }
    throw std::runtime_error(msg);
}

// ---------------------------------------------------------------------------
// Stages

/** Load, validate, and record the corpus; never throws on mere bad data. */
inline ValidationReport run_ingest(const RunConfig& cfg) {
    detail::ensure_output_dir(cfg);
    Corpus corpus = load_from_config(cfg);
    ValidationReport report = validate_corpus(corpus);

    nlohmann::json j;
    j["corpus_hash"] = detail::hex64(corpus.content_hash());
    j["papers"] = corpus.size();
    std::size_t focal = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus.is_focal(i)) ++focal;
    }
    j["focal_papers"] = focal;
    j["knowledge_base_cutoff"] = corpus.knowledge_base_cutoff;
    j["focal_range"] = {corpus.focal_range.first, corpus.focal_range.second};
    j["channels"] = nlohmann::json::array();
    for (const auto& ch : corpus.channels) {
        j["channels"].push_back({{"name", ch.name},
                                 {"dim", ch.dim},
                                 {"metric", to_string(ch.default_metric)},
                                 {"rows", ch.rows()}});
    }
    if (corpus.graph) {
        j["citation_edges"] = corpus.graph->edges.size();
        j["dropped_self_edges"] = corpus.graph->dropped_self_edges;
        j["dropped_duplicate_edges"] = corpus.graph->dropped_duplicate_edges;
    } else {
        j["citation_edges"] = nullptr;
    }
    j["ok"] = !report.has_fatal();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : report.checks) {
        j["checks"].push_back(
            {{"name", c.name}, {"severity", to_string(c.severity)}, {"detail", c.detail}});
    }
    {
        auto os = detail::open_out(detail::out_path(cfg, stage_file::validation));
        os << j.dump(2) << '\n';
    }
    record_stage(cfg, "ingest", corpus.content_hash());
    return report;
}

/** Compute the full feature table and write both its binary and CSV forms. */
inline void run_features(const RunConfig& cfg) {
    detail::ensure_output_dir(cfg);
    Corpus corpus = load_from_config(cfg);
    require_healthy(corpus);
    FeatureTable table = build_feature_table(corpus, cfg.effective_grid(), cfg.threads);
    write_feature_table(table, detail::out_path(cfg, stage_file::features_bin));
    write_feature_csv(table, detail::out_path(cfg, stage_file::features_csv));
    record_stage(cfg, "features", corpus.content_hash());
}

/** Reduce the stored feature table to the two composite scores. */
inline void run_score(const RunConfig& cfg) {
    detail::ensure_output_dir(cfg);
    FeatureTable table = read_feature_table(detail::out_path(cfg, stage_file::features_bin));
    NoveltyScores scores = compute_scores(table, cfg.score_options());
    write_scores_csv(scores, detail::out_path(cfg, stage_file::scores));
    write_loadings_csv(scores, detail::out_path(cfg, stage_file::loadings));
    record_stage(cfg, "score", std::nullopt);
}

/** Label scored papers with quantile-split archetypes. */
inline void run_classify(const RunConfig& cfg) {
    detail::ensure_output_dir(cfg);
    std::vector<ScoreRow> rows = read_scores_csv(detail::out_path(cfg, stage_file::scores));
    std::vector<std::string> subfields;
    if (cfg.scope == Scope::subfield) {
        std::unordered_map<std::string, std::string> by_id;
        for (const auto& p : load_metadata(cfg.metadata_path)) {
            by_id[p.id] = p.subfield;
        }
        subfields.reserve(rows.size());
        for (const auto& r : rows) {
            auto it = by_id.find(r.id);
            if (it == by_id.end()) {
                throw std::runtime_error("scored paper " + r.id +
                                         " is absent from the metadata file; scores.csv and the "
                                         "configured corpus disagree");
            }
            subfields.push_back(it->second);
        }
    }
    ArchetypeAssignment assignment = classify_archetype(rows, cfg.typology_q, cfg.scope, subfields);
    write_archetypes_csv(rows, assignment, subfields, detail::out_path(cfg, stage_file::archetypes));
    record_stage(cfg, "classify", std::nullopt);
}

/** Impact outcomes per focal paper: high-citation flags and disruption. */
inline void run_impact(const RunConfig& cfg) {
    detail::ensure_output_dir(cfg);
    Corpus corpus = load_from_config(cfg);
    require_healthy(corpus);
    DisruptionOptions options;
    options.citer_window_years = cfg.citer_window_years;
    ImpactTable table = build_impact(corpus, cfg.high_cite_quantiles, options);
    write_impact_csv(table, detail::out_path(cfg, stage_file::impact));
    record_stage(cfg, "impact", corpus.content_hash());
}

/** Join archetypes with outcomes and bootstrap the conditional rates. */
inline AnalysisReport run_analyze(const RunConfig& cfg) {
    detail::ensure_output_dir(cfg);
    Corpus corpus = load_from_config(cfg);
    require_healthy(corpus);
    std::vector<ArchetypeRow> rows = read_archetypes_csv(detail::out_path(cfg, stage_file::archetypes));
    ImpactTable impact = read_impact_csv(detail::out_path(cfg, stage_file::impact));

    std::unordered_map<std::string, const ImpactRow*> impact_by_id;
    for (const auto& r : impact.rows) {
        impact_by_id[r.id] = &r;
    }

    const std::size_t n = rows.size();
    std::vector<std::optional<Archetype>> archetypes(n);
    std::vector<std::vector<std::optional<bool>>> high(impact.quantiles.size(),
                                                       std::vector<std::optional<bool>>(n));
    std::vector<std::optional<bool>> disruptive(n);
    std::vector<double> xs, ys;
    AnalysisReport report;

    for (std::size_t i = 0; i < n; ++i) {
        archetypes[i] = rows[i].archetype;
        if (rows[i].spatial.present() && rows[i].temporal.present()) {
            xs.push_back(rows[i].spatial.value());
            ys.push_back(rows[i].temporal.value());
        }
        auto it = impact_by_id.find(rows[i].id);
        if (it == impact_by_id.end()) {
            throw std::runtime_error("paper " + rows[i].id +
                                     " has an archetype row but no impact row; rerun the impact "
                                     "stage against the same corpus");
        }
        for (std::size_t qi = 0; qi < impact.quantiles.size(); ++qi) {
            high[qi][i] = it->second->high_cite[qi];
        }
        disruptive[i] = it->second->disruptive;
        if (rows[i].archetype) {
            ++report.scored;
        } else {
            ++report.unscored;
        }
    }

    report.correlation = pearson_correlation(xs, ys);
    report.correlation_n = xs.size();

    std::uint64_t stream = bootstrap_stream_base;
    for (std::size_t qi = 0; qi < impact.quantiles.size(); ++qi) {
        OutcomeReport o;
        o.outcome = high_cite_column(impact.quantiles[qi]);
        o.rates = bootstrap_rates(archetypes, high[qi], cfg.bootstrap_iterations,
                                  detail::derive_seed(cfg.seed, stream++), cfg.threads);
        report.outcomes.push_back(std::move(o));
    }
    {
        OutcomeReport o;
        o.outcome = "disruptive";
        o.rates = bootstrap_rates(archetypes, disruptive, cfg.bootstrap_iterations,
                                  detail::derive_seed(cfg.seed, stream++), cfg.threads);
        report.outcomes.push_back(std::move(o));
    }
    for (std::size_t qi = 0; qi < impact.quantiles.size(); ++qi) {
        OutcomeReport o;
        o.outcome = "dual_" + detail::format_double_short(impact.quantiles[qi]);
        o.rates = dual_impact_rates(archetypes, high[qi], disruptive, cfg.bootstrap_iterations,
                                    detail::derive_seed(cfg.seed, stream++), cfg.threads);
        report.outcomes.push_back(std::move(o));
    }

    AnnualSampling sampling;
    sampling.seed = detail::derive_seed(cfg.seed, annual_mean_stream);
    sampling.pairs = cfg.annual_mean_pairs;
    std::vector<std::string> channels = cfg.effective_grid().channels;
    if (channels.empty()) {
        for (const auto& ch : corpus.channels) channels.push_back(ch.name);
    }
    for (const auto& name : channels) {
        ChannelAnnualMeans cam;
        cam.channel = name;
        cam.series = corpus_annual_mean_series(corpus, name, cfg.annual_mean_mode, sampling);
        report.annual_means.push_back(std::move(cam));
    }

    write_report_json(report, detail::out_path(cfg, stage_file::analysis_json));
    write_rates_csv(report, detail::out_path(cfg, stage_file::rates));
    write_rates_long_csv(report, detail::out_path(cfg, stage_file::rates_long));
    write_report_markdown(report, detail::out_path(cfg, stage_file::report_md));
    record_stage(cfg, "analyze", corpus.content_hash());
    return report;
}

/** The whole run as the exact composition of the six stages. */
inline AnalysisReport run_pipeline(const RunConfig& cfg) {
    ValidationReport validation = run_ingest(cfg);
    if (validation.has_fatal()) {
        std::string msg = "corpus failed validation:";
        for (const auto& c : validation.checks) {
            if (c.severity == CheckSeverity::fatal_flag) {
                msg += "\n  " + c.name + ": " + c.detail;
            }
        }
        throw std::runtime_error(msg);
    }
    run_features(cfg);
    run_score(cfg);
    run_classify(cfg);
    run_impact(cfg);
    return run_analyze(cfg);
}

}

#endif
