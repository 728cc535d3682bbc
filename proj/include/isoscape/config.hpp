#ifndef ISOSCAPE_CONFIG_HPP
#define ISOSCAPE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "isoscape/corpus.hpp"
#include "isoscape/detail/io.hpp"
#include "isoscape/features.hpp"
#include "isoscape/isolation.hpp"
#include "isoscape/novelty.hpp"

/**
 * @file config.hpp
 *
 * @brief Run configuration: a strict JSON file naming the input files and
 * every knob of the run.
 *
 * Parsing is deliberately unforgiving. Unknown keys anywhere in the file
 * are errors, as are out-of-range values, so a typo like "gamas" fails
 * loudly instead of silently running with defaults. Relative paths are
 * resolved against the directory containing the config file.
 *
 * Example:
 *
 *     {
 *       "metadata": "corpus/metadata.jsonl",
 *       "manifest": "corpus/manifest.json",
 *       "citations": "corpus/citations.csv",
 *       "output": "out",
 *       "seed": 7,
 *       "grid": {"ks": [3, 10], "offsets": [-5, 0], "delta_pairs": [[-5, 0]]},
 *       "typology": {"q": 0.5, "scope": "global"},
 *       "bootstrap": {"iterations": 200}
 *     }
 */

namespace isoscape {

struct GridOverrides {
    std::optional<std::vector<std::string>> channels;
    std::optional<std::vector<double>> gammas;
    std::optional<std::vector<std::size_t>> ks;
    std::optional<std::vector<int>> offsets;
    std::optional<std::vector<std::pair<int, int>>> delta_pairs;
};

struct RunConfig {
    std::string metadata_path;
    std::string manifest_path;
    std::optional<std::string> citations_path;
    std::string output_dir;

    int threads = 0; // 0 = all hardware threads
    std::uint64_t seed = 0;
    bool prospective = false;
    double max_missing_fraction = 0.5;

    GridOverrides grid;

    std::vector<double> high_cite_quantiles = {0.75, 0.90, 0.99};
    double typology_q = 0.5;
    Scope scope = Scope::global;

    std::size_t bootstrap_iterations = 100;

    AnnualMeanMode annual_mean_mode = AnnualMeanMode::exact;
    std::size_t annual_mean_pairs = 10000;

    CorpusOptions corpus;
    std::optional<int> citer_window_years;

    /** Grid actually used: defaults for the prospective setting, with any
     * explicitly configured axis replacing its default. */
    ParamGrid effective_grid() const {
        ParamGrid g = default_grid(prospective);
        if (grid.channels) g.channels = *grid.channels;
        if (grid.gammas) g.gammas = *grid.gammas;
        if (grid.ks) g.ks = *grid.ks;
        if (grid.offsets) g.offsets = *grid.offsets;
        if (grid.delta_pairs) g.delta_pairs = *grid.delta_pairs;
        g.normalize();
        // An empty channel list is the "every corpus channel" sentinel,
        // resolved where a corpus is in hand; validate the other axes here.
        ParamGrid probe = g;
        if (probe.channels.empty()) probe.channels.push_back("any");
        probe.check();
        return g;
    }

    ScoreOptions score_options() const {
        ScoreOptions o;
        o.max_missing_fraction = max_missing_fraction;
        o.include_prospective = prospective;
        return o;
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw std::runtime_error("unknown config key '" + it.key() + "' in " + where);
        }
    }
}

inline std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return fp.lexically_normal().string();
    return (base / fp).lexically_normal().string();
}

}

inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) {
        throw std::runtime_error("config root must be a JSON object");
    }
    detail::check_keys(j,
                       {"metadata", "manifest", "citations", "output", "threads", "seed",
                        "prospective", "max_missing_fraction", "grid", "high_cite_quantiles",
                        "typology", "bootstrap", "annual_mean", "corpus", "citer_window_years"},
                       "config root");
    RunConfig cfg;
    if (!j.contains("metadata") || !j.contains("manifest")) {
        throw std::runtime_error("config must name 'metadata' and 'manifest' files");
    }
    cfg.metadata_path = detail::resolve_path(base_dir, j.at("metadata").get<std::string>());
    cfg.manifest_path = detail::resolve_path(base_dir, j.at("manifest").get<std::string>());
    if (j.contains("citations") && !j.at("citations").is_null()) {
        cfg.citations_path = detail::resolve_path(base_dir, j.at("citations").get<std::string>());
    }
    if (j.contains("output")) {
        cfg.output_dir = detail::resolve_path(base_dir, j.at("output").get<std::string>());
    }
    if (j.contains("threads")) {
        int t = j.at("threads").get<int>();
        if (t < 0) throw std::runtime_error("config threads must be >= 0");
        cfg.threads = t;
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("prospective")) cfg.prospective = j.at("prospective").get<bool>();
    if (j.contains("max_missing_fraction")) {
        double f = j.at("max_missing_fraction").get<double>();
        if (!(f >= 0.0 && f <= 1.0)) {
            throw std::runtime_error("config max_missing_fraction must lie in [0, 1]");
        }
        cfg.max_missing_fraction = f;
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::check_keys(g, {"channels", "gammas", "ks", "offsets", "delta_pairs"}, "grid");
        if (g.contains("channels")) cfg.grid.channels = g.at("channels").get<std::vector<std::string>>();
        if (g.contains("gammas")) cfg.grid.gammas = g.at("gammas").get<std::vector<double>>();
        if (g.contains("ks")) {
            std::vector<std::size_t> ks;
            for (const auto& item : g.at("ks")) {
                std::int64_t k = item.get<std::int64_t>();
                if (k < 1) throw std::runtime_error("config grid ks must be >= 1");
                ks.push_back(static_cast<std::size_t>(k));
            }
            cfg.grid.ks = std::move(ks);
        }
        if (g.contains("offsets")) cfg.grid.offsets = g.at("offsets").get<std::vector<int>>();
        if (g.contains("delta_pairs")) {
            std::vector<std::pair<int, int>> pairs;
            for (const auto& item : g.at("delta_pairs")) {
                if (!item.is_array() || item.size() != 2) {
                    throw std::runtime_error("config delta_pairs entries must be [c1, c2] pairs");
                }
                pairs.emplace_back(item.at(0).get<int>(), item.at(1).get<int>());
            }
            cfg.grid.delta_pairs = std::move(pairs);
        }
    }
    if (j.contains("high_cite_quantiles")) {
        cfg.high_cite_quantiles = j.at("high_cite_quantiles").get<std::vector<double>>();
        if (cfg.high_cite_quantiles.empty()) {
            throw std::runtime_error("config high_cite_quantiles must be nonempty");
        }
        for (double q : cfg.high_cite_quantiles) {
            if (!(q > 0.0 && q < 1.0)) {
                throw std::runtime_error("config high_cite_quantiles must lie in (0, 1)");
            }
        }
    }
    if (j.contains("typology")) {
        const auto& t = j.at("typology");
        detail::check_keys(t, {"q", "scope"}, "typology");
        if (t.contains("q")) {
            cfg.typology_q = t.at("q").get<double>();
            if (!(cfg.typology_q > 0.0 && cfg.typology_q < 1.0)) {
                throw std::runtime_error("config typology q must lie in (0, 1)");
            }
        }
        if (t.contains("scope")) {
            std::string s = t.at("scope").get<std::string>();
            if (s == "global") {
                cfg.scope = Scope::global;
            } else if (s == "subfield") {
                cfg.scope = Scope::subfield;
            } else {
                throw std::runtime_error("config typology scope must be 'global' or 'subfield'");
            }
        }
    }
    if (j.contains("bootstrap")) {
        const auto& b = j.at("bootstrap");
        detail::check_keys(b, {"iterations"}, "bootstrap");
        if (b.contains("iterations")) {
            std::int64_t n = b.at("iterations").get<std::int64_t>();
            if (n < 1) throw std::runtime_error("config bootstrap iterations must be >= 1");
            cfg.bootstrap_iterations = static_cast<std::size_t>(n);
        }
    }
    if (j.contains("annual_mean")) {
        const auto& a = j.at("annual_mean");
        detail::check_keys(a, {"mode", "pairs"}, "annual_mean");
        if (a.contains("mode")) {
            std::string m = a.at("mode").get<std::string>();
            if (m == "exact") {
                cfg.annual_mean_mode = AnnualMeanMode::exact;
            } else if (m == "sampled") {
                cfg.annual_mean_mode = AnnualMeanMode::sampled;
            } else {
                throw std::runtime_error("config annual_mean mode must be 'exact' or 'sampled'");
            }
        }
        if (a.contains("pairs")) {
            std::int64_t n = a.at("pairs").get<std::int64_t>();
            if (n < 1) throw std::runtime_error("config annual_mean pairs must be >= 1");
            cfg.annual_mean_pairs = static_cast<std::size_t>(n);
        }
    }
    if (j.contains("corpus")) {
        const auto& c = j.at("corpus");
        detail::check_keys(c, {"min_year", "max_year", "knowledge_base_cutoff", "focal_range"},
                           "corpus");
        if (c.contains("min_year")) cfg.corpus.min_year = c.at("min_year").get<int>();
        if (c.contains("max_year")) cfg.corpus.max_year = c.at("max_year").get<int>();
        if (c.contains("knowledge_base_cutoff") && !c.at("knowledge_base_cutoff").is_null()) {
            cfg.corpus.knowledge_base_cutoff = c.at("knowledge_base_cutoff").get<int>();
        }
        if (c.contains("focal_range") && !c.at("focal_range").is_null()) {
            const auto& fr = c.at("focal_range");
            if (!fr.is_array() || fr.size() != 2) {
                throw std::runtime_error("config focal_range must be [first_year, last_year]");
            }
            int a = fr.at(0).get<int>();
            int b = fr.at(1).get<int>();
            if (a > b) throw std::runtime_error("config focal_range must have first <= last");
            cfg.corpus.focal_range = {a, b};
        }
        if (cfg.corpus.min_year > cfg.corpus.max_year) {
            throw std::runtime_error("config corpus min_year must be <= max_year");
        }
    }
    if (j.contains("citer_window_years") && !j.at("citer_window_years").is_null()) {
        int w = j.at("citer_window_years").get<int>();
        if (w < 0) throw std::runtime_error("config citer_window_years must be >= 0");
        cfg.citer_window_years = w;
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    auto is = detail::open_in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config " + path + ": " + e.what());
    }
    try {
        return parse_config(j, std::filesystem::path(path).parent_path());
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config " + path + ": " + e.what());
    }
}

/**
 * Fully resolved settings as JSON, embedded in each run manifest. Only the
 * semantic configuration appears: the output directory and thread count
 * change where and how fast the run happens, never what it computes, so
 * they are left out and reruns at other worker counts leave identical
 * manifests.
 */
inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["metadata"] = cfg.metadata_path;
    j["manifest"] = cfg.manifest_path;
    j["citations"] = cfg.citations_path ? nlohmann::json(*cfg.citations_path) : nlohmann::json();
    j["seed"] = cfg.seed;
    j["prospective"] = cfg.prospective;
    j["max_missing_fraction"] = cfg.max_missing_fraction;
    ParamGrid g = cfg.effective_grid();
    nlohmann::json gj;
    gj["channels"] = g.channels; // empty list means every corpus channel
    gj["gammas"] = g.gammas;
    gj["ks"] = g.ks;
    gj["offsets"] = g.offsets;
    gj["delta_pairs"] = nlohmann::json::array();
    for (const auto& [c1, c2] : g.delta_pairs) {
        gj["delta_pairs"].push_back({c1, c2});
    }
    j["grid"] = std::move(gj);
    j["high_cite_quantiles"] = cfg.high_cite_quantiles;
    j["typology"] = {{"q", cfg.typology_q}, {"scope", to_string(cfg.scope)}};
    j["bootstrap"] = {{"iterations", cfg.bootstrap_iterations}};
    j["annual_mean"] = {{"mode", cfg.annual_mean_mode == AnnualMeanMode::exact ? "exact" : "sampled"},
                        {"pairs", cfg.annual_mean_pairs}};
    nlohmann::json cj;
    cj["min_year"] = cfg.corpus.min_year;
    cj["max_year"] = cfg.corpus.max_year;
    cj["knowledge_base_cutoff"] = cfg.corpus.knowledge_base_cutoff
                                      ? nlohmann::json(*cfg.corpus.knowledge_base_cutoff)
                                      : nlohmann::json();
    cj["focal_range"] = cfg.corpus.focal_range
                            ? nlohmann::json({cfg.corpus.focal_range->first,
                                              cfg.corpus.focal_range->second})
                            : nlohmann::json();
    j["corpus"] = std::move(cj);
    j["citer_window_years"] =
        cfg.citer_window_years ? nlohmann::json(*cfg.citer_window_years) : nlohmann::json();
    return j;
}

}

#endif
