#include <catch2/catch_amalgamated.hpp>

#include <isoscape/pipeline.hpp>
#include <isoscape/synth.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "support/oracles.hpp"

using namespace isoscape;
using nlohmann::json;
using Catch::Matchers::ContainsSubstring;

namespace {

json minimal() {
    return json{{"metadata", "meta.jsonl"}, {"manifest", "manifest.json"}};
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json parse_file(const std::string& path) { return json::parse(slurp(path)); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    REQUIRE(os);
    os << text;
}

// Small corpus on disk plus a config that runs the whole pipeline quickly.
RunConfig disk_fixture(const oracle::TempDir& td, std::uint64_t corpus_seed = 11) {
    synth::RandomCorpusSpec spec;
    spec.n = 120;
    spec.dim = 6;
    spec.seed = corpus_seed;
    spec.channels = {{"alpha", DistanceMetric::euclidean}, {"beta", DistanceMetric::cosine}};
    Corpus corpus = synth::random_corpus(spec);
    std::filesystem::create_directories(td.str("data"));
    synth::write_corpus_files(corpus, td.str("data"));

    RunConfig cfg;
    cfg.metadata_path = td.str("data/metadata.jsonl");
    cfg.manifest_path = td.str("data/manifest.json");
    cfg.citations_path = td.str("data/citations.csv");
    cfg.output_dir = td.str("out");
    cfg.seed = 9;
    cfg.bootstrap_iterations = 40;
    cfg.grid.gammas = std::vector<double>{1.0};
    cfg.grid.ks = std::vector<std::size_t>{3, 5};
    cfg.grid.offsets = std::vector<int>{-3, 0};
    cfg.grid.delta_pairs = std::vector<std::pair<int, int>>{{-3, 0}};
    return cfg;
}

const char* const kExports[] = {
    stage_file::validation, stage_file::features_bin, stage_file::features_csv,
    stage_file::scores,     stage_file::loadings,     stage_file::archetypes,
    stage_file::impact,     stage_file::analysis_json, stage_file::rates,
    stage_file::rates_long, stage_file::report_md,    stage_file::run_manifest,
};

}

TEST_CASE("minimal config picks the documented defaults") {
    RunConfig cfg = parse_config(minimal(), "/base");
    CHECK(cfg.metadata_path == "/base/meta.jsonl");
    CHECK(cfg.manifest_path == "/base/manifest.json");
    CHECK_FALSE(cfg.citations_path.has_value());
    CHECK(cfg.output_dir.empty());
    CHECK(cfg.threads == 0);
    CHECK(cfg.seed == 0);
    CHECK_FALSE(cfg.prospective);
    CHECK(cfg.max_missing_fraction == 0.5);
    CHECK(cfg.high_cite_quantiles == std::vector<double>{0.75, 0.90, 0.99});
    CHECK(cfg.typology_q == 0.5);
    CHECK(cfg.scope == Scope::global);
    CHECK(cfg.bootstrap_iterations == 100);
    CHECK(cfg.annual_mean_mode == AnnualMeanMode::exact);
    CHECK(cfg.annual_mean_pairs == 10000);
    CHECK_FALSE(cfg.citer_window_years.has_value());
    CHECK_FALSE(cfg.corpus.knowledge_base_cutoff.has_value());
    CHECK_FALSE(cfg.corpus.focal_range.has_value());

    ParamGrid g = cfg.effective_grid();
    ParamGrid d = default_grid(false);
    CHECK(g.gammas == d.gammas);
    CHECK(g.ks == d.ks);
    CHECK(g.offsets == d.offsets);
    CHECK(g.delta_pairs == d.delta_pairs);
    CHECK(g.channels.empty());
}

TEST_CASE("metadata and manifest are mandatory") {
    CHECK_THROWS_WITH(parse_config(json::object(), "."),
                      ContainsSubstring("must name 'metadata' and 'manifest'"));
    CHECK_THROWS_WITH(parse_config(json{{"metadata", "m.jsonl"}}, "."),
                      ContainsSubstring("must name 'metadata' and 'manifest'"));
    CHECK_THROWS_WITH(parse_config(json::array(), "."), ContainsSubstring("JSON object"));
}

TEST_CASE("unknown keys are rejected wherever they appear") {
    auto j = minimal();
    j["metadta"] = "oops";
    CHECK_THROWS_WITH(parse_config(j, "."),
                      ContainsSubstring("unknown config key 'metadta' in config root"));

    j = minimal();
    j["grid"] = {{"kays", json::array({3})}};
    CHECK_THROWS_WITH(parse_config(j, "."),
                      ContainsSubstring("unknown config key 'kays' in grid"));

    j = minimal();
    j["typology"] = {{"quantile", 0.5}};
    CHECK_THROWS_WITH(parse_config(j, "."),
                      ContainsSubstring("unknown config key 'quantile' in typology"));

    j = minimal();
    j["bootstrap"] = {{"iters", 10}};
    CHECK_THROWS_WITH(parse_config(j, "."),
                      ContainsSubstring("unknown config key 'iters' in bootstrap"));

    j = minimal();
    j["annual_mean"] = {{"paris", 100}};
    CHECK_THROWS_WITH(parse_config(j, "."),
                      ContainsSubstring("unknown config key 'paris' in annual_mean"));

    j = minimal();
    j["corpus"] = {{"cutoff", 2000}};
    CHECK_THROWS_WITH(parse_config(j, "."),
                      ContainsSubstring("unknown config key 'cutoff' in corpus"));
}

TEST_CASE("out of range settings are refused") {
    auto with = [](const char* key, json value) {
        auto j = minimal();
        j[key] = std::move(value);
        return j;
    };
    CHECK_THROWS_WITH(parse_config(with("threads", -1), "."), ContainsSubstring("threads"));
    CHECK_THROWS_WITH(parse_config(with("max_missing_fraction", 1.5), "."),
                      ContainsSubstring("max_missing_fraction"));
    CHECK_THROWS_WITH(parse_config(with("grid", json{{"ks", {0}}}), "."),
                      ContainsSubstring("ks must be >= 1"));
    CHECK_THROWS_WITH(parse_config(with("grid", json{{"delta_pairs", {{0}}}}), "."),
                      ContainsSubstring("[c1, c2]"));
    CHECK_THROWS_WITH(parse_config(with("high_cite_quantiles", json::array()), "."),
                      ContainsSubstring("nonempty"));
    CHECK_THROWS_WITH(parse_config(with("high_cite_quantiles", {0.5, 1.0}), "."),
                      ContainsSubstring("(0, 1)"));
    CHECK_THROWS_WITH(parse_config(with("typology", json{{"q", 1.0}}), "."),
                      ContainsSubstring("typology q"));
    CHECK_THROWS_WITH(parse_config(with("typology", json{{"scope", "cohort"}}), "."),
                      ContainsSubstring("'global' or 'subfield'"));
    CHECK_THROWS_WITH(parse_config(with("bootstrap", json{{"iterations", 0}}), "."),
                      ContainsSubstring("iterations must be >= 1"));
    CHECK_THROWS_WITH(parse_config(with("annual_mean", json{{"mode", "fast"}}), "."),
                      ContainsSubstring("'exact' or 'sampled'"));
    CHECK_THROWS_WITH(parse_config(with("annual_mean", json{{"pairs", 0}}), "."),
                      ContainsSubstring("pairs must be >= 1"));
    CHECK_THROWS_WITH(parse_config(with("corpus", json{{"focal_range", {2010}}}), "."),
                      ContainsSubstring("focal_range"));
    CHECK_THROWS_WITH(parse_config(with("corpus", json{{"focal_range", {2012, 2010}}}), "."),
                      ContainsSubstring("first <= last"));
    CHECK_THROWS_WITH(
        parse_config(with("corpus", json{{"min_year", 2020}, {"max_year", 2010}}), "."),
        ContainsSubstring("min_year must be <= max_year"));
    CHECK_THROWS_WITH(parse_config(with("citer_window_years", -1), "."),
                      ContainsSubstring("citer_window_years"));
}

TEST_CASE("relative paths resolve against the config file") {
    oracle::TempDir td;
    std::filesystem::create_directories(td.str("cfg"));
    json j{{"metadata", "../data/meta.jsonl"},
           {"manifest", "data/manifest.json"},
           {"citations", "/abs/cites.csv"},
           {"output", "out"}};
    write_text(td.str("cfg/run.json"), j.dump());

    RunConfig cfg = load_config(td.str("cfg/run.json"));
    CHECK(cfg.metadata_path == td.str("data/meta.jsonl"));
    CHECK(cfg.manifest_path == td.str("cfg/data/manifest.json"));
    CHECK(*cfg.citations_path == "/abs/cites.csv");
    CHECK(cfg.output_dir == td.str("cfg/out"));
}

TEST_CASE("missing or broken config files name themselves") {
    CHECK_THROWS_WITH(load_config("/nonexistent/run.json"),
                      ContainsSubstring("/nonexistent/run.json"));
    oracle::TempDir td;
    write_text(td.str("bad.json"), "{ not json");
    CHECK_THROWS_WITH(load_config(td.str("bad.json")), ContainsSubstring(td.str("bad.json")));
}

TEST_CASE("grid overrides replace only the named axes") {
    auto j = minimal();
    j["grid"] = {{"gammas", {1.0}}, {"ks", {3, 5}}};
    RunConfig cfg = parse_config(j, ".");
    ParamGrid g = cfg.effective_grid();
    CHECK(g.gammas == std::vector<double>{1.0});
    CHECK(g.ks == std::vector<std::size_t>{3, 5});
    CHECK(g.offsets == default_grid(false).offsets);
    CHECK(g.delta_pairs == default_grid(false).delta_pairs);

    auto p = minimal();
    p["prospective"] = true;
    ParamGrid pg = parse_config(p, ".").effective_grid();
    CHECK(pg.offsets == std::vector<int>{-5, -3, 0, 3, 5});
    CHECK(pg.delta_pairs.size() == 6);
}

TEST_CASE("grid overrides with stray endpoints surface on resolution") {
    auto j = minimal();
    j["grid"] = {{"offsets", {-3, 0}}, {"delta_pairs", {{-5, 0}}}};
    RunConfig cfg = parse_config(j, ".");
    CHECK_THROWS_AS(cfg.effective_grid(), std::invalid_argument);
}

TEST_CASE("config echo omits the output directory and worker count") {
    oracle::TempDir td;
    RunConfig a = disk_fixture(td);
    RunConfig b = a;
    b.output_dir = td.str("elsewhere");
    b.threads = 7;
    json ja = config_to_json(a);
    CHECK(ja.dump() == config_to_json(b).dump());
    CHECK_FALSE(ja.contains("output"));
    CHECK_FALSE(ja.contains("threads"));
    // the echo parses back to the same semantics
    RunConfig back = parse_config(ja, "/");
    CHECK(back.seed == a.seed);
    CHECK(back.bootstrap_iterations == a.bootstrap_iterations);
    CHECK(back.effective_grid().hash() == a.effective_grid().hash());
}

TEST_CASE("pipeline run writes every export and a coherent manifest") {
    oracle::TempDir td;
    RunConfig cfg = disk_fixture(td);
    AnalysisReport report = run_pipeline(cfg);
    CHECK(report.scored > 0);
    for (const char* name : kExports) {
        INFO(name);
        CHECK(std::filesystem::exists(td.str(std::string("out/") + name)));
    }

    json m = parse_file(td.str("out/run_manifest.json"));
    CHECK(m.size() == 8);
    CHECK(m.at("artifact_version") == artifact_version);
    CHECK(m.at("seed") == 9);
    CHECK(m.at("grid_hash") == detail::hex64(cfg.effective_grid().hash()));
    CHECK(m.at("stages_run") ==
          json::array({"ingest", "features", "score", "classify", "impact", "analyze"}));
    CHECK(m.at("config").dump() == config_to_json(cfg).dump());
    CHECK_FALSE(m.contains("timestamp"));

    CHECK(m.at("derived_seeds").at("annual_mean") == detail::derive_seed(9, 1));
    std::vector<std::string> outcomes = outcome_names(cfg);
    CHECK(outcomes == std::vector<std::string>{"high_cite_0.75", "high_cite_0.9",
                                               "high_cite_0.99", "disruptive", "dual_0.75",
                                               "dual_0.9", "dual_0.99"});
    const json& boot = m.at("derived_seeds").at("bootstrap");
    REQUIRE(boot.size() == outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        CHECK(boot.at(outcomes[i]) == detail::derive_seed(9, 16 + i));
    }

    // the recorded hash covers everything else in the manifest
    json body = m;
    body.erase("content_hash");
    detail::Fnv1a h;
    h.str(body.dump());
    CHECK(m.at("content_hash") == detail::hex64(h.digest()));

    json analysis = parse_file(td.str("out/analysis.json"));
    CHECK(analysis.at("outcomes").size() == outcomes.size());
    CHECK(analysis.at("scored").get<std::size_t>() == report.scored);
    CHECK(analysis.at("annual_means").size() == 2);
}

TEST_CASE("staged runs reproduce the single pipeline run byte for byte") {
    oracle::TempDir td;
    RunConfig one = disk_fixture(td);
    one.output_dir = td.str("out_one");
    run_pipeline(one);

    RunConfig staged = one;
    staged.output_dir = td.str("out_staged");
    run_ingest(staged);
    run_features(staged);
    run_score(staged);
    run_classify(staged);
    run_impact(staged);
    run_analyze(staged);

    for (const char* name : kExports) {
        INFO(name);
        CHECK(slurp(td.str(std::string("out_one/") + name)) ==
              slurp(td.str(std::string("out_staged/") + name)));
    }
}

TEST_CASE("worker count never shows up in the outputs") {
    oracle::TempDir td;
    RunConfig serial = disk_fixture(td);
    serial.output_dir = td.str("out_serial");
    serial.threads = 1;
    run_pipeline(serial);

    RunConfig parallel = serial;
    parallel.output_dir = td.str("out_parallel");
    parallel.threads = 4;
    run_pipeline(parallel);

    for (const char* name : kExports) {
        INFO(name);
        CHECK(slurp(td.str(std::string("out_serial/") + name)) ==
              slurp(td.str(std::string("out_parallel/") + name)));
    }
}

TEST_CASE("reruns into the same directory leave the manifest unchanged") {
    oracle::TempDir td;
    RunConfig cfg = disk_fixture(td);
    run_pipeline(cfg);
    std::string first = slurp(td.str("out/run_manifest.json"));
    run_pipeline(cfg);
    CHECK(slurp(td.str("out/run_manifest.json")) == first);
}

TEST_CASE("classify honors subfield scope through the file flow") {
    oracle::TempDir td;
    RunConfig cfg = disk_fixture(td);
    cfg.scope = Scope::subfield;
    run_pipeline(cfg);

    std::ifstream is(td.str("out/archetypes.csv"));
    REQUIRE(is);
    std::string line;
    std::getline(is, line);
    CHECK(line ==
          "id,spatial,temporal,archetype,spatial_threshold,temporal_threshold,q,scope");
    std::set<std::string> thresholds;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        auto cells = detail::split(line, ',');
        REQUIRE(cells.size() == 8);
        CHECK(cells[7] == "subfield");
        if (cells[4] != "NA") thresholds.insert(cells[4]);
        ++rows;
    }
    CHECK(rows > 0);
    // three random subfields almost surely cut at three different ranks
    CHECK(thresholds.size() > 1);
}

TEST_CASE("analyze refuses an impact table missing a scored paper") {
    oracle::TempDir td;
    RunConfig cfg = disk_fixture(td);
    run_pipeline(cfg);

    auto rows = read_archetypes_csv(td.str("out/archetypes.csv"));
    std::string victim;
    for (const auto& r : rows) {
        if (r.archetype) {
            victim = r.id;
            break;
        }
    }
    REQUIRE_FALSE(victim.empty());

    std::istringstream is(slurp(td.str("out/impact.csv")));
    std::ostringstream kept;
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind(victim + ",", 0) != 0) kept << line << '\n';
    }
    write_text(td.str("out/impact.csv"), kept.str());

    CHECK_THROWS_WITH(run_analyze(cfg), ContainsSubstring("rerun the impact stage"));
}

TEST_CASE("stages refuse a corpus that failed validation") {
    oracle::TempDir td;
    Corpus corpus = oracle::make_corpus({{"a", 2000, {0.0f, 0.0f}},
                                         {"b", 2001, {1.0f, 0.0f}},
                                         {"c", 2002, {0.0f, 1.0f}}},
                                        DistanceMetric::cosine);
    std::filesystem::create_directories(td.str("data"));
    synth::write_corpus_files(corpus, td.str("data"));

    RunConfig cfg;
    cfg.metadata_path = td.str("data/metadata.jsonl");
    cfg.manifest_path = td.str("data/manifest.json");
    cfg.output_dir = td.str("out");

    ValidationReport report = run_ingest(cfg);
    CHECK(report.has_fatal());
    CHECK(std::filesystem::exists(td.str("out/validation.json")));
    CHECK_THROWS_WITH(run_features(cfg), ContainsSubstring("failed validation"));
}

TEST_CASE("stages demand an output directory") {
    oracle::TempDir td;
    RunConfig cfg = disk_fixture(td);
    cfg.output_dir.clear();
    CHECK_THROWS_WITH(run_ingest(cfg), ContainsSubstring("output"));
}
