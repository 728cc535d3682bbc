// Command-line front end. Every subcommand reads the same JSON run config
// and operates on one output directory, so a full run can be a single
// `pipeline` call or the six stages invoked one by one with identical
// results.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "isoscape/pipeline.hpp"
#include "isoscape/version.hpp"

namespace {

struct CliFlags {
    std::string config_path;
    std::optional<std::string> output;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::optional<double> quantile;
    std::optional<std::string> scope;
    std::optional<std::string> prospective;
};

void add_common_options(CLI::App* cmd, CliFlags& flags) {
    cmd->add_option("-c,--config", flags.config_path, "run config JSON file")->required();
    cmd->add_option("-o,--output", flags.output, "output directory (overrides config)");
    cmd->add_option("-t,--threads", flags.threads, "worker threads, 0 = all cores (overrides config)")
        ->envname("ISOSCAPE_THREADS")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("-s,--seed", flags.seed, "master seed (overrides config)");
    cmd->add_option("-q,--quantile", flags.quantile, "archetype split quantile in (0,1) (overrides config)")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--scope", flags.scope, "archetype threshold scope (overrides config)")
        ->check(CLI::IsMember({"global", "subfield"}));
    cmd->add_option("--prospective", flags.prospective,
                    "include forward offsets and deltas (overrides config)")
        ->check(CLI::IsMember({"on", "off"}));
}

isoscape::RunConfig resolve_config(const CliFlags& flags) {
    isoscape::RunConfig cfg = isoscape::load_config(flags.config_path);
    if (flags.output) cfg.output_dir = *flags.output;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.quantile) {
        if (!(*flags.quantile > 0.0 && *flags.quantile < 1.0)) {
            throw CLI::ValidationError("--quantile", "must lie strictly inside (0, 1)");
        }
        cfg.typology_q = *flags.quantile;
    }
    if (flags.scope) {
        cfg.scope = *flags.scope == "global" ? isoscape::Scope::global : isoscape::Scope::subfield;
    }
    if (flags.prospective) cfg.prospective = *flags.prospective == "on";
    return cfg;
}

int print_validation(const isoscape::ValidationReport& report) {
    for (const auto& check : report.checks) {
        std::printf("%-7s %s%s%s\n", isoscape::to_string(check.severity), check.name.c_str(),
                    check.detail.empty() ? "" : ": ", check.detail.c_str());
    }
    if (report.has_fatal()) {
        std::fprintf(stderr, "corpus failed validation\n");
        return 1;
    }
    return 0;
}

}

int main(int argc, char** argv) {
    CLI::App app{"isoscape: semantic isolation, novelty archetypes and impact rates\n"
                 "for timestamped embedding corpora"};
    app.set_version_flag("--version", isoscape::artifact_version);
    app.require_subcommand(1);

    CliFlags flags;
    CLI::App* ingest = app.add_subcommand("ingest", "load and validate the corpus");
    CLI::App* features = app.add_subcommand("features", "compute the isolation feature table");
    CLI::App* score = app.add_subcommand("score", "reduce features to spatial/temporal scores");
    CLI::App* classify = app.add_subcommand("classify", "assign quadrant archetypes to scored papers");
    CLI::App* impact = app.add_subcommand("impact", "high-citation and disruption outcomes");
    CLI::App* analyze = app.add_subcommand("analyze", "bootstrap archetype-conditional impact rates");
    CLI::App* pipeline = app.add_subcommand("pipeline", "run every stage in order");
    for (CLI::App* cmd : {ingest, features, score, classify, impact, analyze, pipeline}) {
        add_common_options(cmd, flags);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        isoscape::RunConfig cfg = resolve_config(flags);
        if (ingest->parsed()) {
            return print_validation(isoscape::run_ingest(cfg));
        }
        if (features->parsed()) {
            isoscape::run_features(cfg);
            std::printf("features written to %s\n", cfg.output_dir.c_str());
        } else if (score->parsed()) {
            isoscape::run_score(cfg);
            std::printf("scores written to %s\n", cfg.output_dir.c_str());
        } else if (classify->parsed()) {
            isoscape::run_classify(cfg);
            std::printf("archetypes written to %s\n", cfg.output_dir.c_str());
        } else if (impact->parsed()) {
            isoscape::run_impact(cfg);
            std::printf("impact outcomes written to %s\n", cfg.output_dir.c_str());
        } else if (analyze->parsed() || pipeline->parsed()) {
            isoscape::AnalysisReport report =
                analyze->parsed() ? isoscape::run_analyze(cfg) : isoscape::run_pipeline(cfg);
            std::printf("%zu papers carry an archetype, %zu focal papers do not\n", report.scored,
                        report.unscored);
            if (report.correlation.present()) {
                std::printf("spatial/temporal correlation %.4f over %zu papers\n",
                            report.correlation.value(), report.correlation_n);
            }
            std::printf("%zu outcome reports written to %s\n", report.outcomes.size(),
                        cfg.output_dir.c_str());
        }
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
