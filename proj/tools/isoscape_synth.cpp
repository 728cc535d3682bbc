// Fixture generator: deterministic synthetic corpora written in the exact
// file layout the main tool loads, plus a ready-to-run config.json. The
// bundled fixtures/demo corpus is the `demo` kind with its defaults.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "isoscape/synth.hpp"

namespace {

// The corpus files carry no cutoff or focal range, so the config has to.
void write_demo_config(const std::string& dir, const isoscape::Corpus& corpus,
                       bool with_citations) {
    nlohmann::json j;
    j["metadata"] = "metadata.jsonl";
    j["manifest"] = "manifest.json";
    if (with_citations) j["citations"] = "citations.csv";
    j["output"] = "out";
    j["seed"] = 11;
    j["bootstrap"] = {{"iterations", 200}};
    j["corpus"] = {{"min_year", corpus.options.min_year},
                   {"max_year", corpus.options.max_year},
                   {"knowledge_base_cutoff", corpus.knowledge_base_cutoff},
                   {"focal_range", {corpus.focal_range.first, corpus.focal_range.second}}};
    auto os = isoscape::detail::open_out(dir + "/config.json");
    os << j.dump(2) << '\n';
}

}

int main(int argc, char** argv) {
    CLI::App app{"synthetic corpus generator for isoscape"};
    app.require_subcommand(1);

    std::string output;
    std::uint64_t seed = 7;
    std::size_t n = 200;
    std::uint32_t dim = 12;

    CLI::App* demo = app.add_subcommand("demo", "small two-channel corpus with citations");
    CLI::App* random = app.add_subcommand("random", "unstructured Gaussian corpus");
    CLI::App* planted = app.add_subcommand("planted", "corpus with four planted archetype groups");
    for (CLI::App* cmd : {demo, random, planted}) {
        cmd->add_option("-o,--output", output, "directory to write the fixture into")->required();
        cmd->add_option("-s,--seed", seed, "generator seed");
    }
    random->add_option("-n", n, "paper count");
    random->add_option("--dim", dim, "embedding dimensions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        std::filesystem::create_directories(output);
        if (demo->parsed()) {
            isoscape::synth::RandomCorpusSpec spec;
            spec.n = 200;
            spec.dim = 12;
            spec.seed = seed;
            spec.first_year = 1998;
            spec.year_span = 15;
            spec.channels = {{"sem", isoscape::DistanceMetric::euclidean},
                             {"ref", isoscape::DistanceMetric::cosine}};
            spec.knowledge_base_cutoff = 2002;
            spec.focal_range = {{2003, 2012}};
            isoscape::Corpus corpus = isoscape::synth::random_corpus(spec);
            isoscape::synth::write_corpus_files(corpus, output);
            write_demo_config(output, corpus, true);
        } else if (random->parsed()) {
            isoscape::synth::RandomCorpusSpec spec;
            spec.n = n;
            spec.dim = dim;
            spec.seed = seed;
            spec.channels = {{"sem", isoscape::DistanceMetric::euclidean},
                             {"ref", isoscape::DistanceMetric::cosine}};
            isoscape::Corpus corpus = isoscape::synth::random_corpus(spec);
            isoscape::synth::write_corpus_files(corpus, output);
            write_demo_config(output, corpus, true);
        } else if (planted->parsed()) {
            isoscape::synth::PlantedCorpus pc = isoscape::synth::planted_corpus(seed);
            isoscape::synth::write_corpus_files(pc.corpus, output);
            {
                auto os = isoscape::detail::open_out(output + "/planted_groups.csv");
                os << "id,intended\n";
                for (const auto& p : pc.planted) {
                    os << p.id << ',' << isoscape::to_string(p.intended) << '\n';
                }
            }
            write_demo_config(output, pc.corpus, false);
        }
        std::printf("fixture written to %s\n", output.c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
