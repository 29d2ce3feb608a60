// Command-line front end for the casting optimization pipeline.
//
// Verbs map to pipeline stages (with their upstream dependencies):
//   geometry | dataset | train | optimize | sensitivity | plots | all
//
// Exit codes: 0 success, 1 configuration problem, 2 runtime/stage failure.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "castopt/config.hpp"
#include "castopt/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    long long seed = -1;
    int jobs = -1;
};

castopt::RunConfig build_config(const CliOptions& opt) {
    castopt::RunConfig cfg = castopt::RunConfig::preset(opt.preset.empty() ? "paper" : opt.preset);
    if (!opt.config_path.empty()) {
        castopt::KeyValues kv = castopt::KeyValues::parse_file(opt.config_path);
        cfg.apply(kv);
    }
    if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
    if (opt.jobs >= 0) cfg.jobs = opt.jobs;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    cfg.validate();
    return cfg;
}

int run_verb(const std::string& verb, const CliOptions& opt) {
    castopt::Pipeline pipeline(build_config(opt));
    std::printf("config hash %s, output %s\n", pipeline.config().config_hash().c_str(),
                pipeline.config().out_dir.c_str());
    for (const auto& outcome : pipeline.run_verb(verb)) {
        if (outcome.reran)
            std::printf("[%s] done in %.2f s\n", outcome.name.c_str(), outcome.seconds);
        else
            std::printf("[%s] up to date\n", outcome.name.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"die-casting solidification optimization pipeline"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "key=value configuration file");
    app.add_option("--preset", opt.preset, "preset: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--seed", opt.seed, "master random seed (overrides config)");
    app.add_option("--jobs", opt.jobs, "worker threads for dataset generation (0 = auto)");
    app.add_option("--out", opt.out_dir, "output directory (overrides config)");

    const char* verbs[] = {"geometry", "dataset", "train", "optimize", "sensitivity", "plots",
                           "all"};
    const char* help[] = {"decompose the casting surface into wall domains",
                          "sample designs and run the thermal/microstructure chain",
                          "fit the per-objective surrogate networks",
                          "run single-, bi- and tri-objective optimization",
                          "rank Pareto designs by sensitivity",
                          "export gnuplot-ready data files",
                          "run the whole pipeline"};
    for (std::size_t v = 0; v < std::size(verbs); ++v) app.add_subcommand(verbs[v], help[v]);

    CLI11_PARSE(app, argc, argv);

    const std::string verb = app.get_subcommands().front()->get_name();
    try {
        return run_verb(verb, opt);
    } catch (const castopt::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 1;
    } catch (const castopt::ParseError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
