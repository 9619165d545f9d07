#include "gfi/app.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Geometric fault isolation: analysis, training, simulation and comparison"};
    app.require_subcommand(1);

    gfi::CommandOptions opt;
    std::uint64_t seed = 0;
    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config, "JSON run configuration");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out-dir", opt.out_dir, "output directory; relative config paths resolve against it");
        sub->add_option("--jobs", opt.jobs, "parallel scenario runs")->check(CLI::PositiveNumber);
        sub->add_flag("--dry-run", opt.dry_run, "validate inputs only, write nothing");
    };

    auto* analyze = app.add_subcommand("analyze", "isolability report, angle profile and curvature suggestion");
    common(analyze, true);
    auto* train = app.add_subcommand("train", "generate a fault dataset and train the feature maps");
    common(train, true);
    auto* run = app.add_subcommand("run", "simulate the scenario with the configured observers");
    common(run, true);
    auto* compare = app.add_subcommand("compare", "metric deltas between two trace files");
    std::string first, second;
    compare->add_option("first", first, "trace of the candidate observer")->required();
    compare->add_option("second", second, "trace of the baseline observer")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : gfi::exit_config;
    }
    for (auto* sub : {analyze, train, run})
        if (sub->parsed() && sub->count("--seed")) opt.seed = seed;

    try {
        if (analyze->parsed()) return gfi::cmd_analyze(opt, std::cout);
        if (train->parsed()) return gfi::cmd_train(opt, std::cout, std::cerr);
        if (run->parsed()) return gfi::cmd_run(opt, std::cout, std::cerr);
        return gfi::cmd_compare(first, second, std::cout);
    } catch (const gfi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return gfi::exit_config;
    } catch (const gfi::FileNotFound& e) {
        std::cerr << "error: " << e.what() << "\n";
        return gfi::exit_config;
    } catch (const gfi::DesignInfeasible& e) {
        std::cerr << "design error: " << e.what() << "\n";
        return gfi::exit_config;
    } catch (const gfi::MetricVerificationError& e) {
        std::cerr << "design error: " << e.what() << "\n";
        return gfi::exit_config;
    } catch (const gfi::IncomparableTraces& e) {
        std::cerr << "incomparable traces: " << e.what() << "\n";
        return gfi::exit_config;
    } catch (const gfi::ObserverDiverged& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return gfi::exit_divergence;
    } catch (const gfi::GenerationFailure& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return gfi::exit_divergence;
    } catch (const gfi::TrainingDiverged& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return gfi::exit_divergence;
    } catch (const gfi::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
