#include <iostream>

#include "CLI11.hpp"
#include "peaklab/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"peaklab: thin cusped domains, limit problems and eps-rates"};
    app.require_subcommand(1);

    std::string config;
    int jobs = 1;
    std::string out;
    for (const auto& name : peaklab::command_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " pipeline");
        sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "output directory (overrides output_dir)");
    }
    std::string run_dir;
    auto* rep = app.add_subcommand("report", "consolidate a run directory");
    rep->add_option("run_dir", run_dir, "directory holding manifest.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : peaklab::exit_validation;
    }

    if (rep->parsed()) return peaklab::report(run_dir, &std::cout).exit_code;
    for (auto* sub : app.get_subcommands()) {
        peaklab::RunOptions options;
        options.config_path = config;
        options.jobs = jobs;
        if (!out.empty()) options.out = out;
        options.log = &std::cout;
        return peaklab::run(peaklab::parse_command(sub->get_name()), options).exit_code;
    }
    return peaklab::exit_validation;
}
