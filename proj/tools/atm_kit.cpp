// atm-kit: config-driven runs, order studies and stability certification.
//
//   atm-kit run <config> [--output PATH] [--seed N]
//   atm-kit convergence <config> [--output PATH] [--seed N]
//   atm-kit verify <config> [--output PATH] [--seed N]

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "atm/errors.hpp"
#include "atm/experiment.hpp"

namespace {

struct Options {
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
};

int execute(const std::string& command, const Options& opts) {
    atm::ExperimentConfig config = atm::load_config(opts.config);
    if (opts.seed) config.seed = *opts.seed;
    if (!opts.output.empty()) config.csv_path = opts.output;

    std::ofstream file;
    atm::CommandOutput out;
    out.summary = &std::cout;
    if (config.csv_path == "-") {
        out.csv = &std::cout;
    } else if (!config.csv_path.empty()) {
        file.open(config.csv_path, std::ios::out | std::ios::trunc);
        if (!file) throw atm::ConfigError("cannot open output file '" + config.csv_path + "'", 0, {"output.csv"});
        out.csv = &file;
    }

    if (command == "run") return atm::cmd_run(config, out);
    if (command == "convergence") return atm::cmd_convergence(config, out);
    return atm::cmd_verify(config, out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Alternating-triangle time integration toolkit"};
    app.require_subcommand(1, 1);

    Options opts;
    const struct {
        const char* name;
        const char* help;
    } commands[] = {
        {"run", "Integrate one problem and write per-level norms"},
        {"convergence", "Measure the temporal order against the eigenmode oracle"},
        {"verify", "Certify an energy estimate or probe the explicit stability threshold"},
    };
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("config", opts.config, "Experiment config file")->required();
        sub->add_option("-o,--output", opts.output, "CSV output path ('-' for stdout); overrides [output] csv");
        sub->add_option("-s,--seed", opts.seed, "Seed for all pseudo-randomness; overrides the config");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? atm::kExitOk : atm::kExitUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return execute(command, opts);
    } catch (const atm::ConfigError& e) {
        std::cerr << "atm-kit: config error: " << e.what() << '\n';
        return atm::kExitUsage;
    } catch (const atm::UnsupportedProblem& e) {
        std::cerr << "atm-kit: " << e.what() << '\n';
        return atm::kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "atm-kit: invalid setting: " << e.what() << '\n';
        return atm::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "atm-kit: " << e.what() << '\n';
        return atm::kExitViolation;
    }
}
