// bran: analytic evaluation, steady-state solve, simulation and parameter
// sweeps for the blockchain radio access network model.
//
//   bran <mode> [--config FILE] [--<key> VALUE ...] [--seed N] [--output PATH] [--format csv|json]

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bran/experiment.hpp"

namespace ex = bran::experiment;

int main(int argc, char** argv) {
    CLI::App app{"Blockchain radio access network latency and security toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::App*> subcommands;

    const std::map<std::string, std::string> descriptions = {
        {"analytic", "closed-form latency terms and bounds"},
        {"steady-state", "exact steady state of the truncated chain"},
        {"simulate", "discrete-event simulation of the request pipeline"},
        {"attack", "alternate-history attack probability, closed form and Monte Carlo"},
        {"sweep-rho", "latency against traffic intensity for several block sizes"},
        {"sweep-confirmations", "latency against the number of confirmations"},
        {"sweep-attack", "attack success probability against attacker mining rate"},
    };

    for (std::string_view mode : ex::kModeNames) {
        const std::string name(mode);
        CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
        sub->add_option("--config", config_path, "flat key = value configuration file");
        for (const std::string& key : ex::known_keys()) {
            if (key == "mode") continue;
            sub->add_option("--" + key, flag_values[key], "override for config key " + key);
        }
        subcommands[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ex::kExitConfig;
    }

    ex::Overrides overrides;
    for (const auto& [name, sub] : subcommands)
        if (sub->parsed()) {
            overrides["mode"] = name;
            for (const auto& [key, value] : flag_values)
                if (sub->count("--" + key) > 0) overrides[key] = value;
        }

    std::string text;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot read config file " << config_path << '\n';
            return ex::kExitConfig;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }

    std::optional<std::string> env_seed;
    if (const char* s = std::getenv("BRAN_SIM_SEED")) env_seed = s;

    ex::ExperimentConfig cfg;
    try {
        cfg = ex::parse_config(text, overrides, env_seed);
    } catch (const ex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ex::kExitConfig;
    }

    try {
        return ex::run_experiment(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
