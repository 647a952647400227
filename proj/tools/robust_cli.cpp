#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "robust/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Seeded simulator of a crash-tolerant butterfly key-value store"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a scenario file and emit JSON-lines reports");
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> max_rounds;
    std::string out_path;
    bool lemmas = false;
    run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", out_path, "Write reports here instead of stdout");
    run->add_flag("--check-lemmas", lemmas, "Add lemma statistics to the summary");
    run->add_option("--max-rounds", max_rounds, "Round cap per period (overrides the scenario)");

    CLI11_PARSE(app, argc, argv);

    try {
        auto scenario = robust::load_scenario(scenario_path);
        if (seed) scenario.params.seed = *seed;
        if (max_rounds) scenario.params.round_cap = *max_rounds;
        scenario.params.validate();

        std::ofstream file;
        std::ostream* out = &std::cout;
        if (!out_path.empty()) {
            file.open(out_path);
            if (!file) throw robust::ConfigError("--out", "cannot open " + out_path);
            out = &file;
        }
        const int code = robust::run_scenario(scenario, *out, lemmas);
        if (code == robust::exit_safety) std::cerr << "safety violation, see the report events\n";
        if (code == robust::exit_round_cap) std::cerr << "round cap exceeded\n";
        return code;
    } catch (const robust::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return robust::exit_config;
    }
}
