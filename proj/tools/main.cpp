#include <iostream>

#include "CLI11.hpp"
#include "pnls/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Ground states of penalized nonlinear Schrodinger equations"};
    app.require_subcommand(1);

    pnls::CommandOptions opts;
    double hbar = 0.0;
    std::string out;
    std::uint64_t seed = 0;
    std::vector<double> window;

    struct Spec {
        const char* name;
        const char* help;
        bool takes_hbar;
    };
    const Spec specs[] = {
        {"solve", "Solve the penalized problem at one hbar", true},
        {"sweep", "Run the hbar sweep, the limit problem and the lemma checks", false},
        {"check", "Verify the structural conditions and the penalization properties", false},
        {"limit", "Solve the hbar-independent limit problem", false},
        {"decay-fit", "Solve at one hbar and fit the exponential tail", true},
    };
    for (const auto& s : specs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        sub->add_option("--config", opts.config, "Scenario JSON")->required();
        sub->add_option("--out", out, "Output directory (overrides the config)");
        sub->add_option("--seed", seed, "Seed for multi-start perturbations");
        if (s.takes_hbar) sub->add_option("--hbar", hbar, "Semiclassical parameter (defaults to the smallest listed)");
        if (std::string(s.name) == "decay-fit")
            sub->add_option("--window", window, "Fit window r1 r2 in domain units")->expected(2);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pnls::exit_code::config;
    }

    CLI::App* sub = app.get_subcommands().front();
    opts.command = sub->get_name();
    if (const auto* o = sub->get_option_no_throw("--hbar"); o && o->count() > 0) opts.hbar = hbar;
    if (sub->count("--out")) opts.out = out;
    if (sub->count("--seed")) opts.seed = seed;
    if (window.size() == 2) opts.window = std::make_pair(window[0], window[1]);
    return pnls::run_command(opts, std::cout, std::cerr);
}
