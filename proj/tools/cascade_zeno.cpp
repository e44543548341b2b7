// cascade_zeno - simulate, sweep, validate and explore the three-level cascade.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cascade/commands.hpp"

int main(int argc, char** argv) {
    using namespace cascade::cli;

    CLI::App app{"Zeno suppression of a cascade decay: simulation and analytic rates"};
    app.require_subcommand(1);
    app.fallthrough();

    Context ctx;
    app.add_option("--workers", ctx.workers, "Worker threads for sweeps (default: config 'workers')")
        ->check(CLI::PositiveNumber);
    app.add_option("--override", ctx.overrides, "key=value applied after the config file (repeatable)")
        ->allow_extra_args(false);

    std::string cfg_path;

    auto* simulate = app.add_subcommand("simulate", "Run one scenario and fit its decay rate");
    simulate->add_option("config", cfg_path, "Scenario config file")->required();

    std::string key;
    std::vector<double> values;
    auto* sweep = app.add_subcommand("sweep", "Run one scenario per value of a profile scale");
    sweep->add_option("config", cfg_path, "Scenario config file")->required();
    sweep->add_option("--key", key, "Profile to sweep: v10, rho0, rho1 or v12")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');

    ValidateOptions vopts;
    auto* validate = app.add_subcommand("validate", "Run the built-in verification battery");
    validate->add_flag("--v10-zero", vopts.v10_zero, "Run the term-ratio item with v10 = 0");

    auto* peaks = app.add_subcommand("peaks", "EXPLORATORY: sweep the width of a Lorentzian rho0");
    peaks->add_option("config", cfg_path, "Scenario config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (*simulate) return cmd_simulate(cfg_path, ctx);
    if (*sweep) return cmd_sweep(cfg_path, key, values, ctx);
    if (*validate) return cmd_validate(vopts, ctx);
    if (*peaks) return cmd_peaks(cfg_path, ctx);
    return kUsage;
}
