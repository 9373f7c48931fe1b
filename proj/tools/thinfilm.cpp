// Command-line front end: run, sweep, sigma-study, selfcheck.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

#include "thinfilm/harness.hpp"

using namespace thinfilm;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::size_t> snapshots;
    bool quiet = false;
};

void common_flags(CLI::App* cmd, Common& c, bool with_config)
{
    if (with_config)
        cmd->add_option("config", c.config, "configuration file, or a preset name")->required();
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--snapshots", c.snapshots, "number of state snapshots to write");
    cmd->add_flag("--quiet", c.quiet, "suppress progress output");
}

ExperimentConfig resolve(const Common& c)
{
    ExperimentConfig cfg;
    if (!std::filesystem::exists(c.config)) {
        const auto names = preset_names();
        if (std::find(names.begin(), names.end(), c.config) == names.end())
            throw ConfigError(fmt::format("'{}' is neither a file nor a preset", c.config));
        cfg = preset(c.config);
    } else {
        cfg = load_config(c.config);
    }
    if (!c.out.empty()) cfg.out_dir = c.out;
    if (c.snapshots) cfg.integrator.snapshots = *c.snapshots;
    cfg.validate();
    return cfg;
}

int code(ExitCode e)
{
    return static_cast<int>(e);
}

template <class F>
int guarded(F f)
{
    try {
        return f();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return code(ExitCode::ConfigFailure);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << " (last good t = " << e.last_good_time() << ")\n";
        return code(ExitCode::NumericalFailure);
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return code(ExitCode::AssertionFailure);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return code(ExitCode::NumericalFailure);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"thinfilm: thin-film flow experiments for power-law and Ellis rheologies"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    Common run_opts, sweep_opts, sigma_opts, check_opts;
    auto* run_cmd = app.add_subcommand("run", "integrate one configuration and write its artifacts");
    common_flags(run_cmd, run_opts, true);

    std::string param;
    std::vector<double> values;
    auto* sweep_cmd = app.add_subcommand("sweep", "independent runs over one parameter");
    common_flags(sweep_cmd, sweep_opts, true);
    sweep_cmd->add_option("--param", param, "alpha, epsilon, n_cells or sigma")->required();
    sweep_cmd->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

    std::vector<double> sigmas;
    auto* sigma_cmd = app.add_subcommand("sigma-study", "compare runs across decreasing regularisation");
    common_flags(sigma_cmd, sigma_opts, true);
    sigma_cmd->add_option("--sigmas", sigmas, "strictly decreasing, comma-separated")
        ->required()
        ->delimiter(',');

    bool mutate = false;
    auto* check_cmd = app.add_subcommand("selfcheck", "run the built-in invariant suite");
    common_flags(check_cmd, check_opts, false);
    check_cmd->add_flag("--negate-flux", mutate, "flip the flux sign (the energy identity must fail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : code(ExitCode::ConfigFailure);
    }

    if (*run_cmd) {
        return guarded([&] {
            const ExperimentConfig cfg = resolve(run_opts);
            const RunResult r = run(cfg, {true, run_opts.quiet});
            if (!run_opts.quiet) std::cout << "artifacts in " << cfg.out_dir.string() << "\n";
            return code(r.exit_code);
        });
    }
    if (*sweep_cmd) {
        return guarded([&] {
            const ExperimentConfig cfg = resolve(sweep_opts);
            const SweepReport rep = sweep(cfg, parse_sweep_parameter(param), values, {true, sweep_opts.quiet});
            for (const SweepRow& row : rep.rows)
                if (!row.ok) return code(ExitCode::AssertionFailure);
            return code(ExitCode::Ok);
        });
    }
    if (*sigma_cmd) {
        return guarded([&] {
            const ExperimentConfig cfg = resolve(sigma_opts);
            (void)sigma_study(cfg, sigmas, {true, sigma_opts.quiet});
            return code(ExitCode::Ok);
        });
    }
    return guarded([&] {
        SelfcheckOptions o;
        o.negate_flux = mutate;
        const SelfcheckReport rep = selfcheck(o);
        for (const CheckResult& c : rep.checks)
            if (!check_opts.quiet || !c.passed)
                std::cout << fmt::format("{} {} value={:.3e} limit={:.3e} {}\n", c.passed ? "ok    " : "FAILED",
                                         c.name, c.value, c.limit, c.detail);
        return code(rep.all_passed() ? ExitCode::Ok : ExitCode::AssertionFailure);
    });
}
