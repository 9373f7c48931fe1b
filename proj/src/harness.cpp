#include "thinfilm/harness.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#ifndef THINFILM_VERSION
#define THINFILM_VERSION "0.0.0"
#endif

namespace thinfilm {

using nlohmann::json;

std::string_view version()
{
    return THINFILM_VERSION;
}

namespace {

constexpr double kMassDriftLimit = 1e-11;
constexpr double kIdentityLimit = 1e-3;
constexpr double kMonotoneSlackFactor = 10.0;

json optional_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

} // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
    }
    fs::path tmp = path;
    tmp += fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot open '{}' for writing", tmp.string()));
        out << contents;
        out.flush();
        if (!out) throw IoError(fmt::format("write to '{}' failed", tmp.string()));
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError(fmt::format("cannot rename '{}' to '{}': {}", tmp.string(), path.string(), ec.message()));
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<Diagnostics>& samples)
{
    std::string s = "t,energy,dissipation,mass,min_u,max_u,h1_dist\n";
    for (const Diagnostics& d : samples)
        s += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", d.t, d.energy,
                         d.dissipation, d.mass, d.min_height, d.max_height, d.h1_dist);
    write_file_atomic(path, s);
}

std::vector<Diagnostics> read_trajectory_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::string line;
    if (!std::getline(in, line) || line != "t,energy,dissipation,mass,min_u,max_u,h1_dist")
        throw IoError(fmt::format("'{}': missing or unexpected header", path.string()));
    std::vector<Diagnostics> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double v[7];
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int j = 0; j < 7; ++j) {
            auto [next, ec] = std::from_chars(p, end, v[j]);
            if (ec != std::errc() || (j < 6 && (next == end || *next != ',')) || (j == 6 && next != end))
                throw IoError(fmt::format("'{}' line {}: malformed row", path.string(), line_no));
            p = next + 1;
        }
        out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
    }
    return out;
}

void write_snapshot_csv(const std::filesystem::path& path, const FilmState& state)
{
    std::string s = "x,u\n";
    for (std::size_t i = 0; i < state.size(); ++i)
        s += fmt::format("{:.17g},{:.17g}\n", state.grid().centre(i), state[i]);
    write_file_atomic(path, s);
}

namespace {

json config_json(const ExperimentConfig& cfg)
{
    json modes = json::array();
    for (const Mode& m : resolve_modes(cfg)) modes.push_back({{"k", m.k}, {"amplitude", m.weight}});
    const IntegratorConfig& ic = cfg.integrator;
    return {
        {"name", cfg.name},
        {"preset", cfg.preset},
        {"rheology", {{"kind", cfg.rheology.kind}, {"alpha", cfg.rheology.alpha}, {"a", cfg.rheology.a}, {"b", cfg.rheology.b}}},
        {"sigma", cfg.sigma},
        {"grid", {{"x_left", cfg.x_left}, {"x_right", cfg.x_right}, {"n_cells", cfg.n_cells}}},
        {"initial",
         {{"mean", cfg.initial.mean},
          {"epsilon", cfg.initial.epsilon},
          {"random_modes", cfg.initial.random_modes},
          {"seed", cfg.initial.seed},
          {"modes", modes}}},
        {"integrator",
         {{"scheme", to_string(ic.scheme)},
          {"t_end", ic.t_end},
          {"rel_tol", ic.rel_tol},
          {"abs_tol", ic.abs_tol},
          {"dt_init", optional_json(ic.dt_init)},
          {"dt_min", optional_json(ic.dt_min)},
          {"positivity_floor", ic.positivity_floor},
          {"steady_energy_threshold", optional_json(ic.steady_energy_threshold)},
          {"sample_stride", ic.sample_stride},
          {"max_energy_drop", ic.max_energy_drop},
          {"snapshots", ic.snapshots},
          {"c_stab", ic.c_stab}}},
        {"compare_time", optional_json(cfg.compare_time)},
    };
}

json summary_json(const RunResult& r)
{
    const FitReport& f = r.fit;
    const Trajectory& tr = r.trajectory;
    json failures = json::array();
    for (const CheckFailure& c : r.failures)
        failures.push_back({{"check", c.check}, {"value", c.value}, {"limit", c.limit}});
    json l1 = json::object();
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
        try {
            l1[fmt::format("{:g}", t)] = l1_dissipation_check(tr, t);
        } catch (const std::exception&) {
            l1[fmt::format("{:g}", t)] = nullptr;
        }
    }
    return {
        {"software", "thinfilm"},
        {"version", version()},
        {"config", config_json(r.config)},
        {"seed", r.config.initial.seed},
        {"regime", to_string(f.regime)},
        {"fitted_exponent_or_rate", f.fitted_exponent_or_rate},
        {"theoretical_value", f.theoretical_value},
        {"relative_gap", f.relative_gap},
        {"r_squared", f.r_squared},
        {"standard_error", f.standard_error},
        {"window", {f.window.first, f.window.second}},
        {"lojasiewicz_c", f.lojasiewicz_c},
        {"t_star", optional_json(f.extinction_time)},
        {"envelope_fraction", optional_json(f.envelope_fraction)},
        {"envelope_constant", optional_json(f.envelope_constant)},
        {"note", f.note},
        {"termination", {{"kind", to_string(tr.termination.kind)}, {"time", tr.termination.time}}},
        {"initial_energy", tr.initial_energy()},
        {"final_energy", tr.samples.empty() ? 0.0 : tr.samples.back().energy},
        {"initial_h1_distance", r.initial.h1_distance},
        {"initial_within_corridor", r.initial.within_corridor},
        {"left_corridor", tr.left_corridor},
        {"corridor_exit_time", tr.left_corridor ? json(tr.corridor_exit_time) : json(nullptr)},
        {"corridor_flag", r.corridor_flag},
        {"mass_drift", r.mass_drift},
        {"energy_increase", r.energy_increase},
        {"identity_residual", r.identity_residual},
        {"l1_dissipation_ratios", l1},
        {"stats",
         {{"accepted", tr.stats.accepted},
          {"rejected_error", tr.stats.rejected_error},
          {"rejected_positivity", tr.stats.rejected_positivity},
          {"rhs_evaluations", tr.stats.rhs_evaluations},
          {"jacobian_evaluations", tr.stats.jacobian_evaluations},
          {"dt_smallest", tr.stats.dt_smallest},
          {"dt_largest", tr.stats.dt_largest},
          {"samples", tr.samples.size()}}},
        {"passed", r.failures.empty() && r.exit_code == ExitCode::Ok},
        {"exit_code", static_cast<int>(r.exit_code)},
        {"failures", failures},
    };
}

void check_trajectory(RunResult& r)
{
    const Trajectory& tr = r.trajectory;
    const auto& s = tr.samples;
    if (s.empty()) return;
    const double e0 = s.front().energy;
    const double m0 = s.front().mass;
    double integral = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        r.mass_drift = std::max(r.mass_drift, std::abs(s[k].mass - m0) / std::abs(m0));
        if (k == 0) continue;
        integral += 0.5 * (s[k].dissipation + s[k - 1].dissipation) * (s[k].t - s[k - 1].t);
        if (e0 > 0.0) {
            r.energy_increase = std::max(r.energy_increase, (s[k].energy - s[k - 1].energy) / e0);
            r.identity_residual = std::max(r.identity_residual, std::abs(s[k].energy - e0 + integral) / e0);
        }
    }
    const double monotone_limit = kMonotoneSlackFactor * r.config.integrator.rel_tol;
    if (r.mass_drift > kMassDriftLimit) r.failures.push_back({"mass_conservation", r.mass_drift, kMassDriftLimit});
    if (r.energy_increase > monotone_limit)
        r.failures.push_back({"energy_monotonicity", r.energy_increase, monotone_limit});
    if (r.identity_residual > kIdentityLimit)
        r.failures.push_back({"energy_identity", r.identity_residual, kIdentityLimit});
    if (r.fit.envelope_fraction && *r.fit.envelope_fraction < 1.0)
        r.failures.push_back({"decay_envelope", *r.fit.envelope_fraction, 1.0});
    if (tr.termination.kind == TerminationKind::PositivityBreach
        || tr.termination.kind == TerminationKind::StepUnderflow)
        r.failures.push_back({"termination_" + to_string(tr.termination.kind), tr.termination.time,
                              r.config.integrator.t_end});
}

} // namespace

RunResult run(const ExperimentConfig& cfg, const RunOptions& opts)
{
    cfg.validate();
    const Rheology rheo = cfg.rheology.build();
    RunResult r{cfg, make_initial_data(cfg), {}, {}, 0, 0, 0, false, {}, ExitCode::Ok};
    r.trajectory = integrate(r.initial.state, rheo, Regularisation::make(cfg.sigma), cfg.integrator);
    r.fit = classify(r.trajectory, rheo);
    r.corridor_flag = !r.initial.within_corridor || r.trajectory.left_corridor;
    check_trajectory(r);

    const auto kind = r.trajectory.termination.kind;
    if (kind == TerminationKind::PositivityBreach || kind == TerminationKind::StepUnderflow)
        r.exit_code = ExitCode::NumericalFailure;
    else if (!r.failures.empty())
        r.exit_code = ExitCode::AssertionFailure;

    if (opts.write) {
        const auto& dir = cfg.out_dir;
        write_trajectory_csv(dir / "trajectory.csv", r.trajectory.samples);
        for (std::size_t j = 0; j < r.trajectory.snapshots.size(); ++j)
            write_snapshot_csv(dir / fmt::format("snapshot_{:03}.csv", j), r.trajectory.snapshots[j].state);
        write_file_atomic(dir / "summary.json", summary_json(r).dump(2) + "\n");
    }
    if (!opts.quiet) {
        std::cout << fmt::format("{}: {} regime={} fit={:.6g} theory={:.6g} C={:.6g} termination={}@{:.6g}\n",
                                 cfg.name, describe(rheo), to_string(r.fit.regime),
                                 r.fit.fitted_exponent_or_rate, r.fit.theoretical_value, r.fit.lojasiewicz_c,
                                 to_string(kind), r.trajectory.termination.time);
        if (r.corridor_flag) std::cout << "  warning: film left the corridor [mean/2, 2 mean]\n";
        for (const CheckFailure& c : r.failures)
            std::cout << fmt::format("  FAILED {}: value {:.6g} limit {:.6g}\n", c.check, c.value, c.limit);
    }
    return r;
}

ExitCode run_and_report(const ExperimentConfig& cfg, const RunOptions& opts)
{
    try {
        return run(cfg, opts).exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ExitCode::ConfigFailure;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return ExitCode::NumericalFailure;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return ExitCode::AssertionFailure;
    }
}

SweepParameter parse_sweep_parameter(const std::string& name)
{
    if (name == "alpha") return SweepParameter::Alpha;
    if (name == "epsilon") return SweepParameter::Epsilon;
    if (name == "n_cells") return SweepParameter::NCells;
    if (name == "sigma") return SweepParameter::Sigma;
    throw ConfigError(fmt::format("cannot sweep '{}': expected alpha, epsilon, n_cells or sigma", name));
}

std::string to_string(SweepParameter p)
{
    switch (p) {
    case SweepParameter::Alpha: return "alpha";
    case SweepParameter::Epsilon: return "epsilon";
    case SweepParameter::NCells: return "n_cells";
    case SweepParameter::Sigma: return "sigma";
    }
    return "alpha";
}

ExperimentConfig with_parameter(const ExperimentConfig& cfg, SweepParameter p, double value)
{
    ExperimentConfig c = cfg;
    switch (p) {
    case SweepParameter::Alpha:
        if (c.rheology.kind == "newtonian") c.rheology.kind = "power_law";
        c.rheology.alpha = value;
        break;
    case SweepParameter::Epsilon: c.initial.epsilon = value; break;
    case SweepParameter::NCells:
        if (!(value >= 1.0) || value != std::floor(value))
            throw ConfigError(fmt::format("n_cells value {} is not a positive integer", value));
        c.n_cells = static_cast<std::size_t>(value);
        break;
    case SweepParameter::Sigma: c.sigma = value; break;
    }
    return c;
}

SweepReport sweep(const ExperimentConfig& base, SweepParameter p, const std::vector<double>& values,
                  const RunOptions& opts)
{
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    SweepReport report{p, std::vector<SweepRow>(values.size())};

    auto work = [&](std::size_t j) {
        SweepRow& row = report.rows[j];
        row.value = values[j];
        if (p == SweepParameter::Alpha && values[j] > 1.0) row.theoretical_exponent = -2.0 / (values[j] - 1.0);
        try {
            ExperimentConfig c = with_parameter(base, p, values[j]);
            c.name = fmt::format("{}_{}_{}", base.name, to_string(p), j);
            c.out_dir = base.out_dir / fmt::format("{}_{}", to_string(p), j);
            RunOptions o = opts;
            o.quiet = true;
            const RunResult r = run(c, o);
            row.fit = r.fit;
            row.termination = r.trajectory.termination;
            row.corridor_flag = r.corridor_flag;
            row.exit_code = r.exit_code;
            row.ok = r.exit_code == ExitCode::Ok;
            for (const CheckFailure& f : r.failures) row.error += (row.error.empty() ? "" : "; ") + f.check;
        } catch (const ConfigError& e) {
            row.exit_code = ExitCode::ConfigFailure;
            row.error = e.what();
        } catch (const NumericalError& e) {
            row.exit_code = ExitCode::NumericalFailure;
            row.error = e.what();
        } catch (const std::exception& e) {
            row.exit_code = ExitCode::AssertionFailure;
            row.error = e.what();
        }
    };

    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, values.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t j = next++; j < values.size(); j = next++) work(j);
        });
    for (std::thread& t : pool) t.join();

    std::string csv = fmt::format("{},status,exit_code,regime,fitted,theoretical_exponent,relative_gap,"
                                  "r_squared,lojasiewicz_c,termination,termination_time,corridor_flag,error\n",
                                  to_string(p));
    for (const SweepRow& row : report.rows) {
        std::string err = row.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        csv += fmt::format("{:.17g},{},{},{},{:.17g},{},{:.17g},{:.17g},{:.17g},{},{:.17g},{},{}\n", row.value,
                           row.ok ? "ok" : "failed", static_cast<int>(row.exit_code), to_string(row.fit.regime),
                           row.fit.fitted_exponent_or_rate,
                           row.theoretical_exponent ? fmt::format("{:.17g}", *row.theoretical_exponent) : "",
                           row.fit.relative_gap, row.fit.r_squared, row.fit.lojasiewicz_c,
                           to_string(row.termination.kind), row.termination.time, row.corridor_flag ? 1 : 0, err);
    }
    if (opts.write) write_file_atomic(base.out_dir / "sweep.csv", csv);
    if (!opts.quiet) std::cout << csv;
    return report;
}

SigmaStudyReport sigma_study(const ExperimentConfig& cfg, const std::vector<double>& sigmas,
                             const RunOptions& opts)
{
    cfg.validate();
    if (cfg.rheology.kind == "ellis") throw ConfigError("sigma study needs a power-law rheology");
    if (sigmas.size() < 3) throw ConfigError("sigma study needs at least three sigmas");
    for (std::size_t j = 1; j < sigmas.size(); ++j)
        if (!(sigmas[j] < sigmas[j - 1]))
            throw ConfigError("sigma study needs strictly decreasing sigmas");

    SigmaStudyReport rep;
    rep.sigmas = sigmas;
    rep.compare_time = cfg.compare_time.value_or(cfg.integrator.t_end);
    const InitialData init = make_initial_data(cfg);
    const Rheology rheo = cfg.rheology.kind == "newtonian" ? Rheology{PowerLaw{FlowExponent(1.0)}}
                                                            : cfg.rheology.build();
    IntegratorConfig ic = cfg.integrator;
    ic.t_end = rep.compare_time;
    ic.snapshots = 0;
    for (double s : sigmas) {
        const Trajectory tr = integrate(init.state, rheo, Regularisation::make(s), ic);
        if (tr.termination.kind == TerminationKind::PositivityBreach
            || tr.termination.kind == TerminationKind::StepUnderflow)
            throw NumericalError(fmt::format("sigma = {}: run ended with {}", s, to_string(tr.termination.kind)),
                                 tr.termination.time);
        rep.states.push_back(tr.final_state());
    }
    const double h = init.state.grid().h;
    for (std::size_t j = 1; j < rep.states.size(); ++j)
        rep.distances.push_back(h1_distance(rep.states[j - 1].u(), rep.states[j].u(), h));
    rep.decreasing = true;
    for (std::size_t j = 1; j < rep.distances.size(); ++j)
        rep.decreasing = rep.decreasing && rep.distances[j] < rep.distances[j - 1];
    const double scale = h1_distance(rep.states.front().u(), std::vector<double>(rep.states.front().size(), 0.0), h);
    rep.identical = std::all_of(rep.distances.begin(), rep.distances.end(),
                                [&](double d) { return d <= 1e-12 * scale; });
    if (!rep.decreasing && !rep.identical) rep.warning = "pairwise H1 distances are not strictly decreasing";

    if (opts.write) {
        json rows = json::array();
        std::string csv = "sigma_a,sigma_b,h1_distance\n";
        for (std::size_t j = 0; j < rep.distances.size(); ++j) {
            rows.push_back({{"sigma_a", sigmas[j]}, {"sigma_b", sigmas[j + 1]}, {"h1_distance", rep.distances[j]}});
            csv += fmt::format("{:.17g},{:.17g},{:.17g}\n", sigmas[j], sigmas[j + 1], rep.distances[j]);
        }
        const json summary = {{"software", "thinfilm"},
                              {"version", version()},
                              {"config", config_json(cfg)},
                              {"compare_time", rep.compare_time},
                              {"distances", rows},
                              {"decreasing", rep.decreasing},
                              {"identical", rep.identical},
                              {"warning", rep.warning}};
        write_file_atomic(cfg.out_dir / "sigma_study.csv", csv);
        write_file_atomic(cfg.out_dir / "sigma_study.json", summary.dump(2) + "\n");
        for (std::size_t j = 0; j < rep.states.size(); ++j)
            write_snapshot_csv(cfg.out_dir / fmt::format("sigma_{:03}.csv", j), rep.states[j]);
    }
    if (!opts.quiet) {
        for (std::size_t j = 0; j < rep.distances.size(); ++j)
            std::cout << fmt::format("|u(sigma={:g}) - u(sigma={:g})|_H1 = {:.6e}\n", sigmas[j], sigmas[j + 1],
                                     rep.distances[j]);
        if (rep.identical) std::cout << "all runs agree to round-off\n";
        if (!rep.warning.empty()) std::cout << "warning: " << rep.warning << "\n";
    }
    return rep;
}

} // namespace thinfilm
