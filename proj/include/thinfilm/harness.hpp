#pragma once

// Experiment driver: configuration files, named presets, single runs with
// on-disk artifacts, parameter sweeps, the sigma-continuation study and the
// built-in self check.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thinfilm/asymptotics.hpp"
#include "thinfilm/model.hpp"
#include "thinfilm/spatial.hpp"
#include "thinfilm/timestep.hpp"

namespace thinfilm {

// Reading or writing an artifact failed.  The message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExitCode : int { Ok = 0, AssertionFailure = 1, ConfigFailure = 2, NumericalFailure = 3 };

std::string_view version();

struct RheologySpec {
    std::string kind = "power_law"; // power_law | newtonian | ellis
    double alpha = 1.0;
    double a = 1.0;
    double b = 1.0;

    Rheology build() const;
};

struct Mode {
    int k = 1;
    double weight = 1.0;
};

// u0 = mean + epsilon * sum_j weight_j cos(k_j pi (x - x_left) / L).
// With no modes listed, a single k = 1 mode of weight 1 is used.  Random
// modes draw k in [1, 8] and weights in [-1, 1] / count from seed.
struct InitialSpec {
    double mean = 1.0;
    double epsilon = 0.05;
    std::vector<Mode> modes;
    std::size_t random_modes = 0;
    std::uint64_t seed = 20240601;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string preset;
    RheologySpec rheology;
    double sigma = 0.0;
    double x_left = 0.0;
    double x_right = 1.0;
    std::size_t n_cells = 64;
    InitialSpec initial;
    IntegratorConfig integrator;
    std::optional<double> compare_time; // sigma study; defaults to t_end
    std::filesystem::path out_dir = "out";

    // Throws ConfigError.
    void validate() const;
    Grid grid() const { return Grid::make(x_left, x_right, n_cells); }
};

// thickening, thinning2, thinning3, newtonian, ellis.  Throws ConfigError.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// Sections experiment, rheology, grid, initial, integrator, output, study
// with key = value lines.  An experiment.preset key seeds the defaults that
// the remaining keys override.  Unknown sections or keys, malformed numbers
// and empty input throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Effective (k, amplitude) list after epsilon scaling and random draws.
std::vector<Mode> resolve_modes(const ExperimentConfig& cfg);

struct InitialData {
    FilmState state;
    double h1_distance;    // to the constant mean state
    bool within_corridor;  // u0 in [mean/2, 2 mean]
};

// Throws ConfigError when some u0(x_i) <= 0.
InitialData make_initial_data(const ExperimentConfig& cfg);

struct CheckFailure {
    std::string check;
    double value;
    double limit;
};

struct RunResult {
    ExperimentConfig config;
    InitialData initial;
    Trajectory trajectory;
    FitReport fit;
    double mass_drift = 0.0;        // max relative deviation of the mass
    double energy_increase = 0.0;   // max E_{k+1} - E_k, relative to E0
    double identity_residual = 0.0; // max |E(t) - E0 + int D|, relative to E0
    bool corridor_flag = false;
    std::vector<CheckFailure> failures;
    ExitCode exit_code = ExitCode::Ok;
};

struct RunOptions {
    bool write = true;
    bool quiet = true;
};

// Integrates, classifies, checks mass, energy monotonicity, the energy
// identity and the decay envelope, and (when opts.write) writes
// trajectory.csv, summary.json and snapshot_NNN.csv under cfg.out_dir.
// Throws ConfigError, NumericalError and IoError.
RunResult run(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Same, but maps exceptions onto the exit code and prints them.
ExitCode run_and_report(const ExperimentConfig& cfg, const RunOptions& opts);

// Trajectory CSV: header t,energy,dissipation,mass,min_u,max_u,h1_dist and
// 17 significant digits, so reading back reproduces the samples exactly.
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<Diagnostics>& samples);
std::vector<Diagnostics> read_trajectory_csv(const std::filesystem::path& path);
void write_snapshot_csv(const std::filesystem::path& path, const FilmState& state);

// Write to a sibling temporary file, then rename over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

enum class SweepParameter { Alpha, Epsilon, NCells, Sigma };

SweepParameter parse_sweep_parameter(const std::string& name);
std::string to_string(SweepParameter p);

// Copy of cfg with the parameter set to value.  An alpha on a newtonian
// config switches it to the power law.
ExperimentConfig with_parameter(const ExperimentConfig& cfg, SweepParameter p, double value);

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    ExitCode exit_code = ExitCode::Ok;
    std::string error;
    FitReport fit;
    Termination termination;
    bool corridor_flag = false;
    std::optional<double> theoretical_exponent; // -2/(alpha-1), alpha sweeps with alpha > 1
};

struct SweepReport {
    SweepParameter parameter;
    std::vector<SweepRow> rows;
};

// Independent runs, concurrently, each into out_dir/<param>_<index>.  A
// failed run marks its row and the sweep carries on.  Writes sweep.csv.
SweepReport sweep(const ExperimentConfig& base, SweepParameter p, const std::vector<double>& values,
                  const RunOptions& opts = {});

struct SigmaStudyReport {
    std::vector<double> sigmas;
    double compare_time = 0.0;
    std::vector<FilmState> states;
    std::vector<double> distances; // H1 between consecutive sigmas
    bool decreasing = false;
    bool identical = false; // every distance within round-off of zero
    std::string warning;
};

// Same initial data at every sigma, compared at cfg.compare_time (default
// t_end).  Needs a power law (newtonian counts as alpha = 1) and >= 3
// strictly decreasing sigmas.
// Non-monotone distances give a warning, not an error.
SigmaStudyReport sigma_study(const ExperimentConfig& cfg, const std::vector<double>& sigmas,
                             const RunOptions& opts = {});

struct SelfcheckOptions {
    std::vector<std::size_t> n_cells{8, 16, 32};
    std::size_t states_per_case = 20;
    std::uint64_t seed = 7;
    bool negate_flux = false; // mutation canary: flips the flux sign in rhs
};

struct CheckResult {
    std::string name;
    bool passed;
    double value;
    double limit;
    std::string detail;
};

struct SelfcheckReport {
    std::vector<CheckResult> checks;
    bool all_passed() const;
};

SelfcheckReport selfcheck(const SelfcheckOptions& opts = {});

} // namespace thinfilm
