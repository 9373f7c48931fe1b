#pragma once

// Adaptive time integration of the semidiscrete thin-film system.
//
// Two embedded pairs are available: Bogacki-Shampine 3(2) (explicit, FSAL)
// and the three-stage linearly implicit Rosenbrock method ROS3, which is
// L-stable and lets the step grow with the relaxation time instead of h^4.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "thinfilm/functionals.hpp"
#include "thinfilm/model.hpp"
#include "thinfilm/spatial.hpp"

namespace thinfilm {

enum class Scheme { Explicit, Rosenbrock };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct IntegratorConfig {
    Scheme scheme = Scheme::Rosenbrock;
    double t_end = 1.0;
    double rel_tol = 1e-6;
    double abs_tol = 1e-12;
    std::optional<double> dt_init;  // default: stable_dt_estimate, clipped to t_end
    std::optional<double> dt_min;   // default: 1e-6 * dt_init
    double positivity_floor = 1e-3; // fraction of min(u0)
    std::optional<double> steady_energy_threshold; // default: 1e-14 * E0
    std::size_t sample_stride = 1;
    // Cap dt so that one step removes at most this fraction of E (0 = off).
    double max_energy_drop = 0.02;
    std::size_t snapshots = 0; // evenly spaced in (0, t_end], plus t = 0 and the stopping time
    double c_stab = 0.5;
    double psi_prime_cap = kDefaultPsiPrimeCap;

    // Throws ConfigError.
    void validate() const;
};

enum class TerminationKind { ReachedTEnd, SteadyState, Extinction, PositivityBreach, StepUnderflow };

std::string to_string(TerminationKind kind);

struct Termination {
    TerminationKind kind = TerminationKind::ReachedTEnd;
    double time = 0.0;
};

struct Snapshot {
    double t;
    FilmState state;
};

struct IntegratorStats {
    std::size_t accepted = 0;
    std::size_t rejected_error = 0;
    std::size_t rejected_positivity = 0;
    std::size_t rhs_evaluations = 0;
    std::size_t jacobian_evaluations = 0;
    double dt_smallest = 0.0;
    double dt_largest = 0.0;
};

struct Trajectory {
    Grid grid;
    std::vector<Diagnostics> samples;
    std::vector<Snapshot> snapshots;
    Termination termination;
    double steady_threshold = 0.0;
    double mean = 0.0;            // mass / |Omega| of the initial state
    bool left_corridor = false;   // some accepted state left [mean/2, 2 mean]
    double corridor_exit_time = 0.0;
    IntegratorStats stats;
    std::vector<double> final_u;

    double initial_energy() const { return samples.empty() ? 0.0 : samples.front().energy; }
    FilmState final_state() const { return FilmState(grid, final_u); }
};

// c_stab h^4 / max over interior faces of dF/dw (psi' capped), at most 1e8.
double stable_dt_estimate(const FilmState& state, const Rheology& rheo, Regularisation reg,
                          double c_stab = 0.5, double psi_prime_cap = kDefaultPsiPrimeCap);

// Throws ConfigError on invalid configuration and NumericalError (carrying
// the last accepted time) when the solution stops being finite.
Trajectory integrate(const FilmState& state0, const Rheology& rheo, Regularisation reg,
                     const IntegratorConfig& cfg);

} // namespace thinfilm
