#pragma once

// Long-time behaviour of recorded trajectories: decay-law fits, the
// Lojasiewicz-type constant and the L1-in-time dissipation ratio.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thinfilm/functionals.hpp"
#include "thinfilm/model.hpp"
#include "thinfilm/timestep.hpp"

namespace thinfilm {

enum class Regime { FiniteTimeExtinction, Polynomial, Exponential, Undetermined };

std::string to_string(Regime regime);

struct FitReport {
    Regime regime = Regime::Undetermined;
    // slope of E^((1-alpha)/2) (extinction), exponent of t (polynomial) or
    // decay rate lambda in E ~ exp(-lambda t) (exponential)
    double fitted_exponent_or_rate = 0.0;
    double theoretical_value = 0.0;
    double relative_gap = 0.0;
    double r_squared = 0.0;
    double standard_error = 0.0;
    std::pair<double, double> window{0.0, 0.0};
    double lojasiewicz_c = 0.0;
    std::optional<double> extinction_time;
    // fraction of samples below the decay envelope built from lojasiewicz_c
    std::optional<double> envelope_fraction;
    std::optional<double> envelope_constant;
    std::string note;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
};

// Ordinary least squares y = intercept + slope x.  Needs >= 2 distinct x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Trapezoidal integral of a sampled field over [a, b], interpolating
// linearly at the end points.  Throws InsufficientDataError if the samples do
// not cover [a, b].
double time_integral(const std::vector<Diagnostics>& samples, double a, double b,
                     double Diagnostics::*field);

// min over samples with E above the steady threshold of D / E^((alpha+1)/2).
double lojasiewicz_constant(const Trajectory& traj, FlowExponent alpha);

FitReport fit_extinction(const Trajectory& traj, FlowExponent alpha);
FitReport fit_polynomial(const Trajectory& traj, FlowExponent alpha);
FitReport fit_exponential(const Trajectory& traj);

// int_{t/2}^{t} D / ((1/t) int_{t/4}^{t/2} E).
double l1_dissipation_check(const Trajectory& traj, double t);

FitReport classify(const Trajectory& traj, const Rheology& rheo);

// Keeps every k-th sample plus the last one.
Trajectory subsample(const Trajectory& traj, std::size_t k);

} // namespace thinfilm
