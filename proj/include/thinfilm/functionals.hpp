#pragma once

// Discrete energy, dissipation and related norms, built on the same face
// quantities as the semidiscrete operator so that dE/dt = -D closes exactly.

#include <span>

#include "thinfilm/model.hpp"
#include "thinfilm/spatial.hpp"

namespace thinfilm {

struct Diagnostics {
    double t = 0.0;
    double energy = 0.0;
    double dissipation = 0.0;
    double mass = 0.0;
    double min_height = 0.0;
    double max_height = 0.0;
    double h1_dist = 0.0;

    friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

// 1/2 sum over interior faces of h ((u_f - u_{f-1})/h)^2.
double energy(const FilmState& state);
double energy(std::span<const double> u, double h);

double dissipation(const FilmState& state, const Rheology& rheo, Regularisation reg);

double mass(const FilmState& state);
double mass(std::span<const double> u, double h);

double h1_distance_to_mean(const FilmState& state);

// sqrt(h sum (a-b)^2 + h sum over interior faces of (d(a-b))^2 / h^2).
double h1_distance(std::span<const double> a, std::span<const double> b, double h);

// E_h[v] / (h sum_f |w_f|^(alpha+1))^(2/(alpha+1)) for v = u - mean.
// Throws DomainError when the state is constant.
double poincare_quotient(const FilmState& state, FlowExponent alpha);

// (h sum_f |w_f|^p)^(1/p) over interior faces.
double third_derivative_norm(const FilmState& state, double p);

// Diagnostics at time t of the film op.base_height() + v.  The operator is
// reused for its scratch storage.
Diagnostics diagnose(double t, std::span<const double> v, SemiDiscreteOperator& op);

} // namespace thinfilm
