#include "thinfilm/functionals.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace thinfilm {

double energy(std::span<const double> u, double h)
{
    double sum = 0.0;
    for (std::size_t f = 1; f < u.size(); ++f) {
        const double d = u[f] - u[f - 1];
        sum += d * d;
    }
    return 0.5 * sum / h;
}

double energy(const FilmState& state)
{
    return energy(state.u(), state.grid().h);
}

double dissipation(const FilmState& state, const Rheology& rheo, Regularisation reg)
{
    SemiDiscreteOperator op(state.grid(), rheo, reg);
    return op.dissipation(state.u());
}

double mass(std::span<const double> u, double h)
{
    double sum = 0.0;
    for (double v : u) sum += v;
    return h * sum;
}

double mass(const FilmState& state)
{
    return mass(state.u(), state.grid().h);
}

double h1_distance(std::span<const double> a, std::span<const double> b, double h)
{
    double l2 = 0.0;
    double grad = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        l2 += d * d;
        if (i > 0) {
            const double g = d - (a[i - 1] - b[i - 1]);
            grad += g * g;
        }
    }
    return std::sqrt(h * l2 + grad / h);
}

namespace {

double distance_to_mean(std::span<const double> u, double h, double length)
{
    const double mean = mass(u, h) / length;
    double l2 = 0.0;
    for (double v : u) l2 += (v - mean) * (v - mean);
    return std::sqrt(h * l2 + 2.0 * energy(u, h));
}

} // namespace

double h1_distance_to_mean(const FilmState& state)
{
    return distance_to_mean(state.u(), state.grid().h, state.grid().length());
}

double third_derivative_norm(const FilmState& state, double p)
{
    const std::vector<double> w = face_third_difference(state);
    double sum = 0.0;
    for (std::size_t f = 1; f + 1 < w.size(); ++f) sum += std::pow(std::abs(w[f]), p);
    return std::pow(state.grid().h * sum, 1.0 / p);
}

double poincare_quotient(const FilmState& state, FlowExponent alpha)
{
    const std::vector<double> w = face_third_difference(state);
    const double p = alpha.value() + 1.0;
    double sum = 0.0;
    for (std::size_t f = 1; f + 1 < w.size(); ++f) sum += std::pow(std::abs(w[f]), p);
    const double numerator = energy(state);
    if (numerator == 0.0 || sum == 0.0)
        throw DomainError("poincare_quotient: deviation from the mean is constant");
    // E is unchanged by subtracting the mean, so v = u - mean needs no copy
    return numerator / std::pow(state.grid().h * sum, 2.0 / p);
}

Diagnostics diagnose(double t, std::span<const double> v, SemiDiscreteOperator& op)
{
    const Grid& g = op.grid();
    const double base = op.base_height();
    Diagnostics d;
    d.t = t;
    d.energy = energy(v, g.h);
    d.dissipation = op.dissipation(v);
    d.mass = base * g.length() + mass(v, g.h);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    d.min_height = base + *lo;
    d.max_height = base + *hi;
    d.h1_dist = distance_to_mean(v, g.h, g.length());
    return d;
}

} // namespace thinfilm
