#include "thinfilm/oracle.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

namespace thinfilm::oracle {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kQuadratureTol = 1e-10;
constexpr int kMaxQuadratureLevels = 18;
constexpr std::size_t kMaxReferenceCells = 128;
constexpr double kReferenceCap = 1e8;
constexpr double kMaxReferenceSteps = 5e7;

} // namespace

Profile Profile::constant(double c, double x_left, double x_right)
{
    Profile p;
    p.kind = ProfileKind::Constant;
    p.c0 = c;
    p.x_left = x_left;
    p.x_right = x_right;
    return p;
}

Profile Profile::affine(double c0, double slope, double x_left, double x_right)
{
    Profile p = constant(c0, x_left, x_right);
    p.kind = ProfileKind::Affine;
    p.c1 = slope;
    return p;
}

Profile Profile::cosine(double mean, double amplitude, int k, double x_left, double x_right)
{
    if (k < 1) throw ConfigError("cosine profile needs k >= 1");
    Profile p = constant(mean, x_left, x_right);
    p.kind = ProfileKind::Cosine;
    p.c1 = amplitude;
    p.k = k;
    return p;
}

Profile Profile::cubic(double c0, double c1, double c2, double c3, double x_left, double x_right)
{
    Profile p = constant(c0, x_left, x_right);
    p.kind = ProfileKind::Cubic;
    p.c1 = c1;
    p.c2 = c2;
    p.c3 = c3;
    return p;
}

double Profile::value(double x) const
{
    const double xi = x - x_left;
    switch (kind) {
    case ProfileKind::Constant: return c0;
    case ProfileKind::Affine: return c0 + c1 * xi;
    case ProfileKind::Cosine: return c0 + c1 * std::cos(k * kPi * xi / (x_right - x_left));
    case ProfileKind::Cubic: return c0 + xi * (c1 + xi * (c2 + xi * c3));
    }
    return c0;
}

double Profile::d1(double x) const
{
    const double xi = x - x_left;
    switch (kind) {
    case ProfileKind::Constant: return 0.0;
    case ProfileKind::Affine: return c1;
    case ProfileKind::Cosine: {
        const double q = k * kPi / (x_right - x_left);
        return -c1 * q * std::sin(q * xi);
    }
    case ProfileKind::Cubic: return c1 + xi * (2.0 * c2 + 3.0 * c3 * xi);
    }
    return 0.0;
}

double Profile::d3(double x) const
{
    switch (kind) {
    case ProfileKind::Constant:
    case ProfileKind::Affine: return 0.0;
    case ProfileKind::Cosine: {
        const double q = k * kPi / (x_right - x_left);
        return c1 * q * q * q * std::sin(q * (x - x_left));
    }
    case ProfileKind::Cubic: return 6.0 * c3;
    }
    return 0.0;
}

bool Profile::boundary_compatible() const
{
    switch (kind) {
    case ProfileKind::Constant:
    case ProfileKind::Cosine: return true;
    case ProfileKind::Affine: return c1 == 0.0;
    case ProfileKind::Cubic: {
        return c1 == 0.0 && c2 == 0.0 && c3 == 0.0;
    }
    }
    return false;
}

double Profile::wavenumber() const
{
    const double length = x_right - x_left;
    return kind == ProfileKind::Cosine ? k * std::numbers::pi / length : 1.0 / length;
}

std::vector<double> Profile::third_derivative_zeros() const
{
    std::vector<double> zeros;
    if (kind == ProfileKind::Cosine)
        for (int j = 1; j < k; ++j)
            zeros.push_back(x_left + (x_right - x_left) * static_cast<double>(j) / k);
    return zeros;
}

FilmState Profile::sample(std::size_t n_cells) const
{
    const Grid grid = Grid::make(x_left, x_right, n_cells);
    std::vector<double> u(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) u[i] = value(grid.centre(i));
    return FilmState(grid, std::move(u));
}

namespace {

using Quad = boost::math::quadrature::gauss<double, 10>;

double composite(const std::function<double(double)>& f, const std::vector<double>& breaks, int m)
{
    const auto& nodes = Quad::abscissa();
    const auto& weights = Quad::weights();
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double width = (breaks[p + 1] - breaks[p]) / m;
        for (int s = 0; s < m; ++s) {
            const double a = breaks[p] + s * width;
            const double mid = a + 0.5 * width;
            const double half = 0.5 * width;
            // boost stores the non-negative half of the symmetric rule
            double panel = 0.0;
            for (std::size_t q = 0; q < nodes.size(); ++q) {
                if (nodes[q] == 0.0) {
                    panel += weights[q] * f(mid);
                } else {
                    panel += weights[q] * (f(mid - half * nodes[q]) + f(mid + half * nodes[q]));
                }
            }
            total += half * panel;
        }
    }
    return total;
}

double refine(const std::function<double(double)>& f, const std::vector<double>& breaks)
{
    std::vector<double> levels;
    double previous_estimate = std::numeric_limits<double>::quiet_NaN();
    for (int level = 0; level < kMaxQuadratureLevels; ++level) {
        levels.push_back(composite(f, breaks, 1 << level));
        const std::size_t n = levels.size();
        double estimate = levels.back();
        if (n >= 3) {
            const double d1 = levels[n - 2] - levels[n - 3];
            const double d2 = levels[n - 1] - levels[n - 2];
            if (d1 != 0.0 && d2 != 0.0 && std::abs(d2) < std::abs(d1)) {
                const double ratio = std::abs(d1 / d2);
                estimate = levels.back() + d2 / (ratio - 1.0);
            }
        }
        if (n >= 2) {
            const double scale = std::max(std::abs(estimate), std::numeric_limits<double>::min());
            if (std::abs(levels[n - 1] - levels[n - 2]) <= kQuadratureTol * scale) return levels.back();
            if (!std::isnan(previous_estimate)
                && std::abs(estimate - previous_estimate) <= kQuadratureTol * scale && n >= 4)
                return estimate;
        }
        if (levels.back() == 0.0 && n >= 2 && levels[n - 2] == 0.0) return 0.0;
        previous_estimate = estimate;
    }
    throw OracleError("quadrature refinement did not converge");
}

} // namespace

double quadrature_functional(const Profile& profile, Functional functional, FlowExponent alpha,
                             Regularisation reg)
{
    const double a = alpha.value();
    const double s2 = reg.sigma * reg.sigma;
    std::vector<double> breaks{profile.x_left};
    for (double z : profile.third_derivative_zeros()) breaks.push_back(z);
    breaks.push_back(profile.x_right);

    std::function<double(double)> f;
    switch (functional) {
    case Functional::Energy:
        f = [&](double x) { const double g = profile.d1(x); return 0.5 * g * g; };
        break;
    case Functional::Mass:
        f = [&](double x) { return profile.value(x); };
        break;
    case Functional::Dissipation:
        f = [&](double x) {
            const double u = profile.value(x);
            const double w = profile.d3(x);
            if (w == 0.0) return 0.0;
            return std::pow(u, a + 2.0) * std::pow(w * w + s2, 0.5 * (a - 1.0)) * w * w;
        };
        break;
    case Functional::LpNormThirdDerivative:
        f = [&](double x) { return std::pow(std::abs(profile.d3(x)), a + 1.0); };
        break;
    }
    const double value = refine(f, breaks);
    if (functional == Functional::LpNormThirdDerivative) return std::pow(value, 1.0 / (a + 1.0));
    return value;
}

double reference_flux(double u, double w, const Rheology& rheo, Regularisation reg)
{
    if (const auto* p = std::get_if<PowerLaw>(&rheo)) {
        const double a = p->alpha.value();
        if (w == 0.0) return 0.0;
        return std::pow(u, a + 2.0) * std::pow(w * w + reg.sigma * reg.sigma, 0.5 * (a - 1.0)) * w;
    }
    if (const auto* e = std::get_if<Ellis>(&rheo)) {
        const double a = e->alpha.value();
        const double uw = std::abs(u * w);
        const double factor = 1.0 + e->b * (uw == 0.0 ? (a == 1.0 ? 1.0 : 0.0) : std::pow(uw, a - 1.0));
        return e->a * u * u * u * factor * w;
    }
    return u * u * u * w;
}

namespace {

double reference_diffusivity(double u, double w, const Rheology& rheo, Regularisation reg)
{
    if (const auto* p = std::get_if<PowerLaw>(&rheo)) {
        const double a = p->alpha.value();
        const double s2 = reg.sigma * reg.sigma;
        double prime;
        if (a == 1.0) prime = 1.0;
        else if (w == 0.0 && s2 == 0.0) prime = a < 1.0 ? kReferenceCap : 0.0;
        else prime = std::pow(w * w + s2, 0.5 * (a - 3.0)) * (a * w * w + s2);
        return std::pow(u, a + 2.0) * std::min(prime, kReferenceCap);
    }
    if (const auto* e = std::get_if<Ellis>(&rheo)) {
        const double a = e->alpha.value();
        const double uw = std::abs(u * w);
        const double pw = uw == 0.0 ? (a == 1.0 ? 1.0 : 0.0) : std::pow(uw, a - 1.0);
        return e->a * u * u * u * (1.0 + e->b * a * pw);
    }
    return u * u * u;
}

// Mirror-padded copy with two ghosts per side.
std::vector<double> pad(std::span<const double> u)
{
    const std::size_t n = u.size();
    std::vector<double> p(n + 4);
    for (std::size_t i = 0; i < n; ++i) p[i + 2] = u[i];
    p[1] = u[0];
    p[0] = u[std::min<std::size_t>(1, n - 1)];
    p[n + 2] = u[n - 1];
    p[n + 3] = u[n >= 2 ? n - 2 : 0];
    return p;
}

// Interior face values (faces between cells i and i+1, i = 0..n-2).
void interior_faces(std::span<const double> u, double h, std::vector<double>& um,
                    std::vector<double>& w)
{
    const std::size_t n = u.size();
    const std::vector<double> p = pad(u);
    um.assign(n - 1, 0.0);
    w.assign(n - 1, 0.0);
    const double h3 = h * h * h;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        // p[i + 2] is u_i
        w[i] = (p[i + 4] - 3.0 * p[i + 3] + 3.0 * p[i + 2] - p[i + 1]) / h3;
        um[i] = 0.5 * (p[i + 2] + p[i + 3]);
    }
}

Diagnostics reference_diagnostics(double t, std::span<const double> u, double h, double length,
                                  const Rheology& rheo, Regularisation reg)
{
    Diagnostics d;
    d.t = t;
    double sum = 0.0, grad = 0.0;
    d.min_height = u[0];
    d.max_height = u[0];
    for (std::size_t i = 0; i < u.size(); ++i) {
        sum += u[i];
        d.min_height = std::min(d.min_height, u[i]);
        d.max_height = std::max(d.max_height, u[i]);
        if (i > 0) grad += (u[i] - u[i - 1]) * (u[i] - u[i - 1]);
    }
    d.mass = h * sum;
    d.energy = 0.5 * grad / h;
    const double mean = d.mass / length;
    double l2 = 0.0;
    for (double v : u) l2 += (v - mean) * (v - mean);
    d.h1_dist = std::sqrt(h * l2 + grad / h);
    std::vector<double> um, w;
    interior_faces(u, h, um, w);
    double diss = 0.0;
    for (std::size_t f = 0; f < w.size(); ++f) diss += reference_flux(um[f], w[f], rheo, reg) * w[f];
    d.dissipation = h * diss;
    return d;
}

} // namespace

std::vector<double> reference_rhs(std::span<const double> u, double h, const Rheology& rheo,
                                  Regularisation reg)
{
    const std::size_t n = u.size();
    if (n < 4) throw SizeError("reference_rhs needs at least 4 cells");
    std::vector<double> um, w;
    interior_faces(u, h, um, w);
    std::vector<double> flux(n + 1, 0.0);
    for (std::size_t f = 0; f + 1 < n; ++f) flux[f + 1] = reference_flux(um[f], w[f], rheo, reg);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = -(flux[i + 1] - flux[i]) / h;
    return out;
}

std::vector<double> prolong(std::span<const double> coarse)
{
    const std::size_t n = coarse.size();
    std::vector<double> fine(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = coarse[i == 0 ? 0 : i - 1];
        const double right = coarse[i + 1 == n ? n - 1 : i + 1];
        const double slope = (right - left) / 8.0;
        fine[2 * i] = coarse[i] - slope;
        fine[2 * i + 1] = coarse[i] + slope;
    }
    return fine;
}

std::vector<double> restrict_pairs(std::span<const double> fine)
{
    std::vector<double> coarse(fine.size() / 2);
    for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = 0.5 * (fine[2 * i] + fine[2 * i + 1]);
    return coarse;
}

Trajectory reference_integrate(const FilmState& state0, const Rheology& rheo, Regularisation reg,
                               double t_end, const ReferenceOptions& opts)
{
    const Grid& coarse = state0.grid();
    if (coarse.n_cells > kMaxReferenceCells)
        throw SizeError(fmt::format("reference_integrate is limited to {} cells, got {}",
                                    kMaxReferenceCells, coarse.n_cells));
    if (!(t_end > 0.0)) throw ConfigError("reference_integrate needs t_end > 0");

    std::vector<double> u = prolong(state0.u());
    const std::size_t n = u.size();
    const double h = 0.5 * coarse.h;

    std::vector<double> um, w;
    interior_faces(u, h, um, w);
    double worst = 0.0;
    for (std::size_t f = 0; f < w.size(); ++f) worst = std::max(worst, reference_diffusivity(um[f], w[f], rheo, reg));
    const double h4 = h * h * h * h;
    const double dt_stable = worst > 0.0 ? opts.c_stab * h4 / worst : t_end;
    const double steps_needed = std::ceil(t_end / (opts.dt_fraction * dt_stable));
    if (steps_needed > kMaxReferenceSteps)
        throw OracleError(fmt::format("reference run would need {:.3g} steps", steps_needed));
    const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(steps_needed));
    const double dt = t_end / static_cast<double>(steps);
    const std::size_t stride = std::max<std::size_t>(1, steps / std::max<std::size_t>(1, opts.max_samples));

    Trajectory traj;
    traj.grid = coarse;
    traj.steady_threshold = 0.0;
    const auto record = [&](double t) {
        const std::vector<double> c = restrict_pairs(u);
        traj.samples.push_back(reference_diagnostics(t, c, coarse.h, coarse.length(), rheo, reg));
    };
    record(0.0);
    traj.mean = traj.samples.front().mass / coarse.length();

    std::vector<double> k1, k2, k3, k4, tmp(n);
    const auto positive = [](const std::vector<double>& v) {
        for (double x : v) {
            if (!std::isfinite(x)) return -1;
            if (x <= 0.0) return 0;
        }
        return 1;
    };
    const auto stage = [&](const std::vector<double>& base, const std::vector<double>& k, double c,
                           double t) {
        for (std::size_t i = 0; i < n; ++i) tmp[i] = base[i] + c * dt * k[i];
        const int status = positive(tmp);
        if (status < 0) throw NumericalError("reference solution became non-finite", t);
        return status == 1;
    };

    double t = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        k1 = reference_rhs(u, h, rheo, reg);
        bool ok = stage(u, k1, 0.5, t);
        if (ok) {
            k2 = reference_rhs(tmp, h, rheo, reg);
            ok = stage(u, k2, 0.5, t);
        }
        if (ok) {
            k3 = reference_rhs(tmp, h, rheo, reg);
            ok = stage(u, k3, 1.0, t);
        }
        if (ok) {
            k4 = reference_rhs(tmp, h, rheo, reg);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            const int status = positive(tmp);
            if (status < 0) throw NumericalError("reference solution became non-finite", t);
            ok = status == 1;
        }
        if (!ok) {
            traj.termination = {TerminationKind::PositivityBreach, t};
            traj.final_u = restrict_pairs(u);
            if (traj.samples.back().t != t) record(t);
            return traj;
        }
        u.swap(tmp);
        t = (s + 1 == steps) ? t_end : static_cast<double>(s + 1) * dt;
        ++traj.stats.accepted;
        traj.stats.rhs_evaluations += 4;
        if ((s + 1) % stride == 0 || s + 1 == steps) record(t);
    }
    traj.stats.dt_smallest = dt;
    traj.stats.dt_largest = dt;
    traj.termination = {TerminationKind::ReachedTEnd, t};
    traj.final_u = restrict_pairs(u);
    return traj;
}

double monotonicity_sweep(FlowExponent alpha, Regularisation reg, std::size_t n_samples,
                          std::uint64_t seed)
{
    if (n_samples < 1000) throw ConfigError("monotonicity_sweep needs at least 1000 samples");
    const double a = alpha.value();
    const double s2 = reg.sigma * reg.sigma;
    const auto psi = [&](double s) { return std::pow(s * s + s2, 0.5 * (a - 1.0)) * s; };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> exponent(-3.0, 3.0);
    std::bernoulli_distribution sign(0.5);
    const auto draw = [&] {
        const double m = std::pow(10.0, exponent(rng));
        return sign(rng) ? m : -m;
    };

    double worst = std::numeric_limits<double>::infinity();
    std::size_t taken = 0;
    while (taken < n_samples) {
        const double v = draw();
        const double w = draw();
        if (v == w) continue;
        const double d = v - w;
        worst = std::min(worst, (psi(v) - psi(w)) * d / (d * d));
        ++taken;
    }
    return worst;
}

} // namespace thinfilm::oracle
