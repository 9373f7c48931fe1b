#include "thinfilm/asymptotics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace thinfilm {

namespace {

constexpr std::size_t kMinLojasiewiczSamples = 10;
constexpr std::size_t kMinFitSamples = 5;
constexpr double kEnvelopeSlack = 1e-12;

} // namespace

std::string to_string(Regime regime)
{
    switch (regime) {
    case Regime::FiniteTimeExtinction: return "FiniteTimeExtinction";
    case Regime::Polynomial: return "Polynomial";
    case Regime::Exponential: return "Exponential";
    case Regime::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw InsufficientDataError("linear fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw InsufficientDataError("linear fit needs distinct abscissae");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    fit.slope_stderr = n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
    return fit;
}

double time_integral(const std::vector<Diagnostics>& samples, double a, double b,
                     double Diagnostics::*field)
{
    if (samples.empty() || !(a <= b))
        throw InsufficientDataError("time_integral: empty sample set or reversed interval");
    const double span = std::max(std::abs(a), std::abs(b));
    const double slack = 1e-12 * span;
    if (samples.front().t > a + slack || samples.back().t < b - slack)
        throw InsufficientDataError(fmt::format(
            "samples cover [{}, {}] but [{}, {}] was requested", samples.front().t,
            samples.back().t, a, b));
    a = std::max(a, samples.front().t);
    b = std::min(b, samples.back().t);

    const auto value_at = [&](double t) {
        auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                   [](const Diagnostics& d, double x) { return d.t < x; });
        if (it == samples.end()) return samples.back().*field;
        if (it->t == t || it == samples.begin()) return (*it).*field;
        const Diagnostics& hi = *it;
        const Diagnostics& lo = *(it - 1);
        const double w = (t - lo.t) / (hi.t - lo.t);
        return (1.0 - w) * (lo.*field) + w * (hi.*field);
    };

    double sum = 0.0;
    double t_prev = a;
    double v_prev = value_at(a);
    for (const Diagnostics& d : samples) {
        if (d.t <= a) continue;
        if (d.t >= b) break;
        sum += 0.5 * (d.*field + v_prev) * (d.t - t_prev);
        t_prev = d.t;
        v_prev = d.*field;
    }
    sum += 0.5 * (value_at(b) + v_prev) * (b - t_prev);
    return sum;
}

double lojasiewicz_constant(const Trajectory& traj, FlowExponent alpha)
{
    const double p = 0.5 * (alpha.value() + 1.0);
    double best = std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (const Diagnostics& d : traj.samples) {
        if (!(d.energy > traj.steady_threshold) || d.energy <= 0.0) continue;
        best = std::min(best, d.dissipation / std::pow(d.energy, p));
        ++count;
    }
    if (count < kMinLojasiewiczSamples)
        throw InsufficientDataError(fmt::format(
            "lojasiewicz_constant: {} samples above the steady threshold, need {}", count,
            kMinLojasiewiczSamples));
    return std::max(best, 0.0);
}

namespace {

double try_lojasiewicz(const Trajectory& traj, FlowExponent alpha, std::string& note)
{
    try {
        return lojasiewicz_constant(traj, alpha);
    } catch (const InsufficientDataError& e) {
        note += e.what();
        return 0.0;
    }
}

struct Tail {
    std::vector<double> t;
    std::vector<double> e;
    std::vector<const Diagnostics*> rows;
};

// samples in the final decade of time with energy above the steady threshold
Tail final_decade(const Trajectory& traj)
{
    Tail tail;
    if (traj.samples.empty()) return tail;
    const double t_last = traj.samples.back().t;
    const double t_first = t_last / 10.0;
    for (const Diagnostics& d : traj.samples) {
        if (d.t < t_first || d.t <= 0.0) continue;
        if (!(d.energy > traj.steady_threshold) || d.energy <= 0.0) continue;
        tail.t.push_back(d.t);
        tail.e.push_back(d.energy);
        tail.rows.push_back(&d);
    }
    return tail;
}

} // namespace

FitReport fit_extinction(const Trajectory& traj, FlowExponent alpha)
{
    const double a = alpha.value();
    if (!(a < 1.0))
        throw WrongRegimeError(fmt::format("extinction fit needs alpha < 1, got {}", a));
    if (traj.samples.empty()) throw InsufficientDataError("extinction fit: empty trajectory");
    const bool extinct = traj.termination.kind == TerminationKind::Extinction
                         || traj.samples.back().energy <= traj.steady_threshold;
    if (!extinct) throw WrongRegimeError("extinction fit: trajectory did not reach the steady threshold");

    const double e0 = traj.initial_energy();
    const double q = 0.5 * (1.0 - a);
    std::vector<double> t, y;
    for (const Diagnostics& d : traj.samples) {
        if (d.energy < 1e-10 * e0 || d.energy > 0.5 * e0) continue;
        t.push_back(d.t);
        y.push_back(std::pow(d.energy, q));
    }
    if (t.size() < kMinFitSamples)
        throw InsufficientDataError(fmt::format("extinction fit: {} samples in window", t.size()));

    const LinearFit fit = linear_fit(t, y);
    FitReport rep;
    rep.regime = Regime::FiniteTimeExtinction;
    rep.fitted_exponent_or_rate = fit.slope;
    rep.r_squared = fit.r_squared;
    rep.standard_error = fit.slope_stderr;
    rep.window = {t.front(), t.back()};
    if (fit.slope < 0.0) rep.extinction_time = -fit.intercept / fit.slope;
    rep.lojasiewicz_c = try_lojasiewicz(traj, alpha, rep.note);
    if (rep.lojasiewicz_c > 0.0) {
        // t* <= E0^((1-alpha)/2) / C_alpha with C_alpha = (1-alpha)/2 * C
        rep.theoretical_value = std::pow(e0, q) / (q * rep.lojasiewicz_c);
        rep.envelope_constant = q * rep.lojasiewicz_c;
        // E^q <= E0^q - q C t, clipped at zero
        std::size_t inside = 0;
        for (const Diagnostics& d : traj.samples) {
            const double root = std::max(std::pow(e0, q) - q * rep.lojasiewicz_c * d.t, 0.0);
            if (d.energy <= std::pow(root, 1.0 / q) * (1.0 + kEnvelopeSlack)) ++inside;
        }
        rep.envelope_fraction = static_cast<double>(inside) / static_cast<double>(traj.samples.size());
    }
    if (rep.extinction_time && traj.termination.kind == TerminationKind::Extinction
        && traj.termination.time > 0.0)
        rep.relative_gap = std::abs(*rep.extinction_time - traj.termination.time) / traj.termination.time;
    else if (!rep.extinction_time)
        rep.note += "affine fit is not decreasing; ";
    return rep;
}

FitReport fit_polynomial(const Trajectory& traj, FlowExponent alpha)
{
    const double a = alpha.value();
    if (!(a > 1.0)) throw WrongRegimeError(fmt::format("polynomial fit needs alpha > 1, got {}", a));
    const Tail tail = final_decade(traj);
    if (tail.t.size() < kMinFitSamples || traj.samples.front().t > tail.t.back() / 10.0)
        throw InsufficientDataError("polynomial fit: tail does not span a decade in time");

    std::vector<double> lt(tail.t.size()), le(tail.t.size());
    for (std::size_t i = 0; i < tail.t.size(); ++i) {
        lt[i] = std::log(tail.t[i]);
        le[i] = std::log(tail.e[i]);
    }
    const LinearFit fit = linear_fit(lt, le);
    FitReport rep;
    rep.regime = Regime::Polynomial;
    rep.fitted_exponent_or_rate = fit.slope;
    rep.theoretical_value = -2.0 / (a - 1.0);
    rep.relative_gap = std::abs(fit.slope - rep.theoretical_value) / std::abs(rep.theoretical_value);
    rep.r_squared = fit.r_squared;
    rep.standard_error = fit.slope_stderr;
    rep.window = {tail.t.front(), tail.t.back()};
    rep.lojasiewicz_c = try_lojasiewicz(traj, alpha, rep.note);

    // E <= E0 / (1 + c t)^(2/(alpha-1)),  c = (alpha-1)/2 * C * E0^((alpha-1)/2)
    const double e0 = traj.initial_energy();
    const double c = 0.5 * (a - 1.0) * rep.lojasiewicz_c * std::pow(e0, 0.5 * (a - 1.0));
    rep.envelope_constant = c;
    std::size_t inside = 0, total = 0;
    for (const Diagnostics& d : traj.samples) {
        const double bound = e0 / std::pow(1.0 + c * d.t, 2.0 / (a - 1.0));
        if (d.energy <= bound * (1.0 + kEnvelopeSlack)) ++inside;
        ++total;
    }
    rep.envelope_fraction = total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
    return rep;
}

FitReport fit_exponential(const Trajectory& traj)
{
    const Tail tail = final_decade(traj);
    if (tail.t.size() < kMinFitSamples) throw InsufficientDataError("exponential fit: tail too short");
    const auto [lo, hi] = std::minmax_element(tail.e.begin(), tail.e.end());
    if (*hi < 1e4 * *lo)
        throw InsufficientDataError(fmt::format(
            "exponential fit: energy spans {:.2f} decades, need 4", std::log10(*hi / *lo)));

    std::vector<double> le(tail.e.size());
    for (std::size_t i = 0; i < le.size(); ++i) le[i] = std::log(tail.e[i]);
    const LinearFit fit = linear_fit(tail.t, le);
    FitReport rep;
    rep.regime = Regime::Exponential;
    rep.fitted_exponent_or_rate = -fit.slope;
    rep.r_squared = fit.r_squared;
    rep.standard_error = fit.slope_stderr;
    rep.window = {tail.t.front(), tail.t.back()};
    rep.lojasiewicz_c = try_lojasiewicz(traj, FlowExponent(1.0), rep.note);
    // E <= E0 exp(-C t) with the p = 1 constant
    rep.theoretical_value = rep.lojasiewicz_c;
    if (rep.lojasiewicz_c > 0.0)
        rep.relative_gap = (rep.fitted_exponent_or_rate - rep.lojasiewicz_c) / rep.lojasiewicz_c;
    rep.envelope_constant = rep.lojasiewicz_c;
    const double e0 = traj.initial_energy();
    std::size_t inside = 0;
    for (const Diagnostics& d : traj.samples)
        if (d.energy <= e0 * std::exp(-rep.lojasiewicz_c * d.t) * (1.0 + kEnvelopeSlack)) ++inside;
    rep.envelope_fraction = traj.samples.empty()
                                ? 0.0
                                : static_cast<double>(inside) / static_cast<double>(traj.samples.size());
    return rep;
}

double l1_dissipation_check(const Trajectory& traj, double t)
{
    if (!(t > 0.0)) throw InsufficientDataError("l1_dissipation_check: t must be positive");
    const double dissipated = time_integral(traj.samples, 0.5 * t, t, &Diagnostics::dissipation);
    if (dissipated == 0.0) return 0.0;
    const double stored = time_integral(traj.samples, 0.25 * t, 0.5 * t, &Diagnostics::energy) / t;
    if (stored == 0.0) return std::numeric_limits<double>::infinity();
    return dissipated / stored;
}

FitReport classify(const Trajectory& traj, const Rheology& rheo)
{
    try {
        if (const auto* p = std::get_if<PowerLaw>(&rheo)) {
            if (p->alpha.value() < 1.0) return fit_extinction(traj, p->alpha);
            if (p->alpha.value() > 1.0) return fit_polynomial(traj, p->alpha);
        }
        return fit_exponential(traj);
    } catch (const std::exception& e) {
        FitReport rep;
        rep.regime = Regime::Undetermined;
        rep.note = e.what();
        if (!traj.samples.empty()) rep.window = {traj.samples.front().t, traj.samples.back().t};
        return rep;
    }
}

Trajectory subsample(const Trajectory& traj, std::size_t k)
{
    if (k == 0) throw ConfigError("subsample: stride must be positive");
    Trajectory out = traj;
    out.samples.clear();
    for (std::size_t i = 0; i < traj.samples.size(); i += k) out.samples.push_back(traj.samples[i]);
    if (!traj.samples.empty() && out.samples.back().t != traj.samples.back().t)
        out.samples.push_back(traj.samples.back());
    return out;
}

} // namespace thinfilm
