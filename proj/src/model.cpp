#include "thinfilm/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace thinfilm {

FlowExponent::FlowExponent(double alpha) : alpha_(alpha)
{
    if (!std::isfinite(alpha) || alpha <= 0.0)
        throw ConfigError(fmt::format("flow exponent must be positive and finite, got {}", alpha));
}

Regularisation Regularisation::make(double sigma)
{
    if (!std::isfinite(sigma) || sigma < 0.0 || sigma >= 1.0)
        throw ConfigError(fmt::format("regularisation sigma must lie in [0, 1), got {}", sigma));
    return Regularisation{sigma};
}

Ellis Ellis::make(double alpha, double a, double b)
{
    if (!(alpha >= 1.0))
        throw ConfigError(fmt::format("Ellis law needs alpha >= 1, got {}", alpha));
    if (!std::isfinite(a) || a <= 0.0 || !std::isfinite(b) || b <= 0.0)
        throw ConfigError(fmt::format("Ellis constants must be positive, got a={}, b={}", a, b));
    return Ellis{FlowExponent(alpha), a, b};
}

double flow_exponent(const Rheology& rheo)
{
    struct Visitor {
        double operator()(const Newtonian&) const { return 1.0; }
        double operator()(const PowerLaw& p) const { return p.alpha.value(); }
        double operator()(const Ellis& e) const { return e.alpha.value(); }
    };
    return std::visit(Visitor{}, rheo);
}

double decay_exponent(const Rheology& rheo)
{
    if (const auto* p = std::get_if<PowerLaw>(&rheo)) return p->alpha.value();
    return 1.0;
}

bool is_power_law(const Rheology& rheo)
{
    return std::holds_alternative<PowerLaw>(rheo);
}

std::string describe(const Rheology& rheo)
{
    struct Visitor {
        std::string operator()(const Newtonian&) const { return "newtonian"; }
        std::string operator()(const PowerLaw& p) const
        {
            return fmt::format("power_law(alpha={})", p.alpha.value());
        }
        std::string operator()(const Ellis& e) const
        {
            return fmt::format("ellis(alpha={}, a={}, b={})", e.alpha.value(), e.a, e.b);
        }
    };
    return std::visit(Visitor{}, rheo);
}

PowerFunction::PowerFunction(double exponent) : exponent_(exponent), form_(Form::General)
{
    if (exponent == 0.0) {
        form_ = Form::One;
        return;
    }
    const double scaled = exponent * 4.0;
    if (std::abs(scaled) <= 256.0 && scaled == std::floor(scaled)) {
        const int q = static_cast<int>(scaled);
        // floor division so the fractional part is always in {0,1,2,3} quarters
        whole_ = q >= 0 ? q / 4 : -((-q + 3) / 4);
        quarter_ = q - 4 * whole_;
        form_ = Form::Quarter;
    }
}

namespace {

void require_finite(double s, const char* what)
{
    if (!std::isfinite(s)) throw DomainError(fmt::format("{}: non-finite argument {}", what, s));
}

} // namespace

double psi(double s, FlowExponent alpha)
{
    require_finite(s, "psi");
    return FluxLaw(PowerLaw{alpha}, Regularisation{}).psi(s);
}

double psi_sigma(double s, FlowExponent alpha, Regularisation reg)
{
    require_finite(s, "psi_sigma");
    return FluxLaw(PowerLaw{alpha}, reg).psi(s);
}

double psi_sigma_prime(double s, FlowExponent alpha, Regularisation reg)
{
    require_finite(s, "psi_sigma_prime");
    const double a = alpha.value();
    if (a == 1.0) return 1.0;
    if (reg.sigma == 0.0) {
        if (s == 0.0) {
            if (a < 1.0)
                throw SingularityError("psi_sigma_prime: singular at s = 0 for alpha < 1 without regularisation");
            return 0.0;
        }
        return a * PowerFunction(a - 1.0)(std::abs(s));
    }
    const double s2 = s * s + reg.sigma * reg.sigma;
    // alpha (s^2+sigma^2)^((alpha-1)/2) - sigma^2 (alpha-1) (s^2+sigma^2)^((alpha-3)/2)
    return PowerFunction((a - 3.0) / 2.0)(s2) * (a * s * s + reg.sigma * reg.sigma);
}

double flux_density(double u, double w, const Rheology& rheo, Regularisation reg)
{
    if (!std::isfinite(u) || !std::isfinite(w))
        throw DomainError(fmt::format("flux_density: non-finite argument (u={}, w={})", u, w));
    if (u <= 0.0) throw DegeneracyError(fmt::format("flux_density: film height {} is not positive", u));
    return FluxLaw(rheo, reg).flux(u, w);
}

FluxLaw::FluxLaw(const Rheology& rheo, Regularisation reg, double psi_prime_cap)
    : kind_(Kind::Newtonian), alpha_(flow_exponent(rheo)), sigma_(reg.sigma),
      sigma2_(reg.sigma * reg.sigma), cap_(psi_prime_cap)
{
    if (const auto* p = std::get_if<PowerLaw>(&rheo)) {
        kind_ = Kind::PowerLaw;
        mobility_ = PowerFunction(alpha_ + 2.0);
        abs_power_ = PowerFunction(alpha_ - 1.0);
        half_power_ = PowerFunction((alpha_ - 1.0) / 2.0);
        prime_power_ = PowerFunction((alpha_ - 3.0) / 2.0);
        (void)p;
    } else if (const auto* e = std::get_if<Ellis>(&rheo)) {
        kind_ = Kind::Ellis;
        a_ = e->a;
        b_ = e->b;
        ellis_power_ = PowerFunction(alpha_ - 1.0);
    }
}

double FluxLaw::psi_prime_capped(double w) const noexcept
{
    if (alpha_ == 1.0) return std::min(1.0, cap_);
    double value;
    if (sigma_ == 0.0) {
        if (w == 0.0) return alpha_ < 1.0 ? cap_ : 0.0;
        value = alpha_ * abs_power_(std::abs(w));
    } else {
        value = prime_power_(w * w + sigma2_) * (alpha_ * w * w + sigma2_);
    }
    return std::min(value, cap_);
}

double FluxLaw::diffusivity(double u, double w) const noexcept
{
    return partials(u, w).d_third;
}

FluxPartials FluxLaw::partials(double u, double w) const noexcept
{
    switch (kind_) {
    case Kind::Newtonian: {
        const double u2 = u * u;
        return {3.0 * u2 * w, u2 * u};
    }
    case Kind::PowerLaw: {
        const double m = mobility_(u);
        return {(alpha_ + 2.0) * (m / u) * psi(w), m * psi_prime_capped(w)};
    }
    case Kind::Ellis: {
        const double p = ellis_power_(std::abs(u * w));
        const double u2 = u * u;
        return {a_ * w * u2 * (3.0 + b_ * (alpha_ + 2.0) * p),
                a_ * u2 * u * (1.0 + b_ * alpha_ * p)};
    }
    }
    return {0.0, 0.0};
}

} // namespace thinfilm
