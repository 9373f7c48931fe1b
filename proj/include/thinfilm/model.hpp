#pragma once

// Constitutive laws of the power-law and Ellis thin-film equations.
//
// The flux through a face is F = flux_density(u, w) where u is the film
// height and w stands for the third derivative u_xxx:
//
//   Newtonian   F = u^3 w
//   power law   F = u^(alpha+2) psi_sigma(w),  psi_sigma(s) = (s^2 + sigma^2)^((alpha-1)/2) s
//   Ellis       F = a u^3 (1 + b |u w|^(alpha-1)) w
//
// All functions here are pure and may be called concurrently.

#include <cmath>
#include <string>
#include <variant>

#include "thinfilm/errors.hpp"

namespace thinfilm {

inline constexpr double kDefaultPsiPrimeCap = 1e8;

class FlowExponent {
public:
    explicit FlowExponent(double alpha);

    double value() const noexcept { return alpha_; }

    friend bool operator==(const FlowExponent&, const FlowExponent&) = default;

private:
    double alpha_;
};

struct Regularisation {
    double sigma = 0.0;

    // Validating factory; sigma must lie in [0, 1).
    static Regularisation make(double sigma);

    friend bool operator==(const Regularisation&, const Regularisation&) = default;
};

struct Newtonian {
    friend bool operator==(const Newtonian&, const Newtonian&) = default;
};

struct PowerLaw {
    FlowExponent alpha;

    friend bool operator==(const PowerLaw&, const PowerLaw&) = default;
};

struct Ellis {
    FlowExponent alpha;
    double a = 1.0;
    double b = 1.0;

    // Validating factory; alpha >= 1, a > 0, b > 0.
    static Ellis make(double alpha, double a = 1.0, double b = 1.0);

    friend bool operator==(const Ellis&, const Ellis&) = default;
};

using Rheology = std::variant<Newtonian, PowerLaw, Ellis>;

// Flow-behaviour exponent (1 for Newtonian).
double flow_exponent(const Rheology& rheo);

// Exponent p in the Lojasiewicz-type bound D >= C E^((p+1)/2).  Ellis
// dissipation dominates its Newtonian part, so Ellis decays with p = 1.
double decay_exponent(const Rheology& rheo);

bool is_power_law(const Rheology& rheo);

std::string describe(const Rheology& rheo);

// x^p for x >= 0 with fast paths for exponents that are multiples of 1/4.
class PowerFunction {
public:
    explicit PowerFunction(double exponent);

    double exponent() const noexcept { return exponent_; }

    double operator()(double x) const noexcept
    {
        switch (form_) {
        case Form::One:
            return 1.0;
        case Form::Quarter: {
            double r = 1.0;
            switch (quarter_) {
            case 1: r = std::sqrt(std::sqrt(x)); break;
            case 2: r = std::sqrt(x); break;
            case 3: { const double s = std::sqrt(x); r = s * std::sqrt(s); } break;
            default: break;
            }
            const double ip = integer_power(x, whole_ < 0 ? -whole_ : whole_);
            return whole_ < 0 ? r / ip : r * ip;
        }
        case Form::General:
            break;
        }
        return std::pow(x, exponent_);
    }

private:
    enum class Form { One, Quarter, General };

    static double integer_power(double x, int n) noexcept
    {
        double result = 1.0;
        double base = x;
        while (n > 0) {
            if (n & 1) result *= base;
            base *= base;
            n >>= 1;
        }
        return result;
    }

    double exponent_;
    Form form_;
    int whole_ = 0;   // floor(exponent)
    int quarter_ = 0; // (exponent - whole) * 4
};

// |s|^(alpha-1) s, continuously extended by 0 at s = 0.
double psi(double s, FlowExponent alpha);

// (s^2 + sigma^2)^((alpha-1)/2) s; identical to psi when sigma = 0.
double psi_sigma(double s, FlowExponent alpha, Regularisation reg);

// d/ds psi_sigma.  Throws SingularityError at sigma = 0, s = 0, alpha < 1.
double psi_sigma_prime(double s, FlowExponent alpha, Regularisation reg);

// Throws DegeneracyError for u <= 0 and DomainError for non-finite input.
double flux_density(double u, double w, const Rheology& rheo, Regularisation reg);

struct FluxPartials {
    double d_height; // dF/du
    double d_third;  // dF/dw, with psi' capped
};

// Pre-resolved flux law used by the stepping kernels.  Performs no argument
// checks; callers guarantee u > 0.  The public free functions above are thin
// checked wrappers around this class so both paths agree bit for bit.
class FluxLaw {
public:
    FluxLaw(const Rheology& rheo, Regularisation reg,
            double psi_prime_cap = kDefaultPsiPrimeCap);

    double flux(double u, double w) const noexcept
    {
        switch (kind_) {
        case Kind::Newtonian:
            return cube_(u) * w;
        case Kind::PowerLaw:
            return mobility_(u) * psi(w);
        case Kind::Ellis: {
            const double factor = 1.0 + b_ * ellis_power_(std::abs(u * w));
            return a_ * (factor * (cube_(u) * w));
        }
        }
        return 0.0;
    }

    double psi(double w) const noexcept
    {
        if (sigma_ == 0.0) {
            if (w == 0.0) return 0.0;
            return abs_power_(std::abs(w)) * w;
        }
        return half_power_(w * w + sigma2_) * w;
    }

    // psi'_sigma(w) limited to [0, cap]; finite at the singular point.
    double psi_prime_capped(double w) const noexcept;

    // dF/dw with the capped psi'.
    double diffusivity(double u, double w) const noexcept;

    FluxPartials partials(double u, double w) const noexcept;

    double psi_prime_cap() const noexcept { return cap_; }

private:
    enum class Kind { Newtonian, PowerLaw, Ellis };

    Kind kind_;
    double alpha_;
    double a_ = 1.0;
    double b_ = 1.0;
    double sigma_;
    double sigma2_;
    double cap_;
    PowerFunction cube_{3.0};
    PowerFunction mobility_{3.0};     // u^(alpha+2)
    PowerFunction abs_power_{0.0};    // |s|^(alpha-1)
    PowerFunction half_power_{0.0};   // (s^2+sigma^2)^((alpha-1)/2)
    PowerFunction prime_power_{0.0};  // (s^2+sigma^2)^((alpha-3)/2)
    PowerFunction ellis_power_{0.0};  // |u w|^(alpha-1)
};

} // namespace thinfilm
