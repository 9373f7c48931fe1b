#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "generators.hpp"
#include "thinfilm/model.hpp"
#include "thinfilm/oracle.hpp"

using namespace thinfilm;
using thinfilm::testing::Gen;
using thinfilm::testing::rel_err;

TEST(FlowExponent, RejectsNonPositive)
{
    EXPECT_THROW(FlowExponent(0.0), ConfigError);
    EXPECT_THROW(FlowExponent(-1.0), ConfigError);
    EXPECT_THROW(FlowExponent(std::numeric_limits<double>::quiet_NaN()), ConfigError);
    EXPECT_DOUBLE_EQ(FlowExponent(0.5).value(), 0.5);
}

TEST(Regularisation, Range)
{
    EXPECT_NO_THROW(Regularisation::make(0.0));
    EXPECT_NO_THROW(Regularisation::make(0.999));
    EXPECT_THROW(Regularisation::make(1.0), ConfigError);
    EXPECT_THROW(Regularisation::make(-1e-3), ConfigError);
}

TEST(Ellis, Validation)
{
    EXPECT_THROW(Ellis::make(0.5), ConfigError);
    EXPECT_THROW(Ellis::make(1.5, 0.0, 1.0), ConfigError);
    EXPECT_THROW(Ellis::make(1.5, 1.0, -1.0), ConfigError);
    EXPECT_NO_THROW(Ellis::make(1.0));
}

TEST(Psi, Examples)
{
    for (double a : {0.3, 0.5, 1.0, 2.0, 3.0}) EXPECT_EQ(psi(0.0, FlowExponent(a)), 0.0);
    for (double s : {-2.0, 0.5, 7.0}) EXPECT_EQ(psi(s, FlowExponent(1.0)), s);
    EXPECT_DOUBLE_EQ(psi(-3.0, FlowExponent(2.0)), -9.0);
    EXPECT_THROW(psi(std::numeric_limits<double>::infinity(), FlowExponent(2.0)), DomainError);
}

TEST(PsiSigma, Examples)
{
    for (double a : {0.5, 1.0, 3.0})
        for (double s : {0.0, 0.1, 0.9}) EXPECT_EQ(psi_sigma(0.0, FlowExponent(a), Regularisation{s}), 0.0);
    // sigma = 1 lies outside Regularisation::make's range; the formula itself is fine there
    EXPECT_DOUBLE_EQ(psi_sigma(1.0, FlowExponent(3.0), Regularisation{1.0}), 2.0);
    EXPECT_THROW(psi_sigma(std::nan(""), FlowExponent(2.0), {}), DomainError);
}

TEST(PsiSigma, SmallSigmaApproachesPsi)
{
    for (double a : {0.5, 2.0})
        for (double s = 0.1; s <= 10.0; s *= 1.3)
            EXPECT_LT(rel_err(psi_sigma(s, FlowExponent(a), Regularisation{1e-6}), psi(s, FlowExponent(a))), 1e-4);
}

TEST(PsiSigma, EqualsPsiAtZeroSigma)
{
    Gen g(11);
    for (int n = 0; n < 2000; ++n) {
        const FlowExponent a(g.uniform(0.2, 4.0));
        const double s = g.signed_log(1e-6, 1e6);
        EXPECT_EQ(psi_sigma(s, a, {}), psi(s, a));
    }
}

TEST(PsiSigmaPrime, Examples)
{
    Gen g(3);
    for (int n = 0; n < 100; ++n) {
        const double s = g.signed_log(1e-3, 1e3);
        EXPECT_EQ(psi_sigma_prime(s, FlowExponent(1.0), Regularisation{g.uniform(0.0, 0.9)}), 1.0);
    }
    for (double a : {0.5, 2.0, 3.0})
        for (double sig : {0.01, 0.1, 0.5})
            EXPECT_LT(rel_err(psi_sigma_prime(0.0, FlowExponent(a), Regularisation{sig}), std::pow(sig, a - 1.0)),
                      1e-14);
    EXPECT_THROW(psi_sigma_prime(0.0, FlowExponent(0.5), {}), SingularityError);
    EXPECT_NO_THROW(psi_sigma_prime(0.3, FlowExponent(0.5), {}));
}

TEST(PsiSigmaPrime, MatchesCentralDifference)
{
    for (double a : {0.5, 2.0, 3.0})
        for (double s : {-2.0, 0.3, 5.0}) {
            const FlowExponent fe(a);
            const Regularisation r{0.1};
            const double e = 1e-5 * std::max(1.0, std::abs(s));
            const double fd = (psi_sigma(s + e, fe, r) - psi_sigma(s - e, fe, r)) / (2.0 * e);
            EXPECT_LT(rel_err(psi_sigma_prime(s, fe, r), fd), 1e-6) << "alpha=" << a << " s=" << s;
        }
}

TEST(PsiSigmaPrime, MatchesTextbookForm)
{
    // alpha (s^2+sigma^2)^((alpha-1)/2) - sigma^2 (alpha-1) (s^2+sigma^2)^((alpha-3)/2)
    Gen g(5);
    for (int n = 0; n < 1000; ++n) {
        const double a = g.uniform(0.3, 3.5), sig = g.uniform(1e-3, 0.9), s = g.signed_log(1e-4, 1e3);
        const double q = s * s + sig * sig;
        const double ref = a * std::pow(q, 0.5 * (a - 1.0)) - sig * sig * (a - 1.0) * std::pow(q, 0.5 * (a - 3.0));
        EXPECT_LT(rel_err(psi_sigma_prime(s, FlowExponent(a), Regularisation{sig}), ref), 1e-10);
    }
}

TEST(FluxDensity, Examples)
{
    Gen g(8);
    for (int n = 0; n < 50; ++n) EXPECT_EQ(flux_density(g.uniform(0.1, 3), 0.0, g.rheology(), g.regularisation()), 0.0);
    EXPECT_EQ(flux_density(2.0, 1.0, Newtonian{}, {}), 8.0);
    EXPECT_EQ(flux_density(1.0, 2.0, Ellis::make(2.0, 1.0, 1.0), {}), 6.0);
    EXPECT_THROW(flux_density(0.0, 1.0, Newtonian{}, {}), DegeneracyError);
    EXPECT_THROW(flux_density(-1.0, 1.0, PowerLaw{FlowExponent(2.0)}, {}), DegeneracyError);
    EXPECT_THROW(flux_density(1.0, std::nan(""), Newtonian{}, {}), DomainError);
}

TEST(FluxDensity, EllisIgnoresSigma)
{
    const Rheology e = Ellis::make(1.5, 2.0, 0.5);
    EXPECT_EQ(flux_density(1.2, -0.7, e, {}), flux_density(1.2, -0.7, e, Regularisation{0.5}));
}

// Properties

TEST(ModelProperty, Monotonicity)
{
    Gen g(20);
    for (double a : {0.3, 0.5, 1.0, 1.5, 2.0, 3.0})
        for (double sig : {0.0, 1e-3, 1e-1}) {
            const FlowExponent fe(a);
            const Regularisation r{sig};
            for (int n = 0; n < 2000; ++n) {
                const double v = g.uniform(-1e3, 1e3), w = g.uniform(-1e3, 1e3);
                if (v == w) continue;
                EXPECT_GT((psi_sigma(v, fe, r) - psi_sigma(w, fe, r)) * (v - w), 0.0);
            }
        }
}

TEST(ModelProperty, Oddness)
{
    Gen g(21);
    for (int n = 0; n < 5000; ++n) {
        const FlowExponent fe(g.uniform(0.2, 4.0));
        const Regularisation r = g.regularisation();
        const double s = g.signed_log(1e-8, 1e8);
        EXPECT_EQ(psi_sigma(-s, fe, r), -psi_sigma(s, fe, r));
    }
}

TEST(ModelProperty, ConsistencyEnvelope)
{
    Gen g(22);
    for (int n = 0; n < 5000; ++n) {
        const double a = g.uniform(0.3, 3.0);
        const double sig = std::exp(g.uniform(std::log(1e-4), std::log(0.5)));
        const double s = g.signed_log(1e-4, 1e2);
        const FlowExponent fe(a);
        const double gap = std::abs(psi_sigma(s, fe, Regularisation{sig}) - psi(s, fe));
        const double bound = std::pow(sig, std::min(a, 1.0)) * std::pow(std::abs(s) + sig, std::max(a - 1.0, 0.0));
        EXPECT_LE(gap, bound * (1.0 + 1e-12)) << "alpha=" << a << " sigma=" << sig << " s=" << s;
    }
}

TEST(ModelProperty, RheologyCoincidence)
{
    Gen g(23);
    for (int n = 0; n < 2000; ++n) {
        const double u = g.uniform(0.05, 5.0), w = g.signed_log(1e-6, 1e6), b = g.uniform(0.0, 5.0);
        const Regularisation r = g.regularisation();
        const double newt = flux_density(u, w, Newtonian{}, r);
        EXPECT_EQ(newt, flux_density(u, w, PowerLaw{FlowExponent(1.0)}, r));
        if (b > 0.0) {
            EXPECT_EQ(flux_density(u, w, Ellis::make(1.0, 1.0, b), r), (1.0 + b) * newt);
        }
    }
}

TEST(ModelProperty, FluxSignFollowsW)
{
    Gen g(24);
    for (int n = 0; n < 2000; ++n) {
        const double u = g.uniform(0.05, 5.0), w = g.signed_log(1e-6, 1e6);
        const double f = flux_density(u, w, g.rheology(), g.regularisation());
        EXPECT_EQ(std::signbit(f), std::signbit(w));
        EXPECT_NE(f, 0.0);
    }
}

TEST(ModelProperty, FastPowersMatchStdPow)
{
    Gen g(25);
    for (int n = 0; n < 2000; ++n) {
        const double u = g.uniform(0.05, 5.0), w = g.signed_log(1e-4, 1e4);
        const Rheology rheo = g.rheology();
        const Regularisation r = g.regularisation();
        EXPECT_LT(rel_err(flux_density(u, w, rheo, r), oracle::reference_flux(u, w, rheo, r)), 1e-12);
    }
    for (double a : {0.25, 0.5, 0.75, 1.5, 2.0, 2.25, 3.0}) {
        const FlowExponent fe(a);
        for (double u : {0.3, 1.0, 1.7})
            for (double w : {-3.0, 0.01, 2.5})
                EXPECT_LT(rel_err(flux_density(u, w, PowerLaw{fe}, {}),
                                  oracle::reference_flux(u, w, PowerLaw{fe}, {})),
                          1e-13);
    }
}

TEST(FluxLaw, PartialsMatchFiniteDifferences)
{
    Gen g(26);
    for (int n = 0; n < 500; ++n) {
        const Rheology rheo = g.rheology();
        const Regularisation r{g.uniform(0.01, 0.3)};
        const FluxLaw law(rheo, r);
        const double u = g.uniform(0.3, 2.0), w = g.signed_log(0.05, 20.0);
        const FluxPartials p = law.partials(u, w);
        const double eu = 1e-6 * u, ew = 1e-6 * std::abs(w);
        const double du = (law.flux(u + eu, w) - law.flux(u - eu, w)) / (2 * eu);
        const double dw = (law.flux(u, w + ew) - law.flux(u, w - ew)) / (2 * ew);
        EXPECT_LT(rel_err(p.d_height, du), 1e-6) << describe(rheo);
        EXPECT_LT(rel_err(p.d_third, dw), 1e-6) << describe(rheo);
        EXPECT_EQ(law.diffusivity(u, w), p.d_third);
    }
}

TEST(FluxLaw, CappedDerivativeAtSingularPoint)
{
    const FluxLaw thick(PowerLaw{FlowExponent(0.5)}, {}, 1e6);
    EXPECT_EQ(thick.psi_prime_capped(0.0), 1e6);
    EXPECT_LE(thick.psi_prime_capped(1e-30), 1e6);
    const FluxLaw thin(PowerLaw{FlowExponent(2.0)}, {});
    EXPECT_EQ(thin.psi_prime_capped(0.0), 0.0);
}

TEST(Describe, NamesKinds)
{
    EXPECT_EQ(describe(Newtonian{}), "newtonian");
    EXPECT_NE(describe(PowerLaw{FlowExponent(2.0)}).find("power_law"), std::string::npos);
    EXPECT_DOUBLE_EQ(flow_exponent(Ellis::make(1.5)), 1.5);
    EXPECT_DOUBLE_EQ(decay_exponent(Ellis::make(1.5)), 1.0);
    EXPECT_DOUBLE_EQ(decay_exponent(PowerLaw{FlowExponent(3.0)}), 3.0);
    EXPECT_TRUE(is_power_law(PowerLaw{FlowExponent(3.0)}));
    EXPECT_FALSE(is_power_law(Newtonian{}));
}
