#include "thinfilm/harness.hpp"
#include "thinfilm/oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace thinfilm {

bool SelfcheckReport::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

namespace {

std::vector<Rheology> rheologies()
{
    return {Newtonian{}, PowerLaw{FlowExponent(0.5)}, PowerLaw{FlowExponent(2.0)},
            PowerLaw{FlowExponent(3.0)}, Ellis::make(1.5)};
}

std::vector<double> random_heights(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> base(0.2, 2.0), rel(-0.5, 0.5);
    const double b = base(rng);
    std::vector<double> u(n);
    for (double& v : u) v = b * (1.0 + rel(rng));
    return u;
}

void add(SelfcheckReport& rep, std::string name, double value, double limit, std::string detail = {})
{
    rep.checks.push_back({std::move(name), value <= limit, value, limit, std::move(detail)});
}

} // namespace

SelfcheckReport selfcheck(const SelfcheckOptions& opts)
{
    SelfcheckReport rep;
    std::mt19937_64 rng(opts.seed);
    const double sign = opts.negate_flux ? -1.0 : 1.0;

    double worst_mass = 0.0, worst_identity = 0.0, worst_constant = 0.0;
    std::string where_mass, where_identity;
    for (std::size_t n : opts.n_cells) {
        const Grid g = Grid::make(0.0, 1.0, n);
        for (const Rheology& rheo : rheologies()) {
            for (double sigma : {0.0, 1e-2, 1e-1}) {
                SemiDiscreteOperator op(g, rheo, Regularisation::make(sigma));
                std::vector<double> du(n);
                for (std::size_t s = 0; s < opts.states_per_case; ++s) {
                    const FilmState state(g, random_heights(rng, n));
                    op.evaluate(state.u(), du);
                    for (double& v : du) v *= sign;
                    const double d = op.dissipation(state.u());
                    const std::vector<double> grad = energy_gradient(state);
                    double m = 0.0, m_abs = 0.0, ip = 0.0, ip_abs = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        m += g.h * du[i];
                        m_abs += g.h * std::abs(du[i]);
                        ip += grad[i] * du[i];
                        ip_abs += std::abs(grad[i] * du[i]);
                    }
                    const double rm = m_abs > 0.0 ? std::abs(m) / m_abs : 0.0;
                    const double scale = std::max(ip_abs, std::abs(d));
                    const double ri = scale > 0.0 ? std::abs(ip + d) / scale : 0.0;
                    if (rm > worst_mass) {
                        worst_mass = rm;
                        where_mass = fmt::format("N={} {} sigma={}", n, describe(rheo), sigma);
                    }
                    if (ri > worst_identity) {
                        worst_identity = ri;
                        where_identity = fmt::format("N={} {} sigma={}", n, describe(rheo), sigma);
                    }
                }
                const FilmState flat(g, std::vector<double>(n, 0.7));
                op.evaluate(flat.u(), du);
                for (double v : du) worst_constant = std::max(worst_constant, std::abs(v));
            }
        }
    }
    add(rep, "rhs_mass", worst_mass, 1e-12, where_mass);
    add(rep, "energy_identity", worst_identity, 1e-10, where_identity);
    add(rep, "constant_state_rhs", worst_constant, 0.0);

    double worst_mono = 0.0;
    for (double alpha : {0.5, 1.0, 2.0, 3.0})
        for (double sigma : {0.0, 1e-2, 1e-1}) {
            const double slope = oracle::monotonicity_sweep(FlowExponent(alpha), Regularisation{sigma}, 2000);
            worst_mono = std::max(worst_mono, -slope);
        }
    add(rep, "psi_monotonicity", worst_mono, 0.0, "negated minimum secant slope");

    // functionals against the quadrature oracle on a wall-compatible profile
    const oracle::Profile prof = oracle::Profile::cosine(1.0, 0.2, 2);
    double worst_functional = 0.0;
    std::string where_functional;
    for (std::size_t n : opts.n_cells) {
        const FilmState state = prof.sample(n);
        const double kh = prof.wavenumber() * state.grid().h;
        const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
        for (double alpha : {0.5, 2.0}) {
            const FlowExponent fe(alpha);
            const double e = rel(energy(state),
                                 oracle::quadrature_functional(prof, oracle::Functional::Energy, fe, {}));
            const double m = rel(mass(state), oracle::quadrature_functional(prof, oracle::Functional::Mass, fe, {}));
            const double d = rel(dissipation(state, PowerLaw{fe}, {}),
                                 oracle::quadrature_functional(prof, oracle::Functional::Dissipation, fe, {}));
            for (auto [v, what] : {std::pair{e, "energy"}, std::pair{m, "mass"}, std::pair{d, "dissipation"}}) {
                const double scaled = v / (5.0 * kh * kh);
                if (scaled > worst_functional) {
                    worst_functional = scaled;
                    where_functional = fmt::format("N={} alpha={} {}", n, alpha, what);
                }
            }
        }
    }
    add(rep, "functionals_vs_quadrature", worst_functional, 1.0, "relative error / (5 (kappa h)^2); " + where_functional);

    {
        const std::size_t n = 16;
        const Grid g = Grid::make(0.0, std::numbers::pi, n);
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = 1.0 + 0.05 * std::cos(g.centre(i));
        const FilmState s0(g, u);
        IntegratorConfig ic;
        ic.t_end = 0.5;
        const Trajectory a = integrate(s0, Newtonian{}, {}, ic);
        const Trajectory r = oracle::reference_integrate(s0, Newtonian{}, {}, ic.t_end);
        const double ea = a.samples.back().energy, er = r.samples.back().energy;
        add(rep, "adaptive_vs_reference", std::abs(ea - er) / er, 1e-2, "newtonian, N=16, t=0.5, relative E gap");
    }
    return rep;
}

} // namespace thinfilm
