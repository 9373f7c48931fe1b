#pragma once

// Slow, independent verifiers.  Nothing here reuses the difference operators
// or flux kernels of the main path: the continuum functionals are integrated
// from closed-form profiles and the reference integrator carries its own
// ghost-padded stencil.

#include <cstdint>
#include <span>
#include <vector>

#include "thinfilm/model.hpp"
#include "thinfilm/spatial.hpp"
#include "thinfilm/timestep.hpp"

namespace thinfilm::oracle {

enum class ProfileKind { Constant, Affine, Cosine, Cubic };

// Closed-form film profiles on [x_left, x_right], with xi = x - x_left:
//   constant  c0
//   affine    c0 + c1 xi
//   cosine    c0 + c1 cos(k pi xi / L)
//   cubic     c0 + c1 xi + c2 xi^2 + c3 xi^3
struct Profile {
    ProfileKind kind = ProfileKind::Constant;
    double x_left = 0.0;
    double x_right = 1.0;
    double c0 = 1.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
    int k = 1;

    static Profile constant(double c, double x_left = 0.0, double x_right = 1.0);
    static Profile affine(double c0, double slope, double x_left = 0.0, double x_right = 1.0);
    static Profile cosine(double mean, double amplitude, int k, double x_left = 0.0,
                          double x_right = 1.0);
    static Profile cubic(double c0, double c1, double c2, double c3, double x_left = 0.0,
                         double x_right = 1.0);

    double value(double x) const;
    double d1(double x) const;
    double d3(double x) const;

    // u_x = u_xxx = 0 at both walls
    bool boundary_compatible() const;

    // k pi / L for the cosine, 1 / L otherwise.  Discretisation errors are
    // measured in powers of wavenumber() * h.
    double wavenumber() const;

    // Points in (x_left, x_right) where u_xxx changes sign.
    std::vector<double> third_derivative_zeros() const;

    // Cell-centre samples.  Throws if the profile is not positive there.
    FilmState sample(std::size_t n_cells) const;
};

enum class Functional { Energy, Dissipation, Mass, LpNormThirdDerivative };

// Continuum value of E, D (power law), mass or (int |u_xxx|^(alpha+1))^(1/(alpha+1))
// by composite Gauss-Legendre panels split at the sign changes of u_xxx and
// refined by doubling with Richardson extrapolation to 1e-10 relative.
// Throws OracleError if the refinement does not settle.
double quadrature_functional(const Profile& profile, Functional functional, FlowExponent alpha,
                             Regularisation reg);

// Flux with direct std::pow evaluation, independent of FluxLaw.
double reference_flux(double u, double w, const Rheology& rheo, Regularisation reg);

// Right-hand side on a ghost-padded copy of u.
std::vector<double> reference_rhs(std::span<const double> u, double h, const Rheology& rheo,
                                  Regularisation reg);

// Mass-conserving linear reconstruction onto 2N cells, and its inverse by
// pair averaging.
std::vector<double> prolong(std::span<const double> coarse);
std::vector<double> restrict_pairs(std::span<const double> fine);

struct ReferenceOptions {
    double dt_fraction = 1.0 / 16.0; // of the explicit stability estimate
    double c_stab = 0.5;
    std::size_t max_samples = 2000;
};

// Classical RK4 at fixed dt on the doubled grid, reported on the caller's
// grid.  Needs n_cells <= 128.  A loss of positivity ends the run with a
// PositivityBreach termination at the breach time.
Trajectory reference_integrate(const FilmState& state0, const Rheology& rheo, Regularisation reg,
                               double t_end, const ReferenceOptions& opts = {});

// min over sampled pairs of (psi_sigma(v) - psi_sigma(w)) / (v - w), the
// normalised monotonicity product.  Magnitudes are log-uniform in
// [1e-3, 1e3] with random signs.  Needs n_samples >= 1000.
double monotonicity_sweep(FlowExponent alpha, Regularisation reg, std::size_t n_samples,
                          std::uint64_t seed = 20240601);

} // namespace thinfilm::oracle
