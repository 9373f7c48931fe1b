#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "generators.hpp"
#include "thinfilm/functionals.hpp"
#include "thinfilm/oracle.hpp"
#include "thinfilm/spatial.hpp"

using namespace thinfilm;
using thinfilm::testing::Gen;
using thinfilm::testing::rel_err;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

FilmState sampled(std::size_t n, double (*f)(double), double xl = 0.0, double xr = 1.0)
{
    const Grid g = Grid::make(xl, xr, n);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = f(g.centre(i));
    return FilmState(g, u);
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST(Grid, Construction)
{
    const Grid g = Grid::make(-1.0, 2.0, 30);
    EXPECT_DOUBLE_EQ(g.h * 30, 3.0);
    EXPECT_DOUBLE_EQ(g.centre(0), -1.0 + 0.05);
    EXPECT_DOUBLE_EQ(g.face(30), 2.0);
    EXPECT_THROW(Grid::make(1.0, 1.0, 4), ConfigError);
    EXPECT_THROW(Grid::make(2.0, 1.0, 4), ConfigError);
    EXPECT_THROW(Grid::make(0.0, std::numeric_limits<double>::infinity(), 4), ConfigError);
    EXPECT_THROW(Grid::make(0.0, 1.0, 0), SizeError);
}

TEST(FilmState, Validation)
{
    const Grid g = Grid::make(0, 1, 4);
    EXPECT_THROW(FilmState(g, {1, 1, 1}), SizeError);
    EXPECT_THROW(FilmState(g, {1, 0, 1, 1}), DegeneracyError);
    EXPECT_THROW(FilmState(g, {1, -2, 1, 1}), DegeneracyError);
    EXPECT_THROW(FilmState(g, {1, std::nan(""), 1, 1}), DomainError);
    EXPECT_NO_THROW(FilmState(g, {1, 2, 3, 4}));
}

TEST(FaceThirdDifference, TooFewCells)
{
    const FilmState s(Grid::make(0, 1, 3), {1, 2, 3});
    EXPECT_THROW(face_third_difference(s), SizeError);
}

TEST(FaceThirdDifference, ConstantIsZero)
{
    const FilmState s(Grid::make(0, 1, 9), std::vector<double>(9, 2.5));
    for (double w : face_third_difference(s)) EXPECT_EQ(w, 0.0);
}

TEST(FaceThirdDifference, ExactOnCubicsAwayFromWalls)
{
    const std::size_t n = 16;
    const FilmState s = sampled(n, [](double x) { return 1.0 + x * x * x; });
    const std::vector<double> w = face_third_difference(s);
    EXPECT_EQ(w.size(), n + 1);
    EXPECT_EQ(w.front(), 0.0);
    EXPECT_EQ(w.back(), 0.0);
    for (std::size_t f = 2; f + 1 < n; ++f) EXPECT_NEAR(w[f], 6.0, 1e-8) << "face " << f;
}

TEST(FaceThirdDifference, SecondOrderOnCosine)
{
    double prev = 0.0;
    for (std::size_t n : {32, 64, 128, 256}) {
        const FilmState s = sampled(n, [](double x) { return 2.0 + std::cos(std::numbers::pi * x); });
        const std::vector<double> w = face_third_difference(s);
        double err = 0.0;
        for (std::size_t f = 1; f < n; ++f) {
            const double exact = std::pow(std::numbers::pi, 3) * std::sin(std::numbers::pi * s.grid().face(f));
            err = std::max(err, std::abs(w[f] - exact));
        }
        if (prev > 0.0) {
            EXPECT_NEAR(prev / err, 4.0, 0.2) << "N=" << n;
        }
        prev = err;
    }
}

TEST(FaceHeight, Examples)
{
    const FilmState c(Grid::make(0, 1, 5), std::vector<double>(5, 0.3));
    for (double v : face_height(c)) EXPECT_EQ(v, 0.3);
    const FilmState two(Grid::make(0, 1, 2), {1.0, 3.0});
    const std::vector<double> uf = face_height(two);
    ASSERT_EQ(uf.size(), 3u);
    EXPECT_EQ(uf[0], 1.0);
    EXPECT_EQ(uf[1], 2.0);
    EXPECT_EQ(uf[2], 3.0);
}

TEST(FaceHeight, MinFaceAtLeastMinCell)
{
    Gen g(31);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = g.index(2, 64);
        const FilmState s(Grid::make(0, 1, n), g.heights(n, 0.9));
        const std::vector<double> uf = face_height(s);
        EXPECT_GE(*std::min_element(uf.begin(), uf.end()), *std::min_element(s.u().begin(), s.u().end()));
        EXPECT_LE(*std::max_element(uf.begin(), uf.end()), *std::max_element(s.u().begin(), s.u().end()));
    }
}

TEST(Rhs, ConstantStateIsSteady)
{
    Gen g(32);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = g.index(4, 64);
        const FilmState s(Grid::make(0, 1, n), std::vector<double>(n, g.uniform(0.1, 3.0)));
        for (double v : rhs(s, g.rheology(), g.regularisation())) EXPECT_EQ(v, 0.0);
    }
}

TEST(Rhs, FluxFormMatchesDefinition)
{
    Gen g(33);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = g.index(4, 40);
        const FilmState s(Grid::make(0, 1, n), g.heights(n));
        const Rheology rheo = g.rheology();
        const Regularisation reg = g.regularisation();
        const std::vector<double> w = face_third_difference(s), uf = face_height(s);
        std::vector<double> flux(n + 1, 0.0);
        for (std::size_t f = 1; f < n; ++f) flux[f] = flux_density(uf[f], w[f], rheo, reg);
        const std::vector<double> du = rhs(s, rheo, reg);
        const double scale = max_abs(flux) / s.grid().h;
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_NEAR(du[i], -(flux[i + 1] - flux[i]) / s.grid().h, 1e-14 * scale);
    }
}

TEST(Rhs, NewtonianMatchesRefinedReference)
{
    // coarse rhs against the fine-grid reference rhs restricted by pair averaging
    double prev = 0.0;
    for (std::size_t n : {16, 32, 64}) {
        const auto f = [](double x) { return 1.0 + 0.05 * std::cos(x); };
        const Grid g = Grid::make(0.0, std::numbers::pi, n), gf = Grid::make(0.0, std::numbers::pi, 2 * n);
        std::vector<double> u(n), uf(2 * n);
        for (std::size_t i = 0; i < n; ++i) u[i] = f(g.centre(i));
        for (std::size_t i = 0; i < 2 * n; ++i) uf[i] = f(gf.centre(i));
        const std::vector<double> coarse = rhs(FilmState(g, u), Newtonian{}, {});
        const std::vector<double> fine = oracle::restrict_pairs(oracle::reference_rhs(uf, gf.h, Newtonian{}, {}));
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(coarse[i] - fine[i]));
        if (prev > 0.0) {
            EXPECT_GT(prev / err, 3.0) << "N=" << n;
        }
        EXPECT_LT(err, 0.05 * max_abs(coarse));
        prev = err;
    }
}

TEST(EnergyGradient, Examples)
{
    const FilmState c(Grid::make(0, 1, 7), std::vector<double>(7, 1.4));
    for (double v : energy_gradient(c)) EXPECT_EQ(v, 0.0);

    Gen g(34);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = g.index(4, 32);
        const Grid grid = Grid::make(0, 1, n);
        std::vector<double> u = g.smooth_heights(grid);
        const std::vector<double> grad = energy_gradient(FilmState(grid, u));
        for (std::size_t i = 0; i < n; ++i) {
            const double eps = 1e-6;
            std::vector<double> up = u, dn = u;
            up[i] += eps;
            dn[i] -= eps;
            const double fd = (energy(up, grid.h) - energy(dn, grid.h)) / (2 * eps);
            EXPECT_NEAR(grad[i], fd, 1e-8 * std::max(1.0, std::abs(fd)));
        }
        EXPECT_NEAR(std::accumulate(grad.begin(), grad.end(), 0.0), 0.0, 1e-12 * max_abs(grad) * n);
    }
}

TEST(EnergyGradient, ShiftInvariantExactly)
{
    const Grid grid = Grid::make(0, 1, 8);
    const std::vector<double> u{1.0, 1.5, 1.25, 0.75, 1.0, 2.0, 1.5, 1.0};
    std::vector<double> shifted = u;
    for (double& v : shifted) v += 0.5;
    EXPECT_EQ(energy_gradient(FilmState(grid, u)), energy_gradient(FilmState(grid, shifted)));
}

// Properties

TEST(SpatialProperty, MassConservation)
{
    Gen g(40);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = g.index(4, 128);
        const FilmState s(Grid::make(0, 1, n), g.heights(n));
        const Rheology rheo = g.rheology();
        SemiDiscreteOperator op(s.grid(), rheo, g.regularisation());
        std::vector<double> du(n);
        op.evaluate(s.u(), du);
        const double sum = std::accumulate(du.begin(), du.end(), 0.0);
        const double max_f = max_abs(std::vector<double>(op.last_flux().begin(), op.last_flux().end()));
        EXPECT_LE(std::abs(sum), 1e-13 * max_f / s.grid().h * n) << describe(rheo);
    }
}

TEST(SpatialProperty, EnergyDissipationIdentity)
{
    // smooth states, where the absolute bound 10 eps (1 + D) applies
    Gen g(41);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = g.index(8, 64);
        const Grid grid = Grid::make(0, 1, n);
        const FilmState s(grid, g.smooth_heights(grid, 3, 0.1));
        const Rheology rheo = g.rheology();
        const Regularisation reg = g.regularisation();
        const std::vector<double> du = rhs(s, rheo, reg), grad = energy_gradient(s);
        const double d = dissipation(s, rheo, reg);
        const double ip = std::inner_product(grad.begin(), grad.end(), du.begin(), 0.0);
        EXPECT_LE(std::abs(ip + d), 10 * kEps * (1.0 + d) * n) << describe(rheo) << " N=" << n;
    }
}

TEST(SpatialProperty, EnergyDissipationIdentityRoughStates)
{
    Gen g(42);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = g.index(4, 128);
        const FilmState s(Grid::make(0, 1, n), g.heights(n));
        const Rheology rheo = g.rheology();
        const Regularisation reg = g.regularisation();
        const std::vector<double> du = rhs(s, rheo, reg), grad = energy_gradient(s);
        const double d = dissipation(s, rheo, reg);
        double ip = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ip += grad[i] * du[i];
            scale += std::abs(grad[i] * du[i]);
        }
        EXPECT_GE(d, 0.0);
        EXPECT_LE(std::abs(ip + d), 1e-12 * std::max(scale, d)) << describe(rheo);
    }
}

TEST(SpatialProperty, ReflectionEquivariance)
{
    Gen g(43);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = g.index(4, 64);
        const Grid grid = Grid::make(0, 1, n);
        std::vector<double> u = g.heights(n);
        std::vector<double> r(u.rbegin(), u.rend());
        const Rheology rheo = g.rheology();
        const Regularisation reg = g.regularisation();
        const std::vector<double> a = rhs(FilmState(grid, u), rheo, reg);
        std::vector<double> b = rhs(FilmState(grid, r), rheo, reg);
        std::reverse(b.begin(), b.end());
        const double scale = max_abs(a);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-13 * scale);
    }
}

TEST(SpatialProperty, ZeroDissipationOnlyForConstants)
{
    // nullspace of u -> (w_1 .. w_{N-1}) on N = 8 by elimination: rank N - 1, spanned by ones
    const std::size_t n = 8;
    const Grid grid = Grid::make(0, 1, n);
    std::vector<std::vector<double>> m(n - 1, std::vector<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 1.0);
        e[j] = 2.0;
        const std::vector<double> w = face_third_difference(FilmState(grid, e));
        for (std::size_t f = 1; f < n; ++f) m[f - 1][j] = w[f] * grid.h * grid.h * grid.h;
    }
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < n - 1; ++col) {
        std::size_t piv = rank;
        for (std::size_t r = rank; r < n - 1; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-12) continue;
        std::swap(m[piv], m[rank]);
        for (std::size_t r = 0; r < n - 1; ++r) {
            if (r == rank) continue;
            const double f = m[r][col] / m[rank][col];
            for (std::size_t c = 0; c < n; ++c) m[r][c] -= f * m[rank][c];
        }
        ++rank;
    }
    EXPECT_EQ(rank, n - 1);

    Gen g(44);
    for (int trial = 0; trial < 200; ++trial) {
        const FilmState s(grid, g.heights(n));
        EXPECT_GT(dissipation(s, g.rheology(), g.regularisation()), 0.0);
    }
}

TEST(BandedMatrix, Layout)
{
    BandedMatrix m(6);
    m.fill(0.0);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            if (BandedMatrix::in_band(i, j)) m.at(i, j) = 10.0 * i + j;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            EXPECT_EQ(m.get(i, j), BandedMatrix::in_band(i, j) ? 10.0 * i + j : 0.0);
    EXPECT_FALSE(BandedMatrix::in_band(0, 3));
    EXPECT_FALSE(BandedMatrix::in_band(3, 0));
    EXPECT_TRUE(BandedMatrix::in_band(2, 0));
}

TEST(SemiDiscreteOperator, JacobianMatchesFiniteDifferences)
{
    Gen g(45);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = g.index(4, 24);
        const Grid grid = Grid::make(0, 1, n);
        const std::vector<double> u = g.smooth_heights(grid, 3, 0.3);
        const Rheology rheo = g.rheology();
        SemiDiscreteOperator op(grid, rheo, Regularisation{g.uniform(0.05, 0.3)});
        BandedMatrix jac(n);
        op.jacobian(u, jac);
        std::vector<double> up(n), dn(n), fp(n), fm(n);
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(jac.get(i, j)));
        const auto column = [&](std::size_t j, double e, std::vector<double>& out) {
            up = u;
            dn = u;
            up[j] += e;
            dn[j] -= e;
            op.evaluate(up, fp);
            op.evaluate(dn, fm);
            for (std::size_t i = 0; i < n; ++i) out[i] = (fp[i] - fm[i]) / (2 * e);
        };
        // |w|^(alpha-1) is barely differentiable near w = 0 when alpha is close to 1
        const std::vector<double> w = face_third_difference(FilmState(grid, u));
        const double w_max = max_abs(w);
        const auto near_kink = [&](std::size_t j) {
            for (std::size_t f = j > 0 ? j - 1 : 0; f <= std::min(j + 2, n); ++f)
                if (f > 0 && f < n && std::abs(w[f]) < 1e-2 * w_max) return true;
            return false;
        };
        std::vector<double> c1(n), c2(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (near_kink(j)) continue;
            column(j, 2e-6, c1);
            column(j, 1e-6, c2);
            for (std::size_t i = 0; i < n; ++i) {
                const double fd = (4.0 * c2[i] - c1[i]) / 3.0;
                EXPECT_NEAR(jac.get(i, j), fd, 1e-6 * scale) << describe(rheo) << " (" << i << "," << j << ")";
            }
        }
    }
}

TEST(SemiDiscreteOperator, BaseHeightShiftsTheFilm)
{
    Gen g(46);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = g.index(4, 40);
        const Grid grid = Grid::make(0, 1, n);
        const double base = g.uniform(0.5, 2.0);
        std::vector<double> v(n), u(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = g.uniform(-0.2, 0.2);
            u[i] = base + v[i];
        }
        const Rheology rheo = g.rheology();
        const Regularisation reg = g.regularisation();
        SemiDiscreteOperator op(grid, rheo, reg);
        op.set_base_height(base);
        std::vector<double> dv(n);
        op.evaluate(v, dv);
        const std::vector<double> du = rhs(FilmState(grid, u), rheo, reg);
        const double scale = max_abs(du);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(dv[i], du[i], 1e-10 * scale);
        EXPECT_NEAR(op.dissipation(v), dissipation(FilmState(grid, u), rheo, reg),
                    1e-10 * dissipation(FilmState(grid, u), rheo, reg));
    }
}

TEST(SemiDiscreteOperator, RejectsTinyGrids)
{
    EXPECT_THROW(SemiDiscreteOperator(Grid::make(0, 1, 3), Newtonian{}, {}), SizeError);
}
