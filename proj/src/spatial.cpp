#include "thinfilm/spatial.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace thinfilm {

namespace {

constexpr std::size_t kMinStencilCells = 4;
constexpr double kMaxStableDt = 1e8;

void require_stencil(std::size_t n)
{
    if (n < kMinStencilCells)
        throw SizeError(fmt::format("third difference needs at least {} cells, got {}",
                                    kMinStencilCells, n));
}

} // namespace

Grid Grid::make(double x_left, double x_right, std::size_t n_cells)
{
    if (!std::isfinite(x_left) || !std::isfinite(x_right) || !(x_left < x_right))
        throw ConfigError(fmt::format("invalid domain ({}, {})", x_left, x_right));
    if (n_cells == 0) throw SizeError("grid needs at least one cell");
    return Grid{x_left, x_right, n_cells, (x_right - x_left) / static_cast<double>(n_cells)};
}

void validate_heights(std::span<const double> u)
{
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!std::isfinite(u[i]))
            throw DomainError(fmt::format("film height u[{}] = {} is not finite", i, u[i]));
        if (u[i] <= 0.0)
            throw DegeneracyError(fmt::format("film height u[{}] = {} is not positive", i, u[i]));
    }
}

FilmState::FilmState(Grid grid, std::vector<double> u) : grid_(grid), u_(std::move(u))
{
    if (u_.size() != grid_.n_cells)
        throw SizeError(fmt::format("state has {} values for {} cells", u_.size(), grid_.n_cells));
    validate_heights(u_);
}

namespace kernel {

void second_difference(std::span<const double> u, double h, std::span<double> lap)
{
    const std::size_t n = u.size();
    const double inv_h2 = 1.0 / (h * h);
    if (n == 1) {
        lap[0] = 0.0;
        return;
    }
    lap[0] = (u[1] - u[0]) * inv_h2;
    for (std::size_t i = 1; i + 1 < n; ++i)
        lap[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
    lap[n - 1] = (u[n - 2] - u[n - 1]) * inv_h2;
}

void third_difference(std::span<const double> lap, double h, std::span<double> w)
{
    const std::size_t n = lap.size();
    const double inv_h = 1.0 / h;
    w[0] = 0.0;
    for (std::size_t f = 1; f < n; ++f) w[f] = (lap[f] - lap[f - 1]) * inv_h;
    w[n] = 0.0;
}

void face_heights(std::span<const double> u, std::span<double> uf)
{
    const std::size_t n = u.size();
    uf[0] = u[0];
    for (std::size_t f = 1; f < n; ++f) uf[f] = 0.5 * (u[f - 1] + u[f]);
    uf[n] = u[n - 1];
}

} // namespace kernel

std::vector<double> face_third_difference(const FilmState& state)
{
    const std::size_t n = state.size();
    require_stencil(n);
    std::vector<double> lap(n), w(n + 1);
    kernel::second_difference(state.u(), state.grid().h, lap);
    kernel::third_difference(lap, state.grid().h, w);
    return w;
}

std::vector<double> face_height(const FilmState& state)
{
    std::vector<double> uf(state.size() + 1);
    kernel::face_heights(state.u(), uf);
    return uf;
}

std::vector<double> rhs(const FilmState& state, const Rheology& rheo, Regularisation reg)
{
    SemiDiscreteOperator op(state.grid(), rheo, reg);
    std::vector<double> du(state.size());
    op.evaluate(state.u(), du);
    return du;
}

std::vector<double> energy_gradient(const FilmState& state)
{
    const std::size_t n = state.size();
    const double h = state.grid().h;
    std::vector<double> g(n);
    kernel::second_difference(state.u(), h, g);
    for (double& v : g) v *= -h;
    return g;
}

BandedMatrix::BandedMatrix(std::size_t n) : n_(n), data_(static_cast<std::size_t>(ldab) * n, 0.0) {}

void BandedMatrix::resize(std::size_t n)
{
    n_ = n;
    data_.assign(static_cast<std::size_t>(ldab) * n, 0.0);
}

void BandedMatrix::fill(double value)
{
    std::fill(data_.begin(), data_.end(), value);
}

SemiDiscreteOperator::SemiDiscreteOperator(const Grid& grid, const Rheology& rheo,
                                           Regularisation reg, double psi_prime_cap)
    : grid_(grid), law_(rheo, reg, psi_prime_cap), lap_(grid.n_cells), w_(grid.n_cells + 1),
      uf_(grid.n_cells + 1), flux_(grid.n_cells + 1)
{
    require_stencil(grid.n_cells);
}

void SemiDiscreteOperator::compute_faces(std::span<const double> u)
{
    const std::size_t n = grid_.n_cells;
    kernel::second_difference(u, grid_.h, lap_);
    kernel::third_difference(lap_, grid_.h, w_);
    kernel::face_heights(u, uf_);
    if (base_ != 0.0)
        for (double& v : uf_) v += base_;
    flux_[0] = 0.0;
    for (std::size_t f = 1; f < n; ++f) flux_[f] = law_.flux(uf_[f], w_[f]);
    flux_[n] = 0.0;
}

void SemiDiscreteOperator::evaluate(std::span<const double> u, std::span<double> du)
{
    compute_faces(u);
    const double inv_h = 1.0 / grid_.h;
    for (std::size_t i = 0; i < grid_.n_cells; ++i) du[i] = -(flux_[i + 1] - flux_[i]) * inv_h;
}

double SemiDiscreteOperator::dissipation(std::span<const double> u)
{
    compute_faces(u);
    double sum = 0.0;
    for (std::size_t f = 1; f < grid_.n_cells; ++f) sum += flux_[f] * w_[f];
    return grid_.h * sum;
}

double SemiDiscreteOperator::stable_dt(std::span<const double> u, double c_stab)
{
    compute_faces(u);
    double worst = 0.0;
    for (std::size_t f = 1; f < grid_.n_cells; ++f)
        worst = std::max(worst, law_.diffusivity(uf_[f], w_[f]));
    const double h2 = grid_.h * grid_.h;
    const double numerator = c_stab * h2 * h2;
    if (!(worst > numerator / kMaxStableDt)) return kMaxStableDt;
    return numerator / worst;
}

void SemiDiscreteOperator::jacobian(std::span<const double> u, BandedMatrix& jac)
{
    const std::size_t n = grid_.n_cells;
    if (jac.size() != n) jac.resize(n);
    jac.fill(0.0);
    compute_faces(u);

    const double h = grid_.h;
    const double inv_h = 1.0 / h;
    const double inv_h3 = 1.0 / (h * h * h);
    const auto clamp = [n](long j) {
        return static_cast<std::size_t>(std::clamp<long>(j, 0, static_cast<long>(n) - 1));
    };

    for (std::size_t f = 1; f < n; ++f) {
        const FluxPartials p = law_.partials(uf_[f], w_[f]);
        // dF_f/du_j for j in f-2..f+1 after folding the mirror ghosts
        std::array<double, 4> dfdu{};
        const long base = static_cast<long>(f) - 2;
        const std::array<double, 4> stencil{-1.0, 3.0, -3.0, 1.0};
        for (int k = 0; k < 4; ++k) {
            const std::size_t j = clamp(base + k);
            dfdu[j - clamp(base)] += p.d_third * stencil[k] * inv_h3;
        }
        dfdu[f - 1 - clamp(base)] += 0.5 * p.d_height;
        dfdu[f - clamp(base)] += 0.5 * p.d_height;

        const std::size_t j0 = clamp(base);
        for (std::size_t k = 0; k < 4; ++k) {
            const std::size_t j = j0 + k;
            if (j >= n || dfdu[k] == 0.0) continue;
            // F_f enters du_{f-1} with -1/h and du_f with +1/h
            jac.at(f - 1, j) -= dfdu[k] * inv_h;
            jac.at(f, j) += dfdu[k] * inv_h;
        }
    }
}

} // namespace thinfilm
