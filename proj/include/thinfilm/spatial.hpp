#pragma once

// Cell-centred finite differences for u_t + (m(u) psi(u_xxx))_x = 0 with
// u_x = u_xxx = 0 at both walls.
//
// Cells i = 0..N-1 have centres x_l + (i + 1/2) h.  Face f = 0..N sits at
// x_l + f h, between cells f-1 and f; faces 0 and N are the walls.  Ghost
// cells mirror their neighbours (u_{-1} = u_0, u_N = u_{N-1}).

#include <cstddef>
#include <span>
#include <vector>

#include "thinfilm/errors.hpp"
#include "thinfilm/model.hpp"

namespace thinfilm {

struct Grid {
    double x_left = 0.0;
    double x_right = 1.0;
    std::size_t n_cells = 0;
    double h = 0.0;

    static Grid make(double x_left, double x_right, std::size_t n_cells);

    double length() const noexcept { return x_right - x_left; }
    double centre(std::size_t i) const noexcept
    {
        return x_left + (static_cast<double>(i) + 0.5) * h;
    }
    double face(std::size_t f) const noexcept
    {
        return x_left + static_cast<double>(f) * h;
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

// Strictly positive, finite cell heights.
class FilmState {
public:
    FilmState(Grid grid, std::vector<double> u);

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> u() const noexcept { return u_; }
    const std::vector<double>& values() const noexcept { return u_; }
    std::size_t size() const noexcept { return u_.size(); }
    double operator[](std::size_t i) const noexcept { return u_[i]; }

private:
    Grid grid_;
    std::vector<double> u_;
};

// Throws DegeneracyError / DomainError on the first offending entry.
void validate_heights(std::span<const double> u);

// Third difference at the N+1 faces; the two walls carry 0.  Needs N >= 4.
std::vector<double> face_third_difference(const FilmState& state);

// Arithmetic mean at interior faces, adjacent cell at the walls.
std::vector<double> face_height(const FilmState& state);

std::vector<double> rhs(const FilmState& state, const Rheology& rheo, Regularisation reg);

// dE_h/du_i = -h * (mirror second difference)_i.
std::vector<double> energy_gradient(const FilmState& state);

namespace kernel {

// Raw kernels over spans; no validation.  Output spans are fully written.
void second_difference(std::span<const double> u, double h, std::span<double> lap);
void third_difference(std::span<const double> lap, double h, std::span<double> w);
void face_heights(std::span<const double> u, std::span<double> uf);

} // namespace kernel

// Pentadiagonal matrix in LAPACK general-band layout (column major,
// kl = ku = 2, leading dimension 2 kl + ku + 1 to leave room for pivoting).
class BandedMatrix {
public:
    static constexpr int kl = 2;
    static constexpr int ku = 2;
    static constexpr int ldab = 2 * kl + ku + 1;

    explicit BandedMatrix(std::size_t n = 0);

    std::size_t size() const noexcept { return n_; }
    void resize(std::size_t n);
    void fill(double value);

    static bool in_band(std::size_t i, std::size_t j) noexcept
    {
        return i <= j + kl && j <= i + ku;
    }
    double& at(std::size_t i, std::size_t j) noexcept
    {
        return data_[j * ldab + kl + ku + i - j];
    }
    double at(std::size_t i, std::size_t j) const noexcept
    {
        return data_[j * ldab + kl + ku + i - j];
    }
    double get(std::size_t i, std::size_t j) const noexcept
    {
        return in_band(i, j) ? at(i, j) : 0.0;
    }

    double* data() noexcept { return data_.data(); }

private:
    std::size_t n_;
    std::vector<double> data_;
};

// Reusable evaluator for one grid and flux law.  Holds scratch storage, so an
// instance must not be shared between threads; results are deterministic.
class SemiDiscreteOperator {
public:
    SemiDiscreteOperator(const Grid& grid, const Rheology& rheo, Regularisation reg,
                         double psi_prime_cap = kDefaultPsiPrimeCap);

    const Grid& grid() const noexcept { return grid_; }
    const FluxLaw& law() const noexcept { return law_; }

    // Inputs are read as deviations v from a constant base height b, so the
    // film is u = b + v.  Differences are taken of v alone, which keeps
    // their relative precision when v is tiny.  Default b = 0.
    void set_base_height(double base) noexcept { base_ = base; }
    double base_height() const noexcept { return base_; }

    // du = -(F_{f+1} - F_f)/h.  No positivity check.
    void evaluate(std::span<const double> u, std::span<double> du);

    // h sum F_f w_f over interior faces.
    double dissipation(std::span<const double> u);

    // c_stab h^4 / max over interior faces of dF/dw (psi' capped).
    double stable_dt(std::span<const double> u, double c_stab);

    // d(du)/du with psi' capped.
    void jacobian(std::span<const double> u, BandedMatrix& jac);

    // Face data from the most recent evaluate/dissipation/jacobian call.
    std::span<const double> last_flux() const noexcept { return flux_; }
    std::span<const double> last_third() const noexcept { return w_; }

private:
    void compute_faces(std::span<const double> u);

    Grid grid_;
    FluxLaw law_;
    double base_ = 0.0;
    std::vector<double> lap_;
    std::vector<double> w_;
    std::vector<double> uf_;
    std::vector<double> flux_;
};

} // namespace thinfilm
