#include "thinfilm/timestep.hpp"

#include <fmt/format.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace thinfilm {

std::string to_string(Scheme scheme)
{
    return scheme == Scheme::Explicit ? "explicit" : "rosenbrock";
}

Scheme parse_scheme(const std::string& name)
{
    if (name == "explicit" || name == "bs23") return Scheme::Explicit;
    if (name == "rosenbrock" || name == "ros3") return Scheme::Rosenbrock;
    throw ConfigError(fmt::format("unknown integration scheme '{}'", name));
}

std::string to_string(TerminationKind kind)
{
    switch (kind) {
    case TerminationKind::ReachedTEnd: return "ReachedTEnd";
    case TerminationKind::SteadyState: return "SteadyState";
    case TerminationKind::Extinction: return "Extinction";
    case TerminationKind::PositivityBreach: return "PositivityBreach";
    case TerminationKind::StepUnderflow: return "StepUnderflow";
    }
    return "Unknown";
}

void IntegratorConfig::validate() const
{
    const auto bad = [](const std::string& msg) { throw ConfigError("integrator: " + msg); };
    if (!std::isfinite(t_end) || t_end <= 0.0) bad(fmt::format("t_end must be positive, got {}", t_end));
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) bad(fmt::format("rel_tol must lie in (0, 1), got {}", rel_tol));
    if (!(abs_tol > 0.0 && abs_tol < 1.0)) bad(fmt::format("abs_tol must lie in (0, 1), got {}", abs_tol));
    if (dt_init && !(*dt_init > 0.0 && *dt_init <= t_end))
        bad(fmt::format("dt_init must lie in (0, t_end], got {}", *dt_init));
    if (dt_min && !(*dt_min > 0.0)) bad(fmt::format("dt_min must be positive, got {}", *dt_min));
    if (dt_init && dt_min && !(*dt_min < *dt_init)) bad("dt_min must be smaller than dt_init");
    if (!(positivity_floor > 0.0 && positivity_floor < 1.0))
        bad(fmt::format("positivity_floor must lie in (0, 1), got {}", positivity_floor));
    if (steady_energy_threshold && !(*steady_energy_threshold >= 0.0))
        bad("steady_energy_threshold must be nonnegative");
    if (sample_stride == 0) bad("sample_stride must be positive");
    if (!(max_energy_drop >= 0.0 && max_energy_drop < 1.0)) bad("max_energy_drop must lie in [0, 1)");
    if (!(c_stab > 0.0)) bad("c_stab must be positive");
    if (!(psi_prime_cap > 0.0)) bad("psi_prime_cap must be positive");
}

double stable_dt_estimate(const FilmState& state, const Rheology& rheo, Regularisation reg,
                          double c_stab, double psi_prime_cap)
{
    SemiDiscreteOperator op(state.grid(), rheo, reg, psi_prime_cap);
    return op.stable_dt(state.u(), c_stab);
}

namespace {

enum class Attempt { Done, NonPositive, NonFinite };

class Stepper {
public:
    virtual ~Stepper() = default;
    // Proposes y_new and an error vector for a step of size dt from y.
    virtual Attempt attempt(std::span<const double> y, double dt, std::span<double> y_new,
                            std::span<double> err) = 0;
    // Called once the step from y has been accepted and y_new becomes current.
    virtual void accepted() = 0;
    virtual double order_exponent() const = 0;
};

bool admissible(std::span<const double> v, double floor, Attempt& why)
{
    for (double x : v) {
        if (!std::isfinite(x)) {
            why = Attempt::NonFinite;
            return false;
        }
        if (x <= floor) why = Attempt::NonPositive;
    }
    return why == Attempt::Done;
}

// Bogacki-Shampine 3(2), first same as last.
class BogackiShampine final : public Stepper {
public:
    BogackiShampine(SemiDiscreteOperator& op, IntegratorStats& stats, double floor)
        : op_(op), stats_(stats), floor_(floor), n_(op.grid().n_cells), k1_(n_), k2_(n_), k3_(n_),
          k4_(n_), tmp_(n_)
    {
    }

    Attempt attempt(std::span<const double> y, double dt, std::span<double> y_new,
                    std::span<double> err) override
    {
        if (!k1_valid_) {
            eval(y, k1_);
            k1_valid_ = true;
        }
        Attempt why = Attempt::Done;
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + 0.5 * dt * k1_[i];
        if (!admissible(tmp_, floor_, why)) return why;
        eval(tmp_, k2_);
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + 0.75 * dt * k2_[i];
        if (!admissible(tmp_, floor_, why)) return why;
        eval(tmp_, k3_);
        for (std::size_t i = 0; i < n_; ++i)
            y_new[i] = y[i] + dt * (2.0 / 9.0 * k1_[i] + 1.0 / 3.0 * k2_[i] + 4.0 / 9.0 * k3_[i]);
        if (!admissible(y_new, floor_, why)) return why;
        eval(y_new, k4_);
        for (std::size_t i = 0; i < n_; ++i)
            err[i] = dt * ((2.0 / 9.0 - 7.0 / 24.0) * k1_[i] + (1.0 / 3.0 - 0.25) * k2_[i]
                           + (4.0 / 9.0 - 1.0 / 3.0) * k3_[i] - 0.125 * k4_[i]);
        return Attempt::Done;
    }

    void accepted() override { std::swap(k1_, k4_); }

    double order_exponent() const override { return 1.0 / 3.0; }

private:
    void eval(std::span<const double> u, std::vector<double>& out)
    {
        op_.evaluate(u, out);
        ++stats_.rhs_evaluations;
    }

    SemiDiscreteOperator& op_;
    IntegratorStats& stats_;
    double floor_;
    std::size_t n_;
    bool k1_valid_ = false;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

// ROS3 (three stages, order 3, embedded order 2, L-stable).
class Ros3 final : public Stepper {
public:
    static constexpr double gamma = 0.43586652150845899941601945119356;
    static constexpr double c21 = -1.0156171083877702091975600115545;
    static constexpr double c31 = 4.0759956452537699824805835358067;
    static constexpr double c32 = 9.2076794298330791242156818474003;
    static constexpr double m1 = 1.0;
    static constexpr double m2 = 6.1697947043828245592553615689730;
    static constexpr double m3 = -0.42772256543218573326238373806514;
    static constexpr double e1 = 0.5;
    static constexpr double e2 = -2.9079558716805469821718236208017;
    static constexpr double e3 = 0.22354069897811569627360909276199;

    Ros3(SemiDiscreteOperator& op, IntegratorStats& stats, double floor)
        : op_(op), stats_(stats), floor_(floor), n_(op.grid().n_cells), jac_(n_), lu_(n_),
          pivots_(n_), f0_(n_), f2_(n_), k1_(n_), k2_(n_), k3_(n_), y2_(n_)
    {
    }

    Attempt attempt(std::span<const double> y, double dt, std::span<double> y_new,
                    std::span<double> err) override
    {
        if (!current_) {
            op_.jacobian(y, jac_);
            ++stats_.jacobian_evaluations;
            op_.evaluate(y, f0_);
            ++stats_.rhs_evaluations;
            current_ = true;
        }
        if (!factor(dt)) return Attempt::NonFinite;

        Attempt why = Attempt::Done;
        k1_ = f0_;
        if (!solve(k1_)) return Attempt::NonFinite;

        for (std::size_t i = 0; i < n_; ++i) y2_[i] = y[i] + k1_[i];
        if (!admissible(y2_, floor_, why)) return why;
        op_.evaluate(y2_, f2_);
        ++stats_.rhs_evaluations;

        for (std::size_t i = 0; i < n_; ++i) k2_[i] = f2_[i] + (c21 / dt) * k1_[i];
        if (!solve(k2_)) return Attempt::NonFinite;
        // third stage point coincides with the second (A31 = 1, A32 = 0)
        for (std::size_t i = 0; i < n_; ++i) k3_[i] = f2_[i] + (c31 * k1_[i] + c32 * k2_[i]) / dt;
        if (!solve(k3_)) return Attempt::NonFinite;

        for (std::size_t i = 0; i < n_; ++i) {
            y_new[i] = y[i] + m1 * k1_[i] + m2 * k2_[i] + m3 * k3_[i];
            err[i] = e1 * k1_[i] + e2 * k2_[i] + e3 * k3_[i];
        }
        if (!admissible(y_new, floor_, why)) return why;
        return Attempt::Done;
    }

    void accepted() override
    {
        current_ = false;
        factored_dt_ = std::numeric_limits<double>::quiet_NaN();
    }

    double order_exponent() const override { return 1.0 / 3.0; }

private:
    bool factor(double dt)
    {
        if (dt == factored_dt_) return factored_ok_;
        const double diag = 1.0 / (gamma * dt);
        lu_ = jac_;
        double* ab = lu_.data();
        for (std::size_t k = 0; k < BandedMatrix::ldab * n_; ++k) ab[k] = -ab[k];
        for (std::size_t i = 0; i < n_; ++i) lu_.at(i, i) += diag;
        const lapack_int n = static_cast<lapack_int>(n_);
        const lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, BandedMatrix::kl,
                                               BandedMatrix::ku, ab, BandedMatrix::ldab,
                                               pivots_.data());
        factored_dt_ = dt;
        factored_ok_ = info == 0;
        return factored_ok_;
    }

    bool solve(std::vector<double>& rhs)
    {
        const lapack_int n = static_cast<lapack_int>(n_);
        const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, BandedMatrix::kl,
                                               BandedMatrix::ku, 1, lu_.data(), BandedMatrix::ldab,
                                               pivots_.data(), rhs.data(), n);
        if (info != 0) return false;
        // exact stage increments have zero sum; drop the solver's round-off
        const double mean = std::accumulate(rhs.begin(), rhs.end(), 0.0) / static_cast<double>(n_);
        for (double& v : rhs) {
            v -= mean;
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    SemiDiscreteOperator& op_;
    IntegratorStats& stats_;
    double floor_;
    std::size_t n_;
    bool current_ = false;
    double factored_dt_ = std::numeric_limits<double>::quiet_NaN();
    bool factored_ok_ = false;
    BandedMatrix jac_;
    BandedMatrix lu_;
    std::vector<lapack_int> pivots_;
    std::vector<double> f0_, f2_, k1_, k2_, k3_, y2_;
};

// Weighted rms of the local error in u and in its face third difference.
// The second part keeps grid-scale error, which the flux sees amplified by
// h^-3, under the same relative tolerance as u_xxx itself.
class ErrorNorm {
public:
    ErrorNorm(const Grid& grid, double base, double rel_tol, double abs_tol)
        : h_(grid.h), base_(base), rel_tol_(rel_tol), abs_tol_(abs_tol), lap_(grid.n_cells),
          w_err_(grid.n_cells + 1), w_new_(grid.n_cells + 1)
    {
    }

    double operator()(std::span<const double> err, std::span<const double> y,
                      std::span<const double> y_new)
    {
        const std::size_t n = err.size();
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double scale = abs_tol_ + rel_tol_ * std::max(std::abs(base_ + y[i]),
                                                                std::abs(base_ + y_new[i]));
            const double r = err[i] / scale;
            sum += r * r;
        }
        const double u_part = std::sqrt(sum / static_cast<double>(n));

        kernel::second_difference(err, h_, lap_);
        kernel::third_difference(lap_, h_, w_err_);
        kernel::second_difference(y_new, h_, lap_);
        kernel::third_difference(lap_, h_, w_new_);
        double w_max = 0.0, w_sum = 0.0;
        for (std::size_t f = 1; f < n; ++f) {
            w_max = std::max(w_max, std::abs(w_new_[f]));
            w_sum += w_err_[f] * w_err_[f];
        }
        const double w_scale = abs_tol_ / (h_ * h_ * h_) + rel_tol_ * w_max;
        const double w_part = std::sqrt(w_sum / static_cast<double>(n - 1)) / w_scale;
        return std::max(u_part, w_part);
    }

private:
    double h_;
    double base_;
    double rel_tol_;
    double abs_tol_;
    std::vector<double> lap_, w_err_, w_new_;
};

bool in_corridor(const Diagnostics& d, double mean)
{
    return d.min_height >= 0.5 * mean && d.max_height <= 2.0 * mean;
}

} // namespace

Trajectory integrate(const FilmState& state0, const Rheology& rheo, Regularisation reg,
                     const IntegratorConfig& cfg)
{
    cfg.validate();
    const Grid& grid = state0.grid();
    const std::size_t n = grid.n_cells;
    SemiDiscreteOperator op(grid, rheo, reg, cfg.psi_prime_cap);

    Trajectory traj;
    traj.grid = grid;

    // the unknown is the deviation from the (conserved) mean height
    const double mean = mass(state0) / grid.length();
    op.set_base_height(mean);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = state0[i] - mean;
    std::vector<double> y_new(n), err(n);
    ErrorNorm error_norm(grid, mean, cfg.rel_tol, cfg.abs_tol);
    const auto heights = [&](std::span<const double> v) {
        std::vector<double> u(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) u[i] = mean + v[i];
        return u;
    };

    Diagnostics current = diagnose(0.0, y, op);
    const double e0 = current.energy;
    traj.samples.push_back(current);
    traj.mean = mean;
    traj.steady_threshold = cfg.steady_energy_threshold.value_or(1e-14 * e0);
    if (cfg.snapshots > 0) traj.snapshots.push_back({0.0, state0});

    const bool extinguishes = is_power_law(rheo) && flow_exponent(rheo) < 1.0;
    const double floor = cfg.positivity_floor * current.min_height - mean;

    double dt = cfg.dt_init.value_or(
        std::min(op.stable_dt(y, cfg.c_stab), cfg.t_end));
    const double dt_min = cfg.dt_min.value_or(1e-6 * dt);
    if (!(dt_min < dt)) throw ConfigError("integrator: dt_min must be smaller than dt_init");

    std::unique_ptr<Stepper> stepper;
    if (cfg.scheme == Scheme::Explicit)
        stepper = std::make_unique<BogackiShampine>(op, traj.stats, floor);
    else
        stepper = std::make_unique<Ros3>(op, traj.stats, floor);

    double t = 0.0;
    std::size_t since_sample = 0;
    std::size_t next_snapshot = 1;
    traj.stats.dt_smallest = std::numeric_limits<double>::infinity();

    const auto finish = [&](TerminationKind kind) {
        traj.termination = {kind, t};
        if (traj.samples.back().t != t) traj.samples.push_back(current);
        traj.final_u = heights(y);
        if (cfg.snapshots > 0 && traj.snapshots.back().t != t)
            traj.snapshots.push_back({t, FilmState(grid, traj.final_u)});
        if (traj.stats.accepted == 0) traj.stats.dt_smallest = 0.0;
        return traj;
    };

    if (current.energy <= traj.steady_threshold)
        return finish(extinguishes && e0 > 0.0 ? TerminationKind::Extinction
                                               : TerminationKind::SteadyState);

    while (true) {
        double limit = cfg.t_end - t;
        if (cfg.snapshots > 0 && next_snapshot <= cfg.snapshots) {
            const double ts = cfg.t_end * static_cast<double>(next_snapshot)
                              / static_cast<double>(cfg.snapshots);
            limit = std::min(limit, ts - t);
        }
        if (cfg.max_energy_drop > 0.0 && current.dissipation > 0.0)
            limit = std::min(limit, cfg.max_energy_drop * current.energy / current.dissipation);
        double step = std::min(dt, limit);
        const bool clipped = step < dt;

        const Attempt outcome = stepper->attempt(y, step, y_new, err);
        if (outcome != Attempt::Done) {
            if (outcome == Attempt::NonPositive) ++traj.stats.rejected_positivity;
            else ++traj.stats.rejected_error;
            dt = 0.5 * step;
            if (dt < dt_min) {
                if (outcome == Attempt::NonFinite)
                    throw NumericalError(
                        fmt::format("solution became non-finite after t = {}", t), t);
                return finish(outcome == Attempt::NonPositive ? TerminationKind::PositivityBreach
                                                              : TerminationKind::StepUnderflow);
            }
            continue;
        }

        const double norm = error_norm(err, y, y_new);
        if (!std::isfinite(norm))
            throw NumericalError(fmt::format("error estimate became non-finite after t = {}", t), t);
        const double grow = norm == 0.0 ? 5.0
                                        : std::clamp(0.9 * std::pow(norm, -stepper->order_exponent()),
                                                     0.2, 5.0);
        if (norm > 1.0) {
            ++traj.stats.rejected_error;
            dt = step * grow;
            if (dt < dt_min) return finish(TerminationKind::StepUnderflow);
            continue;
        }

        // accept
        std::swap(y, y_new);
        stepper->accepted();
        t = (step == cfg.t_end - t) ? cfg.t_end : t + step;
        ++traj.stats.accepted;
        traj.stats.dt_smallest = std::min(traj.stats.dt_smallest, step);
        traj.stats.dt_largest = std::max(traj.stats.dt_largest, step);
        dt = clipped ? std::max(dt, step * grow) : step * grow;

        current = diagnose(t, y, op);
        if (!std::isfinite(current.energy) || !std::isfinite(current.dissipation))
            throw NumericalError(fmt::format("diagnostics became non-finite at t = {}", t), t);

        if (!traj.left_corridor && !in_corridor(current, traj.mean)) {
            traj.left_corridor = true;
            traj.corridor_exit_time = t;
        }
        if (++since_sample >= cfg.sample_stride) {
            traj.samples.push_back(current);
            since_sample = 0;
        }
        if (cfg.snapshots > 0 && next_snapshot <= cfg.snapshots) {
            const double ts = cfg.t_end * static_cast<double>(next_snapshot)
                              / static_cast<double>(cfg.snapshots);
            if (t >= ts * (1.0 - 1e-14)) {
                traj.snapshots.push_back({t, FilmState(grid, heights(y))});
                ++next_snapshot;
            }
        }

        if (current.energy <= traj.steady_threshold)
            return finish(extinguishes ? TerminationKind::Extinction : TerminationKind::SteadyState);
        if (t >= cfg.t_end) return finish(TerminationKind::ReachedTEnd);
    }
}

} // namespace thinfilm
