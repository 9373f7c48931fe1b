#pragma once

// Small seeded generators for property tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "thinfilm/model.hpp"
#include "thinfilm/spatial.hpp"

namespace thinfilm::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    std::size_t index(std::size_t lo, std::size_t hi)
    {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }

    bool coin() { return index(0, 1) == 1; }

    // |x| log-uniform in [lo, hi], random sign
    double signed_log(double lo, double hi)
    {
        const double m = std::exp(uniform(std::log(lo), std::log(hi)));
        return coin() ? m : -m;
    }

    // Positive heights b (1 + r_i), r_i in [-spread, spread].
    std::vector<double> heights(std::size_t n, double spread = 0.5)
    {
        const double b = uniform(0.2, 2.0);
        std::vector<double> u(n);
        for (double& v : u) v = b * (1.0 + uniform(-spread, spread));
        return u;
    }

    // Smooth positive state: a few random cosine modes on the grid.
    std::vector<double> smooth_heights(const Grid& g, int max_mode = 4, double amp = 0.2)
    {
        std::vector<double> u(g.n_cells, 1.0);
        const int modes = static_cast<int>(index(1, 3));
        for (int j = 0; j < modes; ++j) {
            const int k = static_cast<int>(index(1, static_cast<std::size_t>(max_mode)));
            const double a = uniform(-amp, amp) / modes;
            for (std::size_t i = 0; i < g.n_cells; ++i)
                u[i] += a * std::cos(k * std::numbers::pi * (g.centre(i) - g.x_left) / g.length());
        }
        return u;
    }

    Rheology rheology()
    {
        switch (index(0, 3)) {
        case 0: return Newtonian{};
        case 1: return PowerLaw{FlowExponent(uniform(0.3, 0.95))};
        case 2: return PowerLaw{FlowExponent(uniform(1.05, 3.5))};
        default: return Ellis::make(uniform(1.0, 3.0), uniform(0.5, 2.0), uniform(0.5, 2.0));
        }
    }

    Regularisation regularisation()
    {
        static constexpr double choices[] = {0.0, 1e-2, 1e-1};
        return Regularisation{choices[index(0, 2)]};
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace thinfilm::testing
