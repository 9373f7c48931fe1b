#include "thinfilm/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace thinfilm {

namespace pt = boost::property_tree;

Rheology RheologySpec::build() const
{
    if (kind == "newtonian") return Newtonian{};
    if (kind == "power_law") return PowerLaw{FlowExponent(alpha)};
    if (kind == "ellis") return Ellis::make(alpha, a, b);
    throw ConfigError(fmt::format("unknown rheology kind '{}'", kind));
}

void ExperimentConfig::validate() const
{
    if (name.empty()) throw ConfigError("experiment name is empty");
    (void)rheology.build();
    (void)Regularisation::make(sigma);
    (void)Grid::make(x_left, x_right, n_cells);
    if (n_cells < 4) throw ConfigError(fmt::format("n_cells = {} but at least 4 are needed", n_cells));
    if (!(initial.mean > 0.0) || !std::isfinite(initial.mean))
        throw ConfigError(fmt::format("initial mean must be positive, got {}", initial.mean));
    if (!(initial.epsilon >= 0.0) || !std::isfinite(initial.epsilon))
        throw ConfigError(fmt::format("epsilon must be >= 0, got {}", initial.epsilon));
    for (const Mode& m : initial.modes) {
        if (m.k < 1) throw ConfigError(fmt::format("cosine mode k = {} must be >= 1", m.k));
        if (!std::isfinite(m.weight)) throw ConfigError("mode weight is not finite");
    }
    integrator.validate();
    if (compare_time && !(*compare_time > 0.0 && *compare_time <= integrator.t_end))
        throw ConfigError(fmt::format("compare_time must lie in (0, t_end], got {}", *compare_time));
}

std::vector<std::string> preset_names()
{
    return {"thickening", "thinning2", "thinning3", "newtonian", "ellis"};
}

ExperimentConfig preset(const std::string& name)
{
    ExperimentConfig cfg;
    cfg.name = name;
    cfg.preset = name;
    cfg.initial = InitialSpec{};
    cfg.n_cells = 64;
    cfg.integrator.rel_tol = 1e-6;
    if (name == "thickening") {
        cfg.rheology = {"power_law", 0.5, 1.0, 1.0};
        cfg.integrator.t_end = 1.0;
        cfg.compare_time = 0.01;
    } else if (name == "thinning2" || name == "thinning3") {
        cfg.rheology = {"power_law", name == "thinning2" ? 2.0 : 3.0, 1.0, 1.0};
        cfg.integrator.t_end = 10.0;
        cfg.compare_time = 1.0;
    } else if (name == "newtonian" || name == "ellis") {
        cfg.rheology = name == "newtonian" ? RheologySpec{"newtonian", 1.0, 1.0, 1.0}
                                           : RheologySpec{"ellis", 1.5, 1.0, 1.0};
        // unit relaxation rate for the first mode
        cfg.x_right = std::numbers::pi;
        cfg.integrator.t_end = 20.0;
        cfg.compare_time = 1.0;
    } else {
        throw ConfigError(fmt::format("unknown preset '{}'", name));
    }
    cfg.out_dir = std::filesystem::path("out") / name;
    return cfg;
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, std::string_view text)
{
    const std::string s = trim(text);
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, s));
    return v;
}

std::uint64_t parse_unsigned(const std::string& key, std::string_view text)
{
    const std::string s = trim(text);
    std::uint64_t v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end)
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, s));
    return v;
}

std::vector<Mode> parse_modes(const std::string& key, const std::string& text)
{
    std::vector<Mode> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError(fmt::format("{}: mode '{}' is not of the form k:weight", key, item));
        const std::uint64_t k = parse_unsigned(key, std::string_view(item).substr(0, colon));
        if (k < 1 || k > 100000) throw ConfigError(fmt::format("{}: mode number {} out of range", key, k));
        out.push_back({static_cast<int>(k), parse_double(key, std::string_view(item).substr(colon + 1))});
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

Setter number(double ExperimentConfig::*field)
{
    return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_double(k, v);
    };
}

template <class F>
Setter with(F f)
{
    return [f](ExperimentConfig& c, const std::string& k, const std::string& v) { f(c, k, v); };
}

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"experiment.name", with([](ExperimentConfig& c, auto&, auto& v) { c.name = trim(v); })},
        {"rheology.kind", with([](ExperimentConfig& c, auto&, auto& v) { c.rheology.kind = trim(v); })},
        {"rheology.alpha",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.rheology.alpha = parse_double(k, v); })},
        {"rheology.a", with([](ExperimentConfig& c, auto& k, auto& v) { c.rheology.a = parse_double(k, v); })},
        {"rheology.b", with([](ExperimentConfig& c, auto& k, auto& v) { c.rheology.b = parse_double(k, v); })},
        {"rheology.sigma", number(&ExperimentConfig::sigma)},
        {"grid.x_left", number(&ExperimentConfig::x_left)},
        {"grid.x_right", number(&ExperimentConfig::x_right)},
        {"grid.n_cells",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.n_cells = parse_unsigned(k, v); })},
        {"initial.mean",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.initial.mean = parse_double(k, v); })},
        {"initial.epsilon",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.initial.epsilon = parse_double(k, v); })},
        {"initial.modes",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.initial.modes = parse_modes(k, v); })},
        {"initial.random_modes",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.initial.random_modes = parse_unsigned(k, v); })},
        {"initial.seed",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.initial.seed = parse_unsigned(k, v); })},
        {"integrator.scheme", with([](ExperimentConfig& c, auto& k, auto& v) {
             try {
                 c.integrator.scheme = parse_scheme(trim(v));
             } catch (const ConfigError& e) {
                 throw ConfigError(fmt::format("{}: {}", k, e.what()));
             }
         })},
        {"integrator.t_end",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.integrator.t_end = parse_double(k, v); })},
        {"integrator.rel_tol",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.integrator.rel_tol = parse_double(k, v); })},
        {"integrator.abs_tol",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.integrator.abs_tol = parse_double(k, v); })},
        {"integrator.dt_init",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.integrator.dt_init = parse_double(k, v); })},
        {"integrator.dt_min",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.integrator.dt_min = parse_double(k, v); })},
        {"integrator.positivity_floor", with([](ExperimentConfig& c, auto& k, auto& v) {
             c.integrator.positivity_floor = parse_double(k, v);
         })},
        {"integrator.steady_energy_threshold", with([](ExperimentConfig& c, auto& k, auto& v) {
             c.integrator.steady_energy_threshold = parse_double(k, v);
         })},
        {"integrator.sample_stride", with([](ExperimentConfig& c, auto& k, auto& v) {
             c.integrator.sample_stride = parse_unsigned(k, v);
         })},
        {"integrator.max_energy_drop", with([](ExperimentConfig& c, auto& k, auto& v) {
             c.integrator.max_energy_drop = parse_double(k, v);
         })},
        {"integrator.c_stab",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.integrator.c_stab = parse_double(k, v); })},
        {"output.dir", with([](ExperimentConfig& c, auto&, auto& v) { c.out_dir = trim(v); })},
        {"output.snapshots", with([](ExperimentConfig& c, auto& k, auto& v) {
             c.integrator.snapshots = parse_unsigned(k, v);
         })},
        {"study.compare_time",
         with([](ExperimentConfig& c, auto& k, auto& v) { c.compare_time = parse_double(k, v); })},
    };
    return table;
}

} // namespace

ExperimentConfig parse_config(const std::string& text)
{
    if (trim(text).empty()) throw ConfigError("configuration is empty");
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("malformed configuration at line {}: {}", e.line(), e.message()));
    }

    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty())
            throw ConfigError(fmt::format("key '{}' appears outside any section", section));
    }
    if (auto p = tree.get_optional<std::string>("experiment.preset")) {
        const std::string name = trim(*p);
        if (!name.empty()) cfg = preset(name);
    }

    for (const auto& [section, body] : tree) {
        for (const auto& [key, node] : body) {
            const std::string full = section + "." + key;
            if (full == "experiment.preset") continue;
            if (!node.empty()) throw ConfigError(fmt::format("nested key '{}' is not supported", full));
            const auto it = setters().find(full);
            if (it == setters().end()) throw ConfigError(fmt::format("unknown key '{}'", full));
            it->second(cfg, full, node.data());
        }
    }
    if (!tree.get_optional<std::string>("output.dir") && !cfg.preset.empty()
        && cfg.name != cfg.preset)
        cfg.out_dir = std::filesystem::path("out") / cfg.name;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open configuration '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::vector<Mode> resolve_modes(const ExperimentConfig& cfg)
{
    std::vector<Mode> base = cfg.initial.modes;
    if (cfg.initial.random_modes > 0) {
        std::mt19937_64 rng(cfg.initial.seed);
        std::uniform_int_distribution<int> kdist(1, 8);
        std::uniform_real_distribution<double> wdist(-1.0, 1.0);
        const double scale = 1.0 / static_cast<double>(cfg.initial.random_modes);
        for (std::size_t j = 0; j < cfg.initial.random_modes; ++j) {
            const int k = kdist(rng);
            base.push_back({k, scale * wdist(rng)});
        }
    }
    if (base.empty()) base.push_back({1, 1.0});
    for (Mode& m : base) m.weight *= cfg.initial.epsilon;
    return base;
}

InitialData make_initial_data(const ExperimentConfig& cfg)
{
    cfg.validate();
    const Grid g = cfg.grid();
    const std::vector<Mode> modes = resolve_modes(cfg);
    const double mean = cfg.initial.mean;
    std::vector<double> u(g.n_cells, mean);
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        const double xi = (g.centre(i) - g.x_left) / g.length();
        for (const Mode& m : modes) u[i] += m.weight * std::cos(m.k * std::numbers::pi * xi);
        if (!(u[i] > 0.0))
            throw ConfigError(fmt::format("initial height {} at x = {} is not positive", u[i], g.centre(i)));
    }
    double l2 = 0.0, grad = 0.0;
    bool corridor = true;
    for (std::size_t i = 0; i < u.size(); ++i) {
        l2 += (u[i] - mean) * (u[i] - mean);
        if (i > 0) grad += (u[i] - u[i - 1]) * (u[i] - u[i - 1]);
        corridor = corridor && u[i] >= 0.5 * mean && u[i] <= 2.0 * mean;
    }
    const double dist = std::sqrt(g.h * l2 + grad / g.h);
    return {FilmState(g, std::move(u)), dist, corridor};
}

} // namespace thinfilm
