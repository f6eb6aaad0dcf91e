#include "gmwb/valuation.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace gmwb {

TimeGrid contract_grid(const ContractSpec& spec, int steps_per_year) {
    return TimeGrid::make(spec.maturity(), steps_per_year);
}

PathValues path_values(const ContractSpec& spec, const PathSet& paths, double initial_value) {
    const TimeGrid& grid = paths.grid();
    const double r = paths.market().r;
    const double g_annual = spec.annual_withdrawal();
    const double horizon = grid.horizon();
    const auto discount = discount_factors(r, grid);
    const double withdrawals_pv = g_annual * annuity_immediate(r, horizon, grid.steps_per_year);

    PathValues out;
    const std::size_t m = paths.size();
    out.policyholder.resize(m);
    out.insurer.resize(m);
    out.trigger_index.resize(m);
    parallel_for_chunks(m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const auto s = summarize_path(spec, paths, j, initial_value, discount);
            double guarantee = 0.0;
            if (s.trigger_index >= 0) {
                const double remaining = grid.time(grid.num_steps - s.trigger_index);
                guarantee = s.pv_shortfall +
                            discount[s.trigger_index] * g_annual *
                                annuity_immediate(r, remaining, grid.steps_per_year);
            }
            out.policyholder[j] = withdrawals_pv + discount[grid.num_steps] * s.terminal_value;
            out.insurer[j] = guarantee - s.pv_fees;
            out.trigger_index[j] = s.trigger_index;
        }
    });
    return out;
}

namespace {

PathSet make_paths(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim) {
    require_valid(spec, market);
    if (sim.num_paths == 0) throw std::invalid_argument("num_paths must be positive");
    return PathSet(market, spec.fee_rate, contract_grid(spec, sim.steps_per_year), sim.num_paths, sim.seed,
                   sim.antithetic);
}

Estimate to_estimate(const SampleStats& s) { return {s.mean, s.std_error}; }

} // namespace

Estimate price_policyholder(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim) {
    const auto paths = make_paths(spec, market, sim);
    const auto values = path_values(spec, paths, spec.premium);
    return to_estimate(summarize(values.policyholder, sim.antithetic));
}

Estimate price_insurer_nolapse(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim) {
    const auto paths = make_paths(spec, market, sim);
    const auto values = path_values(spec, paths, spec.premium);
    return to_estimate(summarize(values.insurer, sim.antithetic));
}

ValuationReport decompose(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim) {
    const auto paths = make_paths(spec, market, sim);
    const auto values = path_values(spec, paths, spec.premium);

    std::vector<double> residual(paths.size());
    std::size_t triggered = 0;
    for (std::size_t j = 0; j < residual.size(); ++j) {
        residual[j] = values.policyholder[j] - spec.premium - values.insurer[j];
        triggered += values.trigger_index[j] >= 0;
    }

    ValuationReport r;
    r.v0 = to_estimate(summarize(values.policyholder, sim.antithetic));
    r.u0_nl = to_estimate(summarize(values.insurer, sim.antithetic));
    r.w0 = spec.premium;
    r.residual = to_estimate(summarize(residual, sim.antithetic));
    r.trigger_probability = static_cast<double>(triggered) / static_cast<double>(paths.size());
    r.num_paths = sim.num_paths;
    r.steps_per_year = sim.steps_per_year;
    r.seed = sim.seed;
    r.antithetic = sim.antithetic;
    return r;
}

ValueSurface value_surface(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim,
                           const std::vector<double>& t_points, const std::vector<double>& w_points) {
    require_valid(spec, market);
    const TimeGrid full = contract_grid(spec, sim.steps_per_year);
    const double maturity = full.horizon();

    ValueSurface surface;
    std::uint64_t stream = 1;
    for (double t : t_points) {
        if (!(t >= 0.0 && t <= maturity)) throw std::invalid_argument("surface time outside [0, T]");
        const int start = static_cast<int>(std::lround(t * sim.steps_per_year));
        TimeGrid rest;
        rest.steps_per_year = sim.steps_per_year;
        rest.num_steps = full.num_steps - start;
        for (double w : w_points) {
            if (!(w > 0.0)) throw std::invalid_argument("surface account values must be positive");
            const PathSet paths(market, spec.fee_rate, rest, sim.num_paths, sim.seed, sim.antithetic, stream++);
            const auto values = path_values(spec, paths, w);
            std::vector<double> residual(paths.size());
            for (std::size_t j = 0; j < residual.size(); ++j)
                residual[j] = values.policyholder[j] - w - values.insurer[j];

            SurfacePoint p;
            p.t = full.time(start);
            p.w = w;
            p.v = to_estimate(summarize(values.policyholder, sim.antithetic));
            p.u = to_estimate(summarize(values.insurer, sim.antithetic));
            p.residual = to_estimate(summarize(residual, sim.antithetic));
            p.moneyness = p.v.value > w ? "ITM" : (p.v.value < w ? "OTM" : "ATM");
            surface.points.push_back(p);
        }
    }
    return surface;
}

void to_json(nlohmann::json& j, const Estimate& e) {
    j = {{"value", e.value}, {"stderr", e.std_error}};
}

void to_json(nlohmann::json& j, const ValuationReport& r) {
    j = {{"V0", r.v0.value},
         {"stderr_V0", r.v0.std_error},
         {"U0_NL", r.u0_nl.value},
         {"stderr_U0_NL", r.u0_nl.std_error},
         {"W0", r.w0},
         {"residual", r.residual.value},
         {"stderr_residual", r.residual.std_error},
         {"trigger_probability", r.trigger_probability},
         {"num_paths", r.num_paths},
         {"steps_per_year", r.steps_per_year},
         {"seed", r.seed},
         {"antithetic", r.antithetic}};
}

void to_json(nlohmann::json& j, const SurfacePoint& p) {
    j = {{"t", p.t},
         {"w", p.w},
         {"v", p.v.value},
         {"u", p.u.value},
         {"residual", p.residual.value},
         {"moneyness", p.moneyness},
         {"stderr_v", p.v.std_error},
         {"stderr_u", p.u.std_error},
         {"stderr_residual", p.residual.std_error}};
}

void to_json(nlohmann::json& j, const ValueSurface& s) { j = s.points; }

void write_surface_csv(std::ostream& out, const ValueSurface& surface) {
    out << "t,w,v,u,moneyness,stderr_v,stderr_u\n" << std::setprecision(12);
    for (const auto& p : surface.points) {
        out << p.t << ',' << p.w << ',' << p.v.value << ',' << p.u.value << ',' << p.moneyness << ','
            << p.v.std_error << ',' << p.u.std_error << '\n';
    }
}

} // namespace gmwb
