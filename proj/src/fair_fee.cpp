#include "gmwb/fair_fee.hpp"

#include <cmath>
#include <functional>

#include "gmwb/surrender.hpp"

namespace gmwb {

namespace {

using Pricer = std::function<Estimate(double)>;

Pricer make_pricer(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim,
                   const FeeSolverOptions& options) {
    if (!options.lapse_model) {
        return [=](double alpha) { return price_policyholder(spec.with_fee(alpha), market, sim); };
    }
    SimulationConfig fit = sim;
    fit.seed = options.lapse_fit_seed != 0 ? options.lapse_fit_seed : splitmix64(sim.seed);
    if (fit.seed == sim.seed) fit.seed ^= 1;
    return [=](double alpha) {
        const auto contract = spec.with_fee(alpha);
        const auto policy = fit_policy(contract, market, fit);
        return price_with_lapse(contract, market, sim, policy).v0_lapse;
    };
}

} // namespace

FeeSolveResult solve_fair_fee(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim,
                              const FeeSolverOptions& options) {
    if (!(market.r > 0.0))
        throw std::invalid_argument("no solution at r <= 0: the fair fee does not exist without a positive riskless rate");
    require_valid(spec.with_fee(0.0), market);
    if (options.lapse_model && spec.cdsc.charge(0.0) == 0.0)
        throw std::invalid_argument("refusing to solve with surrender allowed and no charge at issue: no unique fair fee");

    FeeSolveResult res;
    const double premium = spec.premium;
    res.tol_value = options.tol_value > 0.0 ? options.tol_value : premium * 5e-4;
    if (options.lapse_model)
        res.warnings.push_back("uniqueness of the fair fee is only established without surrender; LSMC value used");

    const Pricer price = make_pricer(spec, market, sim, options);
    auto finish = [&](double alpha, const Estimate& v) {
        res.alpha = alpha;
        res.v0_at_solution = v;
        res.tolerance_achieved = std::fabs(v.value - premium);
        res.converged = res.tolerance_achieved <= res.tol_value;
        if (options.confirm_paths > 0) {
            SimulationConfig confirm = sim;
            confirm.num_paths = options.confirm_paths;
            confirm.seed = splitmix64(sim.seed ^ 0xC0FFEEull);
            res.confirmation = options.lapse_model ? make_pricer(spec, market, confirm, options)(alpha)
                                                   : price_policyholder(spec.with_fee(alpha), market, confirm);
        }
        return res;
    };

    const Estimate at_zero = price(0.0);
    if (std::fabs(at_zero.value - premium) <= res.tol_value) return finish(0.0, at_zero);
    if (at_zero.value < premium) {
        if (at_zero.value < premium - 3.0 * at_zero.std_error - res.tol_value) {
            throw NumericalError("bracket failure: V0 at zero fee is below the premium beyond Monte Carlo noise",
                                 {{"alpha", 0.0}, {"V0", at_zero.value}, {"stderr", at_zero.std_error}});
        }
        res.warnings.push_back("V0 at zero fee is below the premium within Monte Carlo noise; returning zero fee");
        return finish(0.0, at_zero);
    }

    double lo = 0.0;
    double hi = options.initial_upper;
    Estimate at_hi = price(hi);
    for (int d = 0; at_hi.value >= premium; ++d) {
        if (std::fabs(at_hi.value - premium) <= res.tol_value) return finish(hi, at_hi);
        if (d >= options.max_doublings)
            throw NumericalError("bracket failure: could not find a fee with V0 below the premium",
                                 {{"alpha_hi", hi}, {"V0", at_hi.value}});
        lo = hi;
        hi *= 2.0;
        at_hi = price(hi);
    }
    if (std::fabs(at_hi.value - premium) <= res.tol_value) return finish(hi, at_hi);

    double best_alpha = hi;
    Estimate best = at_hi;
    for (int it = 0; it < options.max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Estimate v = price(mid);
        ++res.iterations;
        res.bracket_history.push_back({lo, hi, mid, v.value});
        best_alpha = mid;
        best = v;
        if (std::fabs(v.value - premium) <= res.tol_value) break;
        (v.value > premium ? lo : hi) = mid;
        if (hi - lo < options.alpha_tolerance) break;
    }
    return finish(best_alpha, best);
}

void to_json(nlohmann::json& j, const FeeSolveResult& r) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& b : r.bracket_history)
        history.push_back({{"alpha_lo", b.lo}, {"alpha_hi", b.hi}, {"alpha", b.alpha}, {"V0", b.v0}});
    j = {{"alpha_star", r.alpha},
         {"V0_at_solution", r.v0_at_solution.value},
         {"stderr_V0", r.v0_at_solution.std_error},
         {"iterations", r.iterations},
         {"tolerance_achieved", r.tolerance_achieved},
         {"tol_value", r.tol_value},
         {"converged", r.converged},
         {"bracket_history", history},
         {"warnings", r.warnings}};
    if (r.confirmation) j["confirmation"] = *r.confirmation;
}

} // namespace gmwb
