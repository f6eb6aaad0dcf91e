#include "gmwb/account.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace gmwb {

namespace {

void check_fee(const ContractSpec& spec, const PathSet& paths) {
    if (spec.fee_rate != paths.fee_rate())
        throw std::invalid_argument("fee rate of contract and path set differ");
}

} // namespace

std::vector<double> discount_factors(double r, const TimeGrid& grid) {
    std::vector<double> d(static_cast<std::size_t>(grid.num_steps) + 1);
    for (int k = 0; k <= grid.num_steps; ++k) d[k] = std::exp(-r * grid.time(k));
    return d;
}

AccountPath evolve(const ContractSpec& spec, const PathSet& paths, std::size_t j) {
    return evolve_from(spec, paths, j, spec.premium);
}

AccountPath evolve_from(const ContractSpec& spec, const PathSet& paths, std::size_t j, double initial_value) {
    check_fee(spec, paths);
    if (!(initial_value >= 0.0)) throw std::invalid_argument("initial account value must be non-negative");
    const TimeGrid& grid = paths.grid();
    const auto n = static_cast<std::size_t>(grid.num_steps);
    const double withdrawal = spec.annual_withdrawal() * grid.dt();
    const double fee_growth = std::expm1(spec.fee_rate * grid.dt());

    AccountPath a;
    a.times.resize(n + 1);
    a.z.resize(n + 1);
    a.values.resize(n + 1);
    a.withdrawals.assign(n, withdrawal);
    a.from_guarantee.resize(n);
    a.fees.resize(n);

    a.times[0] = 0.0;
    a.z[0] = 1.0;
    a.values[0] = initial_value;
    if (initial_value == 0.0) a.trigger_index = 0;

    auto cursor = paths.cursor(j);
    for (std::size_t k = 0; k < n; ++k) {
        const double factor = cursor.next_factor();
        const auto step = account_step(a.values[k], factor, withdrawal, fee_growth);
        a.times[k + 1] = grid.time(static_cast<int>(k + 1));
        a.z[k + 1] = a.z[k] * factor;
        a.values[k + 1] = step.next_value;
        a.fees[k] = step.fee;
        a.from_guarantee[k] = step.from_guarantee;
        if (!a.trigger_index && step.next_value == 0.0) a.trigger_index = static_cast<int>(k + 1);
    }
    return a;
}

TriggerTimes trigger(const AccountPath& account, double t, double maturity) {
    TriggerTimes out;
    if (account.trigger_index) out.tau = account.times[static_cast<std::size_t>(*account.trigger_index)];
    out.tau_t = std::max(out.tau, t);
    out.tau_bar_t = std::min(out.tau_t, maturity);
    return out;
}

AccountSummary summarize_path(const ContractSpec& spec, const PathSet& paths, std::size_t j,
                              double initial_value, const std::vector<double>& discount) {
    const TimeGrid& grid = paths.grid();
    const int n = grid.num_steps;
    const double withdrawal = spec.annual_withdrawal() * grid.dt();
    const double fee_growth = std::expm1(spec.fee_rate * grid.dt());

    AccountSummary s;
    double w = initial_value;
    if (w == 0.0) {
        s.trigger_index = 0;
        return s;
    }
    auto cursor = paths.cursor(j);
    for (int k = 0; k < n; ++k) {
        const auto step = account_step(w, cursor.next_factor(), withdrawal, fee_growth);
        s.pv_fees += discount[k + 1] * step.fee;
        w = step.next_value;
        if (w == 0.0) {
            s.trigger_index = k + 1;
            s.pv_shortfall = discount[k + 1] * step.from_guarantee;
            break;
        }
    }
    s.terminal_value = w;
    return s;
}

RuinEstimate ruin_probability(const ContractSpec& spec, const MarketParams& market, const TimeGrid& grid,
                              std::size_t num_paths, std::uint64_t seed, bool antithetic) {
    require_valid(spec, market);
    const PathSet paths(market, spec.fee_rate, grid, num_paths, seed, antithetic);
    const auto discount = discount_factors(market.r, grid);
    std::vector<unsigned char> alive(num_paths);
    parallel_for_chunks(num_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j)
            alive[j] = summarize_path(spec, paths, j, spec.premium, discount).terminal_value > 0.0;
    });

    RuinEstimate out;
    out.num_paths = num_paths;
    for (auto a : alive) out.survivors += a;
    out.ruined = num_paths - out.survivors;
    const double p = static_cast<double>(out.survivors) / static_cast<double>(num_paths);
    out.survival_probability = p;
    out.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(num_paths));
    return out;
}

void to_json(nlohmann::json& j, const RuinEstimate& r) {
    j = {{"survival_probability", r.survival_probability},
         {"stderr", r.std_error},
         {"survivors", r.survivors},
         {"ruined", r.ruined},
         {"num_paths", r.num_paths}};
}

void write_account_csv(std::ostream& out, const AccountPath& account) {
    out << "t,Z,W,withdrawal,fee\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < account.values.size(); ++k) {
        const double paid = k == 0 ? 0.0 : account.withdrawals[k - 1];
        const double fee = k == 0 ? 0.0 : account.fees[k - 1];
        out << account.times[k] << ',' << account.z[k] << ',' << account.values[k] << ',' << paid << ','
            << fee << '\n';
    }
}

} // namespace gmwb
