// Account value evolution with fee drag, static withdrawals and absorption
// at zero.
//
// Discrete scheme, per step k -> k+1 of length dt:
//   grown      = W_k R_k                 (full-step growth net of fees)
//   fee_k      = grown (e^{alpha dt} - 1) (value lost to fee drag over the step)
//   W_{k+1}    = max(0, grown - G dt)
// The policyholder always receives G dt at t_{k+1}. Whatever the account
// cannot cover (the whole payment once W has hit zero) is paid by the rider.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "gmwb/contract.hpp"
#include "gmwb/parallel.hpp"
#include "gmwb/paths.hpp"

namespace gmwb {

struct StepOutcome {
    double next_value;
    double fee;
    double from_account;
    double from_guarantee;
};

inline StepOutcome account_step(double value, double factor, double withdrawal, double fee_growth) noexcept {
    const double grown = value * factor;
    const double fee = grown * fee_growth;
    const double after = grown - withdrawal;
    if (after > 0.0) return {after, fee, withdrawal, 0.0};
    return {0.0, fee, grown, withdrawal - grown};
}

struct AccountPath {
    std::vector<double> times;       // t_k, k = 0..N
    std::vector<double> z;           // Z_{t_k}
    std::vector<double> values;      // W_{t_k}
    std::vector<double> withdrawals; // paid at t_{k+1}; entry k belongs to step k
    std::vector<double> from_guarantee;
    std::vector<double> fees;        // fee drag over step k, measured at t_{k+1}
    std::optional<int> trigger_index;
};

struct TriggerTimes {
    double tau = std::numeric_limits<double>::infinity();
    double tau_t = std::numeric_limits<double>::infinity(); // tau v t
    double tau_bar_t = 0.0;                                  // (tau v t) ^ T
};

/// Discount factors e^{-r t_k} for k = 0..N.
std::vector<double> discount_factors(double r, const TimeGrid& grid);

/// Full path record starting from W_0 = P.
AccountPath evolve(const ContractSpec& spec, const PathSet& paths, std::size_t j);

/// Same, starting from an arbitrary account value at the first grid point.
AccountPath evolve_from(const ContractSpec& spec, const PathSet& paths, std::size_t j, double initial_value);

/// Trigger statistics at time t for a path; tau is the first grid time with
/// W = 0.
TriggerTimes trigger(const AccountPath& account, double t, double maturity);

/// Streaming per-path totals used by the estimators; no arrays kept.
/// Present values are discounted to the first grid point of `paths`.
struct AccountSummary {
    double terminal_value = 0.0;
    int trigger_index = -1;       // -1 when the account never hits zero
    double pv_fees = 0.0;         // sum of D_{k+1} fee_k up to the trigger
    double pv_shortfall = 0.0;    // rider-funded part of the payment at the trigger step
};

AccountSummary summarize_path(const ContractSpec& spec, const PathSet& paths, std::size_t j,
                              double initial_value, const std::vector<double>& discount);

struct RuinEstimate {
    double survival_probability = 0.0; // Q(W_T > 0)
    double std_error = 0.0;
    std::size_t survivors = 0;
    std::size_t ruined = 0;
    std::size_t num_paths = 0;
};

/// Monte Carlo estimate of Q(W_T > 0) with a binomial standard error.
RuinEstimate ruin_probability(const ContractSpec& spec, const MarketParams& market, const TimeGrid& grid,
                              std::size_t num_paths, std::uint64_t seed, bool antithetic = false);

void to_json(nlohmann::json& j, const RuinEstimate& r);

/// CSV with columns t,Z,W,withdrawal,fee.
void write_account_csv(std::ostream& out, const AccountPath& account);

} // namespace gmwb
