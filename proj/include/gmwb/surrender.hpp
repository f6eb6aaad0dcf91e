// Optimal early surrender by least-squares Monte Carlo.
//
// The policyholder may surrender at any exercise date before the account has
// been exhausted and receives W (1 - k(t)). The continuation value is
// regressed on functions of the account value alone, which is a sufficient
// state under static withdrawals. Policies are fitted on one seed and priced
// on another so the reported values carry no foresight bias.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmwb/contract.hpp"
#include "gmwb/valuation.hpp"

namespace gmwb {

enum class BasisKind {
    /// 1, x, ..., x^degree and (optionally) x 1{w < G (T - t)}, the last
    /// term letting the fit bend where the remaining guarantee starts to
    /// dominate the account.
    Polynomial,
    /// 1, x and hinges max(0, x - c_i) with knots c_i at evenly spaced
    /// quantiles of the live accounts on each date. Extrapolates linearly,
    /// which is the large-account shape of the continuation value.
    LinearSpline,
};

/// Regression features of x = w / P.
struct BasisSpec {
    BasisKind kind = BasisKind::LinearSpline;
    int degree = 3;
    bool guarantee_kink = true;
    int knots = 8;
    std::size_t max_size() const noexcept {
        if (kind == BasisKind::LinearSpline) return 2 + static_cast<std::size_t>(knots);
        return static_cast<std::size_t>(degree) + 1 + (guarantee_kink ? 1 : 0);
    }
};

struct LapseOptions {
    BasisSpec basis;
    /// Exercise allowed every `exercise_stride` grid steps, starting at t = 0.
    int exercise_stride = 1;
};

struct StoppingPolicy {
    int steps_per_year = 0;
    int num_steps = 0;
    double premium = 0.0;
    double annual_withdrawal = 0.0;
    BasisSpec basis;
    int exercise_stride = 1;
    std::vector<int> exercise_steps;
    /// One coefficient vector per exercise date; empty means never exercise.
    std::vector<std::vector<double>> coefficients;
    /// Spline knots in units of P, per exercise date.
    std::vector<std::vector<double>> knots;
    std::uint64_t fit_seed = 0;
    std::size_t fit_paths = 0;
    double in_sample_value = 0.0;
    std::vector<std::string> warnings;

    double continuation(std::size_t date, double w) const;
    /// Exercise iff the account is alive and W (1 - k) beats the fitted
    /// continuation value.
    bool exercises(std::size_t date, double w, double charge) const;
};

/// Writes the features of w into out and returns how many were written.
/// `knots` is only read by the spline basis.
std::size_t basis_values(const BasisSpec& basis, double w, double premium, double remaining_guarantee,
                         std::span<const double> knots, std::span<double> out);

/// Backward induction over the exercise dates on `sim.num_paths` paths drawn
/// with `sim.seed`.
StoppingPolicy fit_policy(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim,
                          const LapseOptions& options = {});

struct LapseReport {
    Estimate v0_lapse;
    Estimate u0_lapse;
    Estimate l0_direct;      // fees avoided - guarantee forgone - charges paid
    Estimate l0_from_values; // V0_lapse - V0_NL
    Estimate v0_nl;
    Estimate u0_nl;
    Estimate residual_value_split;  // V0_lapse - (W0 + U0_lapse)
    Estimate residual_three_way;    // V0_lapse - (W0 + U0_NL + L0_direct)
    Estimate residual_lapse_option; // L0_direct - (V0_lapse - V0_NL)
    double exercised_fraction = 0.0;
    double mean_exercise_time = 0.0; // over exercised paths
    std::size_t num_paths = 0;
    std::uint64_t seed = 0;
    std::uint64_t fit_seed = 0;
};

/// Applies a fitted policy to fresh paths. Refuses to price on the seed the
/// policy was fitted with.
LapseReport price_with_lapse(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim,
                             const StoppingPolicy& policy);

struct BoundaryPoint {
    double t = 0.0;
    std::optional<double> critical_value; // smallest w at which surrender is preferred
};

std::vector<BoundaryPoint> exercise_boundary(const StoppingPolicy& policy, const ContractSpec& spec);

void write_boundary_csv(std::ostream& out, const std::vector<BoundaryPoint>& boundary);
void to_json(nlohmann::json& j, const BoundaryPoint& b);

void to_json(nlohmann::json& j, const StoppingPolicy& p);
void from_json(const nlohmann::json& j, StoppingPolicy& p);
void to_json(nlohmann::json& j, const LapseReport& r);

} // namespace gmwb
