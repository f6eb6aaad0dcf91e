// Monte Carlo values of the contract (policyholder view, V) and of the rider
// (insurer view, U) under static withdrawals and no early surrender.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmwb/account.hpp"
#include "gmwb/contract.hpp"
#include "gmwb/parallel.hpp"
#include "gmwb/paths.hpp"

namespace gmwb {

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct SimulationConfig {
    int steps_per_year = 252;
    std::size_t num_paths = 100000;
    std::uint64_t seed = 20240601;
    bool antithetic = false;
};

/// Grid from issue to maturity for this contract.
TimeGrid contract_grid(const ContractSpec& spec, int steps_per_year);

/// Per-path present values, all discounted to the first grid point.
///
///   policyholder = G a(T) + D_N W_N
///   insurer      = [D_K shortfall + D_K G a(T - t_K)] 1{triggered at K} - sum_k D_{k+1} fee_k
///
/// where a(h) is the annuity paying G dt at the end of every step. Each pair
/// satisfies policyholder - initial_value - insurer = a sum of zero-mean
/// martingale increments, so the decomposition holds in expectation at any
/// step size.
struct PathValues {
    std::vector<double> policyholder;
    std::vector<double> insurer;
    std::vector<int> trigger_index;
};

PathValues path_values(const ContractSpec& spec, const PathSet& paths, double initial_value);

Estimate price_policyholder(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim);
Estimate price_insurer_nolapse(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim);

struct ValuationReport {
    Estimate v0;
    Estimate u0_nl;
    double w0 = 0.0;
    Estimate residual; // V0 - (W0 + U0_NL), error from path-wise differences
    double trigger_probability = 0.0;
    std::size_t num_paths = 0;
    int steps_per_year = 0;
    std::uint64_t seed = 0;
    bool antithetic = false;
};

/// V0 and U0 from one path set.
ValuationReport decompose(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim);

struct SurfacePoint {
    double t = 0.0;
    double w = 0.0;
    Estimate v;
    Estimate u;
    Estimate residual; // v - u - w
    std::string moneyness; // "ITM" when v > w, "OTM" when v < w, else "ATM"
};

struct ValueSurface {
    std::vector<SurfacePoint> points;
};

/// v(t, w) and u(t, w) by restarting the simulation at W_t = w. Each point
/// uses its own random stream; t is snapped to the nearest grid time.
ValueSurface value_surface(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim,
                           const std::vector<double>& t_points, const std::vector<double>& w_points);

void to_json(nlohmann::json& j, const Estimate& e);
void to_json(nlohmann::json& j, const ValuationReport& r);
void to_json(nlohmann::json& j, const SurfacePoint& p);
void to_json(nlohmann::json& j, const ValueSurface& s);
void write_surface_csv(std::ostream& out, const ValueSurface& surface);

} // namespace gmwb
