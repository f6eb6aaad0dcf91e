// Independent reference values: closed forms for a riskless fund and a
// dynamic-programming lattice for the surrender problem.
#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "gmwb/contract.hpp"

namespace gmwb {

/// Continuous-time solution when sigma = 0. With m = r - alpha,
///   W_t = (P - G/m) e^{mt} + G/m   (m != 0),   W_t = P - G t   (m = 0),
/// absorbed at zero.
struct DeterministicSolution {
    double tau = 0.0;      // first zero of W, +inf if none
    double tau_bar = 0.0;  // min(tau, T)
    double terminal_value = 0.0;
    double v0 = 0.0;       // G abar_T + e^{-rT} W_T
    double u0 = 0.0;       // e^{-r tau_bar} G abar_{T - tau_bar} - int_0^tau_bar alpha W_s e^{-rs} ds
    double fee_income = 0.0; // the integral above

    double premium = 0.0;
    double annual_withdrawal = 0.0;
    double growth = 0.0; // m
    double account_value(double t) const;
};

DeterministicSolution deterministic_value(const ContractSpec& spec, const MarketParams& market);

/// One-period transition used by the lattice.
enum class Branching {
    /// Two-point CRR step: u = e^{sigma sqrt(dt)}, d = 1/u,
    /// q = (e^{r dt} - d) / (u - d).
    Binomial,
    /// Gauss-Hermite nodes for the exact lognormal step.
    GaussHermite,
};

struct TreeOptions {
    int grid_points = 8001;
    Branching branching = Branching::GaussHermite;
    int hermite_nodes = 32;
    int exercise_stride = 1;
};

struct TreeResult {
    double v0 = 0.0;    // with surrender if requested, else equal to v0_nl
    double u0 = 0.0;
    double l0 = 0.0;    // v0 - v0_nl
    double v0_nl = 0.0;
    double u0_nl = 0.0;
    double q = 0.0;     // up probability (binomial only)
    std::vector<double> boundary_times;
    std::vector<std::optional<double>> boundary; // smallest grid w where surrender is optimal
};

/// Backward induction on a quantized account-value grid per time step.
/// The account value alone is a Markov state under static withdrawals, so
/// one grid per step carries the whole lattice. Between grid points the
/// value is interpolated linearly; contract values are kept non-decreasing
/// in w.
TreeResult tree_value(const ContractSpec& spec, const MarketParams& market, int steps_per_year, bool with_lapse,
                      const TreeOptions& options = {});

void to_json(nlohmann::json& j, const DeterministicSolution& s);
void to_json(nlohmann::json& j, const TreeResult& t);

} // namespace gmwb
