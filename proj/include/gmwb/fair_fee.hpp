// Fair rider fee: the alpha at which the contract is worth exactly the premium.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gmwb/contract.hpp"
#include "gmwb/valuation.hpp"

namespace gmwb {

/// Raised when a numerical procedure cannot produce an answer (bracketing
/// failure, degenerate regression, ...). Carries JSON diagnostics.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, nlohmann::json diagnostics = {})
        : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
    const nlohmann::json& diagnostics() const noexcept { return diagnostics_; }

private:
    nlohmann::json diagnostics_;
};

struct FeeSolverOptions {
    /// |V0 - P| accepted as a solution; <= 0 means P * 5e-4.
    double tol_value = 0.0;
    int max_iter = 60;
    double initial_upper = 0.05;
    int max_doublings = 12;
    /// Bisection also stops once the bracket is narrower than this.
    double alpha_tolerance = 1e-10;
    /// Re-price at the solution with this many fresh paths (0 = skip).
    std::size_t confirm_paths = 0;
    /// Price V0 with optimal surrender (LSMC) instead of the no-lapse model.
    bool lapse_model = false;
    std::uint64_t lapse_fit_seed = 0; // 0 = derived from the pricing seed
};

struct BracketStep {
    double lo = 0.0;
    double hi = 0.0;
    double alpha = 0.0;
    double v0 = 0.0;
};

struct FeeSolveResult {
    double alpha = 0.0;
    Estimate v0_at_solution;
    int iterations = 0;
    std::vector<BracketStep> bracket_history;
    double tolerance_achieved = 0.0; // |V0(alpha) - P|
    double tol_value = 0.0;
    bool converged = false;
    std::optional<Estimate> confirmation;
    std::vector<std::string> warnings;
};

/// Bisection on alpha with the same random numbers at every trial fee, so the
/// sampled V0(alpha) is one fixed decreasing function. The fee rate in `spec`
/// is ignored.
FeeSolveResult solve_fair_fee(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim,
                              const FeeSolverOptions& options = {});

void to_json(nlohmann::json& j, const FeeSolveResult& r);

} // namespace gmwb
