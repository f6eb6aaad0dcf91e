// Run configuration for the gmwb command-line tool: the contract/market
// document plus optional engine, solver, lapse, surface and oracle blocks.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmwb/contract.hpp"
#include "gmwb/fair_fee.hpp"
#include "gmwb/oracle.hpp"
#include "gmwb/surrender.hpp"
#include "gmwb/valuation.hpp"

namespace gmwb::cli {

struct LapseBlock {
    LapseOptions options;
    std::size_t fit_paths = 0;   // 0 = engine.num_paths
    std::uint64_t fit_seed = 0;  // 0 = derived from engine.seed
};

struct SurfaceBlock {
    std::vector<double> t_points; // empty = {0, T/4, T/2, 3T/4}
    std::vector<double> w_points{25.0, 50.0, 100.0, 150.0, 200.0};
};

struct OracleBlock {
    TreeOptions tree;
    int steps_per_year = 0; // 0 = engine.steps_per_year
    bool with_lapse = true;
};

struct RunConfig {
    ContractSpec contract;
    MarketParams market;
    SimulationConfig engine;
    FeeSolverOptions solver;
    LapseBlock lapse;
    SurfaceBlock surface;
    OracleBlock oracle;
    std::vector<std::string> warnings;

    SimulationConfig fit_config() const;
};

/// Parses and validates; throws ValidationError listing every problem.
RunConfig parse_run_config(const nlohmann::json& doc);

/// The fully resolved configuration, defaults included.
nlohmann::json echo(const RunConfig& cfg);

} // namespace gmwb::cli
