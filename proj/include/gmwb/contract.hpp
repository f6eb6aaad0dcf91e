// Contract and market parameters for a variable annuity with a GMWB rider.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gmwb {

/// One segment of a surrender-charge table: `charge` applies on
/// [previous until_year, until_year).
struct CdscBreakpoint {
    double until_year = 0.0;
    double charge = 0.0;
};

/// Piecewise-constant, right-continuous surrender charge k(s).
///
/// The charge is zero after the last breakpoint. An empty schedule means no
/// surrender charge at all.
class CdscSchedule {
public:
    CdscSchedule() = default;
    explicit CdscSchedule(std::vector<CdscBreakpoint> breakpoints);

    /// k(s). Throws std::out_of_range for s outside [0, maturity].
    double at(double s, double maturity) const;

    /// k(s) without the domain check; used inside hot loops.
    double charge(double s) const noexcept;

    const std::vector<CdscBreakpoint>& breakpoints() const noexcept { return breakpoints_; }
    bool empty() const noexcept { return breakpoints_.empty(); }

    /// k = 1 on [0, maturity) and 0 at maturity: early surrender is never
    /// worth anything.
    static CdscSchedule no_lapse(double maturity);

    /// The common "8% in year 1, down 1% a year" table, zero from year 8.
    static CdscSchedule declining_eight_year();

    /// Every charge multiplied by `factor` and clamped to [0, 1].
    CdscSchedule scaled(double factor) const;

private:
    std::vector<CdscBreakpoint> breakpoints_;
};

struct ContractSpec {
    double premium = 100.0;
    double withdrawal_rate = 0.1;
    double fee_rate = 0.0;
    CdscSchedule cdsc;

    double maturity() const noexcept { return 1.0 / withdrawal_rate; }
    double annual_withdrawal() const noexcept { return withdrawal_rate * premium; }

    ContractSpec with_fee(double alpha) const {
        ContractSpec out = *this;
        out.fee_rate = alpha;
        return out;
    }
};

struct MarketParams {
    double r = 0.05;
    double sigma = 0.2;
    double mu = 0.0; // real-world drift; never used for pricing
};

/// Present value of a continuous unit payment stream over h years:
/// (1 - e^{-rh}) / r. Requires r > 0 and h >= 0.
double annuity(double r, double h);

/// Present value of payments of size dt made at the end of every period of
/// length dt = 1/steps_per_year over h years. Tends to annuity(r, h) as the
/// period shrinks; this is the annuity the discrete engine actually pays.
double annuity_immediate(double r, double h, int steps_per_year);

struct ValidationResult {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const noexcept { return errors.empty(); }
};

/// Checks every contract and market invariant and reports all violations.
ValidationResult validate(const ContractSpec& spec, const MarketParams& market);

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    std::vector<std::string> errors_;
};

/// validate() and throw ValidationError when anything is wrong.
void require_valid(const ContractSpec& spec, const MarketParams& market);

// JSON: {premium, withdrawal_rate, fee_rate, cdsc: [{until_year, charge}],
// r, sigma, mu}. Unknown keys are rejected.
void to_json(nlohmann::json& j, const CdscSchedule& s);
void to_json(nlohmann::json& j, const ContractSpec& spec);
void to_json(nlohmann::json& j, const MarketParams& market);

struct ContractConfig {
    ContractSpec contract;
    MarketParams market;
};

/// Parses the contract/market document. `extra_keys` lists additional
/// top-level keys the caller handles itself; anything else is an error.
ContractConfig contract_from_json(const nlohmann::json& doc,
                                  const std::vector<std::string>& extra_keys = {});

} // namespace gmwb
