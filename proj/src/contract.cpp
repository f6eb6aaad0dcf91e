#include "gmwb/contract.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace gmwb {

CdscSchedule::CdscSchedule(std::vector<CdscBreakpoint> breakpoints)
    : breakpoints_(std::move(breakpoints)) {}

double CdscSchedule::charge(double s) const noexcept {
    for (const auto& bp : breakpoints_) {
        if (s < bp.until_year) return bp.charge;
    }
    return 0.0;
}

double CdscSchedule::at(double s, double maturity) const {
    if (!(s >= 0.0 && s <= maturity)) {
        std::ostringstream msg;
        msg << "surrender charge requested at s=" << s << " outside [0, " << maturity << "]";
        throw std::out_of_range(msg.str());
    }
    return charge(s);
}

CdscSchedule CdscSchedule::no_lapse(double maturity) {
    return CdscSchedule({{maturity, 1.0}});
}

CdscSchedule CdscSchedule::declining_eight_year() {
    std::vector<CdscBreakpoint> bps;
    for (int year = 1; year <= 8; ++year) {
        bps.push_back({static_cast<double>(year), (9 - year) / 100.0});
    }
    return CdscSchedule(std::move(bps));
}

CdscSchedule CdscSchedule::scaled(double factor) const {
    auto bps = breakpoints_;
    for (auto& bp : bps) bp.charge = std::clamp(bp.charge * factor, 0.0, 1.0);
    return CdscSchedule(std::move(bps));
}

double annuity(double r, double h) {
    if (!(r > 0.0)) throw std::invalid_argument("annuity: rate must be positive");
    if (!(h >= 0.0)) throw std::invalid_argument("annuity: horizon must be non-negative");
    return -std::expm1(-r * h) / r;
}

double annuity_immediate(double r, double h, int steps_per_year) {
    if (steps_per_year <= 0) throw std::invalid_argument("annuity_immediate: steps_per_year must be positive");
    const double dt = 1.0 / steps_per_year;
    // dt * sum_{m=1}^{h/dt} e^{-r m dt} = abar_h * r dt / (e^{r dt} - 1)
    return annuity(r, h) * (r * dt / std::expm1(r * dt));
}

ValidationResult validate(const ContractSpec& spec, const MarketParams& market) {
    ValidationResult out;
    auto err = [&](std::string m) { out.errors.push_back(std::move(m)); };

    if (!(spec.premium > 0.0) || !std::isfinite(spec.premium)) err("premium must be positive");
    if (!(spec.withdrawal_rate > 0.0 && spec.withdrawal_rate <= 1.0))
        err("withdrawal rate must lie in (0, 1]");
    if (!(spec.fee_rate >= 0.0) || !std::isfinite(spec.fee_rate)) err("fee rate must be non-negative");
    if (!(market.r > 0.0) || !std::isfinite(market.r)) err("riskless rate must be positive");
    if (!(market.sigma >= 0.0) || !std::isfinite(market.sigma)) err("volatility must be non-negative");

    const auto& bps = spec.cdsc.breakpoints();
    double prev_until = 0.0;
    double prev_charge = 1.0;
    bool ordered = true;
    for (std::size_t i = 0; i < bps.size(); ++i) {
        const auto& bp = bps[i];
        if (!(bp.until_year > prev_until)) {
            ordered = false;
        }
        if (!(bp.charge >= 0.0 && bp.charge <= 1.0)) err("CDSC charges must lie in [0, 1]");
        if (i > 0 && bp.charge > prev_charge) err("CDSC must be non-increasing");
        prev_until = bp.until_year;
        prev_charge = bp.charge;
    }
    if (!ordered) err("CDSC breakpoints must be positive and strictly increasing");

    if (out.errors.empty()) {
        const double maturity = spec.maturity();
        if (spec.cdsc.charge(maturity) != 0.0) err("CDSC must be zero at maturity");
        if (spec.cdsc.charge(0.0) == 0.0)
            out.warnings.push_back("surrender charge at issue is zero: fair fee is not unique (non-marketable)");
    }
    return out;
}

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
    std::string s = "invalid configuration";
    for (const auto& e : errors) s += "; " + e;
    return s;
}

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    if (!obj.is_object()) throw ValidationError({where + " must be a JSON object"});
    std::vector<std::string> unknown;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) unknown.push_back("unknown field '" + it.key() + "' in " + where);
    }
    if (!unknown.empty()) throw ValidationError(std::move(unknown));
}

double number_field(const nlohmann::json& obj, const char* key, std::vector<std::string>& errors,
                    double fallback, bool required) {
    if (!obj.contains(key)) {
        if (required) errors.push_back(std::string("missing field '") + key + "'");
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        errors.push_back(std::string("field '") + key + "' must be a number");
        return fallback;
    }
    return v.get<double>();
}

} // namespace

ValidationError::ValidationError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

void require_valid(const ContractSpec& spec, const MarketParams& market) {
    auto result = validate(spec, market);
    if (!result.ok()) throw ValidationError(std::move(result.errors));
}

void to_json(nlohmann::json& j, const CdscSchedule& s) {
    j = nlohmann::json::array();
    for (const auto& bp : s.breakpoints()) j.push_back({{"until_year", bp.until_year}, {"charge", bp.charge}});
}

void to_json(nlohmann::json& j, const ContractSpec& spec) {
    j = {{"premium", spec.premium},
         {"withdrawal_rate", spec.withdrawal_rate},
         {"fee_rate", spec.fee_rate},
         {"cdsc", spec.cdsc}};
}

void to_json(nlohmann::json& j, const MarketParams& market) {
    j = {{"r", market.r}, {"sigma", market.sigma}, {"mu", market.mu}};
}

ContractConfig contract_from_json(const nlohmann::json& doc, const std::vector<std::string>& extra_keys) {
    std::set<std::string> allowed{"premium", "withdrawal_rate", "fee_rate", "cdsc", "r", "sigma", "mu"};
    allowed.insert(extra_keys.begin(), extra_keys.end());
    reject_unknown(doc, allowed, "configuration");

    std::vector<std::string> errors;
    ContractConfig cfg;
    cfg.contract.premium = number_field(doc, "premium", errors, 0.0, true);
    cfg.contract.withdrawal_rate = number_field(doc, "withdrawal_rate", errors, 0.0, true);
    cfg.contract.fee_rate = number_field(doc, "fee_rate", errors, 0.0, false);
    cfg.market.r = number_field(doc, "r", errors, 0.0, true);
    cfg.market.sigma = number_field(doc, "sigma", errors, 0.0, true);
    cfg.market.mu = number_field(doc, "mu", errors, 0.0, false);

    if (doc.contains("cdsc")) {
        const auto& arr = doc.at("cdsc");
        if (!arr.is_array()) {
            errors.push_back("field 'cdsc' must be an array");
        } else {
            std::vector<CdscBreakpoint> bps;
            for (const auto& entry : arr) {
                reject_unknown(entry, {"until_year", "charge"}, "cdsc entry");
                bps.push_back({number_field(entry, "until_year", errors, 0.0, true),
                               number_field(entry, "charge", errors, 0.0, true)});
            }
            cfg.contract.cdsc = CdscSchedule(std::move(bps));
        }
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return cfg;
}

} // namespace gmwb
