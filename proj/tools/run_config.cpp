#include "run_config.hpp"

#include <set>

namespace gmwb::cli {

namespace {

using nlohmann::json;

class Reader {
public:
    Reader(const json& obj, std::string where, std::vector<std::string>& errors)
        : obj_(obj), where_(std::move(where)), errors_(errors) {}

    bool check_keys(const std::set<std::string>& allowed) {
        if (!obj_.is_object()) {
            errors_.push_back(where_ + " must be a JSON object");
            return false;
        }
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!allowed.count(it.key())) errors_.push_back("unknown field '" + it.key() + "' in " + where_);
        return true;
    }

    template <class T>
    void get(const char* key, T& out) {
        if (!obj_.contains(key)) return;
        const auto& v = obj_.at(key);
        bool ok = false;
        if constexpr (std::is_same_v<T, bool>) ok = v.is_boolean();
        else if constexpr (std::is_integral_v<T>) ok = v.is_number_integer() && (std::is_signed_v<T> || v.get<long long>() >= 0);
        else if constexpr (std::is_floating_point_v<T>) ok = v.is_number();
        else if constexpr (std::is_same_v<T, std::string>) ok = v.is_string();
        else if constexpr (std::is_same_v<T, std::vector<double>>) {
            ok = v.is_array();
            if (ok)
                for (const auto& x : v) ok = ok && x.is_number();
        }
        if (!ok) {
            errors_.push_back("field '" + std::string(key) + "' in " + where_ + " has the wrong type");
            return;
        }
        out = v.get<T>();
    }

    void positive(const char* key, double value) {
        if (!(value > 0.0)) errors_.push_back("field '" + std::string(key) + "' in " + where_ + " must be positive");
    }

private:
    const json& obj_;
    std::string where_;
    std::vector<std::string>& errors_;
};

const char* branching_name(Branching b) { return b == Branching::Binomial ? "binomial" : "gauss_hermite"; }
const char* basis_name(BasisKind k) { return k == BasisKind::LinearSpline ? "linear_spline" : "polynomial"; }

} // namespace

SimulationConfig RunConfig::fit_config() const {
    SimulationConfig fit = engine;
    if (lapse.fit_paths > 0) fit.num_paths = lapse.fit_paths;
    fit.seed = lapse.fit_seed != 0 ? lapse.fit_seed : splitmix64(engine.seed);
    if (fit.seed == engine.seed) fit.seed ^= 1;
    return fit;
}

RunConfig parse_run_config(const json& doc) {
    const ContractConfig base = contract_from_json(doc, {"engine", "solver", "lapse", "surface", "oracle"});
    RunConfig cfg;
    cfg.contract = base.contract;
    cfg.market = base.market;
    cfg.solver.confirm_paths = 1000000;

    std::vector<std::string> errors;
    const auto v = validate(cfg.contract, cfg.market);
    errors = v.errors;
    cfg.warnings = v.warnings;

    if (doc.contains("engine")) {
        Reader r(doc.at("engine"), "engine", errors);
        if (r.check_keys({"steps_per_year", "num_paths", "seed", "antithetic"})) {
            r.get("steps_per_year", cfg.engine.steps_per_year);
            r.get("num_paths", cfg.engine.num_paths);
            r.get("seed", cfg.engine.seed);
            r.get("antithetic", cfg.engine.antithetic);
        }
    }
    if (cfg.engine.steps_per_year <= 0) errors.push_back("engine.steps_per_year must be positive");
    if (cfg.engine.num_paths == 0) errors.push_back("engine.num_paths must be positive");
    if (cfg.engine.antithetic && cfg.engine.num_paths % 2 != 0)
        errors.push_back("engine.num_paths must be even with antithetic sampling");

    if (doc.contains("solver")) {
        Reader r(doc.at("solver"), "solver", errors);
        if (r.check_keys({"tol_value", "max_iter", "initial_upper", "max_doublings", "alpha_tolerance",
                          "confirm_paths", "lapse_model"})) {
            r.get("tol_value", cfg.solver.tol_value);
            r.get("max_iter", cfg.solver.max_iter);
            r.get("initial_upper", cfg.solver.initial_upper);
            r.get("max_doublings", cfg.solver.max_doublings);
            r.get("alpha_tolerance", cfg.solver.alpha_tolerance);
            r.get("confirm_paths", cfg.solver.confirm_paths);
            r.get("lapse_model", cfg.solver.lapse_model);
            r.positive("initial_upper", cfg.solver.initial_upper);
        }
    }
    if (cfg.solver.tol_value <= 0.0) cfg.solver.tol_value = cfg.contract.premium * 5e-4;
    if (cfg.solver.max_iter <= 0) errors.push_back("solver.max_iter must be positive");

    if (doc.contains("lapse")) {
        Reader r(doc.at("lapse"), "lapse", errors);
        if (r.check_keys({"fit_paths", "fit_seed", "exercise_stride", "basis"})) {
            r.get("fit_paths", cfg.lapse.fit_paths);
            r.get("fit_seed", cfg.lapse.fit_seed);
            r.get("exercise_stride", cfg.lapse.options.exercise_stride);
            if (doc.at("lapse").contains("basis")) {
                Reader b(doc.at("lapse").at("basis"), "lapse.basis", errors);
                if (b.check_keys({"kind", "degree", "guarantee_kink", "knots"})) {
                    std::string kind = basis_name(cfg.lapse.options.basis.kind);
                    b.get("kind", kind);
                    if (kind == "linear_spline") cfg.lapse.options.basis.kind = BasisKind::LinearSpline;
                    else if (kind == "polynomial") cfg.lapse.options.basis.kind = BasisKind::Polynomial;
                    else errors.push_back("lapse.basis.kind must be 'linear_spline' or 'polynomial'");
                    b.get("degree", cfg.lapse.options.basis.degree);
                    b.get("guarantee_kink", cfg.lapse.options.basis.guarantee_kink);
                    b.get("knots", cfg.lapse.options.basis.knots);
                }
            }
        }
    }
    if (cfg.lapse.options.exercise_stride <= 0) errors.push_back("lapse.exercise_stride must be positive");
    if (cfg.lapse.options.basis.degree < 0 || cfg.lapse.options.basis.knots < 0 ||
        cfg.lapse.options.basis.max_size() > 64)
        errors.push_back("lapse.basis is too large or negative");
    cfg.solver.lapse_fit_seed = cfg.lapse.fit_seed;

    if (doc.contains("surface")) {
        Reader r(doc.at("surface"), "surface", errors);
        if (r.check_keys({"t_points", "w_points"})) {
            r.get("t_points", cfg.surface.t_points);
            r.get("w_points", cfg.surface.w_points);
        }
    }
    if (cfg.surface.t_points.empty() && cfg.contract.withdrawal_rate > 0.0) {
        const double t_max = cfg.contract.maturity();
        cfg.surface.t_points = {0.0, 0.25 * t_max, 0.5 * t_max, 0.75 * t_max};
    }
    for (double t : cfg.surface.t_points)
        if (!(t >= 0.0 && t <= cfg.contract.maturity())) errors.push_back("surface.t_points must lie in [0, T]");
    for (double w : cfg.surface.w_points)
        if (!(w > 0.0)) errors.push_back("surface.w_points must be positive");

    if (doc.contains("oracle")) {
        Reader r(doc.at("oracle"), "oracle", errors);
        if (r.check_keys({"grid_points", "branching", "hermite_nodes", "steps_per_year", "with_lapse",
                          "exercise_stride"})) {
            r.get("grid_points", cfg.oracle.tree.grid_points);
            std::string branching = branching_name(cfg.oracle.tree.branching);
            r.get("branching", branching);
            if (branching == "binomial") cfg.oracle.tree.branching = Branching::Binomial;
            else if (branching == "gauss_hermite") cfg.oracle.tree.branching = Branching::GaussHermite;
            else errors.push_back("oracle.branching must be 'binomial' or 'gauss_hermite'");
            r.get("hermite_nodes", cfg.oracle.tree.hermite_nodes);
            r.get("steps_per_year", cfg.oracle.steps_per_year);
            r.get("with_lapse", cfg.oracle.with_lapse);
            r.get("exercise_stride", cfg.oracle.tree.exercise_stride);
        }
    }
    if (cfg.oracle.steps_per_year == 0) cfg.oracle.steps_per_year = cfg.engine.steps_per_year;
    if (cfg.oracle.steps_per_year < 0) errors.push_back("oracle.steps_per_year must be positive");
    if (cfg.oracle.tree.grid_points < 3) errors.push_back("oracle.grid_points must be at least 3");
    if (cfg.oracle.tree.hermite_nodes < 2) errors.push_back("oracle.hermite_nodes must be at least 2");

    if (!errors.empty()) throw ValidationError(std::move(errors));
    return cfg;
}

json echo(const RunConfig& cfg) {
    json doc = cfg.contract;
    doc.update(json(cfg.market));
    doc["engine"] = {{"steps_per_year", cfg.engine.steps_per_year},
                     {"num_paths", cfg.engine.num_paths},
                     {"seed", cfg.engine.seed},
                     {"antithetic", cfg.engine.antithetic}};
    doc["solver"] = {{"tol_value", cfg.solver.tol_value},
                     {"max_iter", cfg.solver.max_iter},
                     {"initial_upper", cfg.solver.initial_upper},
                     {"max_doublings", cfg.solver.max_doublings},
                     {"alpha_tolerance", cfg.solver.alpha_tolerance},
                     {"confirm_paths", cfg.solver.confirm_paths},
                     {"lapse_model", cfg.solver.lapse_model}};
    const auto& basis = cfg.lapse.options.basis;
    doc["lapse"] = {{"fit_paths", cfg.lapse.fit_paths},
                    {"fit_seed", cfg.lapse.fit_seed},
                    {"exercise_stride", cfg.lapse.options.exercise_stride},
                    {"basis",
                     {{"kind", basis_name(basis.kind)},
                      {"degree", basis.degree},
                      {"guarantee_kink", basis.guarantee_kink},
                      {"knots", basis.knots}}}};
    doc["surface"] = {{"t_points", cfg.surface.t_points}, {"w_points", cfg.surface.w_points}};
    doc["oracle"] = {{"grid_points", cfg.oracle.tree.grid_points},
                     {"branching", branching_name(cfg.oracle.tree.branching)},
                     {"hermite_nodes", cfg.oracle.tree.hermite_nodes},
                     {"steps_per_year", cfg.oracle.steps_per_year},
                     {"with_lapse", cfg.oracle.with_lapse},
                     {"exercise_stride", cfg.oracle.tree.exercise_stride}};
    return doc;
}

} // namespace gmwb::cli
