#include "gmwb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "gmwb/account.hpp"

namespace gmwb {

double DeterministicSolution::account_value(double t) const {
    if (t >= tau) return 0.0;
    if (growth == 0.0) return std::max(0.0, premium - annual_withdrawal * t);
    const double floor = annual_withdrawal / growth;
    return std::max(0.0, (premium - floor) * std::exp(growth * t) + floor);
}

DeterministicSolution deterministic_value(const ContractSpec& spec, const MarketParams& market) {
    if (market.sigma != 0.0) throw std::invalid_argument("deterministic_value requires sigma = 0");
    require_valid(spec, market);
    const double r = market.r;
    const double alpha = spec.fee_rate;
    const double p = spec.premium;
    const double g = spec.annual_withdrawal();
    const double maturity = spec.maturity();
    const double m = r - alpha;

    DeterministicSolution s;
    s.premium = p;
    s.annual_withdrawal = g;
    s.growth = m;
    if (m == 0.0) {
        s.tau = p / g;
    } else if (g - m * p <= 0.0) {
        s.tau = std::numeric_limits<double>::infinity();
    } else {
        s.tau = std::log(g / (g - m * p)) / m;
    }
    s.tau_bar = std::min(s.tau, maturity);
    s.terminal_value = s.tau > maturity ? s.account_value(maturity) : 0.0;

    const double tb = s.tau_bar;
    if (m == 0.0) {
        s.fee_income = alpha * (p * annuity(r, tb) - g * (1.0 - std::exp(-r * tb) * (1.0 + r * tb)) / (r * r));
    } else {
        const double c = p - g / m;
        s.fee_income = c * -std::expm1(-alpha * tb) + alpha * (g / m) * annuity(r, tb);
    }
    s.v0 = g * annuity(r, maturity) + std::exp(-r * maturity) * s.terminal_value;
    s.u0 = std::exp(-r * tb) * g * annuity(r, maturity - tb) - s.fee_income;
    return s;
}

namespace {

struct Branch {
    double factor;
    double prob;
};

std::vector<Branch> branches(const MarketParams& market, double alpha, double dt, const TreeOptions& options,
                             double& q_out) {
    std::vector<Branch> out;
    if (options.branching == Branching::Binomial) {
        const double u = std::exp(market.sigma * std::sqrt(dt));
        const double d = 1.0 / u;
        const double q = (std::exp(market.r * dt) - d) / (u - d);
        if (!(q > 0.0 && q < 1.0))
            throw std::invalid_argument("binomial up-probability outside (0, 1); use a finer step or larger sigma");
        q_out = q;
        const double drag = std::exp(-alpha * dt);
        out.push_back({u * drag, q});
        out.push_back({d * drag, 1.0 - q});
        return out;
    }
    // Golub-Welsch for the probabilists' Hermite weight.
    const int n = options.hermite_nodes;
    if (n < 2) throw std::invalid_argument("need at least two Hermite nodes");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    const double drift = (market.r - alpha - 0.5 * market.sigma * market.sigma) * dt;
    const double vol = market.sigma * std::sqrt(dt);
    for (int i = 0; i < n; ++i) {
        const double v0 = eig.eigenvectors()(0, i);
        out.push_back({std::exp(drift + vol * eig.eigenvalues()(i)), v0 * v0});
    }
    q_out = 0.0;
    return out;
}

// Linear interpolation on a uniform grid [0, w_max]; linear extrapolation
// past the last point.
double interpolate(const std::vector<double>& values, double w_max, double x) {
    const std::size_t n = values.size();
    const double h = w_max / static_cast<double>(n - 1);
    double pos = x / h;
    std::size_t i = pos >= static_cast<double>(n - 1) ? n - 2 : static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return values[i] + frac * (values[i + 1] - values[i]);
}

} // namespace

TreeResult tree_value(const ContractSpec& spec, const MarketParams& market, int steps_per_year, bool with_lapse,
                      const TreeOptions& options) {
    require_valid(spec, market);
    if (options.grid_points < 3) throw std::invalid_argument("tree needs at least three grid points");
    if (options.exercise_stride <= 0) throw std::invalid_argument("exercise stride must be positive");
    const TimeGrid grid = TimeGrid::make(spec.maturity(), steps_per_year);
    const int n = grid.num_steps;
    const double dt = grid.dt();
    const double r = market.r;
    const double g_annual = spec.annual_withdrawal();
    const double withdrawal = g_annual * dt;
    const double fee_growth = std::expm1(spec.fee_rate * dt);
    const double step_discount = std::exp(-r * dt);

    TreeResult res;
    const auto br = branches(market, spec.fee_rate, dt, options, res.q);

    const auto points = static_cast<std::size_t>(options.grid_points);
    auto grid_max = [&](int i) {
        const double t = grid.time(i);
        return spec.premium * std::exp(std::max(0.0, r) * t + 5.0 * market.sigma * std::sqrt(t));
    };

    // Maturity: W_T is paid out uncharged.
    double w_max_next = grid_max(n);
    std::vector<double> v_lapse(points), u_lapse(points, 0.0), v_nl(points), u_nl(points, 0.0);
    for (std::size_t g = 0; g < points; ++g) v_lapse[g] = v_nl[g] = w_max_next * g / (points - 1);

    std::vector<double> nv_lapse(points), nu_lapse(points), nv_nl(points), nu_nl(points);
    for (int i = n - 1; i >= 0; --i) {
        const double t = grid.time(i);
        const double w_max = grid_max(i);
        const double charge = spec.cdsc.charge(t);
        const bool can_exercise = with_lapse && (i % options.exercise_stride == 0) && charge < 1.0;
        const double triggered_value = g_annual * annuity_immediate(r, grid.time(n - i), steps_per_year);
        std::optional<double> boundary;

        for (std::size_t g = 0; g < points; ++g) {
            const double w = w_max * g / (points - 1);
            if (g == 0) {
                nv_lapse[g] = nu_lapse[g] = nv_nl[g] = nu_nl[g] = triggered_value;
                continue;
            }
            double cv_l = 0.0, cu_l = 0.0, cv_n = 0.0, cu_n = 0.0;
            for (const auto& b : br) {
                const auto step = account_step(w, b.factor, withdrawal, fee_growth);
                const double x = step.next_value;
                const double paid_by_rider = step.from_guarantee - step.fee;
                cv_l += b.prob * (withdrawal + interpolate(v_lapse, w_max_next, x));
                cu_l += b.prob * (paid_by_rider + interpolate(u_lapse, w_max_next, x));
                cv_n += b.prob * (withdrawal + interpolate(v_nl, w_max_next, x));
                cu_n += b.prob * (paid_by_rider + interpolate(u_nl, w_max_next, x));
            }
            cv_l *= step_discount;
            cu_l *= step_discount;
            nv_nl[g] = cv_n * step_discount;
            nu_nl[g] = cu_n * step_discount;

            const double proceeds = w * (1.0 - charge);
            if (can_exercise && proceeds > cv_l) {
                nv_lapse[g] = proceeds;
                nu_lapse[g] = -w * charge;
                if (!boundary) boundary = w;
            } else {
                nv_lapse[g] = cv_l;
                nu_lapse[g] = cu_l;
            }
        }
        for (std::size_t g = 1; g < points; ++g) {
            nv_lapse[g] = std::max(nv_lapse[g], nv_lapse[g - 1]);
            nv_nl[g] = std::max(nv_nl[g], nv_nl[g - 1]);
        }
        std::swap(v_lapse, nv_lapse);
        std::swap(u_lapse, nu_lapse);
        std::swap(v_nl, nv_nl);
        std::swap(u_nl, nu_nl);
        w_max_next = w_max;
        if (with_lapse && i % options.exercise_stride == 0) {
            res.boundary_times.push_back(t);
            res.boundary.push_back(boundary);
        }
    }
    std::reverse(res.boundary_times.begin(), res.boundary_times.end());
    std::reverse(res.boundary.begin(), res.boundary.end());

    // Step-0 grid ends exactly at P.
    const double at_premium = spec.premium;
    res.v0_nl = interpolate(v_nl, w_max_next, at_premium);
    res.u0_nl = interpolate(u_nl, w_max_next, at_premium);
    res.v0 = with_lapse ? interpolate(v_lapse, w_max_next, at_premium) : res.v0_nl;
    res.u0 = with_lapse ? interpolate(u_lapse, w_max_next, at_premium) : res.u0_nl;
    res.l0 = res.v0 - res.v0_nl;
    return res;
}

void to_json(nlohmann::json& j, const DeterministicSolution& s) {
    j = {{"tau", std::isfinite(s.tau) ? nlohmann::json(s.tau) : nlohmann::json("inf")},
         {"tau_bar", s.tau_bar},
         {"W_T", s.terminal_value},
         {"V0", s.v0},
         {"U0", s.u0},
         {"fee_income", s.fee_income}};
}

void to_json(nlohmann::json& j, const TreeResult& t) {
    nlohmann::json boundary = nlohmann::json::array();
    for (std::size_t i = 0; i < t.boundary.size(); ++i)
        boundary.push_back({{"t", t.boundary_times[i]},
                            {"critical_w", t.boundary[i] ? nlohmann::json(*t.boundary[i]) : nlohmann::json("none")}});
    j = {{"V0", t.v0}, {"U0", t.u0}, {"L0", t.l0}, {"V0_NL", t.v0_nl}, {"U0_NL", t.u0_nl}, {"q", t.q},
         {"boundary", boundary}};
}

} // namespace gmwb
