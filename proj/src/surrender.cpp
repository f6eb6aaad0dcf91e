#include "gmwb/surrender.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "gmwb/parallel.hpp"

namespace gmwb {

std::size_t basis_values(const BasisSpec& basis, double w, double premium, double remaining_guarantee,
                         std::span<const double> knots, std::span<double> out) {
    const double x = w / premium;
    if (basis.kind == BasisKind::LinearSpline) {
        out[0] = 1.0;
        out[1] = x;
        for (std::size_t i = 0; i < knots.size(); ++i) out[i + 2] = std::max(0.0, x - knots[i]);
        return knots.size() + 2;
    }
    double p = 1.0;
    for (int d = 0; d <= basis.degree; ++d) {
        out[static_cast<std::size_t>(d)] = p;
        p *= x;
    }
    if (!basis.guarantee_kink) return static_cast<std::size_t>(basis.degree) + 1;
    out[static_cast<std::size_t>(basis.degree) + 1] = w < remaining_guarantee ? x : 0.0;
    return static_cast<std::size_t>(basis.degree) + 2;
}

double StoppingPolicy::continuation(std::size_t date, double w) const {
    const auto& c = coefficients.at(date);
    if (c.empty()) return std::numeric_limits<double>::infinity();
    const double t = static_cast<double>(exercise_steps[date]) / steps_per_year;
    const double horizon = static_cast<double>(num_steps) / steps_per_year;
    double phi[64];
    const std::span<const double> kn = date < knots.size() ? std::span<const double>(knots[date]) : std::span<const double>();
    const std::size_t used = basis_values(basis, w, premium, annual_withdrawal * (horizon - t), kn, phi);
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(used, c.size()); ++i) s += c[i] * phi[i];
    return s;
}

bool StoppingPolicy::exercises(std::size_t date, double w, double charge) const {
    if (!(w > 0.0) || charge >= 1.0 || coefficients.at(date).empty()) return false;
    return w * (1.0 - charge) > continuation(date, w);
}

namespace {

struct ExerciseGrid {
    std::vector<int> steps;
    std::vector<int> date_of_step; // -1 when not an exercise date
    std::vector<double> charges;
};

ExerciseGrid exercise_grid(const ContractSpec& spec, const TimeGrid& grid, int stride) {
    if (stride <= 0) throw std::invalid_argument("exercise stride must be positive");
    ExerciseGrid g;
    g.date_of_step.assign(static_cast<std::size_t>(grid.num_steps) + 1, -1);
    for (int k = 0; k < grid.num_steps; k += stride) {
        g.date_of_step[k] = static_cast<int>(g.steps.size());
        g.steps.push_back(k);
        g.charges.push_back(spec.cdsc.charge(grid.time(k)));
    }
    return g;
}

// G a(t_k): value at issue of the withdrawals paid up to and including t_k.
std::vector<double> cumulative_withdrawals(const ContractSpec& spec, double r, const TimeGrid& grid) {
    std::vector<double> a(static_cast<std::size_t>(grid.num_steps) + 1);
    for (int k = 0; k <= grid.num_steps; ++k)
        a[k] = spec.annual_withdrawal() * annuity_immediate(r, grid.time(k), grid.steps_per_year);
    return a;
}

Estimate to_estimate(const SampleStats& s) { return {s.mean, s.std_error}; }

// Knots at the i / (K + 1) quantiles of the live accounts, in units of P,
// without duplicates and strictly below the largest account so every hinge
// has support.
std::vector<double> spline_knots(int count, const double* states, const std::vector<std::size_t>& rows,
                                 double premium) {
    std::vector<double> x;
    x.reserve(rows.size());
    for (std::size_t j : rows) x.push_back(states[j] / premium);
    std::sort(x.begin(), x.end());
    std::vector<double> knots;
    for (int i = 1; i <= count; ++i) {
        const auto at = static_cast<std::size_t>(static_cast<double>(i) * static_cast<double>(x.size()) / (count + 1));
        const double c = x[std::min(at, x.size() - 1)];
        if (c < x.back() && c > x.front() && (knots.empty() || c > knots.back())) knots.push_back(c);
    }
    return knots;
}

// Least-squares fit of targets on the basis. When the kink feature carries no
// information at this date (every live account above, or every one below, the
// remaining guarantee) it is dropped and its coefficient left at zero.
bool least_squares(const BasisSpec& basis, const double* states, const std::vector<std::size_t>& rows,
                   const std::vector<double>& targets, double premium, double remaining,
                   const std::vector<double>& knots, std::vector<double>& coef) {
    std::vector<double> phi(basis.max_size());
    const std::size_t p = basis_values(basis, premium, premium, remaining, knots, phi);
    auto attempt = [&](std::size_t cols) {
        if (rows.size() < cols) return false;
        const auto rows_n = static_cast<Eigen::Index>(rows.size());
        const auto cols_n = static_cast<Eigen::Index>(cols);
        Eigen::MatrixXd x(rows_n, cols_n);
        Eigen::VectorXd y(rows_n);
        for (Eigen::Index i = 0; i < rows_n; ++i) {
            basis_values(basis, states[rows[static_cast<std::size_t>(i)]], premium, remaining, knots, phi);
            for (Eigen::Index c = 0; c < cols_n; ++c) x(i, c) = phi[static_cast<std::size_t>(c)];
            y(i) = targets[static_cast<std::size_t>(i)];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        if (qr.rank() < cols_n) return false;
        const Eigen::VectorXd beta = qr.solve(y);
        coef.assign(p, 0.0);
        for (Eigen::Index c = 0; c < cols_n; ++c) coef[static_cast<std::size_t>(c)] = beta(c);
        return true;
    };
    if (attempt(p)) return true;
    return basis.kind == BasisKind::Polynomial && basis.guarantee_kink && attempt(p - 1);
}

} // namespace

StoppingPolicy fit_policy(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim,
                          const LapseOptions& options) {
    require_valid(spec, market);
    if (options.basis.degree < 0 || options.basis.knots < 0 || options.basis.max_size() > 64)
        throw std::invalid_argument("unsupported basis size");
    const TimeGrid grid = contract_grid(spec, sim.steps_per_year);
    const int n = grid.num_steps;
    const std::size_t m = sim.num_paths;
    const auto ex = exercise_grid(spec, grid, options.exercise_stride);
    const std::size_t dates = ex.steps.size();
    const auto discount = discount_factors(market.r, grid);
    const auto cum = cumulative_withdrawals(spec, market.r, grid);
    const double withdrawal = spec.annual_withdrawal() * grid.dt();
    const double fee_growth = std::expm1(spec.fee_rate * grid.dt());

    StoppingPolicy policy;
    policy.steps_per_year = sim.steps_per_year;
    policy.num_steps = n;
    policy.premium = spec.premium;
    policy.annual_withdrawal = spec.annual_withdrawal();
    policy.basis = options.basis;
    policy.exercise_stride = options.exercise_stride;
    policy.exercise_steps = ex.steps;
    policy.coefficients.assign(dates, {});
    policy.knots.assign(dates, {});
    policy.fit_seed = sim.seed;
    policy.fit_paths = m;
    if (m < 10000) policy.warnings.push_back("fewer than 10^4 fitting paths; regression noise may be large");
    if (spec.cdsc.charge(0.0) == 0.0)
        policy.warnings.push_back("surrender charge at issue is zero: fair fee is not unique");

    // Account values at exercise dates (date-major) and at maturity.
    const PathSet paths(market, spec.fee_rate, grid, m, sim.seed, sim.antithetic);
    std::vector<double> states(dates * m);
    std::vector<double> terminal(m);
    parallel_for_chunks(m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            auto cursor = paths.cursor(j);
            double w = spec.premium;
            for (int k = 0; k < n; ++k) {
                if (const int d = ex.date_of_step[k]; d >= 0) states[static_cast<std::size_t>(d) * m + j] = w;
                if (w > 0.0) w = account_step(w, cursor.next_factor(), withdrawal, fee_growth).next_value;
            }
            terminal[j] = w;
        }
    });

    // Realized policy: stopping step and value at issue of the stopping proceeds.
    std::vector<int> stop_step(m, n);
    std::vector<double> stop_value(m);
    for (std::size_t j = 0; j < m; ++j) stop_value[j] = discount[n] * terminal[j];

    std::vector<std::size_t> rows;
    std::vector<double> targets;
    for (std::size_t d = dates; d-- > 0;) {
        const int k = ex.steps[d];
        const double charge = ex.charges[d];
        if (charge >= 1.0) continue;
        const double* w = &states[d * m];
        const double remaining = spec.annual_withdrawal() * (grid.horizon() - grid.time(k));

        rows.clear();
        targets.clear();
        double w_min = std::numeric_limits<double>::infinity();
        double w_max = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (!(w[j] > 0.0)) continue;
            rows.push_back(j);
            targets.push_back((cum[stop_step[j]] - cum[k] + stop_value[j]) / discount[k]);
            w_min = std::min(w_min, w[j]);
            w_max = std::max(w_max, w[j]);
        }
        if (rows.empty()) continue;

        std::vector<double> coef;
        std::vector<double> knots;
        if (options.basis.kind == BasisKind::LinearSpline && w_min < w_max)
            knots = spline_knots(options.basis.knots, w, rows, spec.premium);
        if (w_min == w_max) {
            // Every live path sits at the same state (issue date): the
            // conditional expectation is the sample mean.
            coef.assign(1, pairwise_sum(targets) / static_cast<double>(targets.size()));
        } else if (!least_squares(options.basis, w, rows, targets, spec.premium, remaining, knots, coef)) {
            std::ostringstream msg;
            msg << "singular regression at t=" << grid.time(k) << " (" << rows.size()
                << " live paths); no surrender at this date";
            policy.warnings.push_back(msg.str());
            continue;
        }
        policy.coefficients[d] = coef;
        policy.knots[d] = knots;

        for (std::size_t j : rows) {
            if (policy.exercises(d, w[j], charge)) {
                stop_step[j] = k;
                stop_value[j] = discount[k] * w[j] * (1.0 - charge);
            }
        }
    }

    std::vector<double> realized(m);
    for (std::size_t j = 0; j < m; ++j) realized[j] = cum[stop_step[j]] + stop_value[j];
    policy.in_sample_value = pairwise_sum(realized) / static_cast<double>(m);
    return policy;
}

LapseReport price_with_lapse(const ContractSpec& spec, const MarketParams& market, const SimulationConfig& sim,
                             const StoppingPolicy& policy) {
    require_valid(spec, market);
    if (sim.seed == policy.fit_seed)
        throw std::invalid_argument("pricing seed equals the policy fitting seed; use an independent seed");
    const TimeGrid grid = contract_grid(spec, sim.steps_per_year);
    if (policy.steps_per_year != grid.steps_per_year || policy.num_steps != grid.num_steps ||
        policy.premium != spec.premium || policy.annual_withdrawal != spec.annual_withdrawal())
        throw std::invalid_argument("stopping policy was fitted for a different contract or grid");

    const int n = grid.num_steps;
    const std::size_t m = sim.num_paths;
    const auto ex = exercise_grid(spec, grid, policy.exercise_stride);
    if (ex.steps != policy.exercise_steps) throw std::invalid_argument("stopping policy exercise dates do not match");
    const auto discount = discount_factors(market.r, grid);
    const auto cum = cumulative_withdrawals(spec, market.r, grid);
    const double g_annual = spec.annual_withdrawal();
    const double withdrawal = g_annual * grid.dt();
    const double fee_growth = std::expm1(spec.fee_rate * grid.dt());
    const PathSet paths(market, spec.fee_rate, grid, m, sim.seed, sim.antithetic);

    std::vector<double> v_lapse(m), u_lapse(m), l_direct(m), v_nl(m), u_nl(m), stop_time(m, -1.0);
    parallel_for_chunks(m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            auto cursor = paths.cursor(j);
            double w = spec.premium;
            double pv_fees = 0.0;
            int stop = -1;
            double stop_w = 0.0;
            double fees_before_stop = 0.0;
            int trig = -1;
            double pv_shortfall = 0.0;
            for (int k = 0; k < n; ++k) {
                if (stop < 0) {
                    if (const int d = ex.date_of_step[k]; d >= 0 && policy.exercises(d, w, ex.charges[d])) {
                        stop = k;
                        stop_w = w;
                        fees_before_stop = pv_fees;
                    }
                }
                const auto step = account_step(w, cursor.next_factor(), withdrawal, fee_growth);
                pv_fees += discount[k + 1] * step.fee;
                w = step.next_value;
                if (w == 0.0) {
                    trig = k + 1;
                    pv_shortfall = discount[k + 1] * step.from_guarantee;
                    break;
                }
            }
            double guarantee = 0.0;
            if (trig >= 0)
                guarantee = pv_shortfall + discount[trig] * g_annual *
                                               annuity_immediate(market.r, grid.time(n - trig), grid.steps_per_year);
            v_nl[j] = cum[n] + discount[n] * w;
            u_nl[j] = guarantee - pv_fees;
            if (stop >= 0) {
                const double charge = spec.cdsc.charge(grid.time(stop));
                const double proceeds = discount[stop] * stop_w;
                v_lapse[j] = cum[stop] + proceeds * (1.0 - charge);
                u_lapse[j] = -fees_before_stop - proceeds * charge;
                l_direct[j] = (pv_fees - fees_before_stop) - guarantee - proceeds * charge;
                stop_time[j] = grid.time(stop);
            } else {
                v_lapse[j] = v_nl[j];
                u_lapse[j] = u_nl[j];
                l_direct[j] = 0.0;
            }
        }
    });

    std::vector<double> l_values(m), res_split(m), res_three(m), res_l(m);
    std::size_t exercised = 0;
    std::vector<double> times;
    for (std::size_t j = 0; j < m; ++j) {
        l_values[j] = v_lapse[j] - v_nl[j];
        res_split[j] = v_lapse[j] - spec.premium - u_lapse[j];
        res_three[j] = v_lapse[j] - spec.premium - u_nl[j] - l_direct[j];
        res_l[j] = l_direct[j] - l_values[j];
        if (stop_time[j] >= 0.0) {
            ++exercised;
            times.push_back(stop_time[j]);
        }
    }

    const bool anti = sim.antithetic;
    LapseReport r;
    r.v0_lapse = to_estimate(summarize(v_lapse, anti));
    r.u0_lapse = to_estimate(summarize(u_lapse, anti));
    r.l0_direct = to_estimate(summarize(l_direct, anti));
    r.l0_from_values = to_estimate(summarize(l_values, anti));
    r.v0_nl = to_estimate(summarize(v_nl, anti));
    r.u0_nl = to_estimate(summarize(u_nl, anti));
    r.residual_value_split = to_estimate(summarize(res_split, anti));
    r.residual_three_way = to_estimate(summarize(res_three, anti));
    r.residual_lapse_option = to_estimate(summarize(res_l, anti));
    r.exercised_fraction = static_cast<double>(exercised) / static_cast<double>(m);
    r.mean_exercise_time = times.empty() ? 0.0 : pairwise_sum(times) / static_cast<double>(times.size());
    r.num_paths = m;
    r.seed = sim.seed;
    r.fit_seed = policy.fit_seed;
    return r;
}

std::vector<BoundaryPoint> exercise_boundary(const StoppingPolicy& policy, const ContractSpec& spec) {
    std::vector<BoundaryPoint> out;
    const double premium = policy.premium;
    const double w_hi = 20.0 * premium;
    const int scan = 4000;
    for (std::size_t d = 0; d < policy.exercise_steps.size(); ++d) {
        BoundaryPoint bp;
        bp.t = static_cast<double>(policy.exercise_steps[d]) / policy.steps_per_year;
        const double charge = spec.cdsc.charge(bp.t);
        double prev = 0.0;
        for (int i = 1; i <= scan; ++i) {
            const double w = w_hi * i / scan;
            if (policy.exercises(d, w, charge)) {
                // Refine between the last non-exercise point and w.
                double lo = prev, hi = w;
                for (int it = 0; it < 80 && hi - lo > 1e-12 * premium; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (policy.exercises(d, mid, charge) ? hi : lo) = mid;
                }
                bp.critical_value = hi;
                break;
            }
            prev = w;
        }
        out.push_back(bp);
    }
    return out;
}

void write_boundary_csv(std::ostream& out, const std::vector<BoundaryPoint>& boundary) {
    out << "t,critical_w\n" << std::setprecision(12);
    for (const auto& b : boundary) {
        out << b.t << ',';
        if (b.critical_value) out << *b.critical_value;
        else out << "none";
        out << '\n';
    }
}

void to_json(nlohmann::json& j, const BoundaryPoint& b) {
    j = {{"t", b.t}, {"critical_w", b.critical_value ? nlohmann::json(*b.critical_value) : nlohmann::json("none")}};
}

void to_json(nlohmann::json& j, const StoppingPolicy& p) {
    j = {{"steps_per_year", p.steps_per_year},
         {"num_steps", p.num_steps},
         {"premium", p.premium},
         {"annual_withdrawal", p.annual_withdrawal},
         {"basis",
          {{"kind", p.basis.kind == BasisKind::LinearSpline ? "linear_spline" : "polynomial"},
           {"degree", p.basis.degree},
           {"guarantee_kink", p.basis.guarantee_kink},
           {"knots", p.basis.knots}}},
         {"exercise_stride", p.exercise_stride},
         {"exercise_steps", p.exercise_steps},
         {"coefficients", p.coefficients},
         {"knots", p.knots},
         {"fit_seed", p.fit_seed},
         {"fit_paths", p.fit_paths},
         {"in_sample_value", p.in_sample_value},
         {"warnings", p.warnings}};
}

void from_json(const nlohmann::json& j, StoppingPolicy& p) {
    j.at("steps_per_year").get_to(p.steps_per_year);
    j.at("num_steps").get_to(p.num_steps);
    j.at("premium").get_to(p.premium);
    j.at("annual_withdrawal").get_to(p.annual_withdrawal);
    const auto& basis = j.at("basis");
    const auto kind = basis.at("kind").get<std::string>();
    if (kind == "linear_spline") p.basis.kind = BasisKind::LinearSpline;
    else if (kind == "polynomial") p.basis.kind = BasisKind::Polynomial;
    else throw std::invalid_argument("unknown basis kind '" + kind + "'");
    basis.at("degree").get_to(p.basis.degree);
    basis.at("guarantee_kink").get_to(p.basis.guarantee_kink);
    basis.at("knots").get_to(p.basis.knots);
    j.at("exercise_stride").get_to(p.exercise_stride);
    j.at("exercise_steps").get_to(p.exercise_steps);
    j.at("coefficients").get_to(p.coefficients);
    j.at("knots").get_to(p.knots);
    j.at("fit_seed").get_to(p.fit_seed);
    j.at("fit_paths").get_to(p.fit_paths);
    j.at("in_sample_value").get_to(p.in_sample_value);
    if (j.contains("warnings")) j.at("warnings").get_to(p.warnings);
    if (p.coefficients.size() != p.exercise_steps.size() || p.knots.size() != p.exercise_steps.size())
        throw std::invalid_argument("policy coefficient table does not match its exercise dates");
}

void to_json(nlohmann::json& j, const LapseReport& r) {
    j = {{"V0_lapse", r.v0_lapse},
         {"U0_lapse", r.u0_lapse},
         {"L0_direct", r.l0_direct},
         {"L0_from_values", r.l0_from_values},
         {"V0_NL", r.v0_nl},
         {"U0_NL", r.u0_nl},
         {"residual_V_W_U", r.residual_value_split},
         {"residual_V_W_UNL_L", r.residual_three_way},
         {"residual_L", r.residual_lapse_option},
         {"exercised_fraction", r.exercised_fraction},
         {"mean_exercise_time", r.mean_exercise_time},
         {"num_paths", r.num_paths},
         {"seed", r.seed},
         {"fit_seed", r.fit_seed}};
}

} // namespace gmwb
