#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gmwb/fair_fee.hpp"
#include "gmwb/oracle.hpp"
#include "gmwb/surrender.hpp"

using namespace gmwb;

namespace {

ContractSpec short_contract(double alpha) {
    ContractSpec c;
    c.premium = 100.0;
    c.withdrawal_rate = 0.5;
    c.fee_rate = alpha;
    c.cdsc = CdscSchedule({{1.0, 0.02}, {2.0, 0.01}});
    return c;
}

const MarketParams kMarket{0.05, 0.2, 0.0};

} // namespace

TEST_CASE("basis features") {
    double out[16];
    const std::vector<double> knots{0.5, 1.0};
    BasisSpec spline;
    CHECK(basis_values(spline, 80.0, 100.0, 0.0, knots, out) == 4);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 0.8);
    CHECK(out[2] == doctest::Approx(0.3));
    CHECK(out[3] == 0.0);
    BasisSpec poly{BasisKind::Polynomial, 3, true, 0};
    CHECK(poly.max_size() == 5);
    CHECK(basis_values(poly, 50.0, 100.0, 60.0, {}, out) == 5);
    CHECK(out[3] == 0.125);
    CHECK(out[4] == 0.5);
    basis_values(poly, 70.0, 100.0, 60.0, {}, out);
    CHECK(out[4] == 0.0);
    poly.guarantee_kink = false;
    CHECK(basis_values(poly, 70.0, 100.0, 60.0, {}, out) == 4);
}

TEST_CASE("a prohibitive charge means the option is never used") {
    auto c = short_contract(0.05);
    c.cdsc = CdscSchedule::no_lapse(c.maturity());
    const auto policy = fit_policy(c, kMarket, {12, 20000, 1, false});
    for (const auto& coef : policy.coefficients) CHECK(coef.empty());
    const auto r = price_with_lapse(c, kMarket, {12, 20000, 2, false}, policy);
    for (const auto& b : exercise_boundary(policy, c)) CHECK_FALSE(b.critical_value.has_value());
    CHECK(r.exercised_fraction == 0.0);
    CHECK(r.l0_direct.value == 0.0);
    CHECK(r.l0_from_values.value == 0.0);
    CHECK(r.v0_lapse.value == r.v0_nl.value);
}

TEST_CASE("free exit with an expensive rider: everyone leaves at issue") {
    // A non-increasing charge that is zero at issue is zero throughout.
    ContractSpec c;
    c.premium = 100.0;
    c.withdrawal_rate = 0.1;
    const SimulationConfig sim{12, 20000, 5, false};
    const double no_lapse_fee = solve_fair_fee(c, kMarket, sim).alpha;
    c.fee_rate = 0.06;
    REQUIRE(c.fee_rate > no_lapse_fee);
    const auto tree = tree_value(c, kMarket, 12, true);
    REQUIRE(tree.boundary[0].has_value());
    CHECK(tree.v0 == 100.0);

    const auto policy = fit_policy(c, kMarket, sim);
    REQUIRE(policy.coefficients[0].size() == 1);
    CHECK(policy.coefficients[0][0] < 100.0);
    bool warned = false;
    for (const auto& w : policy.warnings) warned = warned || w.find("not unique") != std::string::npos;
    CHECK(warned);
    const auto r = price_with_lapse(c, kMarket, {12, 20000, 6, false}, policy);
    CHECK(r.exercised_fraction == 1.0);
    CHECK(r.v0_lapse.value == 100.0);
    CHECK(r.v0_lapse.std_error == 0.0);
    CHECK(r.mean_exercise_time == 0.0);
    // At issue every account equals the premium, so the fitted continuation
    // is one number and the issue-date boundary sits at that number.
    const auto boundary = exercise_boundary(policy, c);
    REQUIRE(boundary[0].critical_value.has_value());
    CHECK(*boundary[0].critical_value == doctest::Approx(policy.coefficients[0][0]).epsilon(1e-9));
    CHECK(*boundary[0].critical_value < 100.0);
}

TEST_CASE("free exit just above the no-lapse fee keeps the holder in") {
    // Waiting keeps the later exits open, which is worth more than the
    // premium until the fee is well above the no-lapse fair fee.
    ContractSpec c;
    c.premium = 100.0;
    c.withdrawal_rate = 0.1;
    c.fee_rate = 0.02;
    const auto tree = tree_value(c, kMarket, 12, true);
    CHECK(tree.v0_nl < 100.0);
    CHECK(tree.v0 > 100.5);
    CHECK_FALSE(tree.boundary[0].has_value());
}

TEST_CASE("two-step contract against the lattice") {
    const auto c = short_contract(0.02);
    const auto tree = tree_value(c, kMarket, 2, true);
    const auto policy = fit_policy(c, kMarket, {2, 100000, 41, false});
    const auto r = price_with_lapse(c, kMarket, {2, 100000, 42, false}, policy);
    CHECK(r.v0_lapse.value <= tree.v0 + 3.0 * r.v0_lapse.std_error + 0.05);
    CHECK(r.v0_lapse.value >= tree.v0 - 3.0 * r.v0_lapse.std_error - 0.05);
    CHECK(std::fabs(r.v0_nl.value - tree.v0_nl) < 4.0 * r.v0_nl.std_error + 0.01);
}

TEST_CASE("out-of-sample decomposition") {
    const auto c = short_contract(0.02);
    const auto policy = fit_policy(c, kMarket, {12, 50000, 11, false});
    CHECK(policy.exercise_steps.size() == 24);
    CHECK(policy.fit_seed == 11);
    const auto r = price_with_lapse(c, kMarket, {12, 50000, 12, false}, policy);
    CHECK(r.exercised_fraction > 0.0);
    CHECK(r.exercised_fraction < 1.0);
    CHECK(r.l0_from_values.value > -3.0 * r.l0_from_values.std_error);
    CHECK(std::fabs(r.residual_value_split.value) < 4.0 * r.residual_value_split.std_error);
    CHECK(std::fabs(r.residual_lapse_option.value) < 4.0 * r.residual_lapse_option.std_error);
    CHECK(std::fabs(r.residual_three_way.value) < 4.0 * r.residual_three_way.std_error);
    CHECK(r.num_paths == 50000);
    CHECK(r.fit_seed == 11);

    CHECK_THROWS_AS(price_with_lapse(c, kMarket, {12, 1000, 11, false}, policy), std::invalid_argument);
    CHECK_THROWS_AS(price_with_lapse(c, kMarket, {52, 1000, 13, false}, policy), std::invalid_argument);
    auto other = c;
    other.premium = 200.0;
    CHECK_THROWS_AS(price_with_lapse(other, kMarket, {12, 1000, 13, false}, policy), std::invalid_argument);
}

TEST_CASE("policy persistence") {
    const auto c = short_contract(0.02);
    for (BasisKind kind : {BasisKind::LinearSpline, BasisKind::Polynomial}) {
        LapseOptions opt;
        opt.basis.kind = kind;
        opt.exercise_stride = 3;
        const auto policy = fit_policy(c, kMarket, {12, 20000, 3, false}, opt);
        CHECK(policy.exercise_steps == std::vector<int>{0, 3, 6, 9, 12, 15, 18, 21});
        const nlohmann::json doc = policy;
        const auto back = nlohmann::json::parse(doc.dump()).get<StoppingPolicy>();
        CHECK(nlohmann::json(back) == doc);
        const auto a = price_with_lapse(c, kMarket, {12, 5000, 4, false}, policy);
        const auto b = price_with_lapse(c, kMarket, {12, 5000, 4, false}, back);
        CHECK(a.v0_lapse.value == b.v0_lapse.value);
    }
    auto broken = nlohmann::json(fit_policy(c, kMarket, {12, 2000, 3, false}));
    broken["coefficients"].erase(0);
    CHECK_THROWS(broken.get<StoppingPolicy>());
}

TEST_CASE("exercise boundary") {
    const auto c = short_contract(0.03);
    const auto policy = fit_policy(c, kMarket, {12, 50000, 21, false});
    const auto boundary = exercise_boundary(policy, c);
    REQUIRE(boundary.size() == 24);
    int found = 0;
    for (std::size_t d = 1; d < boundary.size(); ++d) {
        if (!boundary[d].critical_value) continue;
        ++found;
        const double w = *boundary[d].critical_value;
        const double k = c.cdsc.charge(boundary[d].t);
        CHECK(policy.exercises(d, w, k));
        CHECK_FALSE(policy.exercises(d, w * (1.0 - 1e-9) - 1e-9, k));
    }
    CHECK(found > 0);
    std::ostringstream csv;
    write_boundary_csv(csv, boundary);
    CHECK(csv.str().rfind("t,critical_w\n0,", 0) == 0);
}

TEST_CASE("lapse option at the no-lapse fair fee") {
    ContractSpec c;
    c.premium = 100.0;
    c.withdrawal_rate = 0.1;
    c.cdsc = CdscSchedule::declining_eight_year();
    const auto solved = solve_fair_fee(c, kMarket, {12, 100000, 51, false});
    c.fee_rate = solved.alpha;
    const auto policy = fit_policy(c, kMarket, {12, 100000, 52, false});
    const auto r = price_with_lapse(c, kMarket, {12, 100000, 53, false}, policy);
    const double solve_err = std::hypot(solved.v0_at_solution.std_error, r.u0_nl.std_error);
    CHECK(std::fabs(r.u0_nl.value) < 3.0 * solve_err + solved.tol_value);
    CHECK(r.l0_direct.value > -3.0 * r.l0_direct.std_error);
    CHECK(std::fabs(r.residual_three_way.value) < 4.0 * r.residual_three_way.std_error);
    const double joint = std::hypot(r.u0_lapse.std_error, r.l0_direct.std_error);
    CHECK(std::fabs(r.u0_lapse.value - r.l0_direct.value) < 4.0 * joint);
}

TEST_CASE("cheaper surrender is worth at least as much") {
    const auto c = short_contract(0.02);
    auto cheap = c;
    cheap.cdsc = c.cdsc.scaled(0.25);
    auto dear = c;
    dear.cdsc = c.cdsc.scaled(3.0);
    const SimulationConfig fit{12, 50000, 31, false}, price{12, 50000, 32, false};
    const auto lc = price_with_lapse(cheap, kMarket, price, fit_policy(cheap, kMarket, fit));
    const auto ld = price_with_lapse(dear, kMarket, price, fit_policy(dear, kMarket, fit));
    CHECK(lc.l0_from_values.value > ld.l0_from_values.value);
    CHECK(lc.exercised_fraction > ld.exercised_fraction);
}

TEST_CASE("basis validation") {
    LapseOptions opt;
    opt.basis.knots = 100;
    CHECK_THROWS_AS(fit_policy(short_contract(0.02), kMarket, {12, 1000, 1, false}, opt), std::invalid_argument);
    const auto few = fit_policy(short_contract(0.02), kMarket, {12, 1000, 1, false});
    CHECK(few.warnings.size() >= 1);
}
