#include "oracle/levels_oracle.hpp"
#include "support.hpp"
#include "tariffcge/archive.hpp"
#include "tariffcge/solver.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace tariffcge;
using testsupport::rel_err;

namespace {

EconomyCalibration fixture(const std::string& name) { return read_archive(std::string(FIXTURE_DIR) + "/" + name + "/calibration.json"); }

void require_identity(const EconomyCalibration& c, ModelVariant v)
{
    const auto eq = solve_equilibrium(c, c.baseline_schedule(), v);
    const auto base_rev = baseline_revenue(c);
    for (std::size_t i = 0; i < c.num_regions(); ++i) {
        REQUIRE(std::abs(eq.wage_hats[i] - 1.0) < 1e-10);
        REQUIRE(std::abs(eq.welfare_hat[i] - 1.0) < 1e-10);
        REQUIRE(std::abs(eq.aggregate_price_hats[i] - 1.0) < 1e-10);
        REQUIRE(std::abs(eq.tariff_revenue_cf[i] - base_rev[i]) < 1e-10 * std::max(1.0, base_rev[i]));
        for (std::size_t s = 0; s < c.num_sectors(); ++s) {
            REQUIRE(std::abs(eq.price_index_hats(i, s) - 1.0) < 1e-10);
            REQUIRE(std::abs(eq.cost_hats(i, s) - 1.0) < 1e-10);
        }
    }
}

}  // namespace

TEST_CASE("identity counterfactual leaves every hat at one", "[solver]")
{
    require_identity(fixture("three_region"), ModelVariant::full);
    require_identity(fixture("world17"), ModelVariant::full);
}

TEST_CASE("no-IO identity holds after rebasing onto the no-IO equilibrium", "[solver]")
{
    const auto c = rebase_to_equilibrium(fixture("three_region"), ModelVariant::no_io);
    require_identity(c, ModelVariant::no_io);
}

TEST_CASE("two-region solver agrees with the levels oracle", "[solver][oracle]")
{
    const std::array<std::array<double, 2>, 2> pi{{{0.85, 0.15}, {0.25, 0.75}}};
    const double theta = 4.0;
    const std::array<double, 2> wl{100.0, 60.0};
    auto c = testsupport::two_region_calibration(pi, theta, wl);
    oracle::TwoRegionEconomy e;
    e.pi = pi;
    e.theta = theta;
    e.labor = {wl[0], wl[1]};
    for (double t : {0.0, 5.0, 25.0, 50.0}) {
        CAPTURE(t);
        const auto eq = solve_equilibrium(c, testsupport::bilateral_schedule(2, 1, 0, 1, t), ModelVariant::no_io);
        const std::array<std::array<double, 2>, 2> tau{{{1.0, 1.0 + t / 100.0}, {1.0, 1.0}}};
        const auto o = oracle::solve(e, tau);
        for (int i = 0; i < 2; ++i) {
            REQUIRE(rel_err(eq.wage_hats[i], o.wage[i] / o.wage[0]) < 1e-6);
            REQUIRE(rel_err(eq.welfare_hat[i], o.welfare_hat[i]) < 1e-6);
            if (t == 0.0)
                REQUIRE(std::abs(eq.tariff_revenue_cf[i]) < 1e-9);
            else if (i == 0)
                REQUIRE(rel_err(eq.tariff_revenue_cf[i], o.revenue[i]) < 1e-6);
        }
    }
}

TEST_CASE("the numeraire wage stays at one", "[solver]")
{
    const auto c = fixture("three_region");
    auto s = c.baseline_schedule();
    s.tau(0, 1, 0) *= 1.3;
    const auto eq = solve_equilibrium(c, s, ModelVariant::full);
    REQUIRE(eq.wage_hats[c.numeraire_region] == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("a bilateral tariff raises home revenue and hurts the target", "[solver]")
{
    const auto c = fixture("three_region");
    auto s = c.baseline_schedule();
    s.tau(0, 1, 0) *= 1.2;
    const auto eq = solve_equilibrium(c, s, ModelVariant::full);
    REQUIRE(eq.tariff_revenue_cf[0] > baseline_revenue(c)[0]);
    REQUIRE(eq.welfare_hat[1] < 1.0);
    REQUIRE(eq.diagnostics.labor_residual < 1e-9);
}

TEST_CASE("hat changes compose through a rebase", "[solver]")
{
    const auto c = fixture("three_region");
    auto s1 = c.baseline_schedule();
    s1.tau(0, 1, 0) *= 1.15;
    auto s2 = s1;
    s2.tau(1, 0, 0) *= 1.10;
    SolveOptions tight;
    tight.wage_tol = 1e-13;
    tight.price_tol = 1e-14;
    const auto eq1 = solve_equilibrium(c, s1, ModelVariant::full, tight);
    const auto rebased = rebase_to_equilibrium(c, eq1);
    const auto two_step = solve_equilibrium(rebased, s2, ModelVariant::full, tight);
    const auto direct = solve_equilibrium(c, s2, ModelVariant::full, tight);
    for (std::size_t i = 0; i < c.num_regions(); ++i) {
        REQUIRE(rel_err(eq1.wage_hats[i] * two_step.wage_hats[i], direct.wage_hats[i]) < 1e-9);
        REQUIRE(rel_err(two_step.tariff_revenue_cf[i], direct.tariff_revenue_cf[i]) < 1e-8);
    }
}

TEST_CASE("solutions do not depend on the warm start", "[solver]")
{
    const auto c = fixture("world17");
    auto s = c.baseline_schedule();
    for (std::size_t j = 1; j < c.num_regions(); ++j)
        for (std::size_t k = 0; k < c.num_sectors(); ++k)
            if (c.sectors[k].tariffable) s.tau(0, j, k) *= 1.25;
    const auto a = solve_equilibrium(c, s, ModelVariant::full);
    SolveOptions warm;
    warm.initial_wages.assign(c.num_regions(), 1.02);
    const auto b = solve_equilibrium(c, s, ModelVariant::full, warm);
    for (std::size_t i = 0; i < c.num_regions(); ++i) REQUIRE(rel_err(a.wage_hats[i], b.wage_hats[i]) < 1e-8);
}

TEST_CASE("welfare in currency scales by GDP and kappa", "[solver]")
{
    const auto c = fixture("three_region");
    auto eq = solve_equilibrium(c, c.baseline_schedule(), ModelVariant::full);
    eq.welfare_hat = {1.01, 0.98, 1.0};
    const double expect = 0.01 * c.gdp(0) * c.report_scale - 0.02 * c.gdp(1) * c.report_scale;
    REQUIRE(welfare_in_currency(eq, c, {0, 1}) == Catch::Approx(expect).epsilon(1e-12));
    REQUIRE_THROWS_AS(welfare_in_currency(eq, c, {}), InputError);
    REQUIRE_THROWS_AS(welfare_in_currency(eq, c, {7}), InputError);
}

TEST_CASE("a uniform import tariff averages to itself", "[solver]")
{
    const auto c = fixture("world17");
    TariffSchedule s(c.num_regions(), c.num_sectors());
    for (std::size_t j = 1; j < c.num_regions(); ++j)
        for (std::size_t k = 0; k < c.num_sectors(); ++k)
            if (c.sectors[k].tariffable) s.tau(0, j, k) = 1.12;
    const auto eq = solve_equilibrium(c, s, ModelVariant::full);
    REQUIRE(trade_weighted_avg_tariff(eq, c, s, TradeSide::imports, 0) == Catch::Approx(12.0).epsilon(1e-12));
    REQUIRE(trade_weighted_avg_tariff(eq, c, s, TradeSide::exports, 0) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("malformed schedules are rejected", "[solver]")
{
    const auto c = fixture("three_region");
    auto s = c.baseline_schedule();
    s.tau(0, 1, 0) = 0.5;
    REQUIRE_THROWS_AS(solve_equilibrium(c, s, ModelVariant::full), InputError);
    auto serv = c.baseline_schedule();
    serv.tau(0, 1, 1) = 1.1;
    REQUIRE_THROWS_AS(solve_equilibrium(c, serv, ModelVariant::full), InputError);
    TariffSchedule wrong(2, 2);
    REQUIRE_THROWS_AS(solve_equilibrium(c, wrong, ModelVariant::full), InputError);
}

TEST_CASE("an iteration cap produces a solver error", "[solver]")
{
    const auto c = fixture("three_region");
    auto s = c.baseline_schedule();
    s.tau(0, 1, 0) *= 2.0;
    SolveOptions opt;
    opt.max_outer = 2;
    REQUIRE_THROWS_AS(solve_equilibrium(c, s, ModelVariant::full, opt), SolverError);
}
