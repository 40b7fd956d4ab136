#include "support.hpp"
#include "tariffcge/archive.hpp"
#include "tariffcge/hill_climb.hpp"
#include "tariffcge/policy_scan.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace tariffcge;

namespace {

const EconomyCalibration& three_region()
{
    static const EconomyCalibration c = read_archive(std::string(FIXTURE_DIR) + "/three_region/calibration.json");
    return c;
}

ScanSpec bilateral(std::size_t partner, ResponseKind r = ResponseKind::none)
{
    ScanSpec s;
    s.home = 0;
    s.partners = {partner};
    s.response = r;
    s.rate_grid_pct = {0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60};
    return s;
}

}  // namespace

TEST_CASE("hill climb semantics", "[scan][hill]")
{
    ResponseGrid g;
    SECTION("finds the peak of a concave objective")
    {
        auto r = hill_climb(g, 0, [](int k) { return -(k - 137.0) * (k - 137.0); });
        REQUIRE(r.index == 137);
        r = hill_climb(g, 400, [](int k) { return -(k - 137.0) * (k - 137.0); });
        REQUIRE(r.index == 137);
    }
    SECTION("starting at the optimum costs three evaluations")
    {
        auto r = hill_climb(g, 42, [](int k) { return -std::abs(k - 42.0); });
        REQUIRE(r.index == 42);
        REQUIRE(r.evaluations == 3);
    }
    SECTION("a flat objective returns the start")
    {
        REQUIRE(hill_climb(g, 77, [](int) { return 1.0; }).index == 77);
    }
    SECTION("the lower neighbour wins a tie")
    {
        auto r = hill_climb(g, 10, [](int k) { return k == 10 ? 0.0 : 1.0; });
        REQUIRE(r.index == 9);
    }
    SECTION("bounds clamp the search")
    {
        REQUIRE(hill_climb(g, 600, [](int k) { return double(k); }).index == 500);
        REQUIRE(hill_climb(g, -3, [](int k) { return -double(k); }).index == 0);
        REQUIRE(g.snap(12.34) == 123);
        REQUIRE(g.snap(99.0) == 500);
    }
}

TEST_CASE("reference schedules", "[scan]")
{
    const auto& c = three_region();
    auto spec = bilateral(1);
    const auto bft = reference_schedule(c, spec);
    REQUIRE(bft.tau(0, 1, 0) == 1.0);
    REQUIRE(bft.tau(1, 0, 0) == 1.0);
    REQUIRE(bft.tau(0, 2, 0) == c.baseline_tariffs(0, 2, 0));
    spec.reference = ReferenceKind::multilateral_free_trade;
    const auto mft = reference_schedule(c, spec);
    REQUIRE(mft.tau(0, 2, 0) == 1.0);
    REQUIRE(mft.tau(2, 0, 0) == 1.0);
    REQUIRE(mft.tau(1, 2, 0) == c.baseline_tariffs(1, 2, 0));
    spec.reference = ReferenceKind::jan1_baseline;
    REQUIRE(reference_schedule(c, spec).tau == c.baseline_tariffs);
    spec.reference = ReferenceKind::custom;
    REQUIRE_THROWS_AS(validate_scan_spec(spec, c), InputError);
    auto bad = c.baseline_schedule();
    bad.tau(0, 1, 0) = 0.5;
    spec.custom_reference = bad;
    REQUIRE_THROWS_AS(reference_schedule(c, spec), InputError);
}

TEST_CASE("scan specs are validated", "[scan]")
{
    const auto& c = three_region();
    auto s = bilateral(1);
    s.partners = {0};
    REQUIRE_THROWS_AS(validate_scan_spec(s, c), InputError);
    s = bilateral(1);
    s.rate_grid_pct = {0, 10, 10};
    REQUIRE_THROWS_AS(validate_scan_spec(s, c), InputError);
    s = bilateral(1);
    s.rate_grid_pct = {-1, 10};
    REQUIRE_THROWS_AS(validate_scan_spec(s, c), InputError);
    s = bilateral(1);
    s.partners = {1, 2};
    s.accounting = Accounting::bilateral_only;
    REQUIRE_THROWS_AS(validate_scan_spec(s, c), InputError);
    REQUIRE_THROWS_AS(parse_response("tit_for_tat"), ConfigError);
    REQUIRE(parse_reference("jan1_baseline") == ReferenceKind::jan1_baseline);
}

TEST_CASE("the zero-rate point equals the reference", "[scan]")
{
    ScanContext ctx(three_region(), ModelVariant::full);
    const auto curve = bilateral_laffer(ctx, bilateral(1));
    const auto& p0 = curve.points.front();
    REQUIRE(p0.d_revenue == 0.0);
    REQUIRE(p0.d_welfare_home == 0.0);
    REQUIRE(p0.d_welfare_world == 0.0);
    REQUIRE_FALSE(p0.response_rate_pct.has_value());
}

TEST_CASE("bilateral curves have a welfare peak below the Laffer peak", "[scan]")
{
    ScanContext ctx(three_region(), ModelVariant::full);
    for (std::size_t j : {1u, 2u}) {
        const auto none = bilateral_laffer(ctx, bilateral(j));
        REQUIRE(none.points[1].d_revenue > 0.0);
        REQUIRE(none.peak_welfare_rate < none.peak_revenue_rate);
        REQUIRE(none.points[1].d_welfare_partner < 0.0);
        const auto eq = bilateral_laffer(ctx, bilateral(j, ResponseKind::equivalent));
        REQUIRE(eq.peak_welfare <= none.peak_welfare);
        REQUIRE(eq.peak_revenue < none.peak_revenue);
        for (const auto& p : eq.points) REQUIRE(*p.response_rate_pct == p.rate_pct);
    }
}

TEST_CASE("curves are identical at any thread budget", "[scan]")
{
    ScanContext a(three_region(), ModelVariant::full), b(three_region(), ModelVariant::full);
    const auto c1 = bilateral_laffer(a, bilateral(1, ResponseKind::equivalent), 1);
    const auto c4 = bilateral_laffer(b, bilateral(1, ResponseKind::equivalent), 4);
    REQUIRE(c1.points.size() == c4.points.size());
    for (std::size_t k = 0; k < c1.points.size(); ++k) {
        REQUIRE(c1.points[k].d_revenue == c4.points[k].d_revenue);
        REQUIRE(c1.points[k].d_welfare_home == c4.points[k].d_welfare_home);
        REQUIRE(c1.points[k].d_welfare_world == c4.points[k].d_welfare_world);
    }
}

TEST_CASE("the solve cache verifies full schedules", "[scan]")
{
    ScanContext ctx(three_region(), ModelVariant::full);
    auto s = three_region().baseline_schedule();
    const auto a = ctx.solve(s);
    const auto b = ctx.solve(s);
    REQUIRE(a == b);
    REQUIRE(ctx.solves() == 1);
    REQUIRE(ctx.hits() == 1);
    s.tau(0, 1, 0) = std::nextafter(s.tau(0, 1, 0), 2.0);
    const auto c = ctx.solve(s);
    REQUIRE(c != a);
    REQUIRE(ctx.solves() == 2);
}

TEST_CASE("best responses are local optima of the partner objective", "[scan]")
{
    const auto& calib = three_region();
    ScanContext ctx(calib, ModelVariant::full);
    auto s = calib.baseline_schedule();
    set_bilateral_rate(s, calib, 0, 1, 20.0);
    for (auto obj : {PartnerObjective::revenue, PartnerObjective::welfare}) {
        const auto br = best_response(ctx, s, 0, 1, obj, 0.0);
        auto value = [&](double r) {
            auto t = s;
            set_bilateral_rate(t, calib, 1, 0, r);
            return partner_objective_value(*ctx.solve(t), 1, obj);
        };
        const double here = value(br.rate_pct);
        if (br.grid_index > 0) REQUIRE(value(br.rate_pct - 0.1) <= here);
        if (br.grid_index < 500) REQUIRE(value(br.rate_pct + 0.1) <= here);
        REQUIRE(br.rate_pct > 0.0);
        const auto warm = best_response(ctx, s, 0, 1, obj, br.rate_pct);
        REQUIRE(warm.grid_index == br.grid_index);
        REQUIRE(warm.evaluations == 3);
    }
    REQUIRE_THROWS_AS(best_response(ctx, s, 0, 0, PartnerObjective::revenue, 0.0), InputError);
}

TEST_CASE("sequential responses report second-pass drift", "[scan]")
{
    const auto& calib = three_region();
    ScanContext ctx(calib, ModelVariant::full);
    auto s = calib.baseline_schedule();
    set_bilateral_rate(s, calib, 0, 1, 25.0);
    set_bilateral_rate(s, calib, 0, 2, 25.0);
    const auto one = sequential_optimal_responses(ctx, s, 0, {1, 2}, PartnerObjective::welfare);
    const auto two = sequential_optimal_responses(ctx, s, 0, {1, 2}, PartnerObjective::welfare, {}, true);
    REQUIRE(one.rates_pct == two.rates_pct);
    REQUIRE(two.first_pass_pct == one.rates_pct);
    const auto again = sequential_optimal_responses(ctx, s, 0, {1, 2}, PartnerObjective::welfare, one.rates_pct);
    double drift = 0.0;
    for (std::size_t m = 0; m < 2; ++m) drift = std::max(drift, std::abs(again.rates_pct[m] - one.rates_pct[m]));
    REQUIRE(two.second_pass_drift_pct == drift);
    REQUIRE(drift < 5.0);
    REQUIRE_THROWS_AS(sequential_optimal_responses(ctx, s, 0, {1, 2}, PartnerObjective::welfare, {1.0}), InputError);
}

TEST_CASE("cumulative scans start from zero and grow revenue", "[scan]")
{
    ScanContext ctx(three_region(), ModelVariant::full);
    ScanSpec spec;
    spec.home = 0;
    spec.partners = {1, 2};
    spec.rate_grid_pct = {0, 10, 20, 30, 40, 50};
    const auto curves = cumulative_laffer(ctx, spec);
    REQUIRE(curves.size() == 3);
    for (const auto& p : curves[0].points) REQUIRE(p.d_revenue == 0.0);
    REQUIRE(curves[1].peak_revenue <= curves[2].peak_revenue);
    REQUIRE(curves[2].points[0].d_revenue == 0.0);
}

TEST_CASE("MEB ordering sorts ascending", "[scan]")
{
    ScanContext ctx(three_region(), ModelVariant::full);
    const auto order = partner_meb_at_zero(ctx, 0, {1, 2});
    REQUIRE(order.size() == 2);
    REQUIRE(order[0].second.has_value());
    REQUIRE(*order[0].second <= *order[1].second);
}

TEST_CASE("bilateral-only accounting matches full accounting with one partner", "[scan]")
{
    const auto c = testsupport::two_region_calibration({{{0.8, 0.2}, {0.2, 0.8}}}, 4.0);
    ScanContext ctx(c, ModelVariant::full);
    auto spec = bilateral(1);
    const auto full = bilateral_laffer(ctx, spec);
    spec.accounting = Accounting::bilateral_only;
    const auto bil = bilateral_laffer(ctx, spec);
    for (std::size_t k = 0; k < full.points.size(); ++k) {
        REQUIRE(bil.points[k].d_revenue == Catch::Approx(full.points[k].d_revenue).margin(1e-9));
        REQUIRE(bil.points[k].d_welfare_home == Catch::Approx(full.points[k].d_welfare_home).margin(1e-9));
    }
}

TEST_CASE("bilateral-only accounting isolates the target pair", "[scan]")
{
    ScanContext ctx(three_region(), ModelVariant::full);
    auto spec = bilateral(1);
    spec.reference = ReferenceKind::jan1_baseline;
    const auto full = bilateral_laffer(ctx, spec);
    spec.accounting = Accounting::bilateral_only;
    const auto bil = bilateral_laffer(ctx, spec);
    REQUIRE(bil.points.back().d_revenue != full.points.back().d_revenue);
    REQUIRE(bil.points.back().d_welfare_partner == full.points.back().d_welfare_partner);
}

TEST_CASE("solver failures inside a curve name the rate", "[scan]")
{
    SolveOptions opt;
    opt.max_outer = 1;
    ScanContext ctx(three_region(), ModelVariant::full, opt);
    auto spec = bilateral(1);
    spec.reference = ReferenceKind::jan1_baseline;
    spec.rate_grid_pct = {40.0};
    REQUIRE_THROWS_WITH(bilateral_laffer(ctx, spec), Catch::Matchers::ContainsSubstring("curve aborted at rate 40%"));
}

TEST_CASE("timeline rows split home and retaliation effects", "[scan]")
{
    const auto& calib = three_region();
    ScanContext ctx(calib, ModelVariant::full);
    const auto ref = calib.baseline_schedule();
    auto home_only = ref;
    set_bilateral_rate(home_only, calib, 0, 1, 30.0);
    home_only.date = "A";
    auto joint = home_only;
    set_bilateral_rate(joint, calib, 1, 0, 30.0);
    joint.date = "B";
    const auto rows = timeline_scenarios(ctx, {ref, home_only, joint}, ref, 0);
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[0].d_revenue_home_only == 0.0);
    REQUIRE_FALSE(rows[0].home_cost_per_dollar.has_value());
    REQUIRE(rows[1].d_revenue_retaliation == 0.0);
    REQUIRE(rows[1].d_welfare_home_retaliation == 0.0);
    REQUIRE(rows[2].d_revenue_home_only == rows[1].d_revenue_home_only);
    REQUIRE(rows[2].d_welfare_home_retaliation < 0.0);
    REQUIRE(rows[1].avg_import_pct > rows[0].avg_import_pct);
    REQUIRE(rows[2].avg_export_pct > rows[1].avg_export_pct);
    const double expect = std::abs(rows[1].d_welfare_home_home_only) / rows[1].d_revenue_home_only;
    REQUIRE(*rows[1].home_cost_per_dollar == Catch::Approx(expect).epsilon(1e-14));
    REQUIRE(*cost_per_dollar(-30.0, 100.0) == Catch::Approx(0.30));
}
