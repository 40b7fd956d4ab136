#include "tariffcge/fiscal.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace tariffcge;
using Catch::Approx;

TEST_CASE("MEB is the welfare cost per unit of revenue", "[fiscal]")
{
    REQUIRE(*meb({-30.0, 100.0}) == Approx(0.3));
    REQUIRE(*meb({10.0, 100.0}) == Approx(-0.1));
    REQUIRE_FALSE(meb({-1.0, 0.0}).has_value());
    REQUIRE_FALSE(meb({-1.0, 5e-13}).has_value());
    REQUIRE(meb({-1.0, 2e-12}).has_value());
}

TEST_CASE("MFEI takes its exact bound values on same-signed marginals", "[fiscal]")
{
    REQUIRE(mfei({2.0, 3.0}) == 1.0);
    REQUIRE(mfei({0.0, 3.0}) == 1.0);
    REQUIRE(mfei({-2.0, -3.0}) == -1.0);
    REQUIRE(mfei({-2.0, 0.0}) == -1.0);
    REQUIRE(mfei({0.0, 0.0}) == 0.0);
    REQUIRE(classify_zone({0.0, 0.0}) == FiscalZone::FiscallyNeutral);
}

TEST_CASE("in the trade-off band MFEI is (alpha - MEB) / (alpha + MEB)", "[fiscal]")
{
    for (double m : {0.05, 0.25, 0.9, 4.0}) {
        const MarginalPoint p{-m * 80.0, 80.0, 0.25};
        REQUIRE(mfei(p) == Approx((0.25 - m) / (0.25 + m)).epsilon(1e-14));
    }
    REQUIRE(mfei({-20.0, 80.0, 0.25}) == 0.0);
    REQUIRE(classify_zone({-20.0, 80.0, 0.25}) == FiscalZone::FiscallyNeutral);
}

TEST_CASE("zones follow the sign pattern of the marginals", "[fiscal]")
{
    REQUIRE(classify_zone({1.0, 1.0}) == FiscalZone::FreeLunch);
    REQUIRE(classify_zone({-0.1, 1.0, 0.25}) == FiscalZone::EfficientTradeOff);
    REQUIRE(classify_zone({-0.5, 1.0, 0.25}) == FiscalZone::InefficientTradeOff);
    REQUIRE(classify_zone({-1.0, -1.0}) == FiscalZone::BeyondLaffer);
    REQUIRE(zone3_label({-0.1, 1.0}) == "TradeOff");
    REQUIRE(zone3_label({-0.5, 1.0}) == "TradeOff");
    REQUIRE(zone3_label({1.0, 1.0}) == "FreeLunch");
    REQUIRE(zone3_label({-1.0, -1.0}) == "BeyondLaffer");
    REQUIRE(to_string(FiscalZone::EfficientTradeOff) == "EfficientTradeOff");
    REQUIRE(is_trade_off(FiscalZone::FiscallyNeutral));
    REQUIRE_FALSE(is_trade_off(FiscalZone::FreeLunch));
}

TEST_CASE("zone and MFEI value agree on random points", "[fiscal]")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0), a(1e-6, 3.0);
    for (int k = 0; k < 20000; ++k) {
        const MarginalPoint p{u(rng), u(rng), a(rng)};
        const double v = mfei(p);
        REQUIRE(v >= -1.0);
        REQUIRE(v <= 1.0);
        switch (classify_zone(p)) {
        case FiscalZone::FreeLunch: REQUIRE(v == 1.0); break;
        case FiscalZone::BeyondLaffer: REQUIRE(v == -1.0); break;
        case FiscalZone::EfficientTradeOff: REQUIRE((v > 0.0 && v < 1.0)); break;
        case FiscalZone::FiscallyNeutral: REQUIRE(v == 0.0); break;
        case FiscalZone::InefficientTradeOff: REQUIRE((v < 0.0 && v > -1.0)); break;
        }
    }
}

TEST_CASE("MFEI limits in alpha", "[fiscal]")
{
    const MarginalPoint p{-3.0, 2.0};
    REQUIRE(mfei({p.dW, p.dR, 1e-12}) == Approx(-1.0).margin(1e-6));
    REQUIRE(mfei({p.dW, p.dR, 1e8}) == Approx(1.0).margin(1e-6));
}

TEST_CASE("closed forms at epsilon = 2, sigma = 1, alpha = 0.25", "[fiscal][analytic]")
{
    const AnalyticParams p{2.0, 1.0, 0.25};
    REQUIRE(analytic_meb(p, 1.0) == Approx(-2.0 / 3.0).epsilon(1e-15));
    REQUIRE(analytic_welfare_peak(p) == 2.0);
    REQUIRE(analytic_laffer_peak(p) == 4.0);
    REQUIRE(analytic_fe_tariff(p) == Approx(20.0 / 9.0).epsilon(1e-15));
    REQUIRE(analytic_meb(p, analytic_fe_tariff(p)) == Approx(0.25).epsilon(1e-13));
    REQUIRE(analytic_meb_denominator(p, 4.0) == Approx(0.0).margin(1e-15));
    REQUIRE(analytic_meb_slope(p, 1.0) == Approx(2.0 * 1.0 * 2.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("analytic domain checks", "[fiscal][analytic]")
{
    REQUIRE_THROWS_AS(analytic_meb({1.0, 1.0, 0.25}, 1.5), InputError);
    REQUIRE_THROWS_AS(analytic_meb({2.0, 0.0, 0.25}, 1.5), InputError);
    REQUIRE_THROWS_AS(analytic_meb({2.0, 1.0, -0.1}, 1.5), InputError);
    REQUIRE_THROWS_AS(analytic_meb({2.0, 1.0, 0.25}, 0.9), InputError);
    REQUIRE_THROWS_AS(analytic_laffer_peak({0.5, 1.0, 0.25}), InputError);
}

TEST_CASE("centered differences are exact on quadratics", "[fiscal]")
{
    std::vector<double> rates, w, r;
    for (int k = 0; k <= 10; ++k) {
        const double t = k * 5.0 / 100.0;
        rates.push_back(k * 5.0);
        w.push_back(3.0 * t - 4.0 * t * t);
        r.push_back(10.0 * t - 6.0 * t * t);
    }
    const auto m = curve_marginals(rates, w, r, 0.25);
    REQUIRE(m.size() == 9);
    for (const auto& cm : m) {
        const double t = cm.rate_pct / 100.0;
        REQUIRE(cm.point.dW == Approx(3.0 - 8.0 * t).margin(1e-12));
        REQUIRE(cm.point.dR == Approx(10.0 - 12.0 * t).margin(1e-12));
        REQUIRE(cm.point.alpha == 0.25);
    }
    REQUIRE_THROWS_AS(curve_marginals({0, 1}, {0, 1}, {0, 1}), InputError);
    REQUIRE_THROWS_AS(curve_marginals({0, 1, 2}, {0, 1}, {0, 1, 2}), InputError);
    REQUIRE_THROWS_AS(curve_marginals({0, 1, 1}, {0, 1, 2}, {0, 1, 2}), InputError);
}

TEST_CASE("median of odd and even sets", "[fiscal]")
{
    REQUIRE(median({3.0, 1.0, 2.0}) == 2.0);
    REQUIRE(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    REQUIRE_THROWS_AS(median({}), InputError);
}
