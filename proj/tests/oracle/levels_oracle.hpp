#pragma once

// Brute-force market clearing in levels for a two-region, one-sector economy
// without intermediate inputs or deficits. Shares the model's structure but
// none of the hat-algebra machinery: prices and flows are formed directly and
// the non-numeraire wage is found by bisection.

#include <array>
#include <cmath>
#include <stdexcept>

namespace oracle {

struct TwoRegionEconomy {
    std::array<std::array<double, 2>, 2> pi{};  // baseline shares at unit wages, zero tariffs
    double theta = 4.0;
    std::array<double, 2> labor{100.0, 100.0};  // baseline wage bill with w = 1
};

struct LevelsSolution {
    std::array<double, 2> wage{};
    std::array<double, 2> expenditure{};
    std::array<double, 2> revenue{};
    std::array<double, 2> price{};
    std::array<double, 2> welfare_hat{};
};

inline LevelsSolution evaluate(const TwoRegionEconomy& e, const std::array<std::array<double, 2>, 2>& tau, double w2)
{
    LevelsSolution s;
    s.wage = {1.0, w2};
    std::array<std::array<double, 2>, 2> share{};
    for (int i = 0; i < 2; ++i) {
        double denom = 0.0;
        std::array<double, 2> k{};
        for (int j = 0; j < 2; ++j) {
            k[j] = e.pi[i][j] * std::pow(s.wage[j] * tau[i][j], -e.theta);
            denom += k[j];
        }
        s.price[i] = std::pow(denom, -1.0 / e.theta);
        double leak = 0.0;
        for (int j = 0; j < 2; ++j) {
            share[i][j] = k[j] / denom;
            leak += (tau[i][j] - 1.0) / tau[i][j] * share[i][j];
        }
        s.expenditure[i] = s.wage[i] * e.labor[i] / (1.0 - leak);
        s.revenue[i] = leak * s.expenditure[i];
    }
    for (int i = 0; i < 2; ++i) s.welfare_hat[i] = (s.expenditure[i] / e.labor[i]) / s.price[i];
    return s;
}

inline double excess_labor_demand_2(const TwoRegionEconomy& e, const std::array<std::array<double, 2>, 2>& tau,
                                    double w2)
{
    // Sales of region 2 at producer prices minus its wage bill.
    auto s = evaluate(e, tau, w2);
    double sales = 0.0;
    for (int i = 0; i < 2; ++i) {
        double denom = 0.0;
        for (int j = 0; j < 2; ++j) denom += e.pi[i][j] * std::pow(s.wage[j] * tau[i][j], -e.theta);
        const double share = e.pi[i][1] * std::pow(s.wage[1] * tau[i][1], -e.theta) / denom;
        sales += share * s.expenditure[i] / tau[i][1];
    }
    return sales - w2 * e.labor[1];
}

inline LevelsSolution solve(const TwoRegionEconomy& e, const std::array<std::array<double, 2>, 2>& tau)
{
    double lo = -5.0, hi = 5.0;
    double flo = excess_labor_demand_2(e, tau, std::exp(lo));
    if (flo <= 0.0 || excess_labor_demand_2(e, tau, std::exp(hi)) >= 0.0)
        throw std::runtime_error("oracle: wage bracket does not straddle the root");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excess_labor_demand_2(e, tau, std::exp(mid)) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return evaluate(e, tau, std::exp(0.5 * (lo + hi)));
}

}  // namespace oracle
