#pragma once

#include "tariffcge/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace testsupport {

// Two regions, one tariffable sector, no intermediates, balanced trade.
inline tariffcge::EconomyCalibration two_region_calibration(const std::array<std::array<double, 2>, 2>& pi,
                                                            double theta, std::array<double, 2> wl = {100.0, 100.0})
{
    using namespace tariffcge;
    EconomyCalibration c;
    c.regions = {"H", "F"};
    c.sectors = {{"G", true}};
    c.final_shares = Grid2(2, 1, 1.0);
    c.va_shares = Grid2(2, 1, 1.0);
    c.io_shares = Cube(2, 1, 1, 0.0);
    c.trade_shares = Cube(2, 2, 1);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c.trade_shares(i, j, 0) = pi[i][j];
    c.theta = {theta};
    c.labor_income = {wl[0], wl[1]};
    c.absorption = Grid2(2, 1);
    c.absorption(0, 0) = wl[0];
    c.absorption(1, 0) = wl[1];
    c.deficits = {0.0, 0.0};
    c.baseline_tariffs = Cube(2, 2, 1, 1.0);
    c.numeraire_region = 0;
    return c;
}

inline tariffcge::TariffSchedule bilateral_schedule(std::size_t n, std::size_t ns, std::size_t importer,
                                                    std::size_t exporter, double rate_pct)
{
    tariffcge::TariffSchedule s(n, ns);
    for (std::size_t k = 0; k < ns; ++k) s.tau(importer, exporter, k) = 1.0 + rate_pct / 100.0;
    return s;
}

inline double rel_err(double a, double b)
{
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace testsupport
