#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>

namespace tariffcge {

/// Integer grid for best-response search: index k means k * step percent.
struct ResponseGrid {
    double step_pct = 0.1;
    int max_index = 500;  // 50 percent

    double rate(int k) const { return k * step_pct; }
    int snap(double rate_pct) const
    {
        const long k = std::lround(rate_pct / step_pct);
        return static_cast<int>(k < 0 ? 0 : (k > max_index ? max_index : k));
    }
};

struct HillClimbResult {
    int index = 0;
    double value = 0.0;
    int evaluations = 0;
};

/// Local search on the grid: from `start`, move to a neighbour only when it
/// strictly improves the objective (the lower neighbour wins a tie between
/// them); stop when neither neighbour strictly improves. A flat objective
/// therefore returns the start point. Each grid point is evaluated once.
template <class Objective>
HillClimbResult hill_climb(const ResponseGrid& grid, int start, Objective&& objective)
{
    std::map<int, double> seen;
    HillClimbResult res;
    auto eval = [&](int k) {
        auto it = seen.find(k);
        if (it != seen.end()) return it->second;
        ++res.evaluations;
        const double v = objective(k);
        seen.emplace(k, v);
        return v;
    };
    int k = start < 0 ? 0 : (start > grid.max_index ? grid.max_index : start);
    double fk = eval(k);
    for (;;) {
        const bool has_lo = k > 0, has_hi = k < grid.max_index;
        const double lo = has_lo ? eval(k - 1) : fk;
        const double hi = has_hi ? eval(k + 1) : fk;
        if (has_lo && lo > fk && !(has_hi && hi > lo)) {
            --k;
            fk = lo;
        } else if (has_hi && hi > fk) {
            ++k;
            fk = hi;
        } else {
            break;
        }
    }
    res.index = k;
    res.value = fk;
    return res;
}

}  // namespace tariffcge
