#pragma once

#include "tariffcge/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace tariffcge {

inline constexpr double kDefaultAlpha = 0.25;
inline constexpr double kMebUndefinedEps = 1e-12;

struct MarginalPoint {
    double dW = 0.0;
    double dR = 0.0;
    double alpha = kDefaultAlpha;
};

enum class FiscalZone { FreeLunch, EfficientTradeOff, FiscallyNeutral, InefficientTradeOff, BeyondLaffer };
enum class ZoneGranularity { five, three };

inline std::string to_string(FiscalZone z, ZoneGranularity g = ZoneGranularity::five)
{
    switch (z) {
    case FiscalZone::FreeLunch: return "FreeLunch";
    case FiscalZone::BeyondLaffer: return "BeyondLaffer";
    default: break;
    }
    if (g == ZoneGranularity::three) return "TradeOff";
    switch (z) {
    case FiscalZone::EfficientTradeOff: return "EfficientTradeOff";
    case FiscalZone::FiscallyNeutral: return "FiscallyNeutral";
    default: return "InefficientTradeOff";
    }
}

/// Marginal excess burden; nullopt when dR is numerically zero.
inline std::optional<double> meb(const MarginalPoint& p, double eps = kMebUndefinedEps)
{
    if (!(std::abs(p.dR) >= eps)) return std::nullopt;
    return -p.dW / p.dR;
}

namespace detail {
inline double net_gain(const MarginalPoint& p) { return p.dW + p.alpha * p.dR; }
}  // namespace detail

/// Marginal fiscal efficiency index, bounded in [-1, 1]. Same-signed
/// marginals give exactly +1 or -1; a zero denominator gives 0.
inline double mfei(const MarginalPoint& p)
{
    const double den = std::abs(p.dW) + p.alpha * std::abs(p.dR);
    if (den == 0.0) return 0.0;
    if (p.dW >= 0.0 && p.dR >= 0.0) return 1.0;
    if (p.dW <= 0.0 && p.dR <= 0.0) return -1.0;
    const double v = detail::net_gain(p) / den;
    // Opposite signs lie strictly inside the bounds whenever alpha > 0; keep
    // rounding from landing on a bound.
    if (p.alpha > 0.0) return std::clamp(v, std::nextafter(-1.0, 0.0), std::nextafter(1.0, 0.0));
    return v;
}

/// Zone matching mfei(p): +1 is FreeLunch, -1 is BeyondLaffer, and opposite
/// signs split on the sign of dW + alpha*dR. The split reuses the product
/// alpha*dR so it agrees with the index bit for bit.
inline FiscalZone classify_zone(const MarginalPoint& p, ZoneGranularity g = ZoneGranularity::five)
{
    const double den = std::abs(p.dW) + p.alpha * std::abs(p.dR);
    if (den == 0.0) return g == ZoneGranularity::three ? FiscalZone::InefficientTradeOff : FiscalZone::FiscallyNeutral;
    if (p.dW >= 0.0 && p.dR >= 0.0) return FiscalZone::FreeLunch;
    if (p.dW <= 0.0 && p.dR <= 0.0) return FiscalZone::BeyondLaffer;
    if (g == ZoneGranularity::three) return FiscalZone::InefficientTradeOff;
    const double net = detail::net_gain(p);
    if (net > 0.0) return FiscalZone::EfficientTradeOff;
    if (net == 0.0) return FiscalZone::FiscallyNeutral;
    return FiscalZone::InefficientTradeOff;
}

inline bool is_trade_off(FiscalZone z)
{
    return z == FiscalZone::EfficientTradeOff || z == FiscalZone::FiscallyNeutral || z == FiscalZone::InefficientTradeOff;
}

inline std::string zone3_label(const MarginalPoint& p)
{
    return to_string(classify_zone(p), ZoneGranularity::three);
}

// ---------------------------------------------------------------------------
// Curve differentiation
// ---------------------------------------------------------------------------

struct CurveMarginal {
    double rate_pct = 0.0;
    MarginalPoint point;
};

/// Centered differences at interior grid points, per unit of tariff rate
/// (a one-point step in percent is 0.01 in rate units).
inline std::vector<CurveMarginal> curve_marginals(const std::vector<double>& rates_pct, const std::vector<double>& welfare,
                                                  const std::vector<double>& revenue, double alpha = kDefaultAlpha)
{
    if (rates_pct.size() < 3) throw InputError("curve_marginals: need at least 3 grid points");
    if (welfare.size() != rates_pct.size() || revenue.size() != rates_pct.size())
        throw InputError("curve_marginals: series lengths differ");
    for (std::size_t k = 1; k < rates_pct.size(); ++k)
        if (!(rates_pct[k] > rates_pct[k - 1])) throw InputError("curve_marginals: rate grid must be strictly increasing");
    std::vector<CurveMarginal> out;
    for (std::size_t k = 1; k + 1 < rates_pct.size(); ++k) {
        const double h = (rates_pct[k + 1] - rates_pct[k - 1]) / 100.0;
        out.push_back({rates_pct[k], {(welfare[k + 1] - welfare[k - 1]) / h, (revenue[k + 1] - revenue[k - 1]) / h, alpha}});
    }
    return out;
}

inline double median(std::vector<double> v)
{
    if (v.empty()) throw InputError("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---------------------------------------------------------------------------
// Closed forms for a single-good partial-equilibrium tariff with constant
// import demand elasticity epsilon and export supply elasticity sigma.
// ---------------------------------------------------------------------------

struct AnalyticParams {
    double epsilon = 2.0;
    double sigma = 1.0;
    double alpha = kDefaultAlpha;
};

namespace detail {
inline void check_params(const AnalyticParams& p)
{
    if (!(p.epsilon > 1.0) || !std::isfinite(p.epsilon)) throw InputError("analytic: epsilon must exceed 1");
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw InputError("analytic: sigma must be positive");
    if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha)) throw InputError("analytic: alpha must be nonnegative");
}
inline void check_tau(double tau)
{
    if (!(tau >= 1.0) || !std::isfinite(tau)) throw InputError("analytic: tau must be at least 1");
}
}  // namespace detail

inline double analytic_meb_denominator(const AnalyticParams& p, double tau)
{
    return p.epsilon + tau * p.sigma - (tau - 1.0) * p.epsilon * p.sigma;
}

inline double analytic_meb(const AnalyticParams& p, double tau)
{
    detail::check_params(p);
    detail::check_tau(tau);
    return p.epsilon * ((tau - 1.0) * p.sigma - 1.0) / analytic_meb_denominator(p, tau);
}

inline double analytic_welfare_peak(const AnalyticParams& p)
{
    detail::check_params(p);
    return 1.0 + 1.0 / p.sigma;
}

inline double analytic_laffer_peak(const AnalyticParams& p)
{
    detail::check_params(p);
    return 1.0 + (p.sigma + p.epsilon) / (p.sigma * (p.epsilon - 1.0));
}

inline double analytic_fe_tariff(const AnalyticParams& p)
{
    detail::check_params(p);
    const double e = p.epsilon, s = p.sigma, a = p.alpha;
    return e * (1.0 + s) * (1.0 + a) / (s * (e + a * (e - 1.0)));
}

inline double analytic_meb_slope(const AnalyticParams& p, double tau)
{
    detail::check_params(p);
    detail::check_tau(tau);
    const double d = analytic_meb_denominator(p, tau);
    return p.epsilon * p.sigma * (1.0 + p.sigma) / (d * d);
}

}  // namespace tariffcge
