#pragma once

#include "tariffcge/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace tariffcge {

struct SolveOptions {
    double price_tol = 1e-11;    // max |change in log P-hat| for the inner price loop
    double linear_tol = 1e-12;   // relative residual of the absorption system
    double wage_tol = 1e-9;      // max relative labor-market residual
    int max_outer = 10000;
    int max_inner = 10000;
    double damping = 0.3;
    std::vector<double> initial_wages;  // empty: start from all ones
};

struct SolveDiagnostics {
    int outer_iterations = 0;
    long inner_iterations = 0;
    double labor_residual = 0.0;
    double linear_residual = 0.0;
    double damping_used = 0.0;
};

/// Counterfactual equilibrium. Hats are relative to the calibrated baseline;
/// levels are in baseline currency units.
struct EquilibriumOutcome {
    std::vector<double> wage_hats;
    Grid2 price_index_hats;
    Grid2 cost_hats;
    std::vector<double> aggregate_price_hats;
    Cube trade_shares_cf;
    Grid2 absorption_cf;
    Grid2 gross_output_cf;
    std::vector<double> tariff_revenue_cf;
    std::vector<double> income_cf;
    std::vector<double> welfare_hat;
    std::vector<double> baseline_revenue;
    std::vector<double> baseline_income;
    TariffSchedule schedule;
    ModelVariant variant = ModelVariant::full;
    SolveDiagnostics diagnostics;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> residuals = {})
        : std::runtime_error(what), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const { return residuals_; }

private:
    std::vector<double> residuals_;
};

namespace detail {

struct Technology {
    Grid2 va;
    Cube io;
};

inline Technology technology_for(const EconomyCalibration& c, ModelVariant v)
{
    if (v == ModelVariant::full) return {c.va_shares, c.io_shares};
    // Value added equals gross output: no intermediate inputs.
    return {Grid2(c.num_regions(), c.num_sectors(), 1.0), Cube(c.num_regions(), c.num_sectors(), c.num_sectors(), 0.0)};
}

// Effective baseline share; a row with no absorption is treated as autarkic.
inline double base_share(const EconomyCalibration& c, std::size_t i, std::size_t j, std::size_t s, bool empty_row)
{
    if (empty_row) return i == j ? 1.0 : 0.0;
    return c.trade_shares(i, j, s);
}

inline std::vector<char> empty_rows(const EconomyCalibration& c)
{
    const std::size_t n = c.num_regions(), ns = c.num_sectors();
    std::vector<char> out(n * ns, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < ns; ++s) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += c.trade_shares(i, j, s);
            out[i * ns + s] = sum <= 0.0;
        }
    return out;
}

/// Tariff revenue of importer i from given shares and absorption (currency).
inline double revenue_of(std::size_t i, const Cube& tau, const Cube& pi, const Grid2& absorption)
{
    double t = 0.0;
    for (std::size_t s = 0; s < pi.dim2(); ++s)
        for (std::size_t j = 0; j < pi.dim1(); ++j) {
            const double f = tau(i, j, s);
            if (f != 1.0) t += (f - 1.0) / f * pi(i, j, s) * absorption(i, s);
        }
    return t;
}

}  // namespace detail

/// Baseline tariff revenue per region.
inline std::vector<double> baseline_revenue(const EconomyCalibration& c)
{
    std::vector<double> t(c.num_regions());
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = detail::revenue_of(i, c.baseline_tariffs, c.trade_shares, c.absorption);
    return t;
}

/// Solves the counterfactual equilibrium for `schedule` in exact hat algebra.
///
/// Inner loop: unit costs and price indices at fixed wages. Middle step: the
/// absorption system, linear in X' at fixed wages, solved directly. Outer loop:
/// damped tatonnement on labor-market residuals with the numeraire wage pinned
/// to one.
inline EquilibriumOutcome solve_equilibrium(const EconomyCalibration& calib, const TariffSchedule& schedule,
                                            ModelVariant variant = ModelVariant::full,
                                            const SolveOptions& opt = {})
{
    validate_schedule(schedule, calib.sectors);
    const std::size_t n = calib.num_regions();
    const std::size_t ns = calib.num_sectors();
    if (schedule.regions() != n) throw InputError("tariff schedule dimensions do not match the calibration");
    const std::size_t num = calib.numeraire_region;

    const auto tech = detail::technology_for(calib, variant);
    const auto empty = detail::empty_rows(calib);

    // log tau-hat
    Cube log_tau_hat(n, n, ns);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t s = 0; s < ns; ++s)
                log_tau_hat(i, j, s) = std::log(schedule.tau(i, j, s) / calib.baseline_tariffs(i, j, s));

    EquilibriumOutcome out;
    out.schedule = schedule;
    out.variant = variant;
    out.baseline_revenue = baseline_revenue(calib);
    out.baseline_income.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.baseline_income[i] = calib.labor_income[i] + out.baseline_revenue[i] + calib.deficits[i];

    std::vector<double> w = opt.initial_wages;
    if (w.empty()) w.assign(n, 1.0);
    if (w.size() != n) throw InputError("initial wage guess has wrong length");
    {
        const double wn = w[num];
        if (!(wn > 0)) throw InputError("initial numeraire wage must be positive");
        for (double& x : w) x /= wn;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!(calib.labor_income[i] > 0.0))
            throw InputError("region " + calib.regions[i] + " has no labor income; equilibrium undefined");

    Grid2 log_p(n, ns, 0.0);
    Grid2 log_c(n, ns, 0.0);
    Cube pi(n, n, ns, 0.0);
    Grid2 x_cf(n, ns, 0.0), y_cf(n, ns, 0.0);
    std::vector<double> revenue(n), labor_demand(n), resid(n);
    std::vector<double> terms(n);

    const std::size_t dim = n * ns;
    Eigen::MatrixXd sys(dim, dim);
    Eigen::VectorXd rhs(dim);

    double psi = opt.damping;
    double prev_resid = std::numeric_limits<double>::infinity();
    long inner_total = 0;
    double lin_resid = 0.0;

    for (int outer = 0;; ++outer) {
        // --- prices at fixed wages ---
        int inner = 0;
        for (;; ++inner) {
            if (inner >= opt.max_inner)
                throw SolverError("price loop did not converge within " + std::to_string(opt.max_inner) + " iterations");
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t s = 0; s < ns; ++s) {
                    double lc = tech.va(i, s) * std::log(w[i]);
                    for (std::size_t k = 0; k < ns; ++k) {
                        const double g = tech.io(i, k, s);
                        if (g != 0.0) lc += g * log_p(i, k);
                    }
                    log_c(i, s) = lc;
                }
            double max_change = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t s = 0; s < ns; ++s) {
                    const double th = calib.theta[s];
                    const bool er = empty[i * ns + s];
                    double mx = -std::numeric_limits<double>::infinity();
                    for (std::size_t j = 0; j < n; ++j) {
                        if (detail::base_share(calib, i, j, s, er) <= 0.0) continue;
                        terms[j] = -th * (log_c(j, s) + log_tau_hat(i, j, s));
                        mx = std::max(mx, terms[j]);
                    }
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double b = detail::base_share(calib, i, j, s, er);
                        if (b <= 0.0) continue;
                        acc += b * std::exp(terms[j] - mx);
                    }
                    const double lp = -(mx + std::log(acc)) / th;
                    if (!std::isfinite(lp))
                        throw SolverError("non-finite price index for " + calib.regions[i] + "/" + calib.sectors[s].id);
                    max_change = std::max(max_change, std::abs(lp - log_p(i, s)));
                    log_p(i, s) = lp;
                }
            if (max_change < opt.price_tol) break;
        }
        inner_total += inner + 1;

        // --- counterfactual shares ---
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 0; s < ns; ++s) {
                const double th = calib.theta[s];
                const bool er = empty[i * ns + s];
                for (std::size_t j = 0; j < n; ++j) {
                    const double b = detail::base_share(calib, i, j, s, er);
                    pi(i, j, s) = b <= 0.0 ? 0.0
                                           : b * std::exp(-th * (log_c(j, s) + log_tau_hat(i, j, s)) + th * log_p(i, s));
                }
            }

        // --- absorption: (I - A) x = b ---
        sys.setIdentity();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t s = 0; s < ns; ++s) {
                double rho = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double f = schedule.tau(i, j, s);
                    if (f != 1.0) rho += (f - 1.0) / f * pi(i, j, s);
                }
                for (std::size_t k = 0; k < ns; ++k) {
                    const double a = calib.final_shares(i, k);
                    if (a != 0.0) sys(i * ns + k, i * ns + s) -= a * rho;
                }
            }
            for (std::size_t k = 0; k < ns; ++k)
                rhs(i * ns + k) = calib.final_shares(i, k) * (w[i] * calib.labor_income[i] + calib.deficits[i]);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < ns; ++k)
                for (std::size_t s = 0; s < ns; ++s) {
                    const double g = tech.io(i, k, s);
                    if (g == 0.0) continue;
                    for (std::size_t m = 0; m < n; ++m) {
                        const double p = pi(m, i, s);
                        if (p != 0.0) sys(i * ns + k, m * ns + s) -= g * p / schedule.tau(m, i, s);
                    }
                }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
        Eigen::VectorXd x = lu.solve(rhs);
        Eigen::VectorXd r = rhs - sys * x;
        x += lu.solve(r);  // one step of iterative refinement
        r = rhs - sys * x;
        const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
        lin_resid = r.cwiseAbs().maxCoeff() / scale;
        if (!std::isfinite(lin_resid) || lin_resid > opt.linear_tol)
            throw SolverError("absorption system residual " + std::to_string(lin_resid) + " exceeds tolerance");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 0; s < ns; ++s) x_cf(i, s) = x(i * ns + s);

        // --- output, revenue, labor demand ---
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t s = 0; s < ns; ++s) {
                double y = 0.0;
                for (std::size_t i = 0; i < n; ++i) y += pi(i, j, s) * x_cf(i, s) / schedule.tau(i, j, s);
                y_cf(j, s) = y;
            }
        double max_resid = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double ld = 0.0;
            for (std::size_t s = 0; s < ns; ++s) ld += tech.va(i, s) * y_cf(i, s);
            labor_demand[i] = ld;
            resid[i] = (ld - w[i] * calib.labor_income[i]) / calib.labor_income[i];
            max_resid = std::max(max_resid, std::abs(resid[i]));
        }
        if (!std::isfinite(max_resid)) throw SolverError("non-finite labor-market residual", resid);

        if (max_resid <= opt.wage_tol) {
            out.diagnostics.outer_iterations = outer;
            out.diagnostics.labor_residual = max_resid;
            break;
        }
        if (outer + 1 >= opt.max_outer) {
            std::ostringstream msg;
            msg << "wage loop did not converge after " << opt.max_outer << " iterations (max residual " << max_resid
                << ")";
            throw SolverError(msg.str(), resid);
        }
        if (max_resid > prev_resid) psi = std::max(psi * 0.5, 1e-3);
        prev_resid = max_resid;

        for (std::size_t i = 0; i < n; ++i) {
            double ratio = labor_demand[i] / (w[i] * calib.labor_income[i]);
            ratio = std::clamp(ratio, 1e-3, 1e3);
            w[i] *= std::pow(ratio, psi);
        }
        const double wn = w[num];
        for (double& v : w) v /= wn;
        w[num] = 1.0;
    }

    out.diagnostics.inner_iterations = inner_total;
    out.diagnostics.linear_residual = lin_resid;
    out.diagnostics.damping_used = psi;

    out.wage_hats = w;
    out.price_index_hats = Grid2(n, ns);
    out.cost_hats = Grid2(n, ns);
    out.aggregate_price_hats.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double lagg = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            out.price_index_hats(i, s) = std::exp(log_p(i, s));
            out.cost_hats(i, s) = std::exp(log_c(i, s));
            if (!(out.price_index_hats(i, s) > 0.0) || !(out.cost_hats(i, s) > 0.0))
                throw SolverError("invalid price hat for " + calib.regions[i] + "/" + calib.sectors[s].id);
            lagg += calib.final_shares(i, s) * log_p(i, s);
        }
        out.aggregate_price_hats[i] = std::exp(lagg);
    }
    out.trade_shares_cf = pi;
    out.absorption_cf = x_cf;
    out.gross_output_cf = y_cf;
    out.tariff_revenue_cf.resize(n);
    out.income_cf.resize(n);
    out.welfare_hat.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.tariff_revenue_cf[i] = detail::revenue_of(i, schedule.tau, pi, x_cf);
        out.income_cf[i] = w[i] * calib.labor_income[i] + out.tariff_revenue_cf[i] + calib.deficits[i];
        if (!(out.baseline_income[i] > 0.0))
            throw SolverError("non-positive baseline income in " + calib.regions[i]);
        out.welfare_hat[i] = (out.income_cf[i] / out.baseline_income[i]) / out.aggregate_price_hats[i];
    }
    return out;
}

/// Adopts a solved equilibrium as the new baseline: shares, absorption and
/// labor income are replaced by their counterfactual levels. The result is an
/// exact equilibrium of the model at its own baseline tariffs.
inline EconomyCalibration rebase_to_equilibrium(const EconomyCalibration& calib, const EquilibriumOutcome& eq)
{
    EconomyCalibration out = calib;
    const std::size_t n = calib.num_regions(), ns = calib.num_sectors();
    out.baseline_tariffs = eq.schedule.tau;
    for (std::size_t i = 0; i < n; ++i) {
        out.labor_income[i] = eq.wage_hats[i] * calib.labor_income[i];
        for (std::size_t s = 0; s < ns; ++s) {
            out.absorption(i, s) = eq.absorption_cf(i, s);
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += eq.trade_shares_cf(i, j, s);
            for (std::size_t j = 0; j < n; ++j) out.trade_shares(i, j, s) = eq.trade_shares_cf(i, j, s) / sum;
        }
    }
    if (eq.variant == ModelVariant::no_io) {
        out.va_shares = Grid2(n, ns, 1.0);
        out.io_shares = Cube(n, ns, ns, 0.0);
    }
    return out;
}

/// Solves the identity counterfactual under tight tolerances and rebases onto it.
inline EconomyCalibration rebase_to_equilibrium(const EconomyCalibration& calib,
                                                ModelVariant variant = ModelVariant::full)
{
    SolveOptions opt;
    opt.wage_tol = 1e-13;
    opt.price_tol = 1e-14;
    auto eq = solve_equilibrium(calib, calib.baseline_schedule(), variant, opt);
    return rebase_to_equilibrium(calib, eq);
}

/// Sum over `region_set` of (W_hat - 1) * GDP * kappa.
inline double welfare_in_currency(const EquilibriumOutcome& outcome, const EconomyCalibration& calib,
                                  const std::vector<std::size_t>& region_set)
{
    if (region_set.empty()) throw InputError("welfare_in_currency: empty region set");
    double total = 0.0;
    for (auto j : region_set) {
        if (j >= calib.num_regions()) throw InputError("welfare_in_currency: region index out of range");
        total += (outcome.welfare_hat[j] - 1.0) * calib.gdp(j) * calib.report_scale;
    }
    return total;
}

enum class TradeSide { imports, exports };

/// Trade-weighted average tariff (percent) on `country`'s imports or exports,
/// weighted by counterfactual purchaser-price flows; tariffable sectors only.
inline double trade_weighted_avg_tariff(const EquilibriumOutcome& outcome, const EconomyCalibration& calib,
                                        const TariffSchedule& schedule, TradeSide side, std::size_t country)
{
    const std::size_t n = calib.num_regions(), ns = calib.num_sectors();
    if (country >= n) throw InputError("trade_weighted_avg_tariff: region index out of range");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == country) continue;
        for (std::size_t s = 0; s < ns; ++s) {
            if (!calib.sectors[s].tariffable) continue;
            const std::size_t imp = side == TradeSide::imports ? country : j;
            const std::size_t exp = side == TradeSide::imports ? j : country;
            const double wgt = outcome.trade_shares_cf(imp, exp, s) * outcome.absorption_cf(imp, s);
            num += (schedule.tau(imp, exp, s) - 1.0) * wgt;
            den += wgt;
        }
    }
    if (!(den > 0.0)) throw InputError("trade_weighted_avg_tariff: zero total trade weight");
    return 100.0 * num / den;
}

struct BilateralAccounting {
    double d_revenue = 0.0;  // currency, report-scaled
    double d_welfare = 0.0;  // currency, report-scaled
};

/// Revenue and welfare changes of `importer` relative to `reference`, with all
/// non-target bilateral flows held at their reference levels. Only the target
/// partner's flows take counterfactual values.
inline BilateralAccounting bilateral_only_accounting(const EquilibriumOutcome& full, const EquilibriumOutcome& reference,
                                                     const EconomyCalibration& calib, std::size_t importer,
                                                     std::size_t target)
{
    if (target == importer) throw InputError("bilateral_only_accounting: target must differ from the importer");
    const std::size_t n = calib.num_regions(), ns = calib.num_sectors();
    if (target >= n || importer >= n) throw InputError("bilateral_only_accounting: region index out of range");
    auto pair_revenue = [&](const EquilibriumOutcome& eq, std::size_t j) {
        double t = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            const double f = eq.schedule.tau(importer, j, s);
            t += (f - 1.0) / f * eq.trade_shares_cf(importer, j, s) * eq.absorption_cf(importer, s);
        }
        return t;
    };
    double nontarget_full = 0.0, nontarget_ref = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == target) continue;
        nontarget_full += pair_revenue(full, j);
        nontarget_ref += pair_revenue(reference, j);
    }
    const double revenue_bil = full.tariff_revenue_cf[importer] - nontarget_full + nontarget_ref;
    const double income_bil = full.income_cf[importer] - full.tariff_revenue_cf[importer] + revenue_bil;
    const double w_bil = (income_bil / full.baseline_income[importer]) / full.aggregate_price_hats[importer];
    const double kappa = calib.report_scale;
    return {(revenue_bil - reference.tariff_revenue_cf[importer]) * kappa,
            (w_bil - reference.welfare_hat[importer]) * calib.gdp(importer) * kappa};
}

}  // namespace tariffcge
