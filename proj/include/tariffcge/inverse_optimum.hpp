#pragma once

#include "tariffcge/csv.hpp"
#include "tariffcge/fiscal.hpp"
#include "tariffcge/parallel.hpp"
#include "tariffcge/policy_scan.hpp"
#include "tariffcge/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace tariffcge {

struct WedgeObservation {
    std::string date;
    std::string partner;
    std::string sector;
    double dW_home = 0.0;
    double dT_home = 0.0;
    double dW_foreign = 0.0;
    double dW_partner = 0.0;
    double omega = 0.0;
    std::string zone;
    std::string group;
    std::string regime;  // empty: outside every regime period
};

inline double wedge_omega(double dW, double dT, double alpha) { return -(dW + alpha * dT); }

/// Forward-difference response of home and foreign welfare and home revenue
/// to raising tau(home, partner, sector) by `delta`. Derivatives are in
/// report-scaled currency per unit of tariff factor.
inline WedgeObservation perturb_and_measure(ScanContext& ctx, const TariffSchedule& schedule_at_d, std::size_t home,
                                            std::size_t partner, std::size_t sector, double delta = 0.001,
                                            double alpha = kDefaultAlpha)
{
    const auto& calib = ctx.calibration();
    if (!(delta > 0.0)) throw InputError("perturbation step must be positive");
    if (partner == home) throw InputError("perturbation partner must differ from home");
    if (sector >= calib.num_sectors() || !calib.sectors[sector].tariffable)
        throw InputError("perturbation sector must be tariffable");
    TariffSchedule bumped = schedule_at_d;
    bumped.tau(home, partner, sector) += delta;
    const auto base = ctx.solve(schedule_at_d);
    const auto pert = ctx.solve(bumped);
    std::vector<std::size_t> foreign;
    for (std::size_t j = 0; j < calib.num_regions(); ++j)
        if (j != home) foreign.push_back(j);
    const auto p = measure_point(calib, *pert, *base, home, foreign);
    WedgeObservation o;
    o.date = schedule_at_d.date;
    o.partner = calib.regions[partner];
    o.sector = calib.sectors[sector].id;
    o.dW_home = p.d_welfare_home / delta;
    o.dT_home = p.d_revenue / delta;
    o.dW_foreign = p.d_welfare_partner / delta;
    o.dW_partner = (pert->welfare_hat[partner] - base->welfare_hat[partner]) * calib.gdp(partner) *
                   calib.report_scale / delta;
    o.omega = wedge_omega(o.dW_home, o.dT_home, alpha);
    o.zone = zone3_label({o.dW_home, o.dT_home, alpha});
    return o;
}

// ---------------------------------------------------------------------------
// Groups and regimes
// ---------------------------------------------------------------------------

struct Regime {
    std::string name;
    std::string start;  // inclusive ISO dates
    std::string end;
};

inline std::vector<Regime> default_regimes()
{
    return {{"2010-2016", "2010-01-01", "2016-12-31"},
            {"2019", "2019-01-01", "2019-12-31"},
            {"Apr2025-May2025", "2025-04-05", "2025-05-13"},
            {"Aug2025-Jan2026", "2025-08-17", "2026-01-01"}};
}

struct GroupConfig {
    std::map<std::string, std::string> explicit_groups;  // partner -> group
    std::map<std::string, double> ideal_points;          // fallback scores
    double cutoff = 0.65;
};

inline GroupConfig default_group_config()
{
    GroupConfig g;
    g.explicit_groups["CHN"] = "China";
    for (auto p : {"CAN", "MEX"}) g.explicit_groups[p] = "USMCA";
    for (auto p : {"EUU", "GBR", "JPN", "KOR", "AUS", "CHE", "NOR"}) g.explicit_groups[p] = "Aligned";
    for (auto p : {"TUR", "BRA", "IND", "IDN", "VNM"}) g.explicit_groups[p] = "NotAligned";
    return g;
}

inline std::string assign_group(const std::string& partner, const GroupConfig& cfg)
{
    if (auto it = cfg.explicit_groups.find(partner); it != cfg.explicit_groups.end()) return it->second;
    if (auto it = cfg.ideal_points.find(partner); it != cfg.ideal_points.end())
        return it->second >= cfg.cutoff ? "Aligned" : "NotAligned";
    throw InputError("partner '" + partner + "' has no group assignment");
}

inline std::optional<std::string> assign_regime(const std::string& date, const std::vector<Regime>& regimes)
{
    for (const auto& r : regimes)
        if (date >= r.start && date <= r.end) return r.name;
    return std::nullopt;
}

inline void label_observation(WedgeObservation& o, const GroupConfig& groups, const std::vector<Regime>& regimes)
{
    o.group = assign_group(o.partner, groups);
    o.regime = assign_regime(o.date, regimes).value_or("");
}

struct ObservationSet {
    std::vector<WedgeObservation> observations;
    std::vector<std::string> dropped;  // causes for failed perturbations
};

/// Perturbs every (date, partner, tariffable sector) triple. Dates outside
/// every regime are skipped. Failed solves drop the observation and record why.
inline ObservationSet collect_observations(ScanContext& ctx, const std::vector<TariffSchedule>& dated, std::size_t home,
                                           const std::vector<std::size_t>& partners, const GroupConfig& groups,
                                           const std::vector<Regime>& regimes, double delta = 0.001,
                                           double alpha = kDefaultAlpha, std::size_t threads = 1)
{
    const auto& calib = ctx.calibration();
    struct Job {
        std::size_t date, partner, sector;
    };
    std::vector<Job> jobs;
    for (std::size_t d = 0; d < dated.size(); ++d) {
        if (!assign_regime(dated[d].date, regimes)) continue;
        for (auto j : partners) {
            assign_group(calib.regions[j], groups);
            for (std::size_t s = 0; s < calib.num_sectors(); ++s)
                if (calib.sectors[s].tariffable) jobs.push_back({d, j, s});
        }
    }
    using Result = std::pair<std::optional<WedgeObservation>, std::string>;
    auto results = parallel_map(jobs.size(), threads, [&](std::size_t k) -> Result {
        const auto& job = jobs[k];
        try {
            auto o = perturb_and_measure(ctx, dated[job.date], home, job.partner, job.sector, delta, alpha);
            label_observation(o, groups, regimes);
            return {o, ""};
        } catch (const SolverError& e) {
            return {std::nullopt, dated[job.date].date + "/" + calib.regions[job.partner] + "/" +
                                      calib.sectors[job.sector].id + ": " + e.what()};
        }
    });
    ObservationSet out;
    for (auto& [o, why] : results) {
        if (o)
            out.observations.push_back(std::move(*o));
        else
            out.dropped.push_back(std::move(why));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Observation table I/O
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& observation_header()
{
    static const std::vector<std::string> h = {"date",       "partner",    "sector", "dW_home", "dT_home", "dW_foreign",
                                               "dW_partner", "omega",      "zone",   "group",   "regime"};
    return h;
}

inline std::string write_observations(const std::vector<WedgeObservation>& obs)
{
    csv::Writer w(observation_header());
    for (const auto& o : obs)
        w.row({o.date, o.partner, o.sector, csv::fmt_exact(o.dW_home), csv::fmt_exact(o.dT_home),
               csv::fmt_exact(o.dW_foreign), csv::fmt_exact(o.dW_partner), csv::fmt_exact(o.omega), o.zone, o.group,
               o.regime});
    return w.str();
}

inline std::vector<WedgeObservation> read_observations(const std::string& path)
{
    auto t = csv::read_file(path, observation_header());
    std::vector<WedgeObservation> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        const std::string where = path + ":" + std::to_string(t.line_numbers[r]);
        WedgeObservation o{f[0],
                           f[1],
                           f[2],
                           csv::parse_double(f[3], where),
                           csv::parse_double(f[4], where),
                           csv::parse_double(f[5], where),
                           csv::parse_double(f[6], where),
                           csv::parse_double(f[7], where),
                           f[8],
                           f[9],
                           f[10]};
        if (o.zone != "FreeLunch" && o.zone != "TradeOff" && o.zone != "BeyondLaffer")
            throw InputError(where + ": unknown zone '" + o.zone + "'");
        out.push_back(std::move(o));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Wedge regression
// ---------------------------------------------------------------------------

struct RegressionOptions {
    std::vector<std::string> fe_sectors = {"METAL", "TRANSP"};
    double regressor_scale = 1.0;  // multiplies both welfare regressors
};

struct RegressionFit {
    std::vector<std::string> names;
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd design;
    Eigen::VectorXd y;
    std::vector<double> ci_lo, ci_hi;  // filled by the bootstrap
    std::vector<std::size_t> cluster_of;
    std::size_t clusters = 0;
    std::vector<std::string> regimes;
    std::vector<std::string> groups;

    std::optional<double> coef(const std::string& name) const
    {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return beta[static_cast<Eigen::Index>(k)];
        return std::nullopt;
    }
};

inline std::string gamma_name(const std::string& regime) { return "gammaW[" + regime + "]"; }
inline std::string psi_name(const std::string& group, const std::string& regime)
{
    return "psi[" + group + "][" + regime + "]";
}
inline std::string kappa_name(const std::string& sector, const std::string& regime)
{
    return "kappa[" + sector + "][" + regime + "]";
}

namespace detail {

inline std::vector<std::string> collinear_columns(const Eigen::MatrixXd& X, const std::vector<std::string>& names)
{
    std::vector<std::string> bad;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
        for (std::size_t k = 0; k < kept.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = X.col(kept[k]);
        sub.col(sub.cols() - 1) = X.col(c);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
        if (qr.rank() == sub.cols())
            kept.push_back(c);
        else
            bad.push_back(names[static_cast<std::size_t>(c)]);
    }
    return bad;
}

}  // namespace detail

/// Least squares of omega on regime-interacted foreign welfare, regime-by-group
/// partner welfare and sector-by-regime fixed effects. Observations outside
/// every regime are ignored. Columns exist only for combinations in the data.
inline RegressionFit fit_wedge_regression(const std::vector<WedgeObservation>& all, const RegressionOptions& opt = {})
{
    std::vector<const WedgeObservation*> obs;
    for (const auto& o : all)
        if (!o.regime.empty()) obs.push_back(&o);
    if (obs.empty()) throw InputError("wedge regression: no observations inside a regime");

    std::set<std::string> regimes, groups;
    std::set<std::pair<std::string, std::string>> group_regime, sector_regime;
    const std::set<std::string> fe(opt.fe_sectors.begin(), opt.fe_sectors.end());
    std::set<std::pair<std::string, std::string>> cluster_keys;
    for (auto* o : obs) {
        regimes.insert(o->regime);
        groups.insert(o->group);
        group_regime.insert({o->group, o->regime});
        if (fe.count(o->sector)) sector_regime.insert({o->sector, o->regime});
        cluster_keys.insert({o->partner, o->date});
    }

    RegressionFit fit;
    fit.regimes.assign(regimes.begin(), regimes.end());
    fit.groups.assign(groups.begin(), groups.end());
    std::map<std::string, Eigen::Index> col;
    auto add = [&](const std::string& name) {
        col[name] = static_cast<Eigen::Index>(fit.names.size());
        fit.names.push_back(name);
    };
    for (const auto& r : regimes) add(gamma_name(r));
    for (const auto& g : groups)
        for (const auto& r : regimes)
            if (group_regime.count({g, r})) add(psi_name(g, r));
    for (const auto& s : opt.fe_sectors)
        for (const auto& r : regimes)
            if (sector_regime.count({s, r})) add(kappa_name(s, r));

    const auto n = static_cast<Eigen::Index>(obs.size());
    const auto p = static_cast<Eigen::Index>(fit.names.size());
    if (n < p) throw InputError("wedge regression: fewer observations than coefficients");
    fit.design = Eigen::MatrixXd::Zero(n, p);
    fit.y.resize(n);
    std::map<std::pair<std::string, std::string>, std::size_t> cluster_index;
    for (const auto& k : cluster_keys) cluster_index.emplace(k, cluster_index.size());
    fit.clusters = cluster_index.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& o = *obs[static_cast<std::size_t>(i)];
        fit.y[i] = o.omega;
        fit.design(i, col.at(gamma_name(o.regime))) = o.dW_foreign * opt.regressor_scale;
        fit.design(i, col.at(psi_name(o.group, o.regime))) = o.dW_partner * opt.regressor_scale;
        if (fe.count(o.sector)) fit.design(i, col.at(kappa_name(o.sector, o.regime))) = 1.0;
        fit.cluster_of.push_back(cluster_index.at({o.partner, o.date}));
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fit.design);
    if (qr.rank() < p) {
        std::string msg = "wedge regression: design matrix is rank deficient; collinear columns:";
        for (const auto& c : detail::collinear_columns(fit.design, fit.names)) msg += " " + c;
        throw InputError(msg);
    }
    fit.beta = qr.solve(fit.y);
    fit.residuals = fit.y - fit.design * fit.beta;
    fit.ci_lo.assign(fit.beta.data(), fit.beta.data() + p);
    fit.ci_hi = fit.ci_lo;
    return fit;
}

struct EffectiveWeight {
    std::string group;
    std::string regime;
    double weight = 0.0;  // gammaW[r] + psi[g][r]
};

inline std::vector<EffectiveWeight> effective_weights(const RegressionFit& fit)
{
    std::vector<EffectiveWeight> out;
    for (const auto& g : fit.groups)
        for (const auto& r : fit.regimes) {
            auto psi = fit.coef(psi_name(g, r));
            auto gam = fit.coef(gamma_name(r));
            if (psi && gam) out.push_back({g, r, *gam + *psi});
        }
    return out;
}

// ---------------------------------------------------------------------------
// Wild cluster bootstrap
// ---------------------------------------------------------------------------

/// Six-point multiplier set with mean 0 and variance 1, equal probabilities.
inline const std::array<double, 6>& webb_weights()
{
    static const std::array<double, 6> w = {-std::sqrt(1.5), -1.0, -std::sqrt(0.5),
                                            std::sqrt(0.5),  1.0,  std::sqrt(1.5)};
    return w;
}

/// Linear-interpolation sample quantile of sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double q)
{
    if (sorted.empty()) throw InputError("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BootstrapOptions {
    int reps = 999;
    std::uint64_t seed = 20250101;
    double level = 0.90;
    std::size_t threads = 1;
};

/// Percentile intervals from residual-multiplier draws, one multiplier per
/// cluster per replicate. Replicate r uses its own generator seeded from
/// (seed, r), so results do not depend on the thread count.
inline void wild_cluster_bootstrap(RegressionFit& fit, const BootstrapOptions& opt = {})
{
    if (opt.reps < 99) throw InputError("bootstrap: at least 99 replicates required");
    if (fit.clusters < 2) throw InputError("bootstrap: at least 2 clusters required");
    if (!(opt.level > 0.0 && opt.level < 1.0)) throw InputError("bootstrap: level must lie in (0, 1)");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fit.design);
    const auto& w = webb_weights();
    const Eigen::Index n = fit.design.rows();
    const std::size_t p = fit.names.size();
    auto draws = parallel_map(static_cast<std::size_t>(opt.reps), opt.threads, [&](std::size_t r) {
        std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                          static_cast<std::uint32_t>(r)};
        std::mt19937_64 rng(seq);
        std::vector<double> v(fit.clusters);
        for (auto& x : v) x = w[rng() % 6];
        Eigen::VectorXd e(n);
        for (Eigen::Index i = 0; i < n; ++i) e[i] = fit.residuals[i] * v[fit.cluster_of[static_cast<std::size_t>(i)]];
        Eigen::VectorXd b = fit.beta + qr.solve(e);
        return std::vector<double>(b.data(), b.data() + b.size());
    });
    const double tail = (1.0 - opt.level) / 2.0;
    fit.ci_lo.assign(p, 0.0);
    fit.ci_hi.assign(p, 0.0);
    std::vector<double> col(draws.size());
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t r = 0; r < draws.size(); ++r) col[r] = draws[r][k];
        std::sort(col.begin(), col.end());
        fit.ci_lo[k] = sorted_quantile(col, tail);
        fit.ci_hi[k] = sorted_quantile(col, 1.0 - tail);
    }
}

// ---------------------------------------------------------------------------
// Average MEB in the trade-off zone
// ---------------------------------------------------------------------------

struct AlphaTildeRegime {
    std::string regime;
    std::optional<double> alpha_tilde;
    std::size_t observations = 0;
    bool flagged = false;  // fewer than the minimum observation count
    std::vector<double> residuals;
};

struct AlphaTildeOptions {
    std::size_t min_obs = 10;
    std::vector<std::string> exclude_partners;
    std::vector<std::string> exclude_groups;
};

/// Through-origin regression of -dW on dT per regime, trade-off observations only.
inline std::vector<AlphaTildeRegime> estimate_alpha_tilde(const std::vector<WedgeObservation>& obs,
                                                          const std::vector<std::string>& regimes,
                                                          const AlphaTildeOptions& opt = {})
{
    const std::set<std::string> skip_p(opt.exclude_partners.begin(), opt.exclude_partners.end());
    const std::set<std::string> skip_g(opt.exclude_groups.begin(), opt.exclude_groups.end());
    std::vector<AlphaTildeRegime> out;
    for (const auto& r : regimes) {
        AlphaTildeRegime fit;
        fit.regime = r;
        double sxy = 0.0, sxx = 0.0;
        std::vector<const WedgeObservation*> used;
        for (const auto& o : obs) {
            if (o.regime != r || o.zone != "TradeOff" || skip_p.count(o.partner) || skip_g.count(o.group)) continue;
            if (!(o.dW_home < 0.0 && o.dT_home > 0.0)) continue;  // revenue-costing welfare gains are not a revenue motive
            sxy += o.dT_home * -o.dW_home;
            sxx += o.dT_home * o.dT_home;
            used.push_back(&o);
        }
        fit.observations = used.size();
        fit.flagged = used.size() < opt.min_obs;
        if (sxx > 0.0) {
            fit.alpha_tilde = sxy / sxx;
            for (auto* o : used) fit.residuals.push_back(-o->dW_home - *fit.alpha_tilde * o->dT_home);
        }
        out.push_back(std::move(fit));
    }
    return out;
}

}  // namespace tariffcge
