#pragma once

#include "tariffcge/fiscal.hpp"
#include "tariffcge/hill_climb.hpp"
#include "tariffcge/parallel.hpp"
#include "tariffcge/solver.hpp"
#include "tariffcge/types.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tariffcge {

enum class ResponseKind { none, equivalent, revenue_max, welfare_max };
enum class ReferenceKind { bilateral_free_trade, multilateral_free_trade, jan1_baseline, custom };
enum class Accounting { full, bilateral_only };
enum class PartnerObjective { revenue, welfare };

inline std::string to_string(ResponseKind r)
{
    switch (r) {
    case ResponseKind::none: return "none";
    case ResponseKind::equivalent: return "equivalent";
    case ResponseKind::revenue_max: return "revenue_max";
    case ResponseKind::welfare_max: return "welfare_max";
    }
    return "";
}

inline ResponseKind parse_response(const std::string& s)
{
    if (s == "none") return ResponseKind::none;
    if (s == "equivalent") return ResponseKind::equivalent;
    if (s == "revenue_max") return ResponseKind::revenue_max;
    if (s == "welfare_max") return ResponseKind::welfare_max;
    throw ConfigError("unknown response '" + s + "' (expected none|equivalent|revenue_max|welfare_max)");
}

inline std::string to_string(ReferenceKind r)
{
    switch (r) {
    case ReferenceKind::bilateral_free_trade: return "bilateral_free_trade";
    case ReferenceKind::multilateral_free_trade: return "multilateral_free_trade";
    case ReferenceKind::jan1_baseline: return "jan1_baseline";
    case ReferenceKind::custom: return "custom";
    }
    return "";
}

inline ReferenceKind parse_reference(const std::string& s)
{
    if (s == "bilateral_free_trade") return ReferenceKind::bilateral_free_trade;
    if (s == "multilateral_free_trade") return ReferenceKind::multilateral_free_trade;
    if (s == "jan1_baseline") return ReferenceKind::jan1_baseline;
    if (s == "custom") return ReferenceKind::custom;
    throw ConfigError("unknown reference '" + s + "'");
}

inline std::vector<double> default_rate_grid()
{
    std::vector<double> g;
    for (int t = 0; t <= 50; ++t) g.push_back(t);
    return g;
}

struct ScanSpec {
    std::size_t home = 0;
    std::vector<std::size_t> partners;
    std::vector<double> rate_grid_pct = default_rate_grid();
    ResponseKind response = ResponseKind::none;
    ReferenceKind reference = ReferenceKind::bilateral_free_trade;
    std::optional<TariffSchedule> custom_reference;
    ModelVariant variant = ModelVariant::full;
    Accounting accounting = Accounting::full;
    ResponseGrid response_grid;
};

inline void validate_scan_spec(const ScanSpec& spec, const EconomyCalibration& calib)
{
    const std::size_t n = calib.num_regions();
    if (spec.home >= n) throw InputError("scan: home region out of range");
    for (auto j : spec.partners) {
        if (j >= n) throw InputError("scan: partner out of range");
        if (j == spec.home) throw InputError("scan: partners must exclude the home region");
    }
    if (spec.rate_grid_pct.empty()) throw InputError("scan: empty rate grid");
    for (std::size_t k = 0; k < spec.rate_grid_pct.size(); ++k) {
        if (!(spec.rate_grid_pct[k] >= 0.0) || !std::isfinite(spec.rate_grid_pct[k]))
            throw InputError("scan: rates must be finite and nonnegative");
        if (k && !(spec.rate_grid_pct[k] > spec.rate_grid_pct[k - 1]))
            throw InputError("scan: rate grid must be strictly increasing");
    }
    if (spec.reference == ReferenceKind::custom && !spec.custom_reference)
        throw InputError("scan: custom reference requested without a schedule");
    if (spec.accounting == Accounting::bilateral_only && spec.partners.size() != 1)
        throw InputError("scan: bilateral-only accounting needs exactly one partner");
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

/// Sets tau(importer, exporter, s) = 1 + rate on every tariffable sector.
inline void set_bilateral_rate(TariffSchedule& sched, const EconomyCalibration& calib, std::size_t importer,
                               std::size_t exporter, double rate_pct)
{
    for (std::size_t s = 0; s < calib.num_sectors(); ++s)
        if (calib.sectors[s].tariffable) sched.tau(importer, exporter, s) = 1.0 + rate_pct / 100.0;
}

inline TariffSchedule reference_schedule(const EconomyCalibration& calib, const ScanSpec& spec)
{
    switch (spec.reference) {
    case ReferenceKind::custom: {
        TariffSchedule s = *spec.custom_reference;
        validate_schedule(s, calib.sectors);
        return s;
    }
    case ReferenceKind::jan1_baseline: return calib.baseline_schedule();
    case ReferenceKind::bilateral_free_trade:
    case ReferenceKind::multilateral_free_trade: {
        TariffSchedule s = calib.baseline_schedule();
        s.label = to_string(spec.reference);
        std::vector<std::size_t> freed = spec.partners;
        if (spec.reference == ReferenceKind::multilateral_free_trade) {
            freed.clear();
            for (std::size_t j = 0; j < calib.num_regions(); ++j)
                if (j != spec.home) freed.push_back(j);
        }
        for (auto j : freed)
            for (std::size_t k = 0; k < calib.num_sectors(); ++k) {
                s.tau(spec.home, j, k) = 1.0;
                s.tau(j, spec.home, k) = 1.0;
            }
        return s;
    }
    }
    throw InputError("scan: unknown reference kind");
}

// ---------------------------------------------------------------------------
// Cached evaluation
// ---------------------------------------------------------------------------

/// Solves schedules against one calibration and memoizes the outcomes. Every
/// solve starts from unit wages so results never depend on evaluation order.
class ScanContext {
public:
    ScanContext(const EconomyCalibration& calib, ModelVariant variant, SolveOptions opt = {})
        : calib_(calib), variant_(variant), opt_(std::move(opt))
    {
        opt_.initial_wages.clear();
    }

    const EconomyCalibration& calibration() const { return calib_; }
    ModelVariant variant() const { return variant_; }

    std::shared_ptr<const EquilibriumOutcome> solve(const TariffSchedule& sched)
    {
        const std::size_t key = hash_of(sched.tau);
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto range = cache_.equal_range(key);
            for (auto it = range.first; it != range.second; ++it)
                if (it->second->schedule.tau == sched.tau) {
                    ++hits_;
                    return it->second;
                }
        }
        auto eq = std::make_shared<const EquilibriumOutcome>(solve_equilibrium(calib_, sched, variant_, opt_));
        std::lock_guard<std::mutex> lock(mu_);
        auto range = cache_.equal_range(key);
        for (auto it = range.first; it != range.second; ++it)
            if (it->second->schedule.tau == sched.tau) return it->second;
        ++solves_;
        cache_.emplace(key, eq);
        return eq;
    }

    std::size_t solves() const
    {
        std::lock_guard<std::mutex> lock(mu_);
        return solves_;
    }
    std::size_t hits() const
    {
        std::lock_guard<std::mutex> lock(mu_);
        return hits_;
    }

private:
    std::size_t hash_of(const Cube& tau) const
    {
        const auto& d = tau.data();
        std::string_view bytes(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double));
        return std::hash<std::string_view>{}(bytes) ^ (static_cast<std::size_t>(variant_) * 0x9e3779b97f4a7c15ULL);
    }

    const EconomyCalibration& calib_;
    ModelVariant variant_;
    SolveOptions opt_;
    mutable std::mutex mu_;
    std::multimap<std::size_t, std::shared_ptr<const EquilibriumOutcome>> cache_;
    std::size_t solves_ = 0;
    std::size_t hits_ = 0;
};

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

struct CurvePoint {
    double rate_pct = 0.0;
    double d_revenue = 0.0;
    double d_welfare_home = 0.0;
    double d_welfare_partner = 0.0;
    double d_welfare_world = 0.0;
    std::optional<double> response_rate_pct;
    std::vector<double> partner_rates_pct;  // per targeted partner, as applied
};

struct PolicyCurve {
    std::vector<std::size_t> partners;
    ResponseKind response = ResponseKind::none;
    std::vector<CurvePoint> points;
    double peak_revenue_rate = 0.0;
    double peak_welfare_rate = 0.0;
    double peak_revenue = 0.0;
    double peak_welfare = 0.0;
    std::string reference;
};

/// Discrete argmax with lowest-rate tie-breaking.
inline std::size_t argmax_lowest(const std::vector<double>& v)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = k;
    return best;
}

inline void record_peaks(PolicyCurve& c)
{
    if (c.points.empty()) return;
    std::vector<double> r, w;
    for (const auto& p : c.points) {
        r.push_back(p.d_revenue);
        w.push_back(p.d_welfare_home);
    }
    const auto kr = argmax_lowest(r), kw = argmax_lowest(w);
    c.peak_revenue_rate = c.points[kr].rate_pct;
    c.peak_revenue = r[kr];
    c.peak_welfare_rate = c.points[kw].rate_pct;
    c.peak_welfare = w[kw];
}

/// Changes of `eq` relative to `ref`, in report-scaled currency.
inline CurvePoint measure_point(const EconomyCalibration& calib, const EquilibriumOutcome& eq,
                                const EquilibriumOutcome& ref, std::size_t home,
                                const std::vector<std::size_t>& partners)
{
    const double kappa = calib.report_scale;
    auto dw = [&](std::size_t j) { return (eq.welfare_hat[j] - ref.welfare_hat[j]) * calib.gdp(j) * kappa; };
    CurvePoint p;
    p.d_revenue = (eq.tariff_revenue_cf[home] - ref.tariff_revenue_cf[home]) * kappa;
    p.d_welfare_home = dw(home);
    for (auto j : partners) p.d_welfare_partner += dw(j);
    for (std::size_t j = 0; j < calib.num_regions(); ++j) p.d_welfare_world += dw(j);
    return p;
}

struct BestResponse {
    double rate_pct = 0.0;
    int grid_index = 0;
    int evaluations = 0;
};

inline double partner_objective_value(const EquilibriumOutcome& eq, std::size_t partner, PartnerObjective obj)
{
    return obj == PartnerObjective::welfare ? eq.welfare_hat[partner] : eq.tariff_revenue_cf[partner];
}

/// Partner's optimal uniform tariff on imports from `home`, given `schedule`
/// for everything else. Hill-climbs the response grid from `warm_start_pct`.
inline BestResponse best_response(ScanContext& ctx, const TariffSchedule& schedule, std::size_t home,
                                  std::size_t partner, PartnerObjective objective, double warm_start_pct,
                                  const ResponseGrid& grid = {})
{
    const auto& calib = ctx.calibration();
    if (partner == home) throw InputError("best_response: partner must differ from home");
    auto value = [&](int k) {
        TariffSchedule s = schedule;
        set_bilateral_rate(s, calib, partner, home, grid.rate(k));
        return partner_objective_value(*ctx.solve(s), partner, objective);
    };
    auto r = hill_climb(grid, grid.snap(warm_start_pct), value);
    return {grid.rate(r.index), r.index, r.evaluations};
}

struct SequentialResponses {
    std::vector<double> rates_pct;        // final, in partner order
    std::vector<double> first_pass_pct;
    double second_pass_drift_pct = 0.0;   // max |second - first|; 0 when not run
};

/// One pass of best responses in the given order; each mover takes earlier
/// movers' new rates and later movers' starting rates as given. The optional
/// second pass re-optimizes everyone once and reports the largest change.
inline SequentialResponses sequential_optimal_responses(ScanContext& ctx, const TariffSchedule& schedule,
                                                        std::size_t home, const std::vector<std::size_t>& partners,
                                                        PartnerObjective objective,
                                                        std::vector<double> start_pct = {}, bool second_pass = false,
                                                        const ResponseGrid& grid = {})
{
    const auto& calib = ctx.calibration();
    if (start_pct.empty()) start_pct.assign(partners.size(), 0.0);
    if (start_pct.size() != partners.size()) throw InputError("sequential responses: start rates size mismatch");
    TariffSchedule s = schedule;
    for (std::size_t m = 0; m < partners.size(); ++m)
        set_bilateral_rate(s, calib, partners[m], home, grid.rate(grid.snap(start_pct[m])));
    SequentialResponses out;
    out.rates_pct = start_pct;
    auto one_pass = [&] {
        for (std::size_t m = 0; m < partners.size(); ++m) {
            auto br = best_response(ctx, s, home, partners[m], objective, out.rates_pct[m], grid);
            out.rates_pct[m] = br.rate_pct;
            set_bilateral_rate(s, calib, partners[m], home, br.rate_pct);
        }
    };
    one_pass();
    out.first_pass_pct = out.rates_pct;
    if (second_pass) {
        one_pass();
        for (std::size_t m = 0; m < partners.size(); ++m)
            out.second_pass_drift_pct =
                std::max(out.second_pass_drift_pct, std::abs(out.rates_pct[m] - out.first_pass_pct[m]));
        out.rates_pct = out.first_pass_pct;
    }
    return out;
}

namespace detail {

inline std::optional<PartnerObjective> objective_of(ResponseKind r)
{
    if (r == ResponseKind::revenue_max) return PartnerObjective::revenue;
    if (r == ResponseKind::welfare_max) return PartnerObjective::welfare;
    return std::nullopt;
}

/// Evaluates a curve where home imposes each grid rate on `targets` and the
/// targets respond per `spec.response`; measured against `ref_schedule`.
inline PolicyCurve run_curve(ScanContext& ctx, const ScanSpec& spec, const std::vector<std::size_t>& targets,
                             const TariffSchedule& ref_schedule, std::size_t threads)
{
    const auto& calib = ctx.calibration();
    const auto ref = ctx.solve(ref_schedule);
    PolicyCurve curve;
    curve.partners = targets;
    curve.response = spec.response;
    curve.reference = ref_schedule.label.empty() ? to_string(spec.reference) : ref_schedule.label;

    auto point_at = [&](double t, const std::vector<std::optional<double>>& responses) {
        TariffSchedule s = ref_schedule;
        for (std::size_t m = 0; m < targets.size(); ++m) {
            set_bilateral_rate(s, calib, spec.home, targets[m], t);
            if (responses[m]) set_bilateral_rate(s, calib, targets[m], spec.home, *responses[m]);
        }
        auto eq = ctx.solve(s);
        CurvePoint p = measure_point(calib, *eq, *ref, spec.home, targets);
        if (spec.accounting == Accounting::bilateral_only) {
            auto b = bilateral_only_accounting(*eq, *ref, calib, spec.home, targets.front());
            p.d_revenue = b.d_revenue;
            p.d_welfare_home = b.d_welfare;
        }
        p.rate_pct = t;
        double sum = 0.0;
        int count = 0;
        for (const auto& r : responses) {
            if (!r) continue;
            p.partner_rates_pct.push_back(*r);
            sum += *r;
            ++count;
        }
        if (count) p.response_rate_pct = sum / count;
        return p;
    };

    const auto& grid = spec.rate_grid_pct;
    auto failing = [&](double t, const std::exception& e) {
        return SolverError(fmt::format("curve aborted at rate {}%: {}", t, e.what()));
    };
    if (targets.empty()) {
        for (double t : grid) {
            CurvePoint p;
            p.rate_pct = t;
            curve.points.push_back(p);
        }
    } else if (auto obj = objective_of(spec.response)) {
        std::vector<double> warm(targets.size(), 0.0);
        for (double t : grid) {
            try {
                TariffSchedule s = ref_schedule;
                for (auto j : targets) set_bilateral_rate(s, calib, spec.home, j, t);
                auto seq = sequential_optimal_responses(ctx, s, spec.home, targets, *obj, warm, false,
                                                        spec.response_grid);
                warm = seq.rates_pct;
                std::vector<std::optional<double>> resp(seq.rates_pct.begin(), seq.rates_pct.end());
                curve.points.push_back(point_at(t, resp));
            } catch (const SolverError& e) {
                throw failing(t, e);
            }
        }
    } else {
        curve.points = parallel_map(grid.size(), threads, [&](std::size_t k) {
            const double t = grid[k];
            std::vector<std::optional<double>> resp(targets.size());
            if (spec.response == ResponseKind::equivalent)
                for (auto& r : resp) r = t;
            try {
                return point_at(t, resp);
            } catch (const SolverError& e) {
                throw failing(t, e);
            }
        });
    }
    record_peaks(curve);
    return curve;
}

}  // namespace detail

/// Bilateral Laffer/welfare curve against the single partner in `spec`.
inline PolicyCurve bilateral_laffer(ScanContext& ctx, const ScanSpec& spec, std::size_t threads = 1)
{
    validate_scan_spec(spec, ctx.calibration());
    if (spec.partners.size() != 1) throw InputError("bilateral_laffer: exactly one partner required");
    return detail::run_curve(ctx, spec, spec.partners, reference_schedule(ctx.calibration(), spec), threads);
}

/// Bilateral MEB at zero tariff for each partner from the first two grid
/// points, against bilateral free trade. Undefined values sort last.
inline std::vector<std::pair<std::size_t, std::optional<double>>> partner_meb_at_zero(
    ScanContext& ctx, std::size_t home, const std::vector<std::size_t>& partners, std::size_t threads = 1)
{
    const auto& calib = ctx.calibration();
    auto mebs = parallel_map(partners.size(), threads, [&](std::size_t m) {
        ScanSpec spec;
        spec.home = home;
        spec.partners = {partners[m]};
        spec.rate_grid_pct = {0.0, 1.0};
        spec.variant = ctx.variant();
        auto curve = detail::run_curve(ctx, spec, spec.partners, reference_schedule(calib, spec), 1);
        const double h = 0.01;
        MarginalPoint p{(curve.points[1].d_welfare_home - curve.points[0].d_welfare_home) / h,
                        (curve.points[1].d_revenue - curve.points[0].d_revenue) / h, kDefaultAlpha};
        return meb(p);
    });
    std::vector<std::pair<std::size_t, std::optional<double>>> out;
    for (std::size_t m = 0; m < partners.size(); ++m) out.emplace_back(partners[m], mebs[m]);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (!a.second || !b.second) return a.second.has_value() && !b.second.has_value();
        return *a.second < *b.second;
    });
    return out;
}

/// Curves for k = 0..K targeted partners (first k in `spec.partners`), all
/// against multilateral free trade for home.
inline std::vector<PolicyCurve> cumulative_laffer(ScanContext& ctx, ScanSpec spec, std::size_t threads = 1)
{
    validate_scan_spec(spec, ctx.calibration());
    spec.reference = ReferenceKind::multilateral_free_trade;
    spec.accounting = Accounting::full;
    const TariffSchedule ref = reference_schedule(ctx.calibration(), spec);
    std::vector<PolicyCurve> out;
    for (std::size_t k = 0; k <= spec.partners.size(); ++k) {
        std::vector<std::size_t> targets(spec.partners.begin(), spec.partners.begin() + k);
        out.push_back(detail::run_curve(ctx, spec, targets, ref, threads));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Timeline
// ---------------------------------------------------------------------------

struct TimelineRow {
    std::string date;
    double avg_import_pct = 0.0;
    double avg_export_pct = 0.0;
    double d_revenue_home_only = 0.0;
    double d_revenue_retaliation = 0.0;
    double d_welfare_home_home_only = 0.0;
    double d_welfare_home_retaliation = 0.0;
    double d_welfare_rest_home_only = 0.0;
    double d_welfare_rest_retaliation = 0.0;
    std::optional<double> home_cost_per_dollar;
    std::optional<double> global_cost_per_dollar;
};

/// Per-dollar welfare cost |dW| / dR; undefined when dR is zero.
inline std::optional<double> cost_per_dollar(double d_welfare, double d_revenue)
{
    if (d_revenue == 0.0) return std::nullopt;
    return std::abs(d_welfare) / d_revenue;
}

/// For each dated schedule: a home-only equilibrium (reference plus home's
/// own import tariffs at that date) and the joint equilibrium (the full dated
/// schedule). The retaliation columns are joint minus home-only.
inline std::vector<TimelineRow> timeline_scenarios(ScanContext& ctx, const std::vector<TariffSchedule>& dated,
                                                   const TariffSchedule& reference, std::size_t home,
                                                   std::size_t threads = 1)
{
    const auto& calib = ctx.calibration();
    const std::size_t n = calib.num_regions(), ns = calib.num_sectors();
    validate_schedule(reference, calib.sectors);
    for (const auto& d : dated) validate_schedule(d, calib.sectors);
    const auto ref = ctx.solve(reference);
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < n; ++j)
        if (j != home) rest.push_back(j);

    return parallel_map(dated.size(), threads, [&](std::size_t k) {
        const TariffSchedule& joint_s = dated[k];
        TariffSchedule home_s = reference;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t s = 0; s < ns; ++s) home_s.tau(home, j, s) = joint_s.tau(home, j, s);
        auto home_eq = ctx.solve(home_s);
        auto joint_eq = ctx.solve(joint_s);
        const auto h = measure_point(calib, *home_eq, *ref, home, rest);
        const auto j = measure_point(calib, *joint_eq, *ref, home, rest);
        TimelineRow row;
        row.date = joint_s.date;
        row.avg_import_pct = trade_weighted_avg_tariff(*joint_eq, calib, joint_s, TradeSide::imports, home);
        row.avg_export_pct = trade_weighted_avg_tariff(*joint_eq, calib, joint_s, TradeSide::exports, home);
        row.d_revenue_home_only = h.d_revenue;
        row.d_revenue_retaliation = j.d_revenue - h.d_revenue;
        row.d_welfare_home_home_only = h.d_welfare_home;
        row.d_welfare_home_retaliation = j.d_welfare_home - h.d_welfare_home;
        row.d_welfare_rest_home_only = h.d_welfare_partner;
        row.d_welfare_rest_retaliation = j.d_welfare_partner - h.d_welfare_partner;
        row.home_cost_per_dollar = cost_per_dollar(j.d_welfare_home, j.d_revenue);
        if (j.d_revenue != 0.0)
            row.global_cost_per_dollar = (std::abs(j.d_welfare_home) + std::abs(j.d_welfare_partner)) / j.d_revenue;
        return row;
    });
}

}  // namespace tariffcge
