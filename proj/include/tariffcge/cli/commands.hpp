#pragma once

#include "tariffcge/archive.hpp"
#include "tariffcge/calibration.hpp"
#include "tariffcge/cli/config.hpp"
#include "tariffcge/csv.hpp"
#include "tariffcge/fiscal.hpp"
#include "tariffcge/inverse_optimum.hpp"
#include "tariffcge/parallel.hpp"
#include "tariffcge/policy_scan.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tariffcge::cli {

enum ExitCode { kOk = 0, kSolverFailure = 1, kInputFailure = 2, kConfigFailure = 3 };

using Logger = std::function<void(const std::string&)>;

/// Files produced by one command, held in memory until the command succeeds.
struct Outputs {
    std::map<std::string, std::string> files;
    std::string summary;  // printed to stdout
};

struct Overrides {
    std::optional<fs::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

/// Writes every file to a temporary sibling, then renames them into place.
/// On failure, temporaries are removed and no target file is touched.
inline void commit_outputs(const Outputs& out, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
    std::vector<std::pair<fs::path, fs::path>> staged;
    auto cleanup = [&] {
        for (auto& [tmp, target] : staged) fs::remove(tmp, ec);
    };
    for (const auto& [name, content] : out.files) {
        const fs::path target = dir / name;
        const fs::path tmp = dir / ("." + name + ".tmp");
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << content;
        f.close();
        staged.emplace_back(tmp, target);
        if (!f) {
            cleanup();
            throw InputError("cannot write " + tmp.string());
        }
    }
    for (auto& [tmp, target] : staged) {
        fs::rename(tmp, target, ec);
        if (ec) {
            cleanup();
            throw InputError("cannot move output into place: " + target.string());
        }
    }
}

// ---------------------------------------------------------------------------
// Shared state for one invocation
// ---------------------------------------------------------------------------

class Session {
public:
    Session(RunConfig cfg, Logger log) : cfg_(std::move(cfg)), log_(std::move(log))
    {
        model_ = parse_model(load_json(cfg_.inputs.model), cfg_.inputs.model.filename().string());
        threads_ = cfg_.threads == 0 ? default_thread_budget() : cfg_.threads;
    }

    const RunConfig& config() const { return cfg_; }
    const ModelFile& model() const { return model_; }
    std::size_t threads() const { return threads_; }
    void log(const std::string& msg) const
    {
        if (log_) log_(msg);
    }

    /// Calibration archive adjusted for the configured variant and elasticities.
    const EconomyCalibration& calibration()
    {
        if (calib_) return *calib_;
        EconomyCalibration c = read_archive(cfg_.inputs.calibration.string());
        if (c.regions != model_.model.region_ids() || c.sectors != model_.model.sector_infos())
            throw InputError("calibration archive does not match the model configuration");
        if (cfg_.uniform_theta) c = with_uniform_theta(std::move(c), *cfg_.uniform_theta);
        if (cfg_.variant == ModelVariant::no_io) {
            log("rebasing calibration for the no-IO variant");
            c = rebase_to_equilibrium(c, ModelVariant::no_io);
        }
        calib_ = std::move(c);
        return *calib_;
    }

    ScanContext& context()
    {
        if (!ctx_) ctx_ = std::make_unique<ScanContext>(calibration(), cfg_.variant, cfg_.solver);
        return *ctx_;
    }

    std::size_t home() { return region(cfg_.home); }

    std::size_t region(const std::string& id)
    {
        auto idx = calibration().region_index(id);
        if (!idx) throw InputError("unknown region '" + id + "'");
        return *idx;
    }

    std::vector<std::size_t> regions(const std::vector<std::string>& ids)
    {
        std::vector<std::size_t> out;
        for (const auto& id : ids) out.push_back(region(id));
        return out;
    }

    TariffSchedule schedule_at(const std::string& date)
    {
        if (!records_) {
            records_ = read_tariff_records(cfg_.inputs.tariffs.string());
            concordance_ = read_concordance(cfg_.inputs.concordance.string());
        }
        auto s = aggregate_tariffs(*records_, concordance_, date, model_.model);
        s.label = date;
        return s;
    }

private:
    RunConfig cfg_;
    Logger log_;
    ModelFile model_;
    std::size_t threads_ = 1;
    std::optional<EconomyCalibration> calib_;
    std::unique_ptr<ScanContext> ctx_;
    std::optional<std::vector<TariffRecord>> records_;
    Concordance concordance_;
};

inline std::string opt_num(const std::optional<double>& v) { return v ? csv::fmt_num(*v) : "NA"; }

inline const std::vector<std::string>& curve_header()
{
    static const std::vector<std::string> h = {"rate_pct",         "d_revenue",        "d_welfare_home",
                                               "d_welfare_partner", "d_welfare_world", "response_rate_pct"};
    return h;
}

inline std::vector<std::string> curve_row(const CurvePoint& p)
{
    return {csv::fmt_num(p.rate_pct),         csv::fmt_num(p.d_revenue),       csv::fmt_num(p.d_welfare_home),
            csv::fmt_num(p.d_welfare_partner), csv::fmt_num(p.d_welfare_world), opt_num(p.response_rate_pct)};
}

inline std::string curve_csv(const PolicyCurve& c)
{
    csv::Writer w(curve_header());
    for (const auto& p : c.points) w.row(curve_row(p));
    return w.str();
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline Outputs cmd_calibrate(Session& s)
{
    const auto& cfg = s.config();
    const auto io = read_io_table(cfg.inputs.io_table.string());
    const auto tau0 = s.schedule_at(cfg.inputs.baseline_date);
    CalibrationOptions opt;
    opt.floor_negative = cfg.calibrate.floor_negative;
    opt.rebase = cfg.calibrate.rebase;
    auto built = build_calibration(io, tau0, s.model().model, opt);
    const auto& c = built.calibration;

    double max_dev = 0.0, d_sum = 0.0, d_abs = 0.0;
    for (std::size_t i = 0; i < c.num_regions(); ++i) {
        d_sum += c.deficits[i];
        d_abs += std::abs(c.deficits[i]);
        for (std::size_t sct = 0; sct < c.num_sectors(); ++sct) {
            double p = 0.0, g = c.va_shares(i, sct);
            for (std::size_t j = 0; j < c.num_regions(); ++j) p += c.trade_shares(i, j, sct);
            for (std::size_t k = 0; k < c.num_sectors(); ++k) g += c.io_shares(i, k, sct);
            max_dev = std::max({max_dev, std::abs(p - 1.0), std::abs(g - 1.0)});
        }
    }
    Outputs out;
    out.files["calibration.json"] = write_archive(c);
    const auto& r = built.report;
    out.summary = fmt::format(
        "regions {}  sectors {}\n"
        "io records {}  dropped {}  ignored {}  negative floored {}  degenerate sectors {}  autarkic rows {}\n"
        "max share deviation {:.3g}  sum of deficits {:.6g} (abs total {:.6g})\n"
        "rebased {}\n"
        "content hash {}\n",
        c.num_regions(), c.num_sectors(), io.records.size(), r.dropped_rows, r.ignored_rows,
        r.negative_cells_floored, r.degenerate_sectors, r.autarkic_rows, max_dev, d_sum, d_abs,
        opt.rebase ? "yes" : "no", archive_hash(c));
    return out;
}

inline Outputs cmd_laffer(Session& s)
{
    const auto& cfg = s.config();
    if (!cfg.laffer) throw ConfigError("config has no laffer section");
    const auto& L = *cfg.laffer;
    auto& ctx = s.context();
    const auto& calib = s.calibration();
    const std::size_t home = s.home();
    Outputs out;
    csv::Writer peaks({"partner", "response", "peak_revenue_rate_pct", "peak_revenue", "peak_welfare_rate_pct",
                       "peak_welfare"});
    std::map<std::pair<std::string, ResponseKind>, PolicyCurve> curves;
    for (const auto& pid : L.partners) {
        for (auto resp : L.responses) {
            ScanSpec spec;
            spec.home = home;
            spec.partners = {s.region(pid)};
            spec.rate_grid_pct = L.grid;
            spec.response = resp;
            spec.reference = L.reference;
            if (L.custom_reference_date) spec.custom_reference = s.schedule_at(*L.custom_reference_date);
            spec.variant = cfg.variant;
            spec.accounting = L.accounting;
            s.log(fmt::format("laffer {} response {}", pid, to_string(resp)));
            auto curve = bilateral_laffer(ctx, spec, s.threads());
            out.files[fmt::format("laffer_{}_{}.csv", pid, to_string(resp))] = curve_csv(curve);
            peaks.row({pid, to_string(resp), csv::fmt_num(curve.peak_revenue_rate), csv::fmt_num(curve.peak_revenue),
                       csv::fmt_num(curve.peak_welfare_rate), csv::fmt_num(curve.peak_welfare)});
            curves.emplace(std::make_pair(pid, resp), std::move(curve));
        }
    }
    out.files["peaks.csv"] = peaks.str();
    const bool has_none = std::count(L.responses.begin(), L.responses.end(), ResponseKind::none) > 0;
    const bool has_eq = std::count(L.responses.begin(), L.responses.end(), ResponseKind::equivalent) > 0;
    if (has_none && has_eq) {
        csv::Writer t({"partner", "no_retaliation_peak_rate_pct", "no_retaliation_peak_revenue",
                       "equivalent_retaliation_peak_rate_pct", "equivalent_retaliation_peak_revenue"});
        for (const auto& pid : L.partners) {
            const auto& a = curves.at({pid, ResponseKind::none});
            const auto& b = curves.at({pid, ResponseKind::equivalent});
            t.row({pid, csv::fmt_num(a.peak_revenue_rate), csv::fmt_num(a.peak_revenue),
                   csv::fmt_num(b.peak_revenue_rate), csv::fmt_num(b.peak_revenue)});
        }
        out.files["laffer_peaks_table.csv"] = t.str();
    }
    (void)calib;
    out.summary = fmt::format("{} curves written\n", curves.size());
    return out;
}

inline Outputs cmd_cumulative(Session& s)
{
    const auto& cfg = s.config();
    if (!cfg.cumulative) throw ConfigError("config has no cumulative section");
    const auto& C = *cfg.cumulative;
    auto& ctx = s.context();
    const auto& calib = s.calibration();
    const std::size_t home = s.home();
    std::vector<std::string> ids = C.partners.empty() ? s.model().partner_order : C.partners;
    if (ids.empty()) throw ConfigError("cumulative: no partners configured and the model has no partner_order");
    std::vector<std::size_t> partners = s.regions(ids);
    Outputs out;
    csv::Writer order({"position", "partner", "meb_at_zero"});
    if (C.order_by_meb) {
        auto ranked = partner_meb_at_zero(ctx, home, partners, s.threads());
        partners.clear();
        for (std::size_t k = 0; k < ranked.size(); ++k) {
            partners.push_back(ranked[k].first);
            order.row({std::to_string(k + 1), calib.regions[ranked[k].first], opt_num(ranked[k].second)});
        }
    } else {
        for (std::size_t k = 0; k < partners.size(); ++k)
            order.row({std::to_string(k + 1), calib.regions[partners[k]], "NA"});
    }
    out.files["partner_order.csv"] = order.str();

    csv::Writer peaks({"response", "k", "added_partner", "peak_revenue_rate_pct", "peak_revenue",
                       "peak_welfare_rate_pct", "peak_welfare"});
    for (auto resp : C.responses) {
        ScanSpec spec;
        spec.home = home;
        spec.partners = partners;
        spec.rate_grid_pct = C.grid;
        spec.response = resp;
        spec.variant = cfg.variant;
        s.log(fmt::format("cumulative response {}", to_string(resp)));
        auto curves = cumulative_laffer(ctx, spec, s.threads());
        auto header = curve_header();
        header.insert(header.begin(), {"k", "added_partner"});
        csv::Writer w(header);
        for (std::size_t k = 0; k < curves.size(); ++k) {
            const std::string added = k == 0 ? "" : calib.regions[partners[k - 1]];
            for (const auto& p : curves[k].points) {
                auto row = curve_row(p);
                row.insert(row.begin(), {std::to_string(k), added});
                w.row(row);
            }
            peaks.row({to_string(resp), std::to_string(k), added, csv::fmt_num(curves[k].peak_revenue_rate),
                       csv::fmt_num(curves[k].peak_revenue), csv::fmt_num(curves[k].peak_welfare_rate),
                       csv::fmt_num(curves[k].peak_welfare)});
        }
        out.files[fmt::format("cumulative_{}.csv", to_string(resp))] = w.str();
    }
    out.files["cumulative_peaks.csv"] = peaks.str();
    out.summary = fmt::format("{} partners, {} response scenarios\n", partners.size(), C.responses.size());
    return out;
}

inline Outputs cmd_mfei(Session& s)
{
    const auto& cfg = s.config();
    if (!cfg.mfei) throw ConfigError("config has no mfei section");
    const auto& M = *cfg.mfei;
    auto& ctx = s.context();
    const std::size_t home = s.home();
    Outputs out;
    for (auto resp : M.responses) {
        csv::Writer w({"partner", "rate_pct", "d_welfare", "d_revenue", "meb", "mfei", "zone"});
        std::vector<std::vector<CurveMarginal>> per_partner;
        for (const auto& pid : M.partners) {
            ScanSpec spec;
            spec.home = home;
            spec.partners = {s.region(pid)};
            spec.rate_grid_pct = M.grid;
            spec.response = resp;
            spec.variant = cfg.variant;
            auto curve = bilateral_laffer(ctx, spec, s.threads());
            std::vector<double> rates, wel, rev;
            for (const auto& p : curve.points) {
                rates.push_back(p.rate_pct);
                wel.push_back(p.d_welfare_home);
                rev.push_back(p.d_revenue);
            }
            auto marg = curve_marginals(rates, wel, rev, M.alpha);
            for (const auto& m : marg)
                w.row({pid, csv::fmt_num(m.rate_pct), csv::fmt_num(m.point.dW), csv::fmt_num(m.point.dR),
                       opt_num(meb(m.point)), csv::fmt_num(mfei(m.point)), zone3_label(m.point)});
            per_partner.push_back(std::move(marg));
        }
        if (!per_partner.empty()) {
            for (std::size_t k = 0; k < per_partner.front().size(); ++k) {
                std::vector<double> dw, dr, mebs, idx;
                for (const auto& pp : per_partner) {
                    dw.push_back(pp[k].point.dW);
                    dr.push_back(pp[k].point.dR);
                    idx.push_back(mfei(pp[k].point));
                    if (auto v = meb(pp[k].point)) mebs.push_back(*v);
                }
                const MarginalPoint med{median(dw), median(dr), M.alpha};
                w.row({"MEDIAN", csv::fmt_num(per_partner.front()[k].rate_pct), csv::fmt_num(med.dW),
                       csv::fmt_num(med.dR), mebs.empty() ? "NA" : csv::fmt_num(median(mebs)),
                       csv::fmt_num(median(idx)), zone3_label(med)});
            }
        }
        out.files[fmt::format("mfei_{}.csv", to_string(resp))] = w.str();
    }
    out.summary = fmt::format("{} partners, {} response scenarios\n", M.partners.size(), M.responses.size());
    return out;
}

inline Outputs cmd_timeline(Session& s)
{
    const auto& cfg = s.config();
    if (!cfg.timeline) throw ConfigError("config has no timeline section");
    const auto& T = *cfg.timeline;
    auto& ctx = s.context();
    const auto reference = s.schedule_at(T.reference_date);
    std::vector<TariffSchedule> dated;
    for (const auto& d : T.dates) dated.push_back(s.schedule_at(d));
    auto rows = timeline_scenarios(ctx, dated, reference, s.home(), s.threads());
    csv::Writer w({"date", "avg_import_pct", "avg_export_pct", "d_revenue_home_only", "d_revenue_retaliation",
                   "d_welfare_home_home_only", "d_welfare_home_retaliation", "d_welfare_rest_home_only",
                   "d_welfare_rest_retaliation", "home_cost_per_dollar", "global_cost_per_dollar"});
    for (const auto& r : rows)
        w.row({r.date, csv::fmt_num(r.avg_import_pct), csv::fmt_num(r.avg_export_pct),
               csv::fmt_num(r.d_revenue_home_only), csv::fmt_num(r.d_revenue_retaliation),
               csv::fmt_num(r.d_welfare_home_home_only), csv::fmt_num(r.d_welfare_home_retaliation),
               csv::fmt_num(r.d_welfare_rest_home_only), csv::fmt_num(r.d_welfare_rest_retaliation),
               opt_num(r.home_cost_per_dollar), opt_num(r.global_cost_per_dollar)});
    Outputs out;
    out.files["timeline.csv"] = w.str();
    out.summary = fmt::format("{} dates against reference {}\n", rows.size(), T.reference_date);
    return out;
}

inline Outputs cmd_invopt(Session& s)
{
    const auto& cfg = s.config();
    if (!cfg.invopt) throw ConfigError("config has no invopt section");
    const auto& V = *cfg.invopt;
    Outputs out;
    std::vector<WedgeObservation> obs;
    std::size_t dropped = 0;
    if (V.observations) {
        obs = read_observations(V.observations->string());
        for (auto& o : obs) label_observation(o, V.groups, V.regimes);
    } else {
        auto& ctx = s.context();
        const auto& calib = s.calibration();
        const std::size_t home = s.home();
        std::vector<std::size_t> partners;
        if (V.partners.empty()) {
            for (std::size_t j = 0; j < calib.num_regions(); ++j) {
                if (j == home) continue;
                const auto& id = calib.regions[j];
                if (V.groups.explicit_groups.count(id) || V.groups.ideal_points.count(id)) partners.push_back(j);
            }
        } else {
            partners = s.regions(V.partners);
        }
        std::vector<TariffSchedule> dated;
        for (const auto& d : V.dates) dated.push_back(s.schedule_at(d));
        auto set = collect_observations(ctx, dated, home, partners, V.groups, V.regimes, V.delta, V.alpha, s.threads());
        for (const auto& why : set.dropped) s.log("dropped observation " + why);
        dropped = set.dropped.size();
        obs = std::move(set.observations);
        out.files["observations.csv"] = write_observations(obs);
    }

    RegressionOptions ropt;
    ropt.fe_sectors = V.fe_sectors;
    ropt.regressor_scale = V.regressor_scale;
    auto fit = fit_wedge_regression(obs, ropt);
    BootstrapOptions bopt;
    bopt.reps = V.reps;
    bopt.seed = cfg.seed;
    bopt.threads = s.threads();
    wild_cluster_bootstrap(fit, bopt);

    csv::Writer coef({"coefficient", "estimate", "ci90_lo", "ci90_hi"});
    for (std::size_t k = 0; k < fit.names.size(); ++k)
        coef.row({fit.names[k], csv::fmt_num(fit.beta[static_cast<Eigen::Index>(k)]), csv::fmt_num(fit.ci_lo[k]),
                  csv::fmt_num(fit.ci_hi[k])});
    out.files["wedge_coefficients.csv"] = coef.str();

    csv::Writer ew({"group", "regime", "effective_weight"});
    for (const auto& e : effective_weights(fit)) ew.row({e.group, e.regime, csv::fmt_num(e.weight)});
    out.files["effective_weights.csv"] = ew.str();

    std::vector<std::string> regimes;
    for (const auto& r : V.regimes) regimes.push_back(r.name);
    AlphaTildeOptions aopt;
    aopt.min_obs = V.min_obs;
    aopt.exclude_partners = V.exclude_partners;
    aopt.exclude_groups = V.exclude_groups;
    csv::Writer at({"regime", "alpha_tilde", "observations", "flagged"});
    for (const auto& a : estimate_alpha_tilde(obs, regimes, aopt))
        at.row({a.regime, opt_num(a.alpha_tilde), std::to_string(a.observations), a.flagged ? "1" : "0"});
    out.files["alpha_tilde.csv"] = at.str();

    csv::Writer zs({"regime", "observations", "free_lunch_share", "trade_off_share", "beyond_laffer_share"});
    for (const auto& r : regimes) {
        double n = 0, fl = 0, to = 0, bl = 0;
        for (const auto& o : obs) {
            if (o.regime != r) continue;
            ++n;
            fl += o.zone == "FreeLunch";
            to += o.zone == "TradeOff";
            bl += o.zone == "BeyondLaffer";
        }
        if (n == 0) continue;
        zs.row({r, csv::fmt_num(n), csv::fmt_num(fl / n), csv::fmt_num(to / n), csv::fmt_num(bl / n)});
    }
    out.files["zone_shares.csv"] = zs.str();

    csv::Writer sm({"item", "value"});
    sm.row({"observations", std::to_string(fit.y.size())});
    sm.row({"clusters", std::to_string(fit.clusters)});
    sm.row({"dropped", std::to_string(dropped)});
    sm.row({"bootstrap_reps", std::to_string(V.reps)});
    sm.row({"seed", std::to_string(cfg.seed)});
    sm.row({"alpha", csv::fmt_num(V.alpha)});
    out.files["invopt_summary.csv"] = sm.str();
    out.summary = fmt::format("{} observations in {} clusters, {} coefficients\n", fit.y.size(), fit.clusters,
                              fit.names.size());
    return out;
}

inline const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names = {"calibrate", "laffer", "cumulative", "mfei", "timeline", "invopt"};
    return names;
}

struct RunResult {
    int exit_code = kOk;
    std::string message;  // error text or summary
    fs::path output_dir;
};

/// Loads the config, runs one command and commits its outputs. Maps failures
/// to exit codes; never leaves partial outputs behind.
inline RunResult run_command(const std::string& command, const fs::path& config_path, const Overrides& ov = {},
                             Logger log = {})
{
    RunResult res;
    try {
        auto cfg = load_run_config(config_path);
        if (ov.out) cfg.output_dir = *ov.out;
        if (ov.seed) cfg.seed = *ov.seed;
        if (ov.threads) cfg.threads = *ov.threads;
        res.output_dir = cfg.output_dir;
        Session session(std::move(cfg), std::move(log));
        Outputs out;
        if (command == "calibrate")
            out = cmd_calibrate(session);
        else if (command == "laffer")
            out = cmd_laffer(session);
        else if (command == "cumulative")
            out = cmd_cumulative(session);
        else if (command == "mfei")
            out = cmd_mfei(session);
        else if (command == "timeline")
            out = cmd_timeline(session);
        else if (command == "invopt")
            out = cmd_invopt(session);
        else
            throw ConfigError("unknown command '" + command + "'");
        commit_outputs(out, res.output_dir);
        res.message = out.summary;
    } catch (const ConfigError& e) {
        res.exit_code = kConfigFailure;
        res.message = e.what();
    } catch (const SolverError& e) {
        res.exit_code = kSolverFailure;
        res.message = e.what();
    } catch (const InputError& e) {
        res.exit_code = kInputFailure;
        res.message = e.what();
    } catch (const std::exception& e) {
        res.exit_code = kInputFailure;
        res.message = e.what();
    }
    return res;
}

}  // namespace tariffcge::cli
