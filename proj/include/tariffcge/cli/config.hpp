#pragma once

#include "tariffcge/calibration.hpp"
#include "tariffcge/fiscal.hpp"
#include "tariffcge/inverse_optimum.hpp"
#include "tariffcge/policy_scan.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tariffcge::cli {

using nlohmann::json;
namespace fs = std::filesystem;

/// Strict reader over one JSON object: every key must be consumed by a getter
/// before finish(), otherwise the unknown keys are reported.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
    }

    /// Marks `key` as known and reports whether it holds a non-null value.
    bool has(const std::string& key)
    {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    template <class T>
    T get(const std::string& key)
    {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(path_ + "." + key + " is required");
        return convert<T>(j_.at(key), key);
    }

    template <class T>
    T get_or(const std::string& key, T fallback)
    {
        seen_.insert(key);
        if (!has(key)) return fallback;
        return convert<T>(j_.at(key), key);
    }

    Section sub(const std::string& key)
    {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(path_ + "." + key + " is required");
        return Section(j_.at(key), path_ + "." + key);
    }

    const json& raw(const std::string& key)
    {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const
    {
        std::string unknown;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) unknown += " " + path_ + "." + it.key();
        if (!unknown.empty()) throw ConfigError("unknown configuration keys:" + unknown);
    }

    const std::string& path() const { return path_; }

private:
    template <class T>
    T convert(const json& v, const std::string& key) const
    {
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + " has the wrong type");
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline json load_json(const fs::path& p)
{
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open config file " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + p.string() + " is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Model configuration file
// ---------------------------------------------------------------------------

struct ModelFile {
    ModelConfig model;
    std::vector<std::string> partner_order;
};

inline ModelFile parse_model(const json& j, const std::string& where)
{
    Section root(j, where);
    ModelFile out;
    for (const auto& r : root.raw("regions")) {
        Section s(r, where + ".regions[]");
        RegionConfig rc;
        rc.id = s.get<std::string>("id");
        rc.name = s.get_or<std::string>("name", rc.id);
        rc.members = s.get_or<std::vector<std::string>>("members", {rc.id});
        s.finish();
        out.model.regions.push_back(std::move(rc));
    }
    for (const auto& r : root.raw("sectors")) {
        Section s(r, where + ".sectors[]");
        SectorConfig sc;
        sc.id = s.get<std::string>("id");
        sc.name = s.get_or<std::string>("name", sc.id);
        sc.tariffable = s.get<bool>("tariffable");
        sc.theta = s.get<double>("theta");
        sc.members = s.get_or<std::vector<std::string>>("members", {});
        if (!(sc.theta > 0.0)) throw ConfigError(where + ": sector " + sc.id + " needs a positive theta");
        s.finish();
        out.model.sectors.push_back(std::move(sc));
    }
    out.model.drop_sectors = root.get_or<std::vector<std::string>>("drop_sectors", {});
    out.model.numeraire = root.get<std::string>("numeraire");
    out.model.kappa = root.get_or<double>("kappa", 1.106);
    out.partner_order = root.get_or<std::vector<std::string>>("partner_order", {});
    root.finish();
    if (out.model.regions.empty() || out.model.sectors.empty())
        throw ConfigError(where + ": regions and sectors must be non-empty");
    CodeResolver check(out.model);  // rejects duplicate codes
    (void)check;
    return out;
}

inline json model_to_json(const ModelFile& m)
{
    json regions = json::array(), sectors = json::array();
    for (const auto& r : m.model.regions) regions.push_back({{"id", r.id}, {"name", r.name}, {"members", r.members}});
    for (const auto& s : m.model.sectors)
        sectors.push_back({{"id", s.id},
                           {"name", s.name},
                           {"tariffable", s.tariffable},
                           {"theta", s.theta},
                           {"members", s.members}});
    json out = {{"regions", regions},
                {"sectors", sectors},
                {"drop_sectors", m.model.drop_sectors},
                {"numeraire", m.model.numeraire},
                {"kappa", m.model.kappa}};
    if (!m.partner_order.empty()) out["partner_order"] = m.partner_order;
    return out;
}

inline std::vector<std::string> default_partner_order()
{
    return {"CHN", "CAN", "MEX", "VNM", "TUR", "KOR", "IND", "IDN",
            "EUU", "BRA", "NOR", "CHE", "JPN", "GBR", "AUS", "ROW"};
}

inline ModelFile default_model_file() { return {default_model_config(), default_partner_order()}; }

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct Inputs {
    fs::path io_table, tariffs, concordance, model, calibration;
    std::string baseline_date = "2025-01-01";
};

struct CalibrateSettings {
    bool rebase = true;
    bool floor_negative = true;
};

struct LafferSettings {
    std::vector<std::string> partners;
    std::vector<ResponseKind> responses{ResponseKind::none};
    std::vector<double> grid = default_rate_grid();
    ReferenceKind reference = ReferenceKind::bilateral_free_trade;
    std::optional<std::string> custom_reference_date;
    Accounting accounting = Accounting::full;
};

struct CumulativeSettings {
    std::vector<std::string> partners;  // empty: model partner order
    bool order_by_meb = false;
    std::vector<ResponseKind> responses{ResponseKind::none};
    std::vector<double> grid = default_rate_grid();
};

struct MfeiSettings {
    std::vector<std::string> partners;
    std::vector<ResponseKind> responses{ResponseKind::none};
    std::vector<double> grid = default_rate_grid();
    double alpha = kDefaultAlpha;
};

struct TimelineSettings {
    std::string reference_date = "2016-01-01";
    std::vector<std::string> dates;
};

struct InvoptSettings {
    std::vector<std::string> dates;
    std::vector<std::string> partners;  // empty: every non-home region with a group
    double delta = 0.001;
    double alpha = kDefaultAlpha;
    int reps = 999;
    GroupConfig groups = default_group_config();
    std::vector<Regime> regimes = default_regimes();
    std::vector<std::string> fe_sectors = {"METAL", "TRANSP"};
    double regressor_scale = 1.0;
    std::size_t min_obs = 10;
    std::vector<std::string> exclude_partners;
    std::vector<std::string> exclude_groups;
    std::optional<fs::path> observations;  // estimate from a saved table instead of solving
};

struct RunConfig {
    fs::path base_dir;
    Inputs inputs;
    std::string home = "USA";
    ModelVariant variant = ModelVariant::full;
    std::optional<double> uniform_theta;
    CalibrateSettings calibrate;
    std::optional<LafferSettings> laffer;
    std::optional<CumulativeSettings> cumulative;
    std::optional<MfeiSettings> mfei;
    std::optional<TimelineSettings> timeline;
    std::optional<InvoptSettings> invopt;
    fs::path output_dir = "out";
    std::uint64_t seed = 20250101;
    std::size_t threads = 0;  // 0: machine parallelism
    SolveOptions solver;
};

namespace detail {

inline std::vector<double> parse_grid(Section& s, const std::string& key)
{
    if (!s.has(key)) return default_rate_grid();
    const json& g = s.raw(key);
    std::vector<double> out;
    if (g.is_array()) {
        try {
            out = g.get<std::vector<double>>();
        } catch (const json::exception&) {
            throw ConfigError(s.path() + "." + key + " must be a list of numbers");
        }
    } else {
        Section r(g, s.path() + "." + key);
        const double start = r.get<double>("start"), stop = r.get<double>("stop"), step = r.get<double>("step");
        r.finish();
        if (!(step > 0.0) || stop < start) throw ConfigError(s.path() + "." + key + ": need step > 0 and stop >= start");
        const long count = std::lround(std::floor((stop - start) / step + 1e-9));
        for (long k = 0; k <= count; ++k) out.push_back(start + static_cast<double>(k) * step);
    }
    for (std::size_t k = 0; k < out.size(); ++k)
        if (out[k] < 0.0 || (k && out[k] <= out[k - 1]))
            throw ConfigError(s.path() + "." + key + " must be nonnegative and strictly increasing");
    if (out.empty()) throw ConfigError(s.path() + "." + key + " is empty");
    return out;
}

inline std::vector<ResponseKind> parse_responses(Section& s)
{
    std::vector<ResponseKind> out;
    for (const auto& r : s.get_or<std::vector<std::string>>("responses", {"none"})) out.push_back(parse_response(r));
    if (out.empty()) throw ConfigError(s.path() + ".responses is empty");
    return out;
}

inline void check_date(const std::string& d, const std::string& where)
{
    if (!is_iso_date(d)) throw ConfigError(where + ": '" + d + "' is not a YYYY-MM-DD date");
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j, const fs::path& base_dir)
{
    RunConfig c;
    c.base_dir = base_dir;
    Section root(j, "config");
    auto path_of = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };

    {
        Section in = root.sub("inputs");
        c.inputs.io_table = path_of(in.get_or<std::string>("io_table", "io_table.csv"));
        c.inputs.tariffs = path_of(in.get_or<std::string>("tariffs", "tariffs.csv"));
        c.inputs.concordance = path_of(in.get_or<std::string>("concordance", "concordance.csv"));
        c.inputs.model = path_of(in.get_or<std::string>("model", "model.json"));
        c.inputs.calibration = path_of(in.get_or<std::string>("calibration", "calibration.json"));
        c.inputs.baseline_date = in.get_or<std::string>("baseline_date", c.inputs.baseline_date);
        detail::check_date(c.inputs.baseline_date, "config.inputs.baseline_date");
        in.finish();
    }
    c.home = root.get_or<std::string>("home", c.home);
    c.variant = parse_variant(root.get_or<std::string>("variant", "full"));
    if (root.has("uniform_theta")) {
        c.uniform_theta = root.get<double>("uniform_theta");
        if (!(*c.uniform_theta > 0.0)) throw ConfigError("config.uniform_theta must be positive");
    }
    c.output_dir = path_of(root.get_or<std::string>("output_dir", "out"));
    c.seed = root.get_or<std::uint64_t>("seed", c.seed);
    c.threads = root.get_or<std::size_t>("threads", 0);

    if (root.has("solver")) {
        Section s = root.sub("solver");
        auto& o = c.solver;
        o.max_outer = s.get_or<int>("max_outer", o.max_outer);
        o.max_inner = s.get_or<int>("max_inner", o.max_inner);
        o.damping = s.get_or<double>("damping", o.damping);
        o.wage_tol = s.get_or<double>("wage_tol", o.wage_tol);
        s.finish();
        if (o.max_outer < 1 || o.max_inner < 1) throw ConfigError("config.solver iteration caps must be positive");
        if (!(o.damping > 0.0 && o.damping <= 1.0)) throw ConfigError("config.solver.damping must lie in (0, 1]");
        if (!(o.wage_tol > 0.0)) throw ConfigError("config.solver.wage_tol must be positive");
    }
    if (root.has("calibrate")) {
        Section s = root.sub("calibrate");
        c.calibrate.rebase = s.get_or<bool>("rebase", true);
        c.calibrate.floor_negative = s.get_or<bool>("floor_negative", true);
        s.finish();
    }
    if (root.has("laffer")) {
        Section s = root.sub("laffer");
        LafferSettings l;
        l.partners = s.get<std::vector<std::string>>("partners");
        l.responses = detail::parse_responses(s);
        l.grid = detail::parse_grid(s, "rate_grid");
        l.reference = parse_reference(s.get_or<std::string>("reference", "bilateral_free_trade"));
        if (s.has("custom_reference_date")) {
            l.custom_reference_date = s.get<std::string>("custom_reference_date");
            detail::check_date(*l.custom_reference_date, "config.laffer.custom_reference_date");
        }
        if (l.reference == ReferenceKind::custom && !l.custom_reference_date)
            throw ConfigError("config.laffer: custom reference needs custom_reference_date");
        const auto acc = s.get_or<std::string>("accounting", "full");
        if (acc == "full")
            l.accounting = Accounting::full;
        else if (acc == "bilateral_only")
            l.accounting = Accounting::bilateral_only;
        else
            throw ConfigError("config.laffer.accounting must be full|bilateral_only");
        s.finish();
        c.laffer = l;
    }
    if (root.has("cumulative")) {
        Section s = root.sub("cumulative");
        CumulativeSettings cs;
        cs.partners = s.get_or<std::vector<std::string>>("partners", {});
        const auto order = s.get_or<std::string>("order", "config");
        if (order == "meb")
            cs.order_by_meb = true;
        else if (order != "config")
            throw ConfigError("config.cumulative.order must be config|meb");
        cs.responses = detail::parse_responses(s);
        cs.grid = detail::parse_grid(s, "rate_grid");
        s.finish();
        c.cumulative = cs;
    }
    if (root.has("mfei")) {
        Section s = root.sub("mfei");
        MfeiSettings m;
        m.partners = s.get<std::vector<std::string>>("partners");
        m.responses = detail::parse_responses(s);
        m.grid = detail::parse_grid(s, "rate_grid");
        m.alpha = s.get_or<double>("alpha", kDefaultAlpha);
        if (!(m.alpha >= 0.0)) throw ConfigError("config.mfei.alpha must be nonnegative");
        s.finish();
        if (m.grid.size() < 3) throw ConfigError("config.mfei.rate_grid needs at least 3 points");
        c.mfei = m;
    }
    if (root.has("timeline")) {
        Section s = root.sub("timeline");
        TimelineSettings t;
        t.reference_date = s.get_or<std::string>("reference_date", t.reference_date);
        detail::check_date(t.reference_date, "config.timeline.reference_date");
        t.dates = s.get<std::vector<std::string>>("dates");
        for (const auto& d : t.dates) detail::check_date(d, "config.timeline.dates");
        s.finish();
        c.timeline = t;
    }
    if (root.has("invopt")) {
        Section s = root.sub("invopt");
        InvoptSettings v;
        v.dates = s.get_or<std::vector<std::string>>("dates", {});
        for (const auto& d : v.dates) detail::check_date(d, "config.invopt.dates");
        v.partners = s.get_or<std::vector<std::string>>("partners", {});
        v.delta = s.get_or<double>("delta", v.delta);
        if (!(v.delta > 0.0)) throw ConfigError("config.invopt.delta must be positive");
        v.alpha = s.get_or<double>("alpha", v.alpha);
        if (!(v.alpha >= 0.0)) throw ConfigError("config.invopt.alpha must be nonnegative");
        v.reps = s.get_or<int>("reps", v.reps);
        if (v.reps < 99) throw ConfigError("config.invopt.reps must be at least 99");
        if (s.has("groups")) {
            Section g = s.sub("groups");
            v.groups = GroupConfig{};
            v.groups.explicit_groups = g.get_or<std::map<std::string, std::string>>("explicit", {});
            v.groups.ideal_points = g.get_or<std::map<std::string, double>>("ideal_points", {});
            v.groups.cutoff = g.get_or<double>("cutoff", 0.65);
            g.finish();
        }
        if (s.has("regimes")) {
            v.regimes.clear();
            for (const auto& r : s.raw("regimes")) {
                Section rs(r, "config.invopt.regimes[]");
                Regime reg{rs.get<std::string>("name"), rs.get<std::string>("start"), rs.get<std::string>("end")};
                rs.finish();
                detail::check_date(reg.start, "config.invopt.regimes");
                detail::check_date(reg.end, "config.invopt.regimes");
                v.regimes.push_back(reg);
            }
        }
        v.fe_sectors = s.get_or<std::vector<std::string>>("fe_sectors", v.fe_sectors);
        v.regressor_scale = s.get_or<double>("regressor_scale", 1.0);
        v.min_obs = s.get_or<std::size_t>("min_obs", v.min_obs);
        v.exclude_partners = s.get_or<std::vector<std::string>>("exclude_partners", {});
        v.exclude_groups = s.get_or<std::vector<std::string>>("exclude_groups", {});
        if (s.has("observations"))
            v.observations = path_of(s.get<std::string>("observations"));
        s.finish();
        if (v.dates.empty() && !v.observations) throw ConfigError("config.invopt needs dates or an observations table");
        c.invopt = v;
    }
    root.finish();
    return c;
}

inline RunConfig load_run_config(const fs::path& path)
{
    return parse_run_config(load_json(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace tariffcge::cli
