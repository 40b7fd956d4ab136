#pragma once

#include "tariffcge/csv.hpp"
#include "tariffcge/solver.hpp"
#include "tariffcge/types.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace tariffcge {

// ---------------------------------------------------------------------------
// Model configuration: region and sector aggregation, elasticities.
// ---------------------------------------------------------------------------

struct RegionConfig {
    std::string id;
    std::string name;
    std::vector<std::string> members;  // raw source codes; "*" catches every unlisted code
};

struct SectorConfig {
    std::string id;
    std::string name;
    bool tariffable = true;
    double theta = 4.0;
    std::vector<std::string> members;
};

struct ModelConfig {
    std::vector<RegionConfig> regions;
    std::vector<SectorConfig> sectors;
    std::vector<std::string> drop_sectors;
    std::string numeraire;
    double kappa = 1.106;

    std::vector<SectorInfo> sector_infos() const
    {
        std::vector<SectorInfo> out;
        for (const auto& s : sectors) out.push_back({s.id, s.tariffable});
        return out;
    }
    std::vector<std::string> region_ids() const
    {
        std::vector<std::string> out;
        for (const auto& r : regions) out.push_back(r.id);
        return out;
    }
};

/// Resolves raw region/sector codes to model indices.
class CodeResolver {
public:
    explicit CodeResolver(const ModelConfig& cfg)
    {
        for (std::size_t i = 0; i < cfg.regions.size(); ++i) {
            const auto& r = cfg.regions[i];
            auto add = [&](const std::string& code) {
                if (code == "*") {
                    if (region_wildcard_) throw ConfigError("more than one catch-all region");
                    region_wildcard_ = i;
                } else if (!regions_.emplace(code, i).second) {
                    throw ConfigError("region code '" + code + "' assigned twice");
                }
            };
            add(r.id);
            for (const auto& m : r.members)
                if (m != r.id) add(m);
        }
        for (std::size_t s = 0; s < cfg.sectors.size(); ++s) {
            const auto& sc = cfg.sectors[s];
            auto add = [&](const std::string& code) {
                if (!sectors_.emplace(code, s).second)
                    throw ConfigError("sector code '" + code + "' assigned twice");
            };
            add(sc.id);
            for (const auto& m : sc.members)
                if (m != sc.id) add(m);
        }
        dropped_.insert(cfg.drop_sectors.begin(), cfg.drop_sectors.end());
    }

    std::optional<std::size_t> region(const std::string& code) const
    {
        if (auto it = regions_.find(code); it != regions_.end()) return it->second;
        return region_wildcard_;
    }
    std::optional<std::size_t> sector(const std::string& code) const
    {
        if (auto it = sectors_.find(code); it != sectors_.end()) return it->second;
        return std::nullopt;
    }
    bool dropped(const std::string& sector_code) const { return dropped_.count(sector_code) > 0; }

private:
    std::map<std::string, std::size_t> regions_;
    std::map<std::string, std::size_t> sectors_;
    std::set<std::string> dropped_;
    std::optional<std::size_t> region_wildcard_;
};

/// Default 17-region, 15-sector layout with sectoral trade elasticities.
inline ModelConfig default_model_config()
{
    ModelConfig cfg;
    const std::vector<std::pair<std::string, std::string>> regions = {
        {"USA", "United States"}, {"CAN", "Canada"},      {"MEX", "Mexico"},         {"CHN", "China"},
        {"EUU", "European Union (EU-27)"}, {"GBR", "United Kingdom"}, {"JPN", "Japan"}, {"KOR", "South Korea"},
        {"AUS", "Australia"},     {"TUR", "Turkey"},      {"CHE", "Switzerland"},    {"NOR", "Norway"},
        {"BRA", "Brazil"},        {"IND", "India"},       {"IDN", "Indonesia"},      {"VNM", "Vietnam"},
        {"ROW", "Rest of World"}};
    for (const auto& [id, name] : regions) cfg.regions.push_back({id, name, {id}});
    cfg.regions[4].members = {"AUT", "BEL", "BGR", "HRV", "CYP", "CZE", "DNK", "EST", "FIN",
                              "FRA", "DEU", "GRC", "HUN", "IRL", "ITA", "LVA", "LTU", "LUX",
                              "MLT", "NLD", "POL", "PRT", "ROU", "SVK", "SVN", "ESP", "SWE"};
    cfg.regions[16].members = {"*"};
    cfg.sectors = {
        {"AGR", "Agriculture & Fishing", true, 2.910, {"1", "2"}},
        {"MIN", "Mining & Quarrying", true, 3.410, {"3"}},
        {"FOOD", "Food & Beverages", true, 4.170, {"4"}},
        {"TEX", "Textiles & Wearing Apparel", true, 4.710, {"5"}},
        {"WOOD", "Wood & Paper", true, 8.505, {"6"}},
        {"CHEM", "Petroleum, Chemicals, & Minerals", true, 6.443, {"7"}},
        {"METAL", "Metal Products", true, 5.805, {"8"}},
        {"MACH", "Electrical & Machinery", true, 4.753, {"9"}},
        {"TRANSP", "Transport Equipment", true, 8.955, {"10"}},
        {"OTHMAN", "Other Manufacturing incl. Recycling", true, 4.060, {"11", "12"}},
        {"UTIL", "Utilities & Construction", false, 8.350, {"13", "14"}},
        {"TRADE", "Trade & Hospitality", false, 8.350, {"15", "16", "17", "18"}},
        {"TRCOM", "Transport & Communication", false, 8.350, {"19", "20"}},
        {"FIN", "Finance & Business Services", false, 8.350, {"21"}},
        {"PUB", "Public, Personal, & Other Services", false, 8.350, {"22", "23", "24", "25"}},
    };
    cfg.drop_sectors = {"26"};
    cfg.numeraire = "USA";
    cfg.kappa = 1.106;
    return cfg;
}

// ---------------------------------------------------------------------------
// Input-output table
// ---------------------------------------------------------------------------

struct IoRecord {
    std::string origin_region;
    std::string origin_kind;  // sector code, "VA", or "n/a"
    std::string dest_region;
    std::string dest_use;     // sector code or "FINAL"
    double value = 0.0;
};

struct IoTable {
    std::vector<IoRecord> records;
};

inline const std::vector<std::string>& io_table_header()
{
    static const std::vector<std::string> h = {"origin_region", "origin_kind", "dest_region", "dest_use", "value"};
    return h;
}

inline IoTable read_io_table(const std::string& path)
{
    auto t = csv::read_file(path, io_table_header());
    IoTable io;
    io.records.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        io.records.push_back(
            {f[0], f[1], f[2], f[3], csv::parse_double(f[4], path + ":" + std::to_string(t.line_numbers[r]))});
    }
    return io;
}

inline std::string write_io_table(const IoTable& io)
{
    csv::Writer w(io_table_header());
    for (const auto& r : io.records)
        w.row({r.origin_region, r.origin_kind, r.dest_region, r.dest_use, csv::fmt_exact(r.value)});
    return w.str();
}

struct CalibrationOptions {
    bool floor_negative = true;
    bool rebase = false;             // adopt the identity-counterfactual equilibrium as the baseline
    ModelVariant variant = ModelVariant::full;
    std::optional<double> uniform_theta;
};

struct CleaningReport {
    std::size_t negative_cells_floored = 0;
    std::size_t dropped_rows = 0;
    std::size_t ignored_rows = 0;
    std::size_t degenerate_sectors = 0;  // zero gross output: treated as pure value added
    std::size_t autarkic_rows = 0;       // zero absorption: own share forced to 1
};

struct CalibrationBuild {
    EconomyCalibration calibration;
    CleaningReport report;
};

/// Builds an EconomyCalibration from basic-price input-output flows and the
/// baseline tariff schedule. Cross-border flows are grossed up by baseline
/// tariffs to purchaser prices; deficits are net imports at tariff-exclusive
/// prices.
inline CalibrationBuild build_calibration(const IoTable& io, const TariffSchedule& tau0, const ModelConfig& cfg,
                                          const CalibrationOptions& opt = {})
{
    const std::size_t n = cfg.regions.size();
    const std::size_t ns = cfg.sectors.size();
    if (n == 0 || ns == 0) throw ConfigError("model config has no regions or sectors");
    if (tau0.regions() != n || tau0.tau.dim1() != n || tau0.sectors() != ns)
        throw InputError("baseline tariff schedule dimensions do not match the model config");
    validate_schedule(tau0, cfg.sector_infos());

    CodeResolver resolve(cfg);
    CleaningReport report;

    Cube basic(n, n, ns, 0.0);   // basic-price flows: importer, exporter, sector
    Grid2 final_use(n, ns, 0.0); // F[i][k]
    Cube inter(n, ns, ns, 0.0);  // M[i][k][s]
    Grid2 va(n, ns, 0.0);

    std::set<std::string> unresolved;
    std::vector<std::string> negative_cells;
    for (const auto& rec : io.records) {
        if (!std::isfinite(rec.value)) throw InputError("non-finite IO value");
        const bool is_va = rec.origin_kind == "VA";
        const bool is_na = rec.origin_kind == "n/a" || rec.origin_kind == "NA" || rec.origin_kind.empty();
        if ((!is_va && !is_na && resolve.dropped(rec.origin_kind)) ||
            (rec.dest_use != "FINAL" && resolve.dropped(rec.dest_use))) {
            ++report.dropped_rows;
            continue;
        }
        if (is_na) {
            ++report.ignored_rows;
            continue;
        }
        auto dest = resolve.region(rec.dest_region);
        if (!dest) unresolved.insert("region " + rec.dest_region);
        std::optional<std::size_t> use;
        if (rec.dest_use != "FINAL") {
            use = resolve.sector(rec.dest_use);
            if (!use) unresolved.insert("sector " + rec.dest_use);
        }
        std::optional<std::size_t> origin, kind;
        if (!is_va) {
            origin = resolve.region(rec.origin_region);
            if (!origin) unresolved.insert("region " + rec.origin_region);
            kind = resolve.sector(rec.origin_kind);
            if (!kind) unresolved.insert("sector " + rec.origin_kind);
        }
        if (!dest || (rec.dest_use != "FINAL" && !use) || (!is_va && (!origin || !kind))) continue;

        double v = rec.value;
        if (v < 0.0) {
            if (!opt.floor_negative) {
                negative_cells.push_back(rec.origin_region + "/" + rec.origin_kind + "->" + rec.dest_region + "/" +
                                         rec.dest_use);
                continue;
            }
            ++report.negative_cells_floored;
            v = 0.0;
        }
        if (is_va) {
            if (!use) throw InputError("value-added row must target a sector, got FINAL for " + rec.dest_region);
            va(*dest, *use) += v;
            continue;
        }
        basic(*dest, *origin, *kind) += v;
        if (use)
            inter(*dest, *kind, *use) += v;
        else
            final_use(*dest, *kind) += v;
    }
    if (!unresolved.empty()) {
        std::string msg = "unresolved codes in IO table:";
        for (const auto& u : unresolved) msg += " " + u;
        throw InputError(msg);
    }
    if (!negative_cells.empty()) {
        std::string msg = "negative IO cells:";
        for (const auto& c : negative_cells) msg += " " + c;
        throw InputError(msg);
    }

    EconomyCalibration c;
    c.regions = cfg.region_ids();
    c.sectors = cfg.sector_infos();
    auto num = std::find(c.regions.begin(), c.regions.end(), cfg.numeraire);
    if (num == c.regions.end()) throw ConfigError("numeraire region '" + cfg.numeraire + "' is not a model region");
    c.numeraire_region = static_cast<std::size_t>(num - c.regions.begin());
    c.report_scale = cfg.kappa;
    c.theta.resize(ns);
    for (std::size_t s = 0; s < ns; ++s) c.theta[s] = opt.uniform_theta ? *opt.uniform_theta : cfg.sectors[s].theta;
    c.final_shares = Grid2(n, ns);
    c.va_shares = Grid2(n, ns);
    c.io_shares = Cube(n, ns, ns);
    c.trade_shares = Cube(n, n, ns);
    c.labor_income.assign(n, 0.0);
    c.absorption = Grid2(n, ns);
    c.deficits.assign(n, 0.0);
    c.baseline_tariffs = tau0.tau;

    for (std::size_t i = 0; i < n; ++i) {
        double f_total = 0.0;
        for (std::size_t s = 0; s < ns; ++s) f_total += final_use(i, s);
        if (!(f_total > 0.0)) throw InputError("region " + c.regions[i] + " has no final demand");
        for (std::size_t s = 0; s < ns; ++s) c.final_shares(i, s) = final_use(i, s) / f_total;

        for (std::size_t s = 0; s < ns; ++s) {
            c.labor_income[i] += va(i, s);
            if (opt.variant == ModelVariant::no_io) {
                c.va_shares(i, s) = 1.0;
                continue;
            }
            double gross = va(i, s);
            for (std::size_t k = 0; k < ns; ++k) gross += inter(i, k, s);
            if (!(gross > 0.0)) {
                ++report.degenerate_sectors;
                c.va_shares(i, s) = 1.0;
                continue;
            }
            double io_sum = 0.0;
            for (std::size_t k = 0; k < ns; ++k) {
                c.io_shares(i, k, s) = inter(i, k, s) / gross;
                io_sum += c.io_shares(i, k, s);
            }
            c.va_shares(i, s) = 1.0 - io_sum;
        }

        for (std::size_t s = 0; s < ns; ++s) {
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double flow = (j == i) ? basic(i, j, s) : tau0.tau(i, j, s) * basic(i, j, s);
                c.trade_shares(i, j, s) = flow;
                total += flow;
            }
            c.absorption(i, s) = total;
            if (!(total > 0.0)) {
                ++report.autarkic_rows;
                for (std::size_t j = 0; j < n; ++j) c.trade_shares(i, j, s) = (j == i) ? 1.0 : 0.0;
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) c.trade_shares(i, j, s) /= total;
        }
    }
    // Net imports at tariff-exclusive prices (own flows cancel).
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c.deficits[i] += basic(i, j, s) - basic(j, i, s);
            }

    validate_calibration(c);
    if (opt.rebase) {
        c = rebase_to_equilibrium(c, opt.variant);
        validate_calibration(c);
    }
    return {std::move(c), report};
}

/// Replaces every sectoral elasticity by one value.
inline EconomyCalibration with_uniform_theta(EconomyCalibration c, double theta)
{
    if (!(theta > 0.0)) throw InputError("uniform trade elasticity must be positive");
    std::fill(c.theta.begin(), c.theta.end(), theta);
    return c;
}

// ---------------------------------------------------------------------------
// Tariff records and schedule construction
// ---------------------------------------------------------------------------

enum class TariffSource { baseline, tradewar_delta, tracker };

inline TariffSource parse_tariff_source(const std::string& s)
{
    if (s == "baseline") return TariffSource::baseline;
    if (s == "tradewar-delta") return TariffSource::tradewar_delta;
    if (s == "tracker") return TariffSource::tracker;
    throw InputError("unknown tariff source '" + s + "' (expected baseline|tradewar-delta|tracker)");
}

inline std::string to_string(TariffSource s)
{
    switch (s) {
    case TariffSource::baseline: return "baseline";
    case TariffSource::tradewar_delta: return "tradewar-delta";
    case TariffSource::tracker: return "tracker";
    }
    return "";
}

struct TariffRecord {
    std::string importer;
    std::string exporter;
    std::string product_code;
    double rate_pct = 0.0;
    TariffSource source = TariffSource::baseline;
    std::string effective_date;  // ISO-8601; empty applies at every date
};

inline bool is_iso_date(const std::string& d)
{
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (d[i] < '0' || d[i] > '9') return false;
    const std::chrono::year_month_day ymd{std::chrono::year(std::stoi(d.substr(0, 4))),
                                          std::chrono::month(static_cast<unsigned>(std::stoi(d.substr(5, 2)))),
                                          std::chrono::day(static_cast<unsigned>(std::stoi(d.substr(8, 2))))};
    return ymd.ok();
}

inline const std::vector<std::string>& tariff_records_header()
{
    static const std::vector<std::string> h = {"importer", "exporter", "hs6", "rate_pct", "source", "effective_date"};
    return h;
}

inline std::vector<TariffRecord> read_tariff_records(const std::string& path)
{
    auto t = csv::read_file(path, tariff_records_header());
    std::vector<TariffRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        const std::string where = path + ":" + std::to_string(t.line_numbers[r]);
        TariffRecord rec{f[0], f[1], f[2], csv::parse_double(f[3], where), parse_tariff_source(f[4]), f[5]};
        if (!rec.effective_date.empty() && !is_iso_date(rec.effective_date))
            throw InputError(where + ": effective_date must be YYYY-MM-DD");
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::string write_tariff_records(const std::vector<TariffRecord>& recs)
{
    csv::Writer w(tariff_records_header());
    for (const auto& r : recs)
        w.row({r.importer, r.exporter, r.product_code, csv::fmt_exact(r.rate_pct), to_string(r.source),
               r.effective_date});
    return w.str();
}

/// Pre-flattened product-code to sector map.
struct Concordance {
    std::map<std::string, std::string> product_to_sector;
};

inline Concordance read_concordance(const std::string& path)
{
    auto t = csv::read_file(path, {"hs6", "sector_id"});
    Concordance c;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        auto [it, inserted] = c.product_to_sector.emplace(f[0], f[1]);
        if (!inserted && it->second != f[1])
            throw InputError(path + ":" + std::to_string(t.line_numbers[r]) + ": product " + f[0] +
                             " mapped to two sectors");
    }
    return c;
}

inline std::string write_concordance(const Concordance& c)
{
    csv::Writer w({"hs6", "sector_id"});
    for (const auto& [k, v] : c.product_to_sector) w.row({k, v});
    return w.str();
}

/// Builds the sector-level schedule in force at `date`.
///
/// Within each importer-exporter-sector group the baseline rate is the simple
/// average over product lines, plus the simple-average trade-war increase.
/// Where tracker records exist for the group, each tracked product line takes
/// its latest tracker rate dated on or before `date` and the group rate is the
/// simple average over lines after that override. For every product line only
/// the latest record dated on or before `date` counts, per source.
inline TariffSchedule aggregate_tariffs(const std::vector<TariffRecord>& records, const Concordance& conc,
                                        const std::string& date, const ModelConfig& cfg)
{
    if (!is_iso_date(date)) throw InputError("policy date must be YYYY-MM-DD, got '" + date + "'");
    const std::size_t n = cfg.regions.size(), ns = cfg.sectors.size();
    CodeResolver resolve(cfg);

    std::set<std::string> unmapped, unknown_regions, unknown_sectors;
    struct Entry {
        std::string date;
        double sum = 0.0;
        int count = 0;
        double mean() const { return sum / count; }
    };
    struct Line {
        std::optional<Entry> source[3];
    };
    using LineKey = std::tuple<std::string, std::string, std::string>;  // raw importer, raw exporter, product
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::map<LineKey, Line>> groups;
    std::vector<std::string> conflicts;

    for (const auto& rec : records) {
        if (!rec.effective_date.empty() && rec.effective_date > date) continue;
        auto sect = conc.product_to_sector.find(rec.product_code);
        if (sect == conc.product_to_sector.end()) {
            unmapped.insert(rec.product_code);
            continue;
        }
        auto s = resolve.sector(sect->second);
        if (!s) {
            unknown_sectors.insert(sect->second);
            continue;
        }
        auto i = resolve.region(rec.importer);
        auto j = resolve.region(rec.exporter);
        if (!i) unknown_regions.insert(rec.importer);
        if (!j) unknown_regions.insert(rec.exporter);
        if (!i || !j) continue;
        if (rec.source != TariffSource::tradewar_delta && rec.rate_pct < 0.0)
            throw InputError("negative tariff rate for " + rec.importer + "<-" + rec.exporter + " " + rec.product_code);
        if (*i == *j || !cfg.sectors[*s].tariffable) continue;

        auto& line = groups[{*i, *j, *s}][{rec.importer, rec.exporter, rec.product_code}];
        auto& slot = line.source[static_cast<int>(rec.source)];
        if (!slot || rec.effective_date > slot->date) {
            slot = Entry{rec.effective_date, rec.rate_pct, 1};
        } else if (rec.effective_date == slot->date) {
            if (rec.source == TariffSource::tracker && rec.rate_pct != slot->mean())
                conflicts.push_back(rec.importer + "<-" + rec.exporter + " " + rec.product_code + " @" +
                                    rec.effective_date);
            slot->sum += rec.rate_pct;
            ++slot->count;
        }
    }
    if (!unmapped.empty()) {
        std::string msg = "unmapped product codes:";
        for (const auto& u : unmapped) msg += " " + u;
        throw InputError(msg);
    }
    if (!unknown_regions.empty() || !unknown_sectors.empty()) {
        std::string msg = "unknown codes in tariff records:";
        for (const auto& u : unknown_regions) msg += " region " + u;
        for (const auto& u : unknown_sectors) msg += " sector " + u;
        throw InputError(msg);
    }
    if (!conflicts.empty()) {
        std::string msg = "conflicting same-date tracker records:";
        for (const auto& c : conflicts) msg += " " + c;
        throw InputError(msg);
    }

    TariffSchedule out(n, ns);
    out.date = date;
    constexpr int kBase = static_cast<int>(TariffSource::baseline);
    constexpr int kDelta = static_cast<int>(TariffSource::tradewar_delta);
    constexpr int kTracker = static_cast<int>(TariffSource::tracker);
    for (const auto& [key, lines] : groups) {
        const auto [i, j, s] = key;
        double base_sum = 0.0, delta_sum = 0.0;
        int base_n = 0, delta_n = 0;
        bool tracked = false;
        for (const auto& [lk, line] : lines) {
            if (line.source[kBase]) {
                base_sum += line.source[kBase]->mean();
                ++base_n;
            }
            if (line.source[kDelta]) {
                delta_sum += line.source[kDelta]->mean();
                ++delta_n;
            }
            tracked = tracked || line.source[kTracker].has_value();
        }
        const double base_avg = base_n ? base_sum / base_n : 0.0;
        const double delta_avg = delta_n ? delta_sum / delta_n : 0.0;
        double rate = base_avg + delta_avg;
        if (tracked) {
            double sum = 0.0;
            int count = 0;
            for (const auto& [lk, line] : lines) {
                if (line.source[kTracker]) {
                    sum += line.source[kTracker]->mean();
                } else if (line.source[kBase]) {
                    sum += line.source[kBase]->mean() + delta_avg;
                } else {
                    continue;
                }
                ++count;
            }
            rate = sum / count;
        }
        if (rate < 0.0)
            throw InputError("aggregated tariff below zero for " + cfg.regions[i].id + "<-" + cfg.regions[j].id + " " +
                             cfg.sectors[s].id);
        out.tau(i, j, s) = 1.0 + rate / 100.0;
    }
    return out;
}

/// Elementwise ratio of gross factors: the proportional tariff change from
/// `baseline` to `schedule_at_d`.
inline Cube tariff_shock(const TariffSchedule& schedule_at_d, const TariffSchedule& baseline)
{
    if (schedule_at_d.tau.dim0() != baseline.tau.dim0() || schedule_at_d.tau.dim1() != baseline.tau.dim1() ||
        schedule_at_d.tau.dim2() != baseline.tau.dim2())
        throw InputError("tariff_shock: schedule dimensions differ");
    Cube out(baseline.tau.dim0(), baseline.tau.dim1(), baseline.tau.dim2());
    for (std::size_t k = 0; k < out.data().size(); ++k) {
        const double b = baseline.tau.data()[k];
        if (!(b >= 1.0)) throw InputError("tariff_shock: baseline factor below 1");
        out.data()[k] = schedule_at_d.tau.data()[k] / b;
    }
    return out;
}

}  // namespace tariffcge
