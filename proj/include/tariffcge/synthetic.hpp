#pragma once

// Deterministic synthetic economies in the raw input formats (IO table,
// product-level tariff records, concordance). Used for shipped fixtures and
// tests; nothing here is needed to run the engine on real data.

#include "tariffcge/calibration.hpp"
#include "tariffcge/solver.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace tariffcge::synthetic {

struct DeltaEvent {
    std::string importer;
    std::string exporter;
    std::string date;
    double delta_pct = 0.0;
};

struct TrackerEvent {
    std::string importer;
    std::vector<std::string> exporters;
    std::string date;
    double rate_pct = 0.0;
    bool partial = false;  // cover only the first product line of each sector
};

struct Spec {
    ModelConfig model;
    std::uint64_t seed = 1;
    std::map<std::string, double> size;  // relative economy size; missing entries drawn at random
    double goods_home_weight = 5.0;
    double services_home_weight = 60.0;
    double services_expenditure = 0.55;    // share of final demand on non-tariffable sectors
    double va_share_lo = 0.35, va_share_hi = 0.60;
    double base_rate_lo = 0.0, base_rate_hi = 8.0;  // percent, per pair-sector
    int lines_per_sector = 3;
    double line_spread_pct = 1.0;
    std::string old_baseline_date = "2016-01-01";
    std::string baseline_date = "2025-01-01";
    std::vector<DeltaEvent> deltas;
    std::vector<TrackerEvent> trackers;
    bool raw_code_splits = false;  // spread final-demand rows over member codes
};

struct Data {
    IoTable io;
    std::vector<TariffRecord> records;
    Concordance concordance;
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

private:
    std::mt19937_64 gen_;
};

inline std::string product_code(std::size_t sector, int line) { return fmt::format("{:02d}{:04d}", sector + 1, line + 1); }

/// Product-level tariff records and the concordance.
inline void emit_tariffs(const Spec& spec, Rng& rng, Data& out)
{
    const auto& cfg = spec.model;
    const std::size_t n = cfg.regions.size(), ns = cfg.sectors.size();
    for (std::size_t s = 0; s < ns; ++s) {
        if (!cfg.sectors[s].tariffable) continue;
        for (int l = 0; l < spec.lines_per_sector; ++l)
            out.concordance.product_to_sector[product_code(s, l)] = cfg.sectors[s].members.empty()
                                                                        ? cfg.sectors[s].id
                                                                        : cfg.sectors[s].members.front();
    }
    auto line_offset = [&](int l) {
        if (spec.lines_per_sector == 1) return 0.0;
        return spec.line_spread_pct * (2.0 * l / (spec.lines_per_sector - 1) - 1.0);
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            for (std::size_t s = 0; s < ns; ++s) {
                if (!cfg.sectors[s].tariffable) continue;
                const double old_rate = rng.uniform(spec.base_rate_lo, spec.base_rate_hi) + spec.line_spread_pct;
                const double new_rate = std::max(spec.line_spread_pct, old_rate * rng.uniform(0.7, 1.0));
                for (int l = 0; l < spec.lines_per_sector; ++l) {
                    const auto code = product_code(s, l);
                    out.records.push_back({cfg.regions[i].id, cfg.regions[j].id, code, old_rate + line_offset(l),
                                           TariffSource::baseline, spec.old_baseline_date});
                    out.records.push_back({cfg.regions[i].id, cfg.regions[j].id, code, new_rate + line_offset(l),
                                           TariffSource::baseline, spec.baseline_date});
                }
            }
        }
    for (const auto& d : spec.deltas)
        for (std::size_t s = 0; s < ns; ++s) {
            if (!cfg.sectors[s].tariffable) continue;
            for (int l = 0; l < spec.lines_per_sector; ++l)
                out.records.push_back(
                    {d.importer, d.exporter, product_code(s, l), d.delta_pct, TariffSource::tradewar_delta, d.date});
        }
    for (const auto& t : spec.trackers)
        for (const auto& e : t.exporters)
            for (std::size_t s = 0; s < ns; ++s) {
                if (!cfg.sectors[s].tariffable) continue;
                const int lines = t.partial ? 1 : spec.lines_per_sector;
                for (int l = 0; l < lines; ++l)
                    out.records.push_back({t.importer, e, product_code(s, l), t.rate_pct, TariffSource::tracker, t.date});
            }
}

/// Random primitives with balanced trade; shares are gravity-like with home bias.
inline EconomyCalibration primitives(const Spec& spec, const TariffSchedule& tau0, Rng& rng)
{
    const auto& cfg = spec.model;
    const std::size_t n = cfg.regions.size(), ns = cfg.sectors.size();
    EconomyCalibration c;
    c.regions = cfg.region_ids();
    c.sectors = cfg.sector_infos();
    c.numeraire_region = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (c.regions[i] == cfg.numeraire) c.numeraire_region = i;
    c.report_scale = cfg.kappa;
    for (const auto& s : cfg.sectors) c.theta.push_back(s.theta);

    std::vector<double> size(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = spec.size.find(c.regions[i]);
        size[i] = it != spec.size.end() ? it->second : std::exp(rng.uniform(-1.5, 1.0));
    }
    std::size_t n_serv = 0;
    for (const auto& s : c.sectors) n_serv += s.tariffable ? 0 : 1;
    const std::size_t n_goods = ns - n_serv;

    c.final_shares = Grid2(n, ns);
    c.va_shares = Grid2(n, ns);
    c.io_shares = Cube(n, ns, ns);
    c.trade_shares = Cube(n, n, ns);
    c.absorption = Grid2(n, ns);
    c.labor_income.resize(n);
    c.deficits.assign(n, 0.0);
    c.baseline_tariffs = tau0.tau;

    Grid2 dist(n, n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = rng.uniform(1.0, 3.0);

    for (std::size_t i = 0; i < n; ++i) {
        c.labor_income[i] = 100.0 * size[i];
        std::vector<double> w(ns);
        double wg = 0.0, wsv = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            w[s] = rng.uniform(0.5, 1.5);
            (c.sectors[s].tariffable ? wg : wsv) += w[s];
        }
        for (std::size_t s = 0; s < ns; ++s) {
            if (n_serv == 0)
                c.final_shares(i, s) = w[s] / wg;
            else if (n_goods == 0)
                c.final_shares(i, s) = w[s] / wsv;
            else
                c.final_shares(i, s) = c.sectors[s].tariffable ? (1.0 - spec.services_expenditure) * w[s] / wg
                                                               : spec.services_expenditure * w[s] / wsv;
        }
        for (std::size_t s = 0; s < ns; ++s) {
            const double g = rng.uniform(spec.va_share_lo, spec.va_share_hi);
            std::vector<double> u(ns);
            double usum = 0.0;
            for (std::size_t k = 0; k < ns; ++k) usum += u[k] = rng.uniform(0.2, 1.0) * (k == s ? 3.0 : 1.0);
            double acc = 0.0;
            for (std::size_t k = 0; k < ns; ++k) acc += c.io_shares(i, k, s) = (1.0 - g) * u[k] / usum;
            c.va_shares(i, s) = 1.0 - acc;
        }
        for (std::size_t s = 0; s < ns; ++s) {
            const double home = c.sectors[s].tariffable ? spec.goods_home_weight : spec.services_home_weight;
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double v = (i == j ? home : 1.0) * std::pow(size[j], 0.8) / (dist(i, j) * dist(i, j)) *
                                 rng.uniform(0.8, 1.2);
                c.trade_shares(i, j, s) = v;
                sum += v;
            }
            for (std::size_t j = 0; j < n; ++j) c.trade_shares(i, j, s) /= sum;
            c.absorption(i, s) = c.final_shares(i, s) * c.labor_income[i];
        }
    }
    validate_calibration(c);
    return c;
}

/// Basic-price IO records of an equilibrium economy. Intermediate and final
/// purchases are split over origins by purchaser-price trade shares.
inline void emit_io(const Spec& spec, const EconomyCalibration& c, const EquilibriumOutcome& eq, Data& out)
{
    const auto& cfg = spec.model;
    const std::size_t n = c.num_regions(), ns = c.num_sectors();
    auto push = [&](const std::string& orig_r, const std::string& orig_k, const std::string& dest_r,
                    const std::string& use, double v) {
        if (v != 0.0) out.io.records.push_back({orig_r, orig_k, dest_r, use, v});
    };
    auto origin_codes = [&](std::size_t j, std::size_t k) {
        // (region code, sector code, weight)
        std::vector<std::tuple<std::string, std::string, double>> parts;
        if (!spec.raw_code_splits) {
            parts.emplace_back(cfg.regions[j].id, cfg.sectors[k].id, 1.0);
            return parts;
        }
        std::vector<std::pair<std::string, double>> regions{{cfg.regions[j].id, 1.0}};
        const auto& mem = cfg.regions[j].members;
        if (mem.size() >= 3 && mem[0] != "*") regions = {{mem[0], 0.5}, {mem[1], 0.3}, {mem[2], 0.2}};
        if (!mem.empty() && mem[0] == "*") regions = {{cfg.regions[j].id, 0.7}, {"ZAF", 0.3}};
        const auto& smem = cfg.sectors[k].members;
        for (const auto& [rc, rw] : regions) {
            if (smem.empty()) {
                parts.emplace_back(rc, cfg.sectors[k].id, rw);
                continue;
            }
            for (const auto& sc : smem) parts.emplace_back(rc, sc, rw / static_cast<double>(smem.size()));
        }
        return parts;
    };
    auto sector_code = [&](std::size_t s) {
        return spec.raw_code_splits && !cfg.sectors[s].members.empty() ? cfg.sectors[s].members.front()
                                                                       : cfg.sectors[s].id;
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < ns; ++s)
            push(cfg.regions[i].id, "VA", cfg.regions[i].id, sector_code(s),
                 c.va_shares(i, s) * eq.gross_output_cf(i, s));
        for (std::size_t k = 0; k < ns; ++k) {
            const double final_spend = c.final_shares(i, k) * eq.income_cf[i];
            for (std::size_t j = 0; j < n; ++j) {
                const double basic = eq.trade_shares_cf(i, j, k) / eq.schedule.tau(i, j, k);
                for (const auto& [rc, kc, wgt] : origin_codes(j, k))
                    push(rc, kc, cfg.regions[i].id, "FINAL", basic * final_spend * wgt);
                for (std::size_t s = 0; s < ns; ++s)
                    push(cfg.regions[j].id, sector_code(k), cfg.regions[i].id, sector_code(s),
                         basic * c.io_shares(i, k, s) * eq.gross_output_cf(i, s));
            }
        }
    }
    if (spec.raw_code_splits) {
        // Rows the loader must drop, ignore or floor.
        out.io.records.push_back({cfg.regions[0].id, "26", cfg.regions[1].id, "FINAL", 1.5});
        out.io.records.push_back({"n/a", "n/a", cfg.regions[0].id, "FINAL", 0.25});
        out.io.records.push_back({cfg.regions[1].id, sector_code(0), cfg.regions[0].id, "FINAL", -0.001});
    }
}

/// Full pipeline: tariff records, the Jan-1 schedule, random primitives solved
/// to an equilibrium at that schedule, and the IO table of that equilibrium.
inline Data generate(const Spec& spec)
{
    Rng rng(spec.seed);
    Data out;
    emit_tariffs(spec, rng, out);
    const TariffSchedule tau0 = aggregate_tariffs(out.records, out.concordance, spec.baseline_date, spec.model);
    const EconomyCalibration prim = primitives(spec, tau0, rng);
    SolveOptions opt;
    opt.wage_tol = 1e-13;
    opt.price_tol = 1e-14;
    const auto eq = solve_equilibrium(prim, tau0, ModelVariant::full, opt);
    emit_io(spec, prim, eq, out);
    return out;
}

}  // namespace tariffcge::synthetic
