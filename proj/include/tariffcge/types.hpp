#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tariffcge {

// Failure raised when inputs violate a documented contract (bad shapes,
// unknown codes, invalid shares). Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Failure raised by the configuration layer (unknown keys, bad types).
// Maps to CLI exit code 3.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major 2-D array of doubles.
class Grid2 {
public:
    Grid2() = default;
    Grid2(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Grid2&, const Grid2&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Dense 3-D array of doubles indexed (a, b, c), last index fastest.
class Cube {
public:
    Cube() = default;
    Cube(std::size_t n0, std::size_t n1, std::size_t n2, double fill = 0.0)
        : n0_(n0), n1_(n1), n2_(n2), data_(n0 * n1 * n2, fill) {}

    double& operator()(std::size_t a, std::size_t b, std::size_t c) { return data_[(a * n1_ + b) * n2_ + c]; }
    double operator()(std::size_t a, std::size_t b, std::size_t c) const { return data_[(a * n1_ + b) * n2_ + c]; }

    std::size_t dim0() const { return n0_; }
    std::size_t dim1() const { return n1_; }
    std::size_t dim2() const { return n2_; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Cube&, const Cube&) = default;

private:
    std::size_t n0_ = 0;
    std::size_t n1_ = 0;
    std::size_t n2_ = 0;
    std::vector<double> data_;
};

struct SectorInfo {
    std::string id;
    bool tariffable = true;

    friend bool operator==(const SectorInfo&, const SectorInfo&) = default;
};

enum class ModelVariant { full, no_io };

inline std::string to_string(ModelVariant v) { return v == ModelVariant::full ? "full" : "no-io"; }

inline ModelVariant parse_variant(const std::string& s)
{
    if (s == "full") return ModelVariant::full;
    if (s == "no-io" || s == "no_io") return ModelVariant::no_io;
    throw ConfigError("unknown model variant '" + s + "' (expected full|no-io)");
}

/// Gross tariff factors tau(importer, exporter, sector) for one policy scenario.
struct TariffSchedule {
    Cube tau;
    std::string label;
    std::string date;

    TariffSchedule() = default;
    TariffSchedule(std::size_t regions, std::size_t sectors) : tau(regions, regions, sectors, 1.0) {}

    std::size_t regions() const { return tau.dim0(); }
    std::size_t sectors() const { return tau.dim2(); }

    double rate(std::size_t i, std::size_t j, std::size_t s) const { return tau(i, j, s) - 1.0; }
};

/// Baseline primitives of the calibrated world economy. Immutable once built.
struct EconomyCalibration {
    std::vector<std::string> regions;
    std::vector<SectorInfo> sectors;
    Grid2 final_shares;     // a[i][s]
    Grid2 va_shares;        // gamma[i][s]
    Cube io_shares;         // gamma_io[i][k][s]: sector-k inputs used by sector s
    Cube trade_shares;      // pi[i][j][s], purchaser prices
    std::vector<double> theta;
    std::vector<double> labor_income;   // wL[i]
    Grid2 absorption;       // X[i][s], purchaser prices
    std::vector<double> deficits;       // D[i]
    Cube baseline_tariffs;  // tau0[i][j][s]
    std::size_t numeraire_region = 0;
    double report_scale = 1.106;

    std::size_t num_regions() const { return regions.size(); }
    std::size_t num_sectors() const { return sectors.size(); }

    std::optional<std::size_t> region_index(const std::string& id) const
    {
        for (std::size_t i = 0; i < regions.size(); ++i)
            if (regions[i] == id) return i;
        return std::nullopt;
    }

    std::optional<std::size_t> sector_index(const std::string& id) const
    {
        for (std::size_t s = 0; s < sectors.size(); ++s)
            if (sectors[s].id == id) return s;
        return std::nullopt;
    }

    std::size_t require_region(const std::string& id) const
    {
        auto idx = region_index(id);
        if (!idx) throw InputError("unknown region '" + id + "'");
        return *idx;
    }

    std::size_t require_sector(const std::string& id) const
    {
        auto idx = sector_index(id);
        if (!idx) throw InputError("unknown sector '" + id + "'");
        return *idx;
    }

    TariffSchedule baseline_schedule() const
    {
        TariffSchedule s;
        s.tau = baseline_tariffs;
        s.label = "baseline";
        return s;
    }

    /// Total baseline value added; the currency base for welfare changes.
    double gdp(std::size_t i) const { return labor_income[i]; }

    friend bool operator==(const EconomyCalibration&, const EconomyCalibration&) = default;
};

inline constexpr double kShareTolerance = 1e-12;

/// Throws InputError describing the first broken schedule invariant.
inline void validate_schedule(const TariffSchedule& sched, const std::vector<SectorInfo>& sectors)
{
    const std::size_t n = sched.regions();
    if (sched.tau.dim1() != n || sched.sectors() != sectors.size())
        throw InputError("tariff schedule dimensions do not match the calibration");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t s = 0; s < sectors.size(); ++s) {
                const double t = sched.tau(i, j, s);
                const std::string where = "(" + std::to_string(i) + "," + std::to_string(j) + "," + sectors[s].id + ")";
                if (!std::isfinite(t) || t < 1.0)
                    throw InputError("tariff factor below 1 or non-finite at " + where);
                if ((i == j || !sectors[s].tariffable) && t != 1.0)
                    throw InputError("own-trade or non-tariffable tariff factor must be 1 at " + where);
            }
}

/// Throws InputError describing the first broken calibration invariant.
inline void validate_calibration(const EconomyCalibration& c)
{
    const std::size_t n = c.num_regions();
    const std::size_t ns = c.num_sectors();
    if (n == 0 || ns == 0) throw InputError("calibration has no regions or sectors");
    auto check_dims = [](bool ok, const char* what) {
        if (!ok) throw InputError(std::string("calibration field has wrong shape: ") + what);
    };
    check_dims(c.final_shares.rows() == n && c.final_shares.cols() == ns, "final_shares");
    check_dims(c.va_shares.rows() == n && c.va_shares.cols() == ns, "va_shares");
    check_dims(c.io_shares.dim0() == n && c.io_shares.dim1() == ns && c.io_shares.dim2() == ns, "io_shares");
    check_dims(c.trade_shares.dim0() == n && c.trade_shares.dim1() == n && c.trade_shares.dim2() == ns, "trade_shares");
    check_dims(c.theta.size() == ns, "theta");
    check_dims(c.labor_income.size() == n, "labor_income");
    check_dims(c.absorption.rows() == n && c.absorption.cols() == ns, "absorption");
    check_dims(c.deficits.size() == n, "deficits");
    check_dims(c.baseline_tariffs.dim0() == n && c.baseline_tariffs.dim1() == n && c.baseline_tariffs.dim2() == ns,
               "baseline_tariffs");
    if (c.numeraire_region >= n) throw InputError("numeraire region out of range");

    auto in_unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
    for (std::size_t i = 0; i < n; ++i) {
        const std::string r = c.regions[i];
        double a_sum = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            if (!in_unit(c.final_shares(i, s))) throw InputError("final share outside [0,1] in " + r);
            a_sum += c.final_shares(i, s);
            double g = c.va_shares(i, s);
            if (!in_unit(g)) throw InputError("value-added share outside [0,1] in " + r);
            for (std::size_t k = 0; k < ns; ++k) {
                if (!in_unit(c.io_shares(i, k, s))) throw InputError("io share outside [0,1] in " + r);
                g += c.io_shares(i, k, s);
            }
            if (std::abs(g - 1.0) > kShareTolerance)
                throw InputError("production shares do not sum to 1 in " + r + "/" + c.sectors[s].id);
            double p_sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (!in_unit(c.trade_shares(i, j, s))) throw InputError("trade share outside [0,1] in " + r);
                p_sum += c.trade_shares(i, j, s);
            }
            if (std::abs(p_sum - 1.0) > kShareTolerance)
                throw InputError("trade shares do not sum to 1 in " + r + "/" + c.sectors[s].id);
            if (!std::isfinite(c.absorption(i, s)) || c.absorption(i, s) < 0.0)
                throw InputError("negative absorption in " + r);
        }
        if (std::abs(a_sum - 1.0) > kShareTolerance) throw InputError("final shares do not sum to 1 in " + r);
        if (!std::isfinite(c.labor_income[i]) || c.labor_income[i] < 0.0)
            throw InputError("negative labor income in " + r);
        if (!std::isfinite(c.deficits[i])) throw InputError("non-finite deficit in " + r);
    }
    for (std::size_t s = 0; s < ns; ++s)
        if (!(c.theta[s] > 0.0) || !std::isfinite(c.theta[s]))
            throw InputError("trade elasticity must be positive for sector " + c.sectors[s].id);

    TariffSchedule base;
    base.tau = c.baseline_tariffs;
    validate_schedule(base, c.sectors);
}

}  // namespace tariffcge
