#pragma once

#include "tariffcge/types.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace tariffcge {

inline std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[digest[k] >> 4];
        out += hex[digest[k] & 0xF];
    }
    return out;
}

namespace detail {

inline nlohmann::json cube_json(const Cube& c)
{
    return {{"dims", {c.dim0(), c.dim1(), c.dim2()}}, {"data", c.data()}};
}

inline Cube cube_from(const nlohmann::json& j, const char* what)
{
    try {
        auto dims = j.at("dims").get<std::vector<std::size_t>>();
        if (dims.size() != 3) throw InputError(std::string("archive: ") + what + " must have 3 dims");
        Cube c(dims[0], dims[1], dims[2]);
        auto data = j.at("data").get<std::vector<double>>();
        if (data.size() != c.data().size()) throw InputError(std::string("archive: ") + what + " has wrong length");
        c.data() = std::move(data);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("archive: bad ") + what + ": " + e.what());
    }
}

inline nlohmann::json grid_json(const Grid2& g) { return {{"dims", {g.rows(), g.cols()}}, {"data", g.data()}}; }

inline Grid2 grid_from(const nlohmann::json& j, const char* what)
{
    try {
        auto dims = j.at("dims").get<std::vector<std::size_t>>();
        if (dims.size() != 2) throw InputError(std::string("archive: ") + what + " must have 2 dims");
        Grid2 g(dims[0], dims[1]);
        auto data = j.at("data").get<std::vector<double>>();
        if (data.size() != g.data().size()) throw InputError(std::string("archive: ") + what + " has wrong length");
        g.data() = std::move(data);
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("archive: bad ") + what + ": " + e.what());
    }
}

}  // namespace detail

/// Canonical JSON body of a calibration. Doubles print in shortest
/// round-trip form, so reloading reproduces every value exactly.
inline nlohmann::json calibration_to_json(const EconomyCalibration& c)
{
    nlohmann::json sectors = nlohmann::json::array();
    for (const auto& s : c.sectors) sectors.push_back({{"id", s.id}, {"tariffable", s.tariffable}});
    return {{"regions", c.regions},
            {"sectors", sectors},
            {"final_shares", detail::grid_json(c.final_shares)},
            {"va_shares", detail::grid_json(c.va_shares)},
            {"io_shares", detail::cube_json(c.io_shares)},
            {"trade_shares", detail::cube_json(c.trade_shares)},
            {"theta", c.theta},
            {"labor_income", c.labor_income},
            {"absorption", detail::grid_json(c.absorption)},
            {"deficits", c.deficits},
            {"baseline_tariffs", detail::cube_json(c.baseline_tariffs)},
            {"numeraire_region", c.numeraire_region},
            {"report_scale", c.report_scale}};
}

inline EconomyCalibration calibration_from_json(const nlohmann::json& j)
{
    EconomyCalibration c;
    try {
        c.regions = j.at("regions").get<std::vector<std::string>>();
        for (const auto& s : j.at("sectors"))
            c.sectors.push_back({s.at("id").get<std::string>(), s.at("tariffable").get<bool>()});
        c.theta = j.at("theta").get<std::vector<double>>();
        c.labor_income = j.at("labor_income").get<std::vector<double>>();
        c.deficits = j.at("deficits").get<std::vector<double>>();
        c.numeraire_region = j.at("numeraire_region").get<std::size_t>();
        c.report_scale = j.at("report_scale").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("archive: ") + e.what());
    }
    c.final_shares = detail::grid_from(j.at("final_shares"), "final_shares");
    c.va_shares = detail::grid_from(j.at("va_shares"), "va_shares");
    c.io_shares = detail::cube_from(j.at("io_shares"), "io_shares");
    c.trade_shares = detail::cube_from(j.at("trade_shares"), "trade_shares");
    c.absorption = detail::grid_from(j.at("absorption"), "absorption");
    c.baseline_tariffs = detail::cube_from(j.at("baseline_tariffs"), "baseline_tariffs");
    validate_calibration(c);
    return c;
}

/// Archive text: {"format", "content_hash", "calibration"}. The hash covers
/// the compact serialization of the calibration body only.
inline std::string write_archive(const EconomyCalibration& c)
{
    const auto body = calibration_to_json(c);
    nlohmann::json doc;
    doc["format"] = "tariffcge-calibration-1";
    doc["content_hash"] = "sha256:" + sha256_hex(body.dump());
    doc["calibration"] = body;
    return doc.dump(1) + "\n";
}

inline std::string archive_hash(const EconomyCalibration& c)
{
    return "sha256:" + sha256_hex(calibration_to_json(c).dump());
}

inline EconomyCalibration read_archive(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open calibration archive " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("calibration archive " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.contains("calibration") || !doc.contains("content_hash"))
        throw InputError("calibration archive " + path + " lacks calibration or content_hash");
    const auto& body = doc["calibration"];
    const std::string want = doc["content_hash"].get<std::string>();
    if ("sha256:" + sha256_hex(body.dump()) != want)
        throw InputError("calibration archive " + path + " fails its content hash check");
    return calibration_from_json(body);
}

}  // namespace tariffcge
