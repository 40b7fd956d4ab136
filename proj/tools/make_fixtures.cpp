// Regenerates the shipped synthetic fixtures and the default model file.
//   make_fixtures [--root <repo dir>]

#include "tariffcge/archive.hpp"
#include "tariffcge/cli/config.hpp"
#include "tariffcge/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace tariffcge;
using nlohmann::json;

namespace {

void write_file(const fs::path& p, const std::string& text)
{
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

void write_fixture(const fs::path& dir, const synthetic::Spec& spec, const cli::ModelFile& model, const json& run)
{
    const auto data = synthetic::generate(spec);
    write_file(dir / "io_table.csv", write_io_table(data.io));
    write_file(dir / "tariffs.csv", write_tariff_records(data.records));
    write_file(dir / "concordance.csv", write_concordance(data.concordance));
    write_file(dir / "model.json", cli::model_to_json(model).dump(2) + "\n");
    write_file(dir / "run.json", run.dump(2) + "\n");

    const auto tau0 = aggregate_tariffs(data.records, data.concordance, spec.baseline_date, spec.model);
    CalibrationOptions opt;
    opt.rebase = true;
    const auto built = build_calibration(data.io, tau0, spec.model, opt);
    write_file(dir / "calibration.json", write_archive(built.calibration));
    std::cout << dir.string() << ": " << data.io.records.size() << " io rows, " << data.records.size()
              << " tariff records, " << archive_hash(built.calibration) << "\n";
}

synthetic::Spec three_region_spec()
{
    synthetic::Spec s;
    s.model.regions = {{"USA", "United States", {"USA"}}, {"CHN", "China", {"CHN"}}, {"EUU", "European Union", {"EUU"}}};
    s.model.sectors = {{"GOODS", "Goods", true, 3.0, {"GOODS"}}, {"SERV", "Services", false, 8.35, {"SERV"}}};
    s.model.numeraire = "USA";
    s.seed = 3;
    s.size = {{"USA", 1.0}, {"CHN", 0.8}, {"EUU", 1.0}};
    s.deltas = {{"USA", "CHN", "2018-07-06", 10.0}, {"CHN", "USA", "2018-07-06", 8.0}, {"USA", "CHN", "2019-09-01", 17.5}};
    s.trackers = {{"USA", {"CHN"}, "2025-02-04", 27.5, false},
                  {"CHN", {"USA"}, "2025-02-10", 18.0, false},
                  {"USA", {"CHN"}, "2025-03-04", 37.5, false},
                  {"USA", {"EUU"}, "2025-04-05", 10.0, false},
                  {"USA", {"CHN"}, "2025-04-10", 145.0, false},
                  {"CHN", {"USA"}, "2025-04-10", 125.0, false},
                  {"USA", {"CHN"}, "2025-05-14", 30.0, false},
                  {"CHN", {"USA"}, "2025-05-14", 10.0, false},
                  {"USA", {"EUU"}, "2025-08-07", 15.0, true}};
    return s;
}

json three_region_run()
{
    return {
        {"inputs", {{"baseline_date", "2025-01-01"}}},
        {"home", "USA"},
        {"output_dir", "out"},
        {"seed", 20250101},
        {"calibrate", {{"rebase", true}}},
        {"laffer",
         {{"partners", {"CHN", "EUU"}},
          {"responses", {"none", "equivalent", "revenue_max", "welfare_max"}},
          {"rate_grid", {{"start", 0}, {"stop", 100}, {"step", 1}}}}},
        {"cumulative",
         {{"partners", {"CHN", "EUU"}},
          {"order", "meb"},
          {"responses", {"none", "equivalent"}},
          {"rate_grid", {{"start", 0}, {"stop", 100}, {"step", 1}}}}},
        {"mfei",
         {{"partners", {"CHN", "EUU"}},
          {"responses", {"none", "equivalent"}},
          {"rate_grid", {{"start", 0}, {"stop", 50}, {"step", 1}}},
          {"alpha", 0.25}}},
        {"timeline",
         {{"reference_date", "2016-01-01"},
          {"dates", {"2019-12-31", "2025-01-01", "2025-02-04", "2025-03-04", "2025-04-05", "2025-04-10", "2025-05-14", "2025-08-07"}}}},
    };
}

synthetic::Spec world17_spec()
{
    synthetic::Spec s;
    s.model = default_model_config();
    s.seed = 17;
    s.raw_code_splits = true;
    s.size = {{"USA", 6.0}, {"CHN", 4.5}, {"EUU", 5.0}, {"JPN", 1.5}, {"ROW", 5.0}};
    s.deltas = {{"USA", "CHN", "2018-07-06", 10.0}, {"CHN", "USA", "2018-07-06", 8.0},
                {"USA", "CHN", "2019-09-01", 17.5}, {"CHN", "USA", "2019-09-01", 16.0}};
    std::vector<std::string> others;
    for (const auto& r : s.model.regions)
        if (r.id != "USA" && r.id != "CHN") others.push_back(r.id);
    s.trackers = {{"USA", {"CHN"}, "2025-02-04", 27.5, false},
                  {"CHN", {"USA"}, "2025-02-10", 26.0, false},
                  {"USA", {"CHN"}, "2025-03-04", 37.5, false},
                  {"USA", {"CAN", "MEX"}, "2025-03-04", 25.0, false},
                  {"CAN", {"USA"}, "2025-03-04", 25.0, false},
                  {"USA", others, "2025-04-05", 10.0, false},
                  {"USA", {"CHN"}, "2025-04-10", 145.0, false},
                  {"CHN", {"USA"}, "2025-04-10", 125.0, false},
                  {"USA", {"CHN"}, "2025-05-14", 30.0, false},
                  {"CHN", {"USA"}, "2025-05-14", 10.0, false},
                  {"USA", {"EUU", "JPN", "KOR"}, "2025-08-07", 15.0, false},
                  {"USA", {"IND", "BRA"}, "2025-08-07", 50.0, true},
                  {"USA", {"VNM", "IDN"}, "2025-08-07", 20.0, false},
                  {"USA", {"CHE"}, "2025-08-07", 39.0, false}};
    return s;
}

json world17_run()
{
    return {
        {"inputs", {{"baseline_date", "2025-01-01"}}},
        {"home", "USA"},
        {"output_dir", "out"},
        {"seed", 20250101},
        {"calibrate", {{"rebase", true}}},
        {"laffer",
         {{"partners", {"CHN", "CAN", "EUU"}},
          {"responses", {"none", "equivalent"}},
          {"rate_grid", {{"start", 0}, {"stop", 60}, {"step", 2}}}}},
        {"cumulative",
         {{"order", "config"}, {"responses", {"none"}}, {"rate_grid", {{"start", 0}, {"stop", 60}, {"step", 5}}}}},
        {"mfei",
         {{"partners", {"CHN", "CAN", "MEX", "EUU", "JPN"}},
          {"responses", {"none"}},
          {"rate_grid", {{"start", 0}, {"stop", 50}, {"step", 5}}}}},
        {"timeline",
         {{"reference_date", "2016-01-01"},
          {"dates", {"2019-12-31", "2025-01-01", "2025-02-04", "2025-03-04", "2025-04-05", "2025-04-10", "2025-05-14", "2025-08-07"}}}},
        {"invopt",
         {{"dates", {"2016-06-01", "2019-06-01", "2025-04-10", "2025-05-01", "2025-08-20", "2025-10-01"}},
          {"delta", 0.001},
          {"alpha", 0.25},
          {"reps", 999}}},
    };
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Regenerate synthetic fixtures"};
    std::string root = ".";
    app.add_option("--root", root, "repository root");
    CLI11_PARSE(app, argc, argv);
    try {
        const fs::path base(root);
        write_file(base / "config" / "default_model.json", cli::model_to_json(cli::default_model_file()).dump(2) + "\n");

        auto tr = three_region_spec();
        write_fixture(base / "fixtures" / "three_region", tr, {tr.model, {"CHN", "EUU"}}, three_region_run());

        auto w = world17_spec();
        write_fixture(base / "fixtures" / "world17", w, {w.model, cli::default_partner_order()}, world17_run());
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
