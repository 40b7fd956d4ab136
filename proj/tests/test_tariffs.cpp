#include "tariffcge/calibration.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace tariffcge;

namespace {

ModelConfig model()
{
    ModelConfig m;
    m.regions = {{"US", "", {"US"}}, {"CN", "", {"CN"}}, {"EU", "", {"DE", "FR"}}};
    m.sectors = {{"AG", "", true, 4.0, {"A"}}, {"MF", "", true, 4.0, {"M"}}, {"SV", "", false, 8.0, {"S"}}};
    m.numeraire = "US";
    return m;
}

Concordance conc()
{
    Concordance c;
    c.product_to_sector = {{"010001", "A"}, {"010002", "A"}, {"020001", "M"}, {"020002", "M"}, {"030001", "S"}};
    return c;
}

TariffRecord base(std::string i, std::string j, std::string code, double r, std::string d = "2025-01-01")
{
    return {std::move(i), std::move(j), std::move(code), r, TariffSource::baseline, std::move(d)};
}
TariffRecord delta(std::string i, std::string j, std::string code, double r, std::string d = "2019-01-01")
{
    return {std::move(i), std::move(j), std::move(code), r, TariffSource::tradewar_delta, std::move(d)};
}
TariffRecord tracker(std::string i, std::string j, std::string code, double r, std::string d)
{
    return {std::move(i), std::move(j), std::move(code), r, TariffSource::tracker, std::move(d)};
}

double rate(const TariffSchedule& s, std::size_t i, std::size_t j, std::size_t k) { return (s.tau(i, j, k) - 1.0) * 100.0; }

}  // namespace

TEST_CASE("a single record sets the sector rate", "[tariffs]")
{
    const auto s = aggregate_tariffs({base("US", "CN", "010001", 10.0)}, conc(), "2025-06-01", model());
    REQUIRE(s.tau(0, 1, 0) == 1.1);
    REQUIRE(s.tau(0, 1, 1) == 1.0);
    REQUIRE(s.tau(1, 0, 0) == 1.0);
}

TEST_CASE("baseline lines are simple-averaged", "[tariffs]")
{
    const auto s = aggregate_tariffs({base("US", "CN", "010001", 10.0), base("US", "CN", "010002", 20.0)}, conc(),
                                     "2025-06-01", model());
    REQUIRE(rate(s, 0, 1, 0) == Catch::Approx(15.0).epsilon(1e-14));
}

TEST_CASE("a tracker rate replaces baseline plus delta", "[tariffs]")
{
    const auto s = aggregate_tariffs({base("US", "CN", "010001", 5.0), delta("US", "CN", "010001", 10.0),
                                      tracker("US", "CN", "010001", 30.0, "2025-03-01")},
                                     conc(), "2025-06-01", model());
    REQUIRE(rate(s, 0, 1, 0) == Catch::Approx(30.0).epsilon(1e-14));
    const auto before = aggregate_tariffs({base("US", "CN", "010001", 5.0), delta("US", "CN", "010001", 10.0),
                                           tracker("US", "CN", "010001", 30.0, "2025-03-01")},
                                          conc(), "2025-02-01", model());
    REQUIRE(rate(before, 0, 1, 0) == Catch::Approx(15.0).epsilon(1e-14));
}

TEST_CASE("the averaged delta is added to the baseline average", "[tariffs]")
{
    const auto s = aggregate_tariffs({base("US", "CN", "010001", 4.0), base("US", "CN", "010002", 6.0),
                                      delta("US", "CN", "010001", 10.0)},
                                     conc(), "2025-06-01", model());
    REQUIRE(rate(s, 0, 1, 0) == Catch::Approx(15.0).epsilon(1e-14));
}

TEST_CASE("records apply in chronological order", "[tariffs]")
{
    const std::vector<TariffRecord> recs = {
        base("US", "CN", "020001", 4.0, "2016-01-01"), base("US", "CN", "020001", 3.0, "2025-01-01"),
        tracker("US", "CN", "020001", 20.0, "2025-02-04"), tracker("US", "CN", "020001", 50.0, "2025-04-10"),
        tracker("US", "CN", "020001", 30.0, "2025-05-14")};
    const std::vector<std::pair<std::string, double>> expect = {{"2016-06-01", 4.0}, {"2025-01-01", 3.0},
                                                                {"2025-02-04", 20.0}, {"2025-04-09", 20.0},
                                                                {"2025-04-10", 50.0}, {"2025-12-31", 30.0}};
    for (const auto& [date, r] : expect) {
        CAPTURE(date);
        REQUIRE(rate(aggregate_tariffs(recs, conc(), date, model()), 0, 1, 1) == Catch::Approx(r).epsilon(1e-14));
    }
    // Records before their effective date are invisible.
    const auto early = aggregate_tariffs(recs, conc(), "2015-01-01", model());
    REQUIRE(early.tau(0, 1, 1) == 1.0);
}

TEST_CASE("partial tracker coverage blends at the line level", "[tariffs]")
{
    // Tracked line: 30. Untracked line: 6 + mean delta 2. Average: 19.
    const auto s = aggregate_tariffs({base("US", "CN", "010001", 4.0), base("US", "CN", "010002", 6.0),
                                      delta("US", "CN", "010001", 2.0), delta("US", "CN", "010002", 2.0),
                                      tracker("US", "CN", "010001", 30.0, "2025-04-05")},
                                     conc(), "2025-06-01", model());
    REQUIRE(rate(s, 0, 1, 0) == Catch::Approx(19.0).epsilon(1e-14));
}

TEST_CASE("member-country lines average into the region", "[tariffs]")
{
    const auto s = aggregate_tariffs({base("DE", "US", "010001", 4.0), base("FR", "US", "010001", 8.0),
                                      base("US", "DE", "010001", 2.0), base("US", "FR", "010001", 2.0)},
                                     conc(), "2025-06-01", model());
    REQUIRE(rate(s, 2, 0, 0) == Catch::Approx(6.0).epsilon(1e-14));
    REQUIRE(rate(s, 0, 2, 0) == Catch::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("own-region and service entries stay at one", "[tariffs]")
{
    const auto s = aggregate_tariffs({base("DE", "FR", "010001", 9.0), base("US", "CN", "030001", 9.0)}, conc(),
                                     "2025-06-01", model());
    REQUIRE(s.tau(2, 2, 0) == 1.0);
    REQUIRE(s.tau(0, 1, 2) == 1.0);
}

TEST_CASE("undated records apply at every date", "[tariffs]")
{
    const auto s = aggregate_tariffs({base("US", "CN", "010001", 7.0, "")}, conc(), "1999-01-01", model());
    REQUIRE(rate(s, 0, 1, 0) == Catch::Approx(7.0).epsilon(1e-14));
}

TEST_CASE("tariff pipeline errors", "[tariffs]")
{
    SECTION("unmapped product codes are listed")
    {
        try {
            aggregate_tariffs({base("US", "CN", "999999", 1.0), base("US", "CN", "888888", 1.0)}, conc(), "2025-06-01",
                              model());
            FAIL("expected an error");
        } catch (const InputError& e) {
            const std::string msg = e.what();
            REQUIRE(msg.find("888888") != std::string::npos);
            REQUIRE(msg.find("999999") != std::string::npos);
        }
    }
    SECTION("unknown region codes")
    {
        REQUIRE_THROWS_AS(aggregate_tariffs({base("US", "XX", "010001", 1.0)}, conc(), "2025-06-01", model()),
                          InputError);
    }
    SECTION("conflicting same-date tracker records")
    {
        REQUIRE_THROWS_AS(aggregate_tariffs({tracker("US", "CN", "010001", 10.0, "2025-04-05"),
                                             tracker("US", "CN", "010001", 20.0, "2025-04-05")},
                                            conc(), "2025-06-01", model()),
                          InputError);
        REQUIRE_NOTHROW(aggregate_tariffs({tracker("US", "CN", "010001", 10.0, "2025-04-05"),
                                           tracker("US", "CN", "010001", 10.0, "2025-04-05")},
                                          conc(), "2025-06-01", model()));
    }
    SECTION("negative rates")
    {
        REQUIRE_THROWS_AS(aggregate_tariffs({base("US", "CN", "010001", -1.0)}, conc(), "2025-06-01", model()),
                          InputError);
        REQUIRE_THROWS_AS(aggregate_tariffs({base("US", "CN", "010001", 1.0), delta("US", "CN", "010001", -5.0)},
                                            conc(), "2025-06-01", model()),
                          InputError);
    }
    SECTION("malformed dates")
    {
        REQUIRE_THROWS_AS(aggregate_tariffs({}, conc(), "2025/06/01", model()), InputError);
    }
}

TEST_CASE("tariff shocks are ratios of gross factors", "[tariffs]")
{
    TariffSchedule a(2, 1), b(2, 1);
    a.tau(0, 1, 0) = 1.32;
    b.tau(0, 1, 0) = 1.1;
    const auto shock = tariff_shock(a, b);
    REQUIRE(shock(0, 1, 0) == Catch::Approx(1.2).epsilon(1e-15));
    REQUIRE(shock(1, 0, 0) == 1.0);
    REQUIRE_THROWS_AS(tariff_shock(a, TariffSchedule(3, 1)), InputError);
}

TEST_CASE("tariff records and concordances round-trip through CSV", "[tariffs]")
{
    const std::vector<TariffRecord> recs = {base("US", "CN", "010001", 3.25), tracker("US", "CN", "010001", 0.1, "2025-04-05"),
                                            delta("DE", "US", "020002", 17.5)};
    const auto dir = std::filesystem::temp_directory_path();
    {
        std::ofstream(dir / "tariffcge_recs.csv") << write_tariff_records(recs);
        std::ofstream(dir / "tariffcge_conc.csv") << write_concordance(conc());
    }
    const auto back = read_tariff_records((dir / "tariffcge_recs.csv").string());
    REQUIRE(back.size() == recs.size());
    for (std::size_t k = 0; k < recs.size(); ++k) {
        REQUIRE(back[k].rate_pct == recs[k].rate_pct);
        REQUIRE(back[k].source == recs[k].source);
        REQUIRE(back[k].effective_date == recs[k].effective_date);
    }
    REQUIRE(read_concordance((dir / "tariffcge_conc.csv").string()).product_to_sector == conc().product_to_sector);

    std::ofstream(dir / "tariffcge_bad.csv") << "importer,exporter,hs6,rate_pct,source,effective_date\n"
                                                "US,CN,010001,5,baseline,01/02/2025\n";
    REQUIRE_THROWS_AS(read_tariff_records((dir / "tariffcge_bad.csv").string()), InputError);
    std::ofstream(dir / "tariffcge_bad.csv") << "importer,exporter,hs6,rate_pct,source,effective_date\n"
                                                "US,CN,010001,5,rumour,2025-01-02\n";
    REQUIRE_THROWS_AS(read_tariff_records((dir / "tariffcge_bad.csv").string()), InputError);
    for (auto f : {"tariffcge_recs.csv", "tariffcge_conc.csv", "tariffcge_bad.csv"}) std::filesystem::remove(dir / f);
}
