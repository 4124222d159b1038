// SPDX-License-Identifier: Apache-2.0
//
// thz-iqi: link-level simulator for I/Q imbalance in THz MU-MIMO-OFDM links
// Copyright (C) 2026 The thz-iqi authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "thziqi/experiments.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace thziqi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace
{

Scenario small_scenario()
{
    Scenario s;
    s.system.half_subcarriers = 4;
    s.system.elements_per_side = 4;
    s.trials = 3;
    s.threads = 2;
    s.snr_db = {0.0, 20.0, 10.0};
    return s;
}

std::string slurp(const fs::path &p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string &name)
{
    const fs::path d = fs::temp_directory_path() / ("thziqi_unit_" + name);
    fs::remove_all(d);
    return d;
}

} // namespace

TEST_CASE("sweep grid is inclusive and free of drift", "[experiments]")
{
    CHECK(SweepRange{0.0, 60.0, 5.0}.values().size() == 13);
    const auto g = SweepRange{0.7, 1.0, 0.05}.values();
    REQUIRE(g.size() == 7);
    CHECK(g.back() == 1.0);
    CHECK(g[1] == 0.75);
    CHECK(SweepRange{1.0, 1.0, 0.5}.values() == std::vector<double>{1.0});
}

TEST_CASE("placements respect the cone and separation", "[experiments]")
{
    SystemConfig cfg;
    PlacementConfig pc;
    const double sep = deg_to_rad(pc.min_separation_deg);
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
    {
        const UserPlacement p = place_users(cfg, pc, seed);
        REQUIRE(p.links.size() == 9);
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n)
            {
                const LinkGeometry &l = p.link(m, n);
                REQUIRE(l.distance_m == 1.0);
                for (const Direction &d : {l.arrival, l.departure})
                {
                    REQUIRE(rad_to_deg(d.azimuth) >= -60.0);
                    REQUIRE(rad_to_deg(d.azimuth) <= 60.0);
                    REQUIRE(rad_to_deg(d.elevation) >= 80.0);
                    REQUIRE(rad_to_deg(d.elevation) <= 100.0);
                }
                for (int o = 0; o < 3; ++o)
                {
                    if (o != m)
                        REQUIRE(angular_separation(l.departure, p.link(o, n).departure) >= sep);
                    if (o != n)
                        REQUIRE(angular_separation(l.arrival, p.link(m, o).arrival) >= sep);
                }
            }
    }
}

TEST_CASE("placement is reproducible and fails loudly when infeasible", "[experiments]")
{
    SystemConfig cfg;
    PlacementConfig pc;
    const UserPlacement a = place_users(cfg, pc, 42);
    const UserPlacement b = place_users(cfg, pc, 42);
    for (size_t i = 0; i < a.links.size(); ++i)
    {
        CHECK(a.links[i].arrival.azimuth == b.links[i].arrival.azimuth);
        CHECK(a.links[i].departure.elevation == b.links[i].departure.elevation);
    }
    pc.azimuth_min_deg = pc.azimuth_max_deg = 0.0;
    pc.elevation_min_deg = pc.elevation_max_deg = 90.0;
    pc.max_attempts = 50;
    CHECK_THROWS_AS(place_users(cfg, pc, 1), NumericalError);
}

TEST_CASE("scenario JSON round trip", "[experiments]")
{
    Scenario s = small_scenario();
    s.iqi.irr_db = 30.0;
    s.band = Band::rayleigh;
    s.nulling_power = PowerPolicy::fixed_per_subcarrier;
    const Scenario back = scenario_from_json(scenario_to_json(s));
    CHECK(canonical_scenario(back) == canonical_scenario(s));
    CHECK(back.iqi.irr_db.value() == 30.0);
    CHECK(back.band == Band::rayleigh);
}

TEST_CASE("scenario JSON rejects unknown keys and bad values", "[experiments]")
{
    using nlohmann::json;
    auto key_of = [](const json &j) {
        try
        {
            scenario_from_json(j);
        }
        catch (const ValidationError &e)
        {
            return e.key();
        }
        return std::string("<none>");
    };
    CHECK(key_of(json{{"system", {{"carrier", 1.0}}}}) == "system.carrier");
    CHECK(key_of(json{{"iqi", {{"g", "high"}}}}) == "iqi.g");
    CHECK(key_of(json{{"iqi", {{"g", -0.5}}}}) == "iqi.g");
    CHECK(key_of(json{{"study", {{"trials", 0}}}}) == "study.trials");
    CHECK(key_of(json{{"system", {{"users", 4}}}}) == "system.users");
    CHECK(key_of(json{{"study", {{"nulling_power", "half"}}}}) == "study.nulling_power");
    CHECK(key_of(json{{"iqi", {{"g", 1.2}}}}) == "<none>");
    CHECK(key_of(json{{"system", {{"users", 4}}}, {"channel", {{"band", "rayleigh"}}}}) == "<none>");
}

TEST_CASE("closest feasible IRR replaces an unreachable target", "[experiments]")
{
    Scenario s;
    s.iqi.irr_db = 30.0;
    CHECK(s.chain_imbalance().amplitude == 1.0);
    s.iqi.phase_deg = 0.0;
    CHECK_THAT(s.chain_imbalance().amplitude, WithinAbs(0.93869314, 1e-7));
    s.iqi.tx_enabled = false;
    const IqiParams p = s.iqi_params(s.chain_imbalance());
    CHECK(p.tx[0].amplitude == 1.0);
    CHECK(p.rx[0].amplitude < 1.0);
}

TEST_CASE("THz trial channels are normalized to unit carrier path gain", "[experiments]")
{
    Scenario s = small_scenario();
    const SubcarrierMatrices hc = trial_channel(s, 0);
    REQUIRE(hc.rows() == 3);
    for (int m = 0; m < 3; ++m)
        CHECK_THAT(std::abs(hc.at(1)(m, m)), WithinAbs(1.0, 0.05));
    s.normalize_gain = false;
    CHECK_THAT(std::abs(trial_channel(s, 0).at(1)(0, 0)), WithinAbs(path_loss(300e9, 1.0), 0.05 * path_loss(300e9, 1.0)));
    s.normalize_gain = true;
    s.ideal_per_subcarrier_analog = true;
    for (int k : {-4, 4})
        CHECK_THAT(std::abs(trial_channel(s, 0).at(k)(0, 0)) * path_loss(300e9, 1.0),
                   WithinRel(path_loss(subcarrier_frequency(k, s.system), 1.0), 1e-9));
}

TEST_CASE("trials are independent of the thread count", "[experiments]")
{
    Scenario s = small_scenario();
    s.threads = 1;
    const ResultTable one = sweep_rate_vs_snr(s);
    s.threads = 3;
    const ResultTable three = sweep_rate_vs_snr(s);
    CHECK(one.rows == three.rows);
}

TEST_CASE("study tables carry the expected columns", "[experiments]")
{
    const Scenario s = small_scenario();
    CHECK(run_study(Study::slope_sweep, s).columns == std::vector<std::string>{"g", "slope_mean", "slope_std", "trials"});
    const ResultTable se = run_study(Study::se_curve, s);
    CHECK(se.columns.front() == "g");
    CHECK(se.rows.size() == 3 * s.ebn0_db.values().size());
    const ResultTable r = run_study(Study::rate_vs_snr, s);
    CHECK(r.column("snr_db") == std::vector<double>{0.0, 10.0, 20.0});
    CHECK(r.column("trials").front() == 3.0);
    const ResultTable n = run_study(Study::nulling, s);
    CHECK(n.columns[1] == "rate_full");
    CHECK_THROWS_AS(n.column("missing"), std::out_of_range);
}

TEST_CASE("rate curves are ordered by impairment", "[experiments]")
{
    Scenario s = small_scenario();
    s.iqi.amplitude = 0.8;
    const ResultTable t = sweep_rate_vs_snr(s);
    for (const auto &row : t.rows)
    {
        CHECK(row[1] >= row[2]); // no interference >= IUI only
        CHECK(row[1] >= row[3]); // no interference >= IQI only
        CHECK(row[3] >= row[4]); // IQI only >= IQI + IUI
    }
}

TEST_CASE("CSV layout and atomic file write", "[experiments]")
{
    ResultTable t;
    t.study = "demo";
    t.columns = {"a", "b"};
    t.rows = {{1.0, 0.1234567891234}, {2.0, -3.0}};
    t.scenario_echo = "{}";
    t.seed = 9;
    CHECK(to_csv(t) == "# scenario={} seed=9\na,b\n1,0.123456789\n2,-3\n");

    const fs::path dir = fresh_dir("csv");
    const fs::path p = write_csv(t, dir, true);
    CHECK(p.filename() == "demo_thz.csv");
    CHECK(slurp(p) == to_csv(t));
    CHECK_FALSE(fs::exists(dir / "demo_thz.csv.partial"));
    const fs::path stamped = write_csv(t, dir, false);
    CHECK(stamped.filename().string().size() == std::string("demo_thz_20260101T000000Z.csv").size());
    fs::remove_all(dir);
}

TEST_CASE("unwritable output directory raises an IO error", "[experiments]")
{
    const fs::path blocker = fresh_dir("blocker");
    std::ofstream(blocker) << "file";
    ResultTable t;
    t.study = "demo";
    CHECK_THROWS_AS(write_csv(t, blocker / "sub", true), IoError);
    fs::remove(blocker);
}

TEST_CASE("library oracle check passes on random instances", "[experiments]")
{
    const OracleReport r = oracle_agreement(40, 3);
    CHECK(r.instances == 40);
    CHECK(r.max_rel_error() < 1e-4);
}

TEST_CASE("cancellation aborts a sweep", "[experiments]")
{
    cancel_flag() = true;
    CHECK_THROWS(sweep_rate_vs_snr(small_scenario()));
    cancel_flag() = false;
    CHECK_NOTHROW(sweep_rate_vs_snr(small_scenario()));
}
