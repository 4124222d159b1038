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

// Acceptance checks at desk scale (K = 64, 3 users, 100 trials). One PASS/FAIL line per criterion.

#include "oracles.hpp"

#include "thziqi/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace thziqi;
namespace fs = std::filesystem;

namespace
{

int failures = 0;

void report(int id, const std::string &name, bool ok, const std::string &detail)
{
    std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
    if (!ok)
        ++failures;
}

std::string fmt(const char *f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

/// The IQI setting used for the rate studies: 5 degrees phase error, 30 dB target IRR clamped to feasibility.
Scenario rate_scenario()
{
    Scenario s;
    s.iqi.phase_deg = 5.0;
    s.iqi.irr_db = 30.0;
    s.trials = 100;
    s.seed = 2024;
    return s;
}

struct Instance
{
    int users, subarrays, half;
    SubcarrierMatrices hc;
};

Instance random_instance(std::mt19937_64 &rng)
{
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    const int m = std::uniform_int_distribution<int>(1, n)(rng);
    const int half = std::uniform_int_distribution<int>(1, 4)(rng);
    return {m, n, half, rayleigh_channel(m, n, half, rng())};
}

double value_at(const ResultTable &t, const std::string &col, double snr)
{
    const auto x = t.column("snr_db");
    const auto y = t.column(col);
    for (size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i] - snr) < 1e-9)
            return y[i];
    throw std::out_of_range("snr point missing");
}

double rel_change(double from, double to) { return std::abs(to - from) / std::abs(from); }

void reduction()
{
    std::mt19937_64 rng(101);
    int instances = 0;
    bool exact = true;
    for (; instances < 200; ++instances)
    {
        Instance in = random_instance(rng);
        const MismatchMatrices mm = mismatch_matrices(IqiParams::uniform(in.subarrays, in.users, {1.0, 0.0}, {1.0, 0.0}));
        const EffectiveChannels ch = build_effective_channels(in.hc, mm);
        for (int k : subcarrier_indices(in.half))
        {
            exact &= ch.desired.at(k) == in.hc.at(k);
            exact &= ch.image.at(k).isZero(0.0);
            for (int m = 0; m < in.users; ++m)
                exact &= sinr_iqi(ch.desired.at(k), ch.image.at(k), 3.0, 1.0, m) == sinr_no_iqi(in.hc.at(k), 3.0, 1.0, m);
        }
        exact &= ebn0_min_iqi(ch.desired).linear == ebn0_min(in.hc).linear;
        for (SlopeConvention c : {SlopeConvention::derivative, SlopeConvention::single_cross})
            exact &= wideband_slope_iqi(ch.desired, ch.image, c) == wideband_slope(in.hc, c);
    }
    // the THz path as well
    Scenario s;
    s.system.half_subcarriers = 8;
    s.iqi.amplitude = 1.0;
    s.iqi.phase_deg = 0.0;
    for (std::uint64_t t = 0; t < 5; ++t)
    {
        const SubcarrierMatrices hc = trial_channel(s, t);
        const EffectiveChannels ch = build_effective_channels(hc, mismatch_matrices(s.iqi_params(s.chain_imbalance())));
        exact &= ebn0_min_iqi(ch.desired).linear == ebn0_min(hc).linear;
        exact &= wideband_slope_iqi(ch.desired, ch.image) == wideband_slope(hc);
        ++instances;
    }
    report(1, "reduction to the IQI-free model", exact,
           std::to_string(instances) + " instances, H_d == H_c, H_i == 0, metrics bit-identical");
}

void oracle_agreement_check()
{
    std::mt19937_64 rng(202);
    double worst_fd = 0.0, worst_contour = 0.0;
    int with_iqi = 0;
    const int instances = 120;
    for (int i = 0; i < instances; ++i)
    {
        Instance in = random_instance(rng);
        MismatchMatrices mm = MismatchMatrices::identity(in.subarrays, in.users);
        if (i % 2 == 1)
        {
            std::uniform_real_distribution<double> amp(0.7, 1.0), phase(deg_to_rad(-10.0), deg_to_rad(10.0));
            IqiParams p;
            for (int n = 0; n < in.subarrays; ++n)
                p.tx.push_back({amp(rng), phase(rng)});
            for (int m = 0; m < in.users; ++m)
                p.rx.push_back({amp(rng), phase(rng)});
            mm = mismatch_matrices(p);
            ++with_iqi;
        }
        const EffectiveChannels ch = build_effective_channels(in.hc, mm);
        const double units = static_cast<double>(in.subarrays * 2 * in.half);
        const double e_closed = ebn0_min_iqi(ch.desired).linear;
        const double s_closed = wideband_slope_iqi(ch.desired, ch.image);

        const SlopeEstimate fd = numeric_slope_oracle(tin_capacity(ch.desired, ch.image), units);
        worst_fd = std::max({worst_fd, rel_change(fd.ebn0_min.linear, e_closed), rel_change(fd.slope, s_closed)});

        const auto [d1, d2] = oracle::capacity_derivatives(oracle::terms_of(ch.desired.slots(), ch.image.slots()));
        worst_contour = std::max(
            {worst_contour, rel_change(units * std::log(2.0) / d1, e_closed), rel_change(2.0 * d1 * d1 / -d2, s_closed)});
    }
    report(2, "closed form vs derivative oracle", worst_fd < 0.01 && worst_contour < 0.01,
           std::to_string(instances) + " instances (" + std::to_string(with_iqi) + " with IQI), max rel error " +
               fmt("%.2e finite-difference, %.2e contour", worst_fd, worst_contour));
}

void classical_anchor()
{
    SubcarrierMatrices h(4, 1, 1);
    for (auto &m : h.slots())
        m(0, 0) = 1.0;
    const double db = ebn0_min(h).db;
    report(3, "single-user flat channel minimum bit energy", std::abs(db - (-1.59)) <= 0.01,
           fmt("%.4f dB", db));
}

void rate_ceiling(const fs::path &out)
{
    const Scenario s = rate_scenario();
    const ResultTable t = sweep_rate_vs_snr(s);
    write_csv(t, out, true);
    const double iqi_change = rel_change(value_at(t, "rate_iqi", 40.0), value_at(t, "rate_iqi", 60.0));
    const double per_decade = (value_at(t, "rate_noint", 60.0) - value_at(t, "rate_noint", 50.0)) /
                              (s.system.users * s.system.subcarrier_count());
    const bool ok = iqi_change < 0.01 && std::abs(per_decade - 3.32) <= 0.05;
    report(4, "IQI rate ceiling", ok,
           fmt("g = %.3f; IQI-only change 40->60 dB %.3f%%; no-interference growth %.3f bits/user/subcarrier/decade",
               s.chain_imbalance().amplitude, 100.0 * iqi_change, per_decade));
}

void iui_suppression(const fs::path &out)
{
    Scenario s = rate_scenario();
    s.placement.min_separation_deg = 10.0;
    const ResultTable thz = sweep_rate_vs_snr(s);
    double worst = 0.0;
    const auto iqi = thz.column("rate_iqi");
    const auto both = thz.column("rate_iqi_iui");
    for (size_t i = 0; i < iqi.size(); ++i)
        worst = std::max(worst, rel_change(iqi[i], both[i]));

    s.band = Band::rayleigh;
    const ResultTable ray = sweep_rate_vs_snr(s);
    write_csv(ray, out, true);
    const double iui_change = rel_change(value_at(ray, "rate_iui", 40.0), value_at(ray, "rate_iui", 60.0));
    const double noint_growth = (value_at(ray, "rate_noint", 60.0) - value_at(ray, "rate_noint", 50.0)) /
                                (s.system.users * s.system.subcarrier_count());
    const bool ok = worst < 0.02 && iui_change < 0.01 && noint_growth > 3.0;
    report(5, "THz IUI suppression vs Rayleigh", ok,
           fmt("THz max IQI vs IQI+IUI gap %.3f%%; Rayleigh IUI-only change 40->60 dB %.3f%%, IQI-free growth %.3f "
               "bits/user/subcarrier/decade",
               100.0 * worst, 100.0 * iui_change, noint_growth));
}

void nulling_crossover(const fs::path &out)
{
    Scenario s = rate_scenario();
    const ResultTable t = sweep_nulling(s);
    write_csv(t, out, true);
    const auto snr = t.column("snr_db");
    const auto full = t.column("rate_full");
    const auto nulled = t.column("rate_nulled");
    size_t cross = snr.size();
    for (size_t i = snr.size(); i-- > 0 && nulled[i] > full[i];)
        cross = i;
    const bool crosses = cross < snr.size();

    s.iqi_enabled = false;
    s.nulling_power = PowerPolicy::fixed_per_subcarrier;
    const ResultTable p = sweep_nulling(s);
    const auto pf = p.column("rate_full");
    const auto pn = p.column("rate_nulled");
    double worst = 0.0;
    for (size_t i = 0; i < pf.size(); ++i)
        worst = std::max(worst, std::abs(pf[i] / pn[i] - 2.0) / 2.0);

    report(6, "image nulling crossover", crosses && worst < 0.05,
           (crosses ? fmt("nulled above full from %.0f dB on", snr[cross]) : std::string("no crossover in sweep")) +
               fmt("; perfect IQ full/nulled within %.2f%% of 2", 100.0 * worst));
}

void slope_monotonicity(const fs::path &out)
{
    Scenario s = rate_scenario();
    s.iqi.irr_db.reset();
    const ResultTable sweep = sweep_slope_vs_g(s);
    write_csv(sweep, out, true);
    const auto g = sweep.column("g");
    const auto slope = sweep.column("slope_mean");
    bool monotone = true;
    for (size_t i = 1; i < g.size(); ++i)
        monotone &= g[i] > g[i - 1] && slope[i] >= slope[i - 1];

    const ResultTable se = sweep_se_vs_ebn0(s);
    write_csv(se, out, true);
    const auto sg = se.column("g");
    const auto intercept = se.column("ebn0_min_db");
    std::vector<std::pair<double, double>> points; // (g, intercept), one per curve
    for (size_t i = 0; i < sg.size(); ++i)
        if (points.empty() || points.back().first != sg[i])
            points.push_back({sg[i], intercept[i]});
    bool shifts = points.size() == 3;
    std::string listing;
    for (size_t i = 0; i < points.size(); ++i)
    {
        if (i > 0)
            shifts &= points[i].first < points[i - 1].first && points[i].second > points[i - 1].second;
        listing += fmt(" g=%.1f:%.3f dB", points[i].first, points[i].second);
    }
    report(7, "slope and intercept monotonicity", monotone && shifts,
           fmt("slope %.2f at g=1 down to %.2f at g=0.7;", slope.back(), slope.front()) + listing);
}

std::string slurp(const fs::path &p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void determinism(const fs::path &out)
{
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"slope-sweep", "thz"}, {"se-curve", "thz"}, {"rate-vs-snr", "thz"}, {"rate-vs-snr", "rayleigh"},
        {"nulling", "thz"},     {"nulling", "rayleigh"}};
    bool identical = true;
    int compared = 0;
    for (const auto &[study, band] : runs)
    {
        std::string first;
        for (int rep = 0; rep < 2; ++rep)
        {
            const fs::path dir = out / ("rerun" + std::to_string(rep));
            std::ostringstream o, e;
            const int code = cli::main_entry({"thz_iqi", study, "--band", band, "--trials", "20", "--seed", "77",
                                              "--set", "iqi.irr_db=30", "--deterministic-names", "--quiet", "--out",
                                              dir.string()},
                                             o, e);
            const std::string bytes = slurp(dir / (study + "_" + band + ".csv"));
            identical &= code == 0 && !bytes.empty();
            if (rep == 0)
                first = bytes;
            else
                identical &= bytes == first;
        }
        ++compared;
    }
    report(8, "byte-identical reruns", identical, std::to_string(compared) + " study/band pairs compared");
}

} // namespace

int main(int argc, char **argv)
{
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "thziqi_acceptance";
    fs::remove_all(out);
    fs::create_directories(out);
    try
    {
        reduction();
        oracle_agreement_check();
        classical_anchor();
        rate_ceiling(out);
        iui_suppression(out);
        nulling_crossover(out);
        slope_monotonicity(out);
        determinism(out);
    }
    catch (const std::exception &e)
    {
        std::cout << "FAIL aborted: " << e.what() << std::endl;
        return 1;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
