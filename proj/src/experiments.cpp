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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace thziqi
{

using nlohmann::json;

std::atomic<bool> &cancel_flag()
{
    static std::atomic<bool> flag{false};
    return flag;
}

std::string to_string(Band band) { return band == Band::thz ? "thz" : "rayleigh"; }

Band band_from_string(const std::string &s)
{
    if (s == "thz")
        return Band::thz;
    if (s == "rayleigh")
        return Band::rayleigh;
    throw ValidationError("channel.band", "expected \"thz\" or \"rayleigh\", got \"" + s + "\"");
}

std::string to_string(Study study)
{
    switch (study)
    {
    case Study::slope_sweep:
        return "slope-sweep";
    case Study::se_curve:
        return "se-curve";
    case Study::rate_vs_snr:
        return "rate-vs-snr";
    case Study::nulling:
        return "nulling";
    }
    return "unknown";
}

Study study_from_string(const std::string &s)
{
    for (Study st : {Study::slope_sweep, Study::se_curve, Study::rate_vs_snr, Study::nulling})
        if (to_string(st) == s)
            return st;
    throw ValidationError("study", "unknown study \"" + s + "\"");
}

std::vector<double> SweepRange::values() const
{
    std::vector<double> out;
    if (!(step > 0.0) || !(stop >= start))
        return out;
    const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
    out.reserve(static_cast<size_t>(n));
    for (long long i = 0; i < n; ++i)
    {
        // grid points land on a 1e-9 lattice so that endpoints such as g = 1 are exact
        const double v = start + static_cast<double>(i) * step;
        out.push_back(std::round(v * 1e9) / 1e9);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------------------------
// Scenario <-> JSON

namespace
{

const char *policy_name(PowerPolicy p) { return p == PowerPolicy::pooled ? "pooled" : "fixed"; }
const char *convention_name(SlopeConvention c) { return c == SlopeConvention::derivative ? "derivative" : "single_cross"; }

json range_json(const SweepRange &r) { return {{"start", r.start}, {"stop", r.stop}, {"step", r.step}}; }

SweepRange range_from(const json &j) { return {j.at("start").get<double>(), j.at("stop").get<double>(), j.at("step").get<double>()}; }

bool compatible(const json &base, const json &patch, bool nullable)
{
    if (patch.is_null())
        return nullable;
    if (base.is_null())
        return patch.is_number();
    if (base.is_number_integer() || base.is_number_unsigned())
    {
        if (patch.is_number_integer() || patch.is_number_unsigned())
            return true;
        return patch.is_number_float() && std::floor(patch.get<double>()) == patch.get<double>();
    }
    if (base.is_number())
        return patch.is_number();
    return base.type() == patch.type();
}

void merge_checked(json &base, const json &patch, const std::string &path)
{
    if (!patch.is_object())
        throw ValidationError(path.empty() ? "config" : path, "expected an object");
    for (const auto &[key, value] : patch.items())
    {
        const std::string full = path.empty() ? key : path + "." + key;
        if (!base.contains(key))
            throw ValidationError(full, "unknown key");
        json &target = base[key];
        if (target.is_object())
        {
            merge_checked(target, value, full);
            continue;
        }
        const bool nullable = key == "irr_db";
        if (!compatible(target, value, nullable))
            throw ValidationError(full, "type mismatch: expected " + std::string(target.type_name()) + ", got " +
                                            value.type_name());
        if (target.is_array())
            for (const auto &e : value)
                if (!e.is_number())
                    throw ValidationError(full, "type mismatch: expected an array of numbers");
        target = value;
    }
}

void require(bool ok, const char *key, const std::string &msg)
{
    if (!ok)
        throw ValidationError(key, msg);
}

void validate_range(const SweepRange &r, const char *key)
{
    require(std::isfinite(r.start) && std::isfinite(r.stop) && std::isfinite(r.step), key, "must be finite");
    require(r.step > 0.0, key, "step must be > 0");
    require(r.stop >= r.start, key, "stop must be >= start (sweep is empty)");
    require((r.stop - r.start) / r.step < 1e5, key, "too many sweep points");
}

} // namespace

nlohmann::json scenario_to_json(const Scenario &s)
{
    const SystemConfig &c = s.system;
    json j;
    j["system"] = {{"carrier_hz", c.carrier_hz},
                   {"bandwidth_hz", c.bandwidth_hz},
                   {"half_subcarriers", c.half_subcarriers},
                   {"tx_subarrays", c.tx_subarrays},
                   {"users", c.users},
                   {"elements_per_side", c.elements_per_side},
                   {"element_spacing_m", c.element_spacing_m},
                   {"power_w", c.power_w},
                   {"noise_w", c.noise_w},
                   {"tx_antenna_gain", c.tx_antenna_gain},
                   {"rx_antenna_gain", c.rx_antenna_gain}};
    const PlacementConfig &p = s.placement;
    j["placement"] = {{"distance_m", p.distance_m},
                      {"azimuth_min_deg", p.azimuth_min_deg},
                      {"azimuth_max_deg", p.azimuth_max_deg},
                      {"elevation_min_deg", p.elevation_min_deg},
                      {"elevation_max_deg", p.elevation_max_deg},
                      {"min_separation_deg", p.min_separation_deg},
                      {"max_attempts", p.max_attempts}};
    j["channel"] = {{"band", to_string(s.band)},
                    {"normalize_gain", s.normalize_gain},
                    {"ideal_per_subcarrier_analog", s.ideal_per_subcarrier_analog}};
    j["iqi"] = {{"g", s.iqi.amplitude},
                {"phase_deg", s.iqi.phase_deg},
                {"irr_db", s.iqi.irr_db ? json(*s.iqi.irr_db) : json(nullptr)},
                {"tx_enabled", s.iqi.tx_enabled},
                {"rx_enabled", s.iqi.rx_enabled},
                {"inflated_noise_in_wideband", s.iqi.inflated_noise_in_wideband}};
    j["toggles"] = {{"iqi", s.iqi_enabled}, {"iui", s.iui_enabled}};
    j["study"] = {{"trials", s.trials},
                  {"seed", s.seed},
                  {"threads", s.threads},
                  {"snr_db", range_json(s.snr_db)},
                  {"g_sweep", range_json(s.amplitude)},
                  {"ebn0_db", range_json(s.ebn0_db)},
                  {"g_list", s.amplitude_list},
                  {"nulling_power", policy_name(s.nulling_power)},
                  {"slope_convention", convention_name(s.slope_convention)}};
    return j;
}

Scenario scenario_from_json(const nlohmann::json &patch)
{
    json j = scenario_to_json(Scenario{});
    merge_checked(j, patch, "");

    Scenario s;
    const json &sys = j["system"];
    s.system.carrier_hz = sys["carrier_hz"].get<double>();
    s.system.bandwidth_hz = sys["bandwidth_hz"].get<double>();
    s.system.half_subcarriers = sys["half_subcarriers"].get<int>();
    s.system.tx_subarrays = sys["tx_subarrays"].get<int>();
    s.system.users = sys["users"].get<int>();
    s.system.elements_per_side = sys["elements_per_side"].get<int>();
    s.system.element_spacing_m = sys["element_spacing_m"].get<double>();
    s.system.power_w = sys["power_w"].get<double>();
    s.system.noise_w = sys["noise_w"].get<double>();
    s.system.tx_antenna_gain = sys["tx_antenna_gain"].get<double>();
    s.system.rx_antenna_gain = sys["rx_antenna_gain"].get<double>();

    const json &pl = j["placement"];
    s.placement.distance_m = pl["distance_m"].get<double>();
    s.placement.azimuth_min_deg = pl["azimuth_min_deg"].get<double>();
    s.placement.azimuth_max_deg = pl["azimuth_max_deg"].get<double>();
    s.placement.elevation_min_deg = pl["elevation_min_deg"].get<double>();
    s.placement.elevation_max_deg = pl["elevation_max_deg"].get<double>();
    s.placement.min_separation_deg = pl["min_separation_deg"].get<double>();
    s.placement.max_attempts = pl["max_attempts"].get<int>();

    const json &ch = j["channel"];
    s.band = band_from_string(ch["band"].get<std::string>());
    s.normalize_gain = ch["normalize_gain"].get<bool>();
    s.ideal_per_subcarrier_analog = ch["ideal_per_subcarrier_analog"].get<bool>();

    const json &iq = j["iqi"];
    s.iqi.amplitude = iq["g"].get<double>();
    s.iqi.phase_deg = iq["phase_deg"].get<double>();
    if (!iq["irr_db"].is_null())
        s.iqi.irr_db = iq["irr_db"].get<double>();
    s.iqi.tx_enabled = iq["tx_enabled"].get<bool>();
    s.iqi.rx_enabled = iq["rx_enabled"].get<bool>();
    s.iqi.inflated_noise_in_wideband = iq["inflated_noise_in_wideband"].get<bool>();

    s.iqi_enabled = j["toggles"]["iqi"].get<bool>();
    s.iui_enabled = j["toggles"]["iui"].get<bool>();

    const json &st = j["study"];
    if (st["trials"].is_number_integer() && st["trials"].get<long long>() < 1)
        throw ValidationError("study.trials", "must be >= 1");
    if (!st["seed"].is_number_unsigned())
        throw ValidationError("study.seed", "must be a non-negative integer");
    if (st["threads"].is_number_integer() && st["threads"].get<long long>() < 0)
        throw ValidationError("study.threads", "must be >= 0");
    s.trials = st["trials"].get<int>();
    s.seed = st["seed"].get<std::uint64_t>();
    s.threads = st["threads"].get<unsigned>();
    s.snr_db = range_from(st["snr_db"]);
    s.amplitude = range_from(st["g_sweep"]);
    s.ebn0_db = range_from(st["ebn0_db"]);
    s.amplitude_list = st["g_list"].get<std::vector<double>>();
    const auto policy = st["nulling_power"].get<std::string>();
    if (policy == "pooled")
        s.nulling_power = PowerPolicy::pooled;
    else if (policy == "fixed")
        s.nulling_power = PowerPolicy::fixed_per_subcarrier;
    else
        throw ValidationError("study.nulling_power", "expected \"pooled\" or \"fixed\"");
    const auto convention = st["slope_convention"].get<std::string>();
    if (convention == "derivative")
        s.slope_convention = SlopeConvention::derivative;
    else if (convention == "single_cross")
        s.slope_convention = SlopeConvention::single_cross;
    else
        throw ValidationError("study.slope_convention", "expected \"derivative\" or \"single_cross\"");

    s.validate();
    return s;
}

std::string canonical_scenario(const Scenario &s) { return scenario_to_json(s).dump(); }

void Scenario::validate() const
{
    system.validate();
    const PlacementConfig &p = placement;
    require(std::isfinite(p.distance_m) && p.distance_m > 0.0, "placement.distance_m", "must be > 0");
    require(p.azimuth_min_deg >= -180.0 && p.azimuth_min_deg <= p.azimuth_max_deg && p.azimuth_max_deg <= 180.0,
            "placement.azimuth_min_deg", "azimuth cone must satisfy -180 <= min <= max <= 180");
    require(p.elevation_min_deg >= 0.0 && p.elevation_min_deg <= p.elevation_max_deg && p.elevation_max_deg <= 180.0,
            "placement.elevation_min_deg", "elevation cone must satisfy 0 <= min <= max <= 180");
    require(std::isfinite(p.min_separation_deg) && p.min_separation_deg >= 0.0, "placement.min_separation_deg",
            "must be >= 0");
    require(p.max_attempts >= 1, "placement.max_attempts", "must be >= 1");
    if (band == Band::thz)
        require(system.users <= system.tx_subarrays, "system.users",
                "THz band pairs each user with its own subarray: needs users <= tx_subarrays");

    require(std::isfinite(iqi.amplitude) && iqi.amplitude > 0.0, "iqi.g", "must be > 0");
    require(std::isfinite(iqi.phase_deg) && std::abs(iqi.phase_deg) < 90.0, "iqi.phase_deg",
            "must lie in (-90, 90)");
    if (iqi.irr_db)
        require(std::isfinite(*iqi.irr_db) && *iqi.irr_db > 0.0, "iqi.irr_db", "must be > 0 dB or null");

    require(trials >= 1, "study.trials", "must be >= 1");
    validate_range(snr_db, "study.snr_db");
    validate_range(amplitude, "study.g_sweep");
    require(amplitude.start > 0.0, "study.g_sweep", "amplitudes must be > 0");
    validate_range(ebn0_db, "study.ebn0_db");
    require(!amplitude_list.empty(), "study.g_list", "must not be empty");
    for (double g : amplitude_list)
        require(std::isfinite(g) && g > 0.0, "study.g_list", "amplitudes must be > 0");
}

ChainImbalance Scenario::chain_imbalance() const
{
    const double phase = deg_to_rad(iqi.phase_deg);
    if (iqi.irr_db)
        return {closest_feasible_amplitude(*iqi.irr_db, phase), phase};
    return {iqi.amplitude, phase};
}

IqiParams Scenario::iqi_params(ChainImbalance chain) const
{
    return IqiParams::uniform(system.tx_subarrays, system.users, iqi.tx_enabled ? chain : ChainImbalance{},
                              iqi.rx_enabled ? chain : ChainImbalance{});
}

// ---------------------------------------------------------------------------------------------------------------
// Result tables

std::vector<double> ResultTable::column(const std::string &name) const
{
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end())
        throw std::out_of_range("no column " + name);
    const auto idx = static_cast<size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto &r : rows)
        out.push_back(r.at(idx));
    return out;
}

std::string to_csv(const ResultTable &table)
{
    std::string out = "# scenario=" + table.scenario_echo + " seed=" + std::to_string(table.seed) + "\n";
    for (size_t i = 0; i < table.columns.size(); ++i)
        out += (i ? "," : "") + table.columns[i];
    out += "\n";
    char buf[64];
    for (const auto &row : table.rows)
    {
        for (size_t i = 0; i < row.size(); ++i)
        {
            std::snprintf(buf, sizeof buf, "%.9g", row[i]);
            if (i)
                out += ",";
            out += buf;
        }
        out += "\n";
    }
    return out;
}

std::filesystem::path write_csv(const ResultTable &table, const std::filesystem::path &dir, bool deterministic_names)
{
    namespace fs = std::filesystem;
    std::string name = table.study + "_" + to_string(table.band);
    if (!deterministic_names)
    {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm utc{};
        gmtime_r(&now, &utc);
        std::ostringstream ts;
        ts << std::put_time(&utc, "%Y%m%dT%H%M%SZ");
        name += "_" + ts.str();
    }
    const fs::path target = dir / (name + ".csv");
    const fs::path partial = dir / (name + ".csv.partial");

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    {
        std::ofstream f(partial, std::ios::binary | std::ios::trunc);
        if (!f)
            throw IoError("cannot open " + partial.string() + " for writing");
        f << to_csv(table);
        f.flush();
        if (!f)
        {
            f.close();
            fs::remove(partial, ec);
            throw IoError("write failed for " + partial.string());
        }
    }
    fs::rename(partial, target, ec);
    if (ec)
    {
        fs::remove(partial, ec);
        throw IoError("cannot rename " + partial.string() + " to " + target.string());
    }
    return target;
}

// ---------------------------------------------------------------------------------------------------------------
// Placement and channels

UserPlacement place_users(const SystemConfig &cfg, const PlacementConfig &pc, std::uint64_t seed)
{
    if (!(pc.distance_m > 0.0))
        throw ValidationError("placement.distance_m", "must be > 0");
    std::mt19937_64 rng = make_stream(seed, 0x504c4143ULL);
    std::uniform_real_distribution<double> azimuth(deg_to_rad(pc.azimuth_min_deg), deg_to_rad(pc.azimuth_max_deg));
    std::uniform_real_distribution<double> elevation(deg_to_rad(pc.elevation_min_deg),
                                                     deg_to_rad(pc.elevation_max_deg));
    const double min_sep = deg_to_rad(pc.min_separation_deg);

    int attempts = 0;
    // `count` directions drawn from the cone, pairwise at least min_sep apart.
    auto separated_fan = [&](int count) {
        std::vector<Direction> fan;
        while (static_cast<int>(fan.size()) < count)
        {
            if (++attempts > pc.max_attempts)
                throw NumericalError("placement: rejection sampling failed after " + std::to_string(pc.max_attempts) +
                                     " attempts (cone too narrow for the minimum separation)");
            const Direction d{azimuth(rng), elevation(rng)};
            if (std::all_of(fan.begin(), fan.end(),
                            [&](const Direction &prev) { return angular_separation(prev, d) >= min_sep; }))
                fan.push_back(d);
        }
        return fan;
    };

    UserPlacement placement;
    placement.users = cfg.users;
    placement.subarrays = cfg.tx_subarrays;
    placement.seed = seed;
    placement.links.resize(static_cast<size_t>(cfg.users * cfg.tx_subarrays));
    for (int n = 0; n < cfg.tx_subarrays; ++n)
    {
        const auto departures = separated_fan(cfg.users);
        for (int m = 0; m < cfg.users; ++m)
        {
            placement.link(m, n).distance_m = pc.distance_m;
            placement.link(m, n).departure = departures[static_cast<size_t>(m)];
        }
    }
    for (int m = 0; m < cfg.users; ++m)
    {
        const auto arrivals = separated_fan(cfg.tx_subarrays);
        for (int n = 0; n < cfg.tx_subarrays; ++n)
            placement.link(m, n).arrival = arrivals[static_cast<size_t>(n)];
    }
    return placement;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial)
{
    return make_stream(master_seed, trial)();
}

SubcarrierMatrices trial_channel(const Scenario &s, std::uint64_t trial)
{
    const SystemConfig &cfg = s.system;
    const std::uint64_t seed = trial_seed(s.seed, trial);
    if (s.band == Band::rayleigh)
        return rayleigh_channel(cfg.users, cfg.tx_subarrays, cfg.half_subcarriers, seed);

    const UserPlacement placement = place_users(cfg, s.placement, seed);
    const ArrayGeometry geom = element_positions(cfg.elements_per_side, cfg.spacing(), ArrayPlane::yz);
    const Pairing pairing = identity_pairing(cfg.users);
    const AnalogBeamformers flat = analog_beamformers(placement, geom, cfg.carrier_hz, pairing);

    SubcarrierMatrices hc(cfg.half_subcarriers, cfg.users, cfg.tx_subarrays);
    for (int k : subcarrier_indices(cfg.half_subcarriers))
    {
        const SubcarrierChannel h = los_channel(cfg, placement, geom, k);
        if (s.ideal_per_subcarrier_analog)
            hc.at(k) = concatenate(h, analog_beamformers(placement, geom, h.freq_hz, pairing));
        else
            hc.at(k) = concatenate(h, flat);
    }
    if (s.normalize_gain)
        return hc.scaled(1.0 / path_loss(cfg.carrier_hz, s.placement.distance_m, cfg.tx_antenna_gain,
                                          cfg.rx_antenna_gain));
    return hc;
}

double sum_rate(const EffectiveChannels &ch, const DigitalBeamformers &w, const MatrixXcd &zbar)
{
    const auto users = static_cast<int>(std::min(ch.desired.rows(), ch.desired.cols()));
    CompensatedSum total;
    for (int k : subcarrier_indices(ch.desired.half_subcarriers()))
        for (int m = 0; m < users; ++m)
        {
            const double gamma = sinr_precoded(ch.desired.at(k), ch.image.at(k), w.tx.at(k), w.tx.at(-k),
                                               zbar(m, m).real(), m);
            total.add(std::log2(1.0 + gamma));
        }
    return total.value();
}

// ---------------------------------------------------------------------------------------------------------------
// Trial harness

namespace
{

class Cancelled : public std::runtime_error
{
  public:
    Cancelled() : std::runtime_error("run cancelled") {}
};

/// Runs fn(trial) for every trial on a worker pool; results are stored by trial index so the
/// reduction order never depends on scheduling.
template <typename Fn>
auto parallel_trials(const Scenario &s, Fn &&fn) -> std::vector<decltype(fn(std::uint64_t{}))>
{
    using Result = decltype(fn(std::uint64_t{}));
    std::vector<Result> results(static_cast<size_t>(s.trials));
    unsigned workers = s.threads ? s.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(s.trials));

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;)
        {
            const int t = next.fetch_add(1);
            if (t >= s.trials)
                return;
            try
            {
                if (cancel_flag().load())
                    throw Cancelled();
                results[static_cast<size_t>(t)] = fn(static_cast<std::uint64_t>(t));
            }
            catch (...)
            {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next.store(s.trials);
                return;
            }
        }
    };
    if (workers <= 1)
        work();
    else
    {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < workers; ++i)
            pool.emplace_back(work);
        for (auto &th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);
    return results;
}

struct MeanStd
{
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and sample standard deviation of values[t][i] over trials t, for each i.
std::vector<MeanStd> aggregate(const std::vector<std::vector<double>> &values)
{
    const size_t width = values.empty() ? 0 : values.front().size();
    std::vector<MeanStd> out(width);
    const auto n = static_cast<double>(values.size());
    for (size_t i = 0; i < width; ++i)
    {
        CompensatedSum sum;
        for (const auto &v : values)
            sum.add(v[i]);
        const double mean = sum.value() / n;
        CompensatedSum sq;
        for (const auto &v : values)
            sq.add((v[i] - mean) * (v[i] - mean));
        out[i] = {mean, values.size() > 1 ? std::sqrt(sq.value() / (n - 1.0)) : 0.0};
    }
    return out;
}

ResultTable make_table(const Scenario &s, Study study, std::vector<std::string> columns)
{
    ResultTable t;
    t.study = to_string(study);
    t.band = s.band;
    t.columns = std::move(columns);
    t.scenario_echo = canonical_scenario(s);
    t.seed = s.seed;
    return t;
}

NoiseVariances wideband_noise(const Scenario &s, const IqiParams &params)
{
    if (!s.iqi.inflated_noise_in_wideband)
        return {};
    return noise_covariance_iqi(1.0, params).diagonal().real();
}

struct LowSnrPoint
{
    BitEnergy ebn0_min;
    double slope;
};

LowSnrPoint low_snr_metrics(const Scenario &s, const SubcarrierMatrices &hc, double amplitude)
{
    const IqiParams params =
        s.iqi_enabled ? s.iqi_params({amplitude, 0.0}) : IqiParams::perfect(s.system.tx_subarrays, s.system.users);
    const EffectiveChannels ch = build_effective_channels(hc, mismatch_matrices(params));
    const NoiseVariances noise = wideband_noise(s, params);
    return {ebn0_min_iqi(ch.desired, noise), wideband_slope_iqi(ch.desired, ch.image, s.slope_convention, noise)};
}

SubcarrierMatrices study_channel(const Scenario &s, std::uint64_t trial)
{
    SubcarrierMatrices hc = trial_channel(s, trial);
    return s.iui_enabled ? hc : hc.diagonal_only();
}

} // namespace

ResultTable sweep_slope_vs_g(const Scenario &s)
{
    s.validate();
    const std::vector<double> gs = s.amplitude.values();
    const auto per_trial = parallel_trials(s, [&](std::uint64_t t) {
        const SubcarrierMatrices hc = study_channel(s, t);
        std::vector<double> slopes;
        for (double g : gs)
            slopes.push_back(low_snr_metrics(s, hc, g).slope);
        return slopes;
    });
    const auto stats = aggregate(per_trial);
    ResultTable table = make_table(s, Study::slope_sweep, {"g", "slope_mean", "slope_std", "trials"});
    for (size_t i = 0; i < gs.size(); ++i)
        table.rows.push_back({gs[i], stats[i].mean, stats[i].std, static_cast<double>(s.trials)});
    return table;
}

ResultTable sweep_se_vs_ebn0(const Scenario &s)
{
    s.validate();
    const std::vector<double> ebn0 = s.ebn0_db.values();
    const std::vector<double> &gs = s.amplitude_list;
    const size_t stride = ebn0.size() + 2;
    const auto per_trial = parallel_trials(s, [&](std::uint64_t t) {
        const SubcarrierMatrices hc = study_channel(s, t);
        std::vector<double> v;
        v.reserve(gs.size() * stride);
        for (double g : gs)
        {
            const LowSnrPoint p = low_snr_metrics(s, hc, g);
            v.push_back(p.ebn0_min.db);
            v.push_back(p.slope);
            for (double x : ebn0)
                v.push_back(se_approx(x, p.ebn0_min.db, p.slope));
        }
        return v;
    });
    const auto stats = aggregate(per_trial);
    ResultTable table =
        make_table(s, Study::se_curve, {"g", "ebn0_db", "se_mean", "se_std", "ebn0_min_db", "slope", "trials"});
    for (size_t gi = 0; gi < gs.size(); ++gi)
    {
        const size_t base = gi * stride;
        for (size_t i = 0; i < ebn0.size(); ++i)
            table.rows.push_back({gs[gi], ebn0[i], stats[base + 2 + i].mean, stats[base + 2 + i].std,
                                  stats[base].mean, stats[base + 1].mean, static_cast<double>(s.trials)});
    }
    return table;
}

ResultTable sweep_rate_vs_snr(const Scenario &s)
{
    s.validate();
    const std::vector<double> snrs = s.snr_db.values();
    const SystemConfig &cfg = s.system;
    const IqiParams impaired = s.iqi_params(s.chain_imbalance());
    const IqiParams perfect = IqiParams::perfect(cfg.tx_subarrays, cfg.users);
    const MismatchMatrices mm_iqi = mismatch_matrices(impaired);
    const MismatchMatrices mm_perfect = mismatch_matrices(perfect);
    const MatrixXcd z_iqi = noise_covariance_iqi(cfg.noise_w, impaired);
    const MatrixXcd z_perfect = noise_covariance_iqi(cfg.noise_w, perfect);

    const auto per_trial = parallel_trials(s, [&](std::uint64_t t) {
        const SubcarrierMatrices hc = trial_channel(s, t);
        const SubcarrierMatrices hc_diag = hc.diagonal_only();
        const EffectiveChannels noint = build_effective_channels(hc_diag, mm_perfect);
        const EffectiveChannels iui = build_effective_channels(hc, mm_perfect);
        const EffectiveChannels iqi = build_effective_channels(hc_diag, mm_iqi);
        const EffectiveChannels both = build_effective_channels(hc, mm_iqi);
        std::vector<double> v;
        v.reserve(snrs.size() * 4);
        for (double snr : snrs)
        {
            SystemConfig at = cfg;
            at.power_w = cfg.noise_w * std::pow(10.0, snr / 10.0);
            const DigitalBeamformers w = digital_beamformers(at);
            v.push_back(sum_rate(noint, w, z_perfect));
            v.push_back(sum_rate(iui, w, z_perfect));
            v.push_back(sum_rate(iqi, w, z_iqi));
            v.push_back(sum_rate(both, w, z_iqi));
        }
        return v;
    });
    const auto stats = aggregate(per_trial);
    ResultTable table = make_table(s, Study::rate_vs_snr,
                                   {"snr_db", "rate_noint", "rate_iui", "rate_iqi", "rate_iqi_iui", "rate_noint_std",
                                    "rate_iui_std", "rate_iqi_std", "rate_iqi_iui_std", "trials"});
    for (size_t i = 0; i < snrs.size(); ++i)
    {
        const size_t b = 4 * i;
        table.rows.push_back({snrs[i], stats[b].mean, stats[b + 1].mean, stats[b + 2].mean, stats[b + 3].mean,
                              stats[b].std, stats[b + 1].std, stats[b + 2].std, stats[b + 3].std,
                              static_cast<double>(s.trials)});
    }
    return table;
}

ResultTable sweep_nulling(const Scenario &s)
{
    s.validate();
    const std::vector<double> snrs = s.snr_db.values();
    const SystemConfig &cfg = s.system;
    const IqiParams params = s.iqi_enabled ? s.iqi_params(s.chain_imbalance())
                                           : IqiParams::perfect(cfg.tx_subarrays, cfg.users);
    const MismatchMatrices mm = mismatch_matrices(params);
    const MatrixXcd zbar = noise_covariance_iqi(cfg.noise_w, params);
    const std::vector<int> active = image_nulled_subcarriers(cfg.half_subcarriers);

    const auto per_trial = parallel_trials(s, [&](std::uint64_t t) {
        const EffectiveChannels ch = build_effective_channels(study_channel(s, t), mm);
        std::vector<double> v;
        v.reserve(snrs.size() * 2);
        for (double snr : snrs)
        {
            SystemConfig at = cfg;
            at.power_w = cfg.noise_w * std::pow(10.0, snr / 10.0);
            v.push_back(sum_rate(ch, digital_beamformers(at), zbar));
            v.push_back(sum_rate(ch, digital_beamformers(at, active, s.nulling_power), zbar));
        }
        return v;
    });
    const auto stats = aggregate(per_trial);
    ResultTable table = make_table(s, Study::nulling,
                                   {"snr_db", "rate_full", "rate_nulled", "rate_full_std", "rate_nulled_std", "trials"});
    for (size_t i = 0; i < snrs.size(); ++i)
        table.rows.push_back({snrs[i], stats[2 * i].mean, stats[2 * i + 1].mean, stats[2 * i].std,
                              stats[2 * i + 1].std, static_cast<double>(s.trials)});
    return table;
}

OracleReport oracle_agreement(int instances, std::uint64_t seed, SlopeConvention convention)
{
    if (instances < 1)
        throw ValidationError("instances", "must be >= 1");
    OracleReport report;
    report.instances = instances;
    for (int i = 0; i < instances; ++i)
    {
        std::mt19937_64 rng = make_stream(seed, static_cast<std::uint64_t>(i));
        std::uniform_int_distribution<int> dim(1, 3);
        std::uniform_int_distribution<int> half(1, 4);
        const int n = dim(rng);
        const int m = std::uniform_int_distribution<int>(1, n)(rng);
        const int k = half(rng);
        const SubcarrierMatrices hc = rayleigh_channel(m, n, k, rng());

        SubcarrierMatrices hd = hc;
        SubcarrierMatrices hi(k, m, n);
        BitEnergy closed_e;
        double closed_s = 0.0;
        if (i % 2 == 1)
        {
            std::uniform_real_distribution<double> amp(0.7, 1.0);
            std::uniform_real_distribution<double> phase(deg_to_rad(-10.0), deg_to_rad(10.0));
            IqiParams params;
            for (int c = 0; c < n; ++c)
                params.tx.push_back({amp(rng), phase(rng)});
            for (int c = 0; c < m; ++c)
                params.rx.push_back({amp(rng), phase(rng)});
            const EffectiveChannels ch = build_effective_channels(hc, mismatch_matrices(params));
            hd = ch.desired;
            hi = ch.image;
            closed_e = ebn0_min_iqi(hd);
            closed_s = wideband_slope_iqi(hd, hi, convention);
        }
        else
        {
            closed_e = ebn0_min(hc);
            closed_s = wideband_slope(hc, convention);
        }
        const SlopeEstimate oracle = numeric_slope_oracle(tin_capacity(hd, hi), static_cast<double>(n) * 2.0 * k);
        report.max_rel_error_ebn0 =
            std::max(report.max_rel_error_ebn0, std::abs(closed_e.linear - oracle.ebn0_min.linear) / oracle.ebn0_min.linear);
        report.max_rel_error_slope =
            std::max(report.max_rel_error_slope, std::abs(closed_s - oracle.slope) / oracle.slope);
    }
    return report;
}

ResultTable run_study(Study study, const Scenario &s)
{
    switch (study)
    {
    case Study::slope_sweep:
        return sweep_slope_vs_g(s);
    case Study::se_curve:
        return sweep_se_vs_ebn0(s);
    case Study::rate_vs_snr:
        return sweep_rate_vs_snr(s);
    case Study::nulling:
        return sweep_nulling(s);
    }
    throw ValidationError("study", "unknown study");
}

std::filesystem::path run(Study study, const Scenario &s, const std::filesystem::path &out_dir,
                          bool deterministic_names)
{
    return write_csv(run_study(study, s), out_dir, deterministic_names);
}

} // namespace thziqi
